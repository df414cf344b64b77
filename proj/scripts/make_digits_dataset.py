#!/usr/bin/env python3
# Copyright 2026 The natgrad-lens Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
"""Writes the first 500 samples of scikit-learn's 8x8 digits as data/digits_500.bin.

Layout (little endian): uint32 magic "NGDS", uint32 count, uint32 dims,
count*dims float32 features scaled to [0, 1], count uint8 labels.
"""
import pathlib
import struct
import sys

import numpy as np
from sklearn.datasets import load_digits

COUNT = 500


def main() -> int:
    out = pathlib.Path(sys.argv[1]) if len(sys.argv) > 1 else (
        pathlib.Path(__file__).resolve().parent.parent / "data" / "digits_500.bin")
    digits = load_digits()
    x = (digits.data[:COUNT] / 16.0).astype("<f4")
    y = digits.target[:COUNT].astype(np.uint8)
    with open(out, "wb") as f:
        f.write(struct.pack("<4sII", b"NGDS", x.shape[0], x.shape[1]))
        f.write(x.tobytes(order="C"))
        f.write(y.tobytes())
    print(f"wrote {out}: {x.shape[0]} samples x {x.shape[1]} features")
    return 0


if __name__ == "__main__":
    sys.exit(main())
