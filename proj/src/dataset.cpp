/* Copyright 2026 The natgrad-lens Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 *
 */

#include <array>
#include <bit>
#include <cstring>
#include <fstream>

#include "natgrad/errors.hpp"
#include "natgrad/experiments.hpp"
#include "natgrad/sampling.hpp"

#ifndef NATGRAD_DATA_DIR
#define NATGRAD_DATA_DIR "data"
#endif

namespace natgrad {

namespace {

constexpr std::uint32_t kMagic = 0x5344474E;  // "NGDS" read as little endian

std::uint32_t read_u32(std::istream& in, const std::string& path) {
  std::array<unsigned char, 4> b{};
  if (!in.read(reinterpret_cast<char*>(b.data()), 4)) throw ConfigError(path + ": truncated header");
  return std::uint32_t{b[0]} | std::uint32_t{b[1]} << 8 | std::uint32_t{b[2]} << 16 |
         std::uint32_t{b[3]} << 24;
}

void write_u32(std::ostream& out, std::uint32_t v) {
  const std::array<char, 4> b{static_cast<char>(v & 0xff), static_cast<char>(v >> 8 & 0xff),
                              static_cast<char>(v >> 16 & 0xff), static_cast<char>(v >> 24 & 0xff)};
  out.write(b.data(), 4);
}

}  // namespace

Dataset synthetic_clusters(std::uint64_t seed, int classes, std::size_t per_class,
                           std::size_t dim, double spread) {
  if (classes < 1 || per_class == 0 || dim == 0) throw ConfigError("synthetic: empty dataset");
  if (!(spread >= 0.0)) throw ConfigError("synthetic: spread must be non-negative");
  Rng rng(seed);
  const Matrix centres = random_normal_matrix(rng, static_cast<std::size_t>(classes), dim);
  std::normal_distribution<double> normal;
  Dataset d;
  d.classes = classes;
  d.features = Matrix(per_class * classes, dim);
  d.labels.resize(per_class * classes);
  for (std::size_t s = 0; s < per_class; ++s) {
    for (int c = 0; c < classes; ++c) {
      const std::size_t row = s * classes + c;
      d.labels[row] = c;
      for (std::size_t j = 0; j < dim; ++j) d.features(row, j) = centres(c, j) + spread * normal(rng);
    }
  }
  return d;
}

Dataset load_dataset_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open dataset file " + path);
  if (read_u32(in, path) != kMagic) throw ConfigError(path + ": bad magic");
  const std::uint32_t count = read_u32(in, path);
  const std::uint32_t dims = read_u32(in, path);
  if (count == 0 || dims == 0) throw ConfigError(path + ": empty dataset");

  Dataset d;
  d.features = Matrix(count, dims);
  std::vector<unsigned char> raw(std::size_t{count} * dims * 4);
  if (!in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size())))
    throw ConfigError(path + ": truncated features");
  auto out = d.features.data();
  for (std::size_t i = 0; i < out.size(); ++i) {
    const std::uint32_t bits = std::uint32_t{raw[4 * i]} | std::uint32_t{raw[4 * i + 1]} << 8 |
                               std::uint32_t{raw[4 * i + 2]} << 16 |
                               std::uint32_t{raw[4 * i + 3]} << 24;
    out[i] = static_cast<double>(std::bit_cast<float>(bits));
  }
  std::vector<unsigned char> labels(count);
  if (!in.read(reinterpret_cast<char*>(labels.data()), count))
    throw ConfigError(path + ": truncated labels");
  if (in.peek() != std::char_traits<char>::eof()) throw ConfigError(path + ": trailing bytes");
  d.labels.assign(labels.begin(), labels.end());
  int max_label = 0;
  for (int l : d.labels) max_label = std::max(max_label, l);
  d.classes = max_label + 1;
  if (!d.features.all_finite()) throw ConfigError(path + ": non-finite feature");
  return d;
}

void save_dataset_file(const std::string& path, const Dataset& data) {
  if (data.size() != data.features.rows()) throw DimensionError("dataset: labels and rows differ");
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot write dataset file " + path);
  write_u32(out, kMagic);
  write_u32(out, static_cast<std::uint32_t>(data.size()));
  write_u32(out, static_cast<std::uint32_t>(data.input_dim()));
  for (double v : data.features.data()) write_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
  for (int l : data.labels) {
    if (l < 0 || l > 255) throw InvalidInputError("dataset: label outside [0, 255]");
    out.put(static_cast<char>(l));
  }
  if (!out) throw ConfigError("write failed for " + path);
}

std::string default_digits_path() { return std::string(NATGRAD_DATA_DIR) + "/digits_500.bin"; }

}  // namespace natgrad
