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

#pragma once

// Seeded generators for sweeps, Monte Carlo runs and property tests.

#include <cstdint>
#include <random>

#include "natgrad/matrix.hpp"
#include "natgrad/metric.hpp"

namespace natgrad {

using Rng = std::mt19937_64;

Vector random_normal_vector(Rng& rng, std::size_t n);
Vector random_unit_vector(Rng& rng, std::size_t n);
/// Unit vector orthogonal to the unit vector `axis` (n >= 2).
Vector random_orthogonal_unit(Rng& rng, std::span<const double> axis);
Matrix random_normal_matrix(Rng& rng, std::size_t rows, std::size_t cols);
/// Haar-distributed orthogonal matrix (QR of a Gaussian matrix, sign-fixed).
Matrix random_orthogonal(Rng& rng, std::size_t n);
/// Q diag(lambda) Q^T with eigenvalues log-uniform in [1, cond].
SymMatrix random_spd(Rng& rng, std::size_t n, double cond);
/// Random symmetric matrix with standard normal upper triangle.
SymMatrix random_symmetric(Rng& rng, std::size_t n);

/// Pair with ||g|| drawn log-uniform in [0.5, 2], ||y|| = ratio ||g|| and
/// angle exactly psi between them (psi must be 0 or pi when dim = 1).
UpdateGradientPair random_pair(Rng& rng, std::size_t dim, double psi, double ratio);

/// Pair with psi uniform in [psi_lo, psi_hi] and ratio log-uniform in
/// [1/ratio_span, ratio_span].
UpdateGradientPair random_aligned_pair(Rng& rng, std::size_t dim, double psi_lo = 0.05,
                                       double psi_hi = 1.45, double ratio_span = 10.0);

/// Positive weights log-uniform in [lo, hi].
Vector random_weights(Rng& rng, std::size_t n, double lo = 1e-2, double hi = 1e2);

}  // namespace natgrad
