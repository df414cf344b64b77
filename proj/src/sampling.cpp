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

#include "natgrad/sampling.hpp"

#include <cmath>

#include "natgrad/errors.hpp"
#include "natgrad/kernels.hpp"

namespace natgrad {

namespace {
double log_uniform(Rng& rng, double lo, double hi) {
  std::uniform_real_distribution<double> u(std::log(lo), std::log(hi));
  return std::exp(u(rng));
}
}  // namespace

Vector random_normal_vector(Rng& rng, std::size_t n) {
  std::normal_distribution<double> normal;
  Vector v(n);
  for (double& x : v) x = normal(rng);
  return v;
}

Vector random_unit_vector(Rng& rng, std::size_t n) {
  for (;;) {
    Vector v = random_normal_vector(rng, n);
    const double norm = norm2(v);
    if (norm > 1e-8) return scaled(1.0 / norm, v);
  }
}

Vector random_orthogonal_unit(Rng& rng, std::span<const double> axis) {
  if (axis.size() < 2) throw DimensionError("random_orthogonal_unit: need dimension >= 2");
  for (;;) {
    Vector v = random_normal_vector(rng, axis.size());
    // Two Gram-Schmidt passes.
    for (int pass = 0; pass < 2; ++pass) v = axpy(-dot(v, axis), axis, v);
    const double norm = norm2(v);
    if (norm > 1e-6) return scaled(1.0 / norm, v);
  }
}

Matrix random_normal_matrix(Rng& rng, std::size_t rows, std::size_t cols) {
  std::normal_distribution<double> normal;
  Matrix m(rows, cols);
  for (double& x : m.data()) x = normal(rng);
  return m;
}

Matrix random_orthogonal(Rng& rng, std::size_t n) {
  // Modified Gram-Schmidt on the columns of a Gaussian matrix, applied twice.
  Matrix q = random_normal_matrix(rng, n, n);
  for (std::size_t j = 0; j < n; ++j) {
    for (int pass = 0; pass < 2; ++pass) {
      for (std::size_t k = 0; k < j; ++k) {
        double proj = 0.0;
        for (std::size_t i = 0; i < n; ++i) proj += q(i, k) * q(i, j);
        for (std::size_t i = 0; i < n; ++i) q(i, j) -= proj * q(i, k);
      }
    }
    double norm = 0.0;
    for (std::size_t i = 0; i < n; ++i) norm += q(i, j) * q(i, j);
    norm = std::sqrt(norm);
    for (std::size_t i = 0; i < n; ++i) q(i, j) /= norm;
  }
  return q;
}

SymMatrix random_spd(Rng& rng, std::size_t n, double cond) {
  const Matrix q = random_orthogonal(rng, n);
  Matrix qd = q;
  for (std::size_t k = 0; k < n; ++k) {
    const double lambda = log_uniform(rng, 1.0, std::max(cond, 1.0 + 1e-12));
    for (std::size_t i = 0; i < n; ++i) qd(i, k) *= lambda;
  }
  Matrix out;
  kernels::gemm_nt(qd, q, out);
  return SymMatrix::symmetrize(out);
}

SymMatrix random_symmetric(Rng& rng, std::size_t n) {
  return SymMatrix(random_normal_matrix(rng, n, n));
}

UpdateGradientPair random_pair(Rng& rng, std::size_t dim, double psi, double ratio) {
  if (dim == 0) throw DimensionError("random_pair: dimension must be >= 1");
  const double gnorm = log_uniform(rng, 0.5, 2.0);
  const Vector gh = random_unit_vector(rng, dim);
  Vector y;
  if (dim == 1) {
    if (std::sin(psi) != 0.0 && std::abs(psi) > 1e-15)
      throw InvalidInputError("random_pair: D = 1 admits only psi = 0 or pi");
    y = scaled(ratio * gnorm * (std::cos(psi) >= 0.0 ? 1.0 : -1.0), gh);
  } else {
    const Vector u = random_orthogonal_unit(rng, gh);
    y = axpy(std::sin(psi), u, scaled(std::cos(psi), gh));
    y = scaled(ratio * gnorm, y);
  }
  return UpdateGradientPair(scaled(gnorm, gh), std::move(y));
}

UpdateGradientPair random_aligned_pair(Rng& rng, std::size_t dim, double psi_lo,
                                       double psi_hi, double ratio_span) {
  std::uniform_real_distribution<double> upsi(psi_lo, psi_hi);
  const double psi = dim == 1 ? 0.0 : upsi(rng);
  const double ratio = log_uniform(rng, 1.0 / ratio_span, ratio_span);
  return random_pair(rng, dim, psi, ratio);
}

Vector random_weights(Rng& rng, std::size_t n, double lo, double hi) {
  Vector w(n);
  for (double& x : w) x = log_uniform(rng, lo, hi);
  return w;
}

}  // namespace natgrad
