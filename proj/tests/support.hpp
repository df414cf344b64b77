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

// Shared helpers for the unit tests.
#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <span>

#include "natgrad/matrix.hpp"

namespace natgrad::testing {

inline Eigen::MatrixXd to_eigen(const Matrix& m) {
  Eigen::MatrixXd out(m.rows(), m.cols());
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) out(i, j) = m(i, j);
  return out;
}

/// Eigenvalues from Eigen's self-adjoint solver, ascending. Independent of
/// the Jacobi implementation under test.
inline Vector reference_eigenvalues(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(to_eigen(m), Eigen::EigenvaluesOnly);
  const auto& ev = es.eigenvalues();
  return Vector(ev.data(), ev.data() + ev.size());
}

/// x with m x = b, by Eigen's full-pivoting LU.
inline Vector reference_solve(const Matrix& m, std::span<const double> b) {
  Eigen::VectorXd rhs(b.size());
  for (std::size_t i = 0; i < b.size(); ++i) rhs(i) = b[i];
  const Eigen::VectorXd x = to_eigen(m).fullPivLu().solve(rhs);
  return Vector(x.data(), x.data() + x.size());
}

inline double rel_diff(double a, double b) {
  return std::abs(a - b) / std::max(std::abs(a), std::abs(b));
}

}  // namespace natgrad::testing
