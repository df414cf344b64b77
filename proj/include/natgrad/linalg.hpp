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

#include <complex>
#include <span>
#include <vector>

#include "natgrad/matrix.hpp"

namespace natgrad {

/// Eigenvalues in ascending order; eigenvectors are the columns of
/// `eigenvectors`, column k belonging to eigenvalues[k].
struct EigenDecomposition {
  Vector eigenvalues;
  Matrix eigenvectors;

  /// ||V V^T - I||_max
  double orthogonality_defect() const;
  /// ||A - V diag(lambda) V^T||_max
  double reconstruction_error(const SymMatrix& a) const;
};

/// Cyclic Jacobi eigensolver for symmetric matrices.
/// Throws InvalidInputError on non-finite entries.
EigenDecomposition sym_eigen(const SymMatrix& a);

/// Eigenvalues only, ascending. Same algorithm without accumulating V.
Vector sym_eigenvalues(const SymMatrix& a);

/// Smallest eigenvalue.
double min_eigenvalue(const SymMatrix& a);

/// Solves P a + a^T P = -q for symmetric P by Kronecker vectorization and
/// dense LU. The result is certified: residual below tol::kLyapunovResidual
/// relative to ||q||_max and P positive definite. Either failure raises
/// CertificateError naming "lyapunov_residual" or "positive_definite"; a
/// singular Kronecker system (eigenvalues of `a` summing to zero) raises
/// CertificateError("kronecker_singular").
SymMatrix solve_lyapunov(const Matrix& a, const SymMatrix& q);

/// ||P a + a^T P + q||_max
double lyapunov_residual(const Matrix& a, const SymMatrix& p, const SymMatrix& q);

/// D-1 orthonormal vectors spanning the orthogonal complement of g, taken as
/// the trailing columns of the Householder reflector that maps g onto the
/// first axis. Empty for D = 1. Throws InvalidInputError for g = 0.
std::vector<Vector> orthonormal_complement_basis(std::span<const double> g);

/// Same basis as a D x (D-1) matrix with the vectors as columns.
Matrix complement_basis_matrix(std::span<const double> g);

/// Angle between y and g in [0, pi]. Computed with atan2 of the orthogonal
/// and parallel components, which stays accurate near 0 and pi where
/// arccos does not. Throws InvalidInputError for a zero-norm input.
double angle_between(std::span<const double> y, std::span<const double> g);

/// LU factorization with partial pivoting.
class LuFactorization {
 public:
  /// Throws CertificateError("singular") on an exactly zero pivot.
  explicit LuFactorization(Matrix a);
  Vector solve(std::span<const double> b) const;
  std::size_t dim() const { return lu_.rows(); }

 private:
  Matrix lu_;
  std::vector<std::size_t> perm_;
};

/// Solves a x = b.
Vector solve(const Matrix& a, std::span<const double> b);

/// Eigenvalues of a general real square matrix (Hessenberg reduction
/// followed by shifted QR). Order is unspecified.
std::vector<std::complex<double>> general_eigenvalues(const Matrix& a);

/// max Re(lambda) over the spectrum of a.
double spectral_abscissa(const Matrix& a);

/// True when every eigenvalue of a has strictly negative real part.
bool is_hurwitz(const Matrix& a);

}  // namespace natgrad
