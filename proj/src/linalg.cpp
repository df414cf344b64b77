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

#include "natgrad/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "natgrad/errors.hpp"
#include "natgrad/kernels.hpp"
#include "natgrad/tolerances.hpp"

namespace natgrad {

namespace {

constexpr int kMaxJacobiSweeps = 60;

void require_finite(const Matrix& a, const char* who) {
  if (a.all_finite()) return;
  std::size_t bad = 0;
  for (double v : a.data())
    if (!std::isfinite(v)) ++bad;
  std::ostringstream os;
  os << who << ": " << bad << " non-finite entr" << (bad == 1 ? "y" : "ies")
     << " in " << a.rows() << "x" << a.cols() << " input";
  throw InvalidInputError(os.str());
}

// Rotates a (in place) to diagonal form; accumulates rotations into v when
// given. Off-diagonal entries are annihilated until they are negligible
// relative to both diagonal entries they couple.
void jacobi_diagonalize(Matrix& a, Matrix* v) {
  const std::size_t n = a.rows();
  for (int sweep = 0; sweep < kMaxJacobiSweeps; ++sweep) {
    bool rotated = false;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        const double app = a(p, p);
        const double aqq = a(q, q);
        const double g = 100.0 * std::abs(apq);
        if (sweep > 3 && std::abs(app) + g == std::abs(app) &&
            std::abs(aqq) + g == std::abs(aqq)) {
          a(p, q) = a(q, p) = 0.0;
          continue;
        }
        rotated = true;
        const double theta = (aqq - app) / (2.0 * apq);
        double t;
        if (std::abs(theta) > 1e150) {
          t = 0.5 / theta;
        } else {
          t = 1.0 / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
          if (theta < 0.0) t = -t;
        }
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        const double tau = s / (1.0 + c);
        a(p, p) = app - t * apq;
        a(q, q) = aqq + t * apq;
        a(p, q) = a(q, p) = 0.0;
        for (std::size_t r = 0; r < n; ++r) {
          if (r == p || r == q) continue;
          const double arp = a(r, p);
          const double arq = a(r, q);
          const double nrp = arp - s * (arq + tau * arp);
          const double nrq = arq + s * (arp - tau * arq);
          a(r, p) = a(p, r) = nrp;
          a(r, q) = a(q, r) = nrq;
        }
        if (v != nullptr) {
          for (std::size_t r = 0; r < n; ++r) {
            const double vrp = (*v)(r, p);
            const double vrq = (*v)(r, q);
            (*v)(r, p) = vrp - s * (vrq + tau * vrp);
            (*v)(r, q) = vrq + s * (vrp - tau * vrq);
          }
        }
      }
    }
    if (!rotated) return;
  }
}

}  // namespace

double EigenDecomposition::orthogonality_defect() const {
  const std::size_t n = eigenvectors.rows();
  Matrix vvt;
  kernels::gemm_nt(eigenvectors, eigenvectors, vvt);
  double worst = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      worst = std::max(worst, std::abs(vvt(i, j) - (i == j ? 1.0 : 0.0)));
  return worst;
}

double EigenDecomposition::reconstruction_error(const SymMatrix& a) const {
  const std::size_t n = a.dim();
  Matrix scaled_v = eigenvectors;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < n; ++k) scaled_v(i, k) *= eigenvalues[k];
  Matrix rebuilt;
  kernels::gemm_nt(scaled_v, eigenvectors, rebuilt);
  double worst = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      worst = std::max(worst, std::abs(rebuilt(i, j) - a(i, j)));
  return worst;
}

EigenDecomposition sym_eigen(const SymMatrix& a) {
  require_finite(a.matrix(), "sym_eigen");
  const std::size_t n = a.dim();
  Matrix work = a.matrix();
  Matrix v = Matrix::identity(n);
  jacobi_diagonalize(work, &v);

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
    return work(i, i) < work(j, j);
  });
  EigenDecomposition out{Vector(n), Matrix(n, n)};
  for (std::size_t k = 0; k < n; ++k) {
    out.eigenvalues[k] = work(order[k], order[k]);
    for (std::size_t r = 0; r < n; ++r) out.eigenvectors(r, k) = v(r, order[k]);
  }
  return out;
}

Vector sym_eigenvalues(const SymMatrix& a) {
  require_finite(a.matrix(), "sym_eigenvalues");
  Matrix work = a.matrix();
  jacobi_diagonalize(work, nullptr);
  Vector out(a.dim());
  for (std::size_t i = 0; i < a.dim(); ++i) out[i] = work(i, i);
  std::sort(out.begin(), out.end());
  return out;
}

double min_eigenvalue(const SymMatrix& a) { return sym_eigenvalues(a).front(); }

// ---------------------------------------------------------------------------

LuFactorization::LuFactorization(Matrix a) : lu_(std::move(a)), perm_(lu_.rows()) {
  if (!lu_.square()) throw DimensionError("LU: matrix is not square");
  const std::size_t n = lu_.rows();
  std::iota(perm_.begin(), perm_.end(), 0);
  for (std::size_t p = 0; p < n; ++p) {
    std::size_t best = p;
    for (std::size_t r = p + 1; r < n; ++r)
      if (std::abs(lu_(r, p)) > std::abs(lu_(best, p))) best = r;
    if (lu_(best, p) == 0.0)
      throw CertificateError("singular", "LU: matrix is singular at column " +
                                             std::to_string(p));
    if (best != p) {
      std::swap_ranges(lu_.row(p).begin(), lu_.row(p).end(), lu_.row(best).begin());
      std::swap(perm_[p], perm_[best]);
    }
    kernels::eliminate_below(lu_, p);
  }
}

Vector LuFactorization::solve(std::span<const double> b) const {
  const std::size_t n = lu_.rows();
  if (b.size() != n) throw DimensionError("LU solve: right-hand side size mismatch");
  Vector x(n);
  for (std::size_t i = 0; i < n; ++i) {
    double s = b[perm_[i]];
    for (std::size_t j = 0; j < i; ++j) s -= lu_(i, j) * x[j];
    x[i] = s;
  }
  for (std::size_t i = n; i-- > 0;) {
    double s = x[i];
    for (std::size_t j = i + 1; j < n; ++j) s -= lu_(i, j) * x[j];
    x[i] = s / lu_(i, i);
  }
  return x;
}

Vector solve(const Matrix& a, std::span<const double> b) {
  return LuFactorization(a).solve(b);
}

// ---------------------------------------------------------------------------

double lyapunov_residual(const Matrix& a, const SymMatrix& p, const SymMatrix& q) {
  const Matrix pa = matmul(p.matrix(), a);
  double worst = 0.0;
  const std::size_t n = a.rows();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      worst = std::max(worst, std::abs(pa(i, j) + pa(j, i) + q(i, j)));
  return worst;
}

SymMatrix solve_lyapunov(const Matrix& a, const SymMatrix& q) {
  if (!a.square()) throw DimensionError("solve_lyapunov: A is not square");
  if (a.rows() != q.dim()) throw DimensionError("solve_lyapunov: A and Q differ in size");
  require_finite(a, "solve_lyapunov");
  require_finite(q.matrix(), "solve_lyapunov");

  // (I kron A^T + A^T kron I) vec(P) = -vec(Q), column-major vec.
  const std::size_t n = a.rows();
  const std::size_t nn = n * n;
  Matrix k(nn, nn);
  const auto rows = static_cast<std::ptrdiff_t>(nn);
#pragma omp parallel for schedule(static) if (nn >= 256)
  for (std::ptrdiff_t r = 0; r < rows; ++r) {
    const std::size_t i = static_cast<std::size_t>(r) % n;
    const std::size_t j = static_cast<std::size_t>(r) / n;
    for (std::size_t m = 0; m < n; ++m) {
      k(r, m + j * n) += a(m, i);
      k(r, i + m * n) += a(m, j);
    }
  }
  Vector rhs(nn);
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t i = 0; i < n; ++i) rhs[i + j * n] = -q(i, j);

  Vector vec_p;
  try {
    vec_p = LuFactorization(std::move(k)).solve(rhs);
  } catch (const CertificateError&) {
    throw CertificateError("kronecker_singular",
                           "solve_lyapunov: Kronecker system is singular "
                           "(two eigenvalues of A sum to zero)");
  }
  Matrix p(n, n);
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t i = 0; i < n; ++i) p(i, j) = vec_p[i + j * n];
  SymMatrix sym = SymMatrix::symmetrize(p);

  const double residual = lyapunov_residual(a, sym, q);
  const double bound = tol::kLyapunovResidual * max_abs(q.matrix());
  if (!(residual <= bound)) {
    std::ostringstream os;
    os << "solve_lyapunov: residual " << residual << " exceeds " << bound;
    throw CertificateError("lyapunov_residual", os.str());
  }
  const double lmin = min_eigenvalue(sym);
  if (!(lmin > 0.0)) {
    std::ostringstream os;
    os << "solve_lyapunov: P is not positive definite (min eigenvalue " << lmin
       << "); A is not Hurwitz";
    throw CertificateError("positive_definite", os.str());
  }
  return sym;
}

// ---------------------------------------------------------------------------

Matrix complement_basis_matrix(std::span<const double> g) {
  const std::size_t n = g.size();
  if (n == 0) throw DimensionError("complement basis: empty vector");
  if (!all_finite(g)) throw InvalidInputError("complement basis: non-finite entries");
  const double norm = norm2(g);
  if (norm == 0.0) throw InvalidInputError("complement basis: zero vector");

  // Householder vector v = x - alpha e1 with alpha = -sign(x0) ||x||, on the
  // normalized input so |v| is O(1).
  Vector v(g.begin(), g.end());
  for (double& x : v) x /= norm;
  const double alpha = v[0] >= 0.0 ? -1.0 : 1.0;
  v[0] -= alpha;
  const double vtv = dot(v, v);

  Matrix basis(n, n - 1);
  for (std::size_t j = 1; j < n; ++j)
    for (std::size_t i = 0; i < n; ++i)
      basis(i, j - 1) = (i == j ? 1.0 : 0.0) - 2.0 * v[i] * v[j] / vtv;
  return basis;
}

std::vector<Vector> orthonormal_complement_basis(std::span<const double> g) {
  const Matrix basis = complement_basis_matrix(g);
  std::vector<Vector> out(basis.cols(), Vector(basis.rows()));
  for (std::size_t j = 0; j < basis.cols(); ++j)
    for (std::size_t i = 0; i < basis.rows(); ++i) out[j][i] = basis(i, j);
  return out;
}

double angle_between(std::span<const double> y, std::span<const double> g) {
  if (y.size() != g.size()) throw DimensionError("angle_between: size mismatch");
  const double ny = norm2(y);
  const double ng = norm2(g);
  if (ny == 0.0 || ng == 0.0) throw InvalidInputError("angle_between: zero-norm input");
  const Vector yh = scaled(1.0 / ny, y);
  const Vector gh = scaled(1.0 / ng, g);
  const double c = dot(yh, gh);
  const double s = norm2(axpy(-c, gh, yh));
  return std::atan2(s, c);
}

// ---------------------------------------------------------------------------
// General (nonsymmetric) eigenvalues: stabilized elementary reduction to
// upper Hessenberg form, then the Francis double-shift QR iteration.

namespace {

void reduce_to_hessenberg(Matrix& a) {
  const std::size_t n = a.rows();
  for (std::size_t m = 1; m + 1 < n; ++m) {
    double x = 0.0;
    std::size_t piv = m;
    for (std::size_t j = m; j < n; ++j) {
      if (std::abs(a(j, m - 1)) > std::abs(x)) {
        x = a(j, m - 1);
        piv = j;
      }
    }
    if (piv != m) {
      for (std::size_t j = m - 1; j < n; ++j) std::swap(a(piv, j), a(m, j));
      for (std::size_t j = 0; j < n; ++j) std::swap(a(j, piv), a(j, m));
    }
    if (x == 0.0) continue;
    for (std::size_t i = m + 1; i < n; ++i) {
      double y = a(i, m - 1);
      if (y == 0.0) continue;
      y /= x;
      a(i, m - 1) = y;
      for (std::size_t j = m; j < n; ++j) a(i, j) -= y * a(m, j);
      for (std::size_t j = 0; j < n; ++j) a(j, m) += y * a(j, i);
    }
  }
  for (std::size_t i = 2; i < n; ++i)
    for (std::size_t j = 0; j + 1 < i; ++j) a(i, j) = 0.0;
}

double sign_of(double a, double b) { return b >= 0.0 ? std::abs(a) : -std::abs(a); }

std::vector<std::complex<double>> hessenberg_qr(Matrix& a) {
  const int n = static_cast<int>(a.rows());
  const double eps = std::numeric_limits<double>::epsilon();
  std::vector<std::complex<double>> w(n);
  double anorm = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = std::max(i - 1, 0); j < n; ++j) anorm += std::abs(a(i, j));

  int nn = n - 1;
  double t = 0.0;
  double p = 0.0, q = 0.0, r = 0.0, s = 0.0, x = 0.0, y = 0.0, z = 0.0;
  while (nn >= 0) {
    int its = 0;
    int l;
    do {
      for (l = nn; l > 0; --l) {
        s = std::abs(a(l - 1, l - 1)) + std::abs(a(l, l));
        if (s == 0.0) s = anorm;
        if (std::abs(a(l, l - 1)) <= eps * s) {
          a(l, l - 1) = 0.0;
          break;
        }
      }
      x = a(nn, nn);
      if (l == nn) {
        w[nn--] = x + t;
      } else {
        y = a(nn - 1, nn - 1);
        double wv = a(nn, nn - 1) * a(nn - 1, nn);
        if (l == nn - 1) {
          p = 0.5 * (y - x);
          q = p * p + wv;
          z = std::sqrt(std::abs(q));
          x += t;
          if (q >= 0.0) {
            z = p + sign_of(z, p);
            w[nn - 1] = w[nn] = x + z;
            if (z != 0.0) w[nn] = x - wv / z;
          } else {
            w[nn] = std::complex<double>(x + p, -z);
            w[nn - 1] = std::conj(w[nn]);
          }
          nn -= 2;
        } else {
          if (its == 60) throw Error("general_eigenvalues: QR iteration did not converge");
          if (its == 10 || its == 20 || its == 40) {
            // Exceptional shift.
            t += x;
            for (int i = 0; i <= nn; ++i) a(i, i) -= x;
            s = std::abs(a(nn, nn - 1)) + std::abs(a(nn - 1, nn - 2));
            y = x = 0.75 * s;
            wv = -0.4375 * s * s;
          }
          ++its;
          int m;
          for (m = nn - 2; m >= l; --m) {
            z = a(m, m);
            r = x - z;
            s = y - z;
            p = (r * s - wv) / a(m + 1, m) + a(m, m + 1);
            q = a(m + 1, m + 1) - z - r - s;
            r = a(m + 2, m + 1);
            s = std::abs(p) + std::abs(q) + std::abs(r);
            p /= s;
            q /= s;
            r /= s;
            if (m == l) break;
            const double u = std::abs(a(m, m - 1)) * (std::abs(q) + std::abs(r));
            const double v = std::abs(p) * (std::abs(a(m - 1, m - 1)) + std::abs(z) +
                                            std::abs(a(m + 1, m + 1)));
            if (u <= eps * v) break;
          }
          for (int i = m; i < nn - 1; ++i) {
            a(i + 2, i) = 0.0;
            if (i != m) a(i + 2, i - 1) = 0.0;
          }
          for (int k = m; k < nn; ++k) {
            if (k != m) {
              p = a(k, k - 1);
              q = a(k + 1, k - 1);
              r = 0.0;
              if (k + 1 != nn) r = a(k + 2, k - 1);
              if ((x = std::abs(p) + std::abs(q) + std::abs(r)) != 0.0) {
                p /= x;
                q /= x;
                r /= x;
              }
            }
            if ((s = sign_of(std::sqrt(p * p + q * q + r * r), p)) != 0.0) {
              if (k == m) {
                if (l != m) a(k, k - 1) = -a(k, k - 1);
              } else {
                a(k, k - 1) = -s * x;
              }
              p += s;
              x = p / s;
              y = q / s;
              z = r / s;
              q /= p;
              r /= p;
              for (int j = k; j <= nn; ++j) {
                p = a(k, j) + q * a(k + 1, j);
                if (k + 1 != nn) {
                  p += r * a(k + 2, j);
                  a(k + 2, j) -= p * z;
                }
                a(k + 1, j) -= p * y;
                a(k, j) -= p * x;
              }
              const int mmin = nn < k + 3 ? nn : k + 3;
              for (int i = l; i <= mmin; ++i) {
                p = x * a(i, k) + y * a(i, k + 1);
                if (k + 1 != nn) {
                  p += z * a(i, k + 2);
                  a(i, k + 2) -= p * r;
                }
                a(i, k + 1) -= p * q;
                a(i, k) -= p;
              }
            }
          }
        }
      }
    } while (l + 1 < nn);
  }
  return w;
}

}  // namespace

std::vector<std::complex<double>> general_eigenvalues(const Matrix& a) {
  if (!a.square()) throw DimensionError("general_eigenvalues: matrix is not square");
  require_finite(a, "general_eigenvalues");
  if (a.rows() == 0) return {};
  Matrix h = a;
  reduce_to_hessenberg(h);
  return hessenberg_qr(h);
}

double spectral_abscissa(const Matrix& a) {
  const auto eig = general_eigenvalues(a);
  double worst = -std::numeric_limits<double>::infinity();
  for (const auto& e : eig) worst = std::max(worst, e.real());
  return worst;
}

bool is_hurwitz(const Matrix& a) { return spectral_abscissa(a) < 0.0; }

}  // namespace natgrad
