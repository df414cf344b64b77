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

#include "natgrad/metric.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "natgrad/errors.hpp"
#include "natgrad/kernels.hpp"
#include "natgrad/tolerances.hpp"

namespace natgrad {

namespace {

Vector unit(std::span<const double> v) { return scaled(1.0 / norm2(v), v); }

// y y^T / (y^T g), the part of every metric fixed by the pair.
Matrix gradient_outer_term(const UpdateGradientPair& pair) {
  Matrix m(pair.dim(), pair.dim());
  kernels::rank1_update(m, 1.0 / pair.alignment(), pair.y(), pair.y());
  return m;
}

}  // namespace

UpdateGradientPair::UpdateGradientPair(Vector g, Vector y)
    : g_(std::move(g)), y_(std::move(y)) {
  if (g_.size() != y_.size()) throw DimensionError("pair: g and y differ in dimension");
  if (g_.empty()) throw DimensionError("pair: dimension must be >= 1");
  if (!all_finite(g_) || !all_finite(y_))
    throw InvalidInputError("pair: non-finite entries");
  if (norm2(g_) == 0.0) throw InvalidInputError("pair: update direction g is zero");
  if (norm2(y_) == 0.0) throw InvalidInputError("pair: negative gradient y is zero");
}

double UpdateGradientPair::alignment() const { return dot(y_, g_); }
double UpdateGradientPair::norm_g() const { return norm2(g_); }
double UpdateGradientPair::norm_y() const { return norm2(y_); }
double UpdateGradientPair::norm_ratio() const { return norm_y() / norm_g(); }

double UpdateGradientPair::cos_psi() const { return dot(unit(y_), unit(g_)); }

double UpdateGradientPair::sin_psi() const {
  const Vector yh = unit(y_);
  const Vector gh = unit(g_);
  return norm2(axpy(-dot(yh, gh), gh, yh));
}

double UpdateGradientPair::psi() const { return angle_between(y_, g_); }

bool UpdateGradientPair::is_aligned() const {
  return alignment() > tol::kAlignment * norm_y() * norm_g();
}

UpdateGradientPair ExtendedPair::to_pair() const {
  return UpdateGradientPair(v_dot, neg_grad_v);
}

void require_alignment(const UpdateGradientPair& pair) {
  if (pair.is_aligned()) return;
  std::ostringstream os;
  os << "no positive definite metric maps g to y: y^T g = " << pair.alignment()
     << ", psi = " << pair.psi() << " rad";
  throw AlignmentError(pair.psi(), pair.alignment(), os.str());
}

Metric certify_metric(SymMatrix m, UpdateGradientPair pair, std::optional<double> gamma) {
  if (m.dim() != pair.dim()) throw DimensionError("metric and pair differ in dimension");
  const Vector mg = matvec(m, pair.g());
  const double residual = norm2(subtract(mg, pair.y())) / pair.norm_y();
  if (!(residual <= tol::kMetricMapResidual)) {
    std::ostringstream os;
    os << "metric certificate failed: ||Mg - y||/||y|| = " << residual;
    throw CertificateError("map_residual", os.str());
  }
  const double lmin = min_eigenvalue(m);
  if (!(lmin > 0.0)) {
    std::ostringstream os;
    os << "metric certificate failed: lambda_min = " << lmin;
    throw CertificateError("positive_definite", os.str());
  }
  return Metric(std::move(m), std::move(pair), gamma, MetricCertificates{residual, lmin});
}

Metric build_canonical_metric(const UpdateGradientPair& pair,
                              std::span<const double> weights) {
  require_alignment(pair);
  const std::size_t d = pair.dim();
  if (!weights.empty() && weights.size() != d - 1)
    throw DimensionError("canonical metric: expected D-1 weights");
  for (double w : weights)
    if (!(w > 0.0) || !std::isfinite(w))
      throw InvalidInputError("canonical metric: weights must be positive and finite");

  Matrix m = gradient_outer_term(pair);
  const auto basis = orthonormal_complement_basis(pair.g());
  for (std::size_t i = 0; i < basis.size(); ++i)
    kernels::rank1_update(m, weights.empty() ? 1.0 : weights[i], basis[i], basis[i]);
  return certify_metric(SymMatrix(std::move(m)), pair);
}

Metric build_canonical_metric(const UpdateGradientPair& pair,
                              const SymMatrix& complement_operator) {
  require_alignment(pair);
  const std::size_t d = pair.dim();
  if (d == 1) throw DimensionError("canonical metric: complement is empty for D = 1");
  if (complement_operator.dim() != d - 1)
    throw DimensionError("canonical metric: complement operator must be (D-1)x(D-1)");
  if (!(min_eigenvalue(complement_operator) > 0.0))
    throw InvalidInputError("canonical metric: complement operator is not positive definite");

  const Matrix u = complement_basis_matrix(pair.g());
  Matrix uw;
  kernels::gemm(u, complement_operator.matrix(), uw);
  Matrix uwut;
  kernels::gemm_nt(uw, u, uwut);
  Matrix m = add(gradient_outer_term(pair), uwut);
  return certify_metric(SymMatrix(std::move(m)), pair);
}

Metric build_family_metric(const UpdateGradientPair& pair, double gamma) {
  if (!(gamma > 0.0) || !std::isfinite(gamma))
    throw InvalidInputError("family metric: gamma must be positive and finite");
  require_alignment(pair);
  const std::size_t d = pair.dim();
  const double a = pair.alignment();
  const double alpha = gamma * dot(pair.y(), pair.y()) / a;
  const Vector gh = unit(pair.g());

  Matrix m = gradient_outer_term(pair);
  for (std::size_t i = 0; i < d; ++i) m(i, i) += alpha;
  kernels::rank1_update(m, -alpha, gh, gh);
  return certify_metric(SymMatrix(std::move(m)), pair, gamma);
}

Metric optimal_metric(const UpdateGradientPair& pair) { return build_family_metric(pair, 1.0); }

SpectrumReport closed_form_spectrum(const UpdateGradientPair& pair, double gamma) {
  if (!(gamma > 0.0) || !std::isfinite(gamma))
    throw InvalidInputError("closed_form_spectrum: gamma must be positive and finite");
  require_alignment(pair);
  const double r = pair.norm_ratio();
  const double c = pair.cos_psi();
  const double s = pair.sin_psi();

  SpectrumReport out{};
  out.psi = std::atan2(s, c);
  out.norm_ratio = r;
  if (pair.dim() == 1) {
    // The complement is empty and M is the scalar y/g.
    out.lambda_max = out.lambda_min = pair.y()[0] / pair.g()[0];
    out.kappa = 1.0;
    return out;
  }
  // (1+gamma)^2 - 4 gamma cos^2 = (1-gamma)^2 + 4 gamma sin^2, free of
  // cancellation; lambda_min follows from lambda_max lambda_min = r^2 gamma.
  const double disc = std::sqrt((1.0 - gamma) * (1.0 - gamma) + 4.0 * gamma * s * s);
  out.lambda_max = r / (2.0 * c) * ((1.0 + gamma) + disc);
  out.lambda_min = r * r * gamma / out.lambda_max;
  if (pair.dim() >= 3) out.lambda_bulk = r * gamma / c;
  out.kappa = out.lambda_max / out.lambda_min;
  return out;
}

double condition_number_bound(double psi) {
  if (!std::isfinite(psi) || std::abs(psi) >= std::numbers::pi / 2)
    throw InvalidInputError("condition_number_bound: |psi| must be below pi/2");
  const double s = std::abs(std::sin(psi));
  const double c = std::cos(psi);
  return (1.0 + s) * (1.0 + s) / (c * c);
}

EigenvalueBounds extreme_eigenvalue_bounds(const UpdateGradientPair& pair) {
  require_alignment(pair);
  const double r = pair.norm_ratio();
  const double c = pair.cos_psi();
  return {r * c, r / c};
}

CanonicalDecomposition canonical_decomposition(const Metric& m) {
  const auto& pair = m.pair();
  const Matrix m_prime = add(m.matrix().matrix(), gradient_outer_term(pair), -1.0);
  SymMatrix sym_prime(m_prime);
  const double residual = norm2(matvec(sym_prime, pair.g())) / pair.norm_g();

  double min_eig = std::numeric_limits<double>::infinity();
  if (pair.dim() > 1) {
    const Matrix u = complement_basis_matrix(pair.g());
    Matrix mu;
    kernels::gemm(sym_prime.matrix(), u, mu);
    Matrix utmu;
    kernels::gemm_tn(u, mu, utmu);
    min_eig = min_eigenvalue(SymMatrix::symmetrize(utmu));
  }
  return {std::move(sym_prime), residual, min_eig};
}

NaturalGradientCheck verify_natural_gradient_form(const UpdateGradientPair& pair,
                                                  const Matrix& m) {
  if (!m.square() || m.rows() != pair.dim())
    throw DimensionError("verify_natural_gradient_form: matrix and pair differ in dimension");
  NaturalGradientCheck out{};
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = i + 1; j < m.cols(); ++j)
      out.symmetry_defect = std::max(out.symmetry_defect, std::abs(m(i, j) - m(j, i)));
  out.map_residual = norm2(subtract(matvec(m, pair.g()), pair.y())) / pair.norm_y();
  out.min_eigenvalue = m.all_finite() ? min_eigenvalue(SymMatrix::symmetrize(m))
                                      : std::numeric_limits<double>::quiet_NaN();
  out.is_valid = out.map_residual <= tol::kVerifyMapResidual && out.min_eigenvalue > 0.0 &&
                 out.symmetry_defect <= tol::kVerifySymmetry;
  return out;
}

NaturalGradientCheck verify_natural_gradient_form(const UpdateGradientPair& pair,
                                                  const SymMatrix& m) {
  return verify_natural_gradient_form(pair, m.matrix());
}

ExtendedPair extend_time_varying(std::span<const double> theta_dot,
                                 std::span<const double> grad_theta, double grad_t) {
  if (theta_dot.size() != grad_theta.size())
    throw DimensionError("extend_time_varying: theta_dot and grad_theta differ in size");
  if (!all_finite(theta_dot) || !all_finite(grad_theta) || !std::isfinite(grad_t))
    throw InvalidInputError("extend_time_varying: non-finite input");
  ExtendedPair out;
  out.v_dot.assign(theta_dot.begin(), theta_dot.end());
  out.v_dot.push_back(1.0);
  out.neg_grad_v.reserve(grad_theta.size() + 1);
  for (double v : grad_theta) out.neg_grad_v.push_back(-v);
  out.neg_grad_v.push_back(-grad_t);
  return out;
}

Vector metric_eigenvalues(const Metric& m) { return sym_eigenvalues(m.matrix()); }

double family_map_residual(const UpdateGradientPair& pair, double gamma) {
  // M g = y (y^T g)/a + alpha (g - g_hat (g_hat^T g)), evaluated term by term.
  const double a = pair.alignment();
  const double alpha = gamma * dot(pair.y(), pair.y()) / a;
  const Vector gh = unit(pair.g());
  const Vector proj = axpy(-dot(gh, pair.g()), gh, pair.g());
  Vector mg = axpy(alpha, proj, scaled(dot(pair.y(), pair.g()) / a, pair.y()));
  return norm2(subtract(mg, pair.y())) / pair.norm_y();
}

}  // namespace natgrad
