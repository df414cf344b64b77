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

#include "natgrad/discrete.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "natgrad/errors.hpp"
#include "natgrad/kernels.hpp"
#include "natgrad/linalg.hpp"
#include "natgrad/tolerances.hpp"

namespace natgrad {

namespace {

constexpr int kTaylorScanPoints = 64;
constexpr int kBisectionIterations = 60;
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Neumaier-compensated running sum.
class CompensatedSum {
 public:
  void add(double v) {
    const double t = sum_ + v;
    if (std::abs(sum_) >= std::abs(v))
      comp_ += (sum_ - t) + v;
    else
      comp_ += (v - t) + sum_;
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

struct TaylorTerms {
  double loss_diff;  // L(x+p) - L(x)
  double linear;     // p^T grad L(x)
  double loss_at_x;
};

TaylorTerms taylor_terms(const LossOracle& oracle, std::span<const double> theta,
                         std::span<const double> p) {
  const double l0 = oracle.value(theta);
  const double l1 = oracle.value(add(theta, p));
  return {l1 - l0, dot(p, oracle.gradient(theta)), l0};
}

double residual_at(const LossOracle& oracle, std::span<const double> theta,
                   std::span<const double> p, const TaylorTerms& terms, double lambda) {
  const SymMatrix h = oracle.hessian(axpy(lambda, p, theta));
  return terms.loss_diff - terms.linear - 0.5 * dot(p, matvec(h, p));
}

}  // namespace

DiscreteStep::DiscreteStep(Vector theta_t, Vector g, double eta)
    : theta_t_(std::move(theta_t)), g_(std::move(g)), eta_(eta) {
  if (theta_t_.size() != g_.size()) throw DimensionError("DiscreteStep: theta and g differ in size");
  if (g_.empty()) throw DimensionError("DiscreteStep: dimension must be >= 1");
  if (!(eta_ > 0.0) || !std::isfinite(eta_))
    throw InvalidInputError("DiscreteStep: eta must be positive and finite");
  if (!all_finite(theta_t_) || !all_finite(g_))
    throw InvalidInputError("DiscreteStep: non-finite entries");
}

DiscreteStep DiscreteStep::from_endpoints(Vector theta_t, std::span<const double> theta_next,
                                          double eta) {
  if (!(eta > 0.0)) throw InvalidInputError("DiscreteStep: eta must be positive");
  Vector g = scaled(1.0 / eta, subtract(theta_next, theta_t));
  return DiscreteStep(std::move(theta_t), std::move(g), eta);
}

Vector DiscreteStep::theta_next() const { return axpy(eta_, g_, theta_t_); }

Vector DiscreteStep::displacement() const { return scaled(eta_, g_); }

double taylor_residual(const LossOracle& oracle, std::span<const double> theta,
                       std::span<const double> p, double lambda) {
  return residual_at(oracle, theta, p, taylor_terms(oracle, theta, p), lambda);
}

double taylor_lambda(const LossOracle& oracle, std::span<const double> theta,
                     std::span<const double> p) {
  if (theta.size() != p.size()) throw DimensionError("taylor_lambda: theta and p differ in size");
  if (norm2(p) == 0.0) throw InvalidInputError("taylor_lambda: p must be nonzero");
  const TaylorTerms terms = taylor_terms(oracle, theta, p);
  const double tolerance = tol::kTaylorResidual * std::max(1.0, std::abs(terms.loss_at_x));
  auto r = [&](double lambda) { return residual_at(oracle, theta, p, terms, lambda); };

  std::vector<double> lambdas(kTaylorScanPoints);
  std::vector<double> residuals(kTaylorScanPoints);
  bool flat = true;
  for (int k = 0; k < kTaylorScanPoints; ++k) {
    lambdas[k] = (k + 0.5) / kTaylorScanPoints;
    residuals[k] = r(lambdas[k]);
    flat = flat && std::abs(residuals[k]) < tolerance;
  }
  if (flat) return 0.5;

  for (int k = 0; k < kTaylorScanPoints; ++k) {
    if (residuals[k] == 0.0) return lambdas[k];
    if (k + 1 < kTaylorScanPoints && residuals[k] * residuals[k + 1] < 0.0) {
      double lo = lambdas[k], hi = lambdas[k + 1];
      double r_lo = residuals[k];
      for (int it = 0; it < kBisectionIterations; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double r_mid = r(mid);
        if (r_mid == 0.0) return mid;
        if ((r_mid < 0.0) == (r_lo < 0.0)) {
          lo = mid;
          r_lo = r_mid;
        } else {
          hi = mid;
        }
      }
      return 0.5 * (lo + hi);
    }
  }

  int best = 0;
  for (int k = 1; k < kTaylorScanPoints; ++k)
    if (std::abs(residuals[k]) < std::abs(residuals[best])) best = k;
  if (std::abs(residuals[best]) < tolerance) return lambdas[best];

  std::ostringstream os;
  os << "taylor_lambda: no root on (0,1) for loss '" << oracle.name()
     << "'; smallest |residual| " << std::abs(residuals[best]) << " at lambda " << lambdas[best];
  throw NoRootError(std::move(lambdas), std::move(residuals), os.str());
}

DiscreteGradientResult discrete_gradient(const LossOracle& oracle, const DiscreteStep& step) {
  if (step.dim() != oracle.dim()) throw DimensionError("discrete_gradient: step and loss differ in dimension");
  const Vector theta_next = step.theta_next();
  const double before = oracle.value(step.theta_t());
  const double after = oracle.value(theta_next);
  if (!(after < before)) {
    std::ostringstream os;
    os << "step does not decrease the loss: " << before << " -> " << after;
    throw EffectivenessError(before, after, os.str());
  }

  const Vector p = step.displacement();
  const double lambda = taylor_lambda(oracle, step.theta_t(), p);
  const Vector grad = oracle.gradient(step.theta_t());
  const SymMatrix hess = oracle.hessian(axpy(lambda, p, step.theta_t()));

  Matrix half = hess.matrix();
  for (double& v : half.data()) v *= 0.5;
  SymMatrix h(std::move(half));

  Vector y_bar = scaled(-1.0, grad);
  y_bar = axpy(-1.0, matvec(h, p), y_bar);

  DiscreteGradientResult out{std::move(y_bar), lambda, std::move(h), 0.0, before, after, 0.0, 0.0};
  out.psi_bar = angle_between(out.y_bar, step.g());
  out.taylor_residual = std::abs((after - before) - dot(p, grad) - 0.5 * dot(p, matvec(hess, p)));
  out.identity_residual = std::abs(step.eta() * dot(step.g(), out.y_bar) + (after - before));
  return out;
}

double discrete_reconstruction_error(const DiscreteStep& step, const SymMatrix& m_bar,
                                     std::span<const double> y_bar) {
  const Vector x = solve(m_bar.matrix(), y_bar);
  const Vector next = step.theta_next();
  const Vector rebuilt = axpy(step.eta(), x, step.theta_t());
  return norm2(subtract(rebuilt, next)) / std::max(1.0, norm2(next));
}

Metric build_discrete_metric(const DiscreteStep& step, std::span<const double> y_bar) {
  const UpdateGradientPair pair(Vector(step.g().begin(), step.g().end()),
                                Vector(y_bar.begin(), y_bar.end()));
  Metric m = build_canonical_metric(pair);
  const double err = discrete_reconstruction_error(step, m.matrix(), y_bar);
  if (!(err <= tol::kDiscreteReconstruction)) {
    std::ostringstream os;
    os << "discrete metric does not reproduce the step: error " << err;
    throw CertificateError("discrete_reconstruction", os.str());
  }
  return m;
}

CombinedMetric combined_metric(const SymMatrix& m_bar, const SymMatrix& hessian_mid, double eta) {
  if (m_bar.dim() != hessian_mid.dim()) throw DimensionError("combined_metric: size mismatch");
  if (!(eta >= 0.0) || !std::isfinite(eta))
    throw InvalidInputError("combined_metric: eta must be non-negative and finite");
  SymMatrix sum(add(m_bar.matrix(), hessian_mid.matrix(), eta));
  const double lmin = min_eigenvalue(sum);
  return {std::move(sum), lmin > 0.0, lmin};
}

CombinedMetric combined_metric(const Metric& m_bar, const SymMatrix& hessian_mid, double eta) {
  return combined_metric(m_bar.matrix(), hessian_mid, eta);
}

double combined_reconstruction_error(const CombinedMetric& combined, std::span<const double> g,
                                     std::span<const double> grad_at_theta) {
  try {
    const Vector x = solve(combined.matrix.matrix(), scaled(-1.0, grad_at_theta));
    return norm2(subtract(x, g)) / norm2(g);
  } catch (const CertificateError&) {
    return std::numeric_limits<double>::infinity();
  }
}

LearningRateBound max_learning_rate(std::span<const double> y_bar, std::span<const double> g,
                                    double h) {
  if (!(h > 0.0) || !std::isfinite(h))
    throw InvalidInputError("max_learning_rate: h must be positive and finite");
  const UpdateGradientPair pair(Vector(g.begin(), g.end()), Vector(y_bar.begin(), y_bar.end()));
  require_alignment(pair);
  const double r = pair.norm_ratio();
  const double c = pair.cos_psi();
  // The unit-weight M_bar is the family member with gamma = cos psi / r.
  const double lmin = closed_form_spectrum(pair, c / r).lambda_min;
  return {r * c / h, lmin / h, lmin, h};
}

std::vector<ContinuumRow> continuum_limit_probe(
    const LossOracle& oracle, std::span<const double> theta,
    const std::function<Vector(std::span<const double>)>& g_rule, std::span<const double> etas) {
  const Vector g = g_rule(theta);
  const Vector y = scaled(-1.0, oracle.gradient(theta));
  const Metric m = build_canonical_metric(UpdateGradientPair(g, y));

  std::vector<ContinuumRow> rows;
  rows.reserve(etas.size());
  for (double eta : etas) {
    ContinuumRow row{eta, false, kNaN, kNaN, kNaN, {}};
    const DiscreteStep step(Vector(theta.begin(), theta.end()), g, eta);
    try {
      const DiscreteGradientResult dg = discrete_gradient(oracle, step);
      const Metric m_bar = build_discrete_metric(step, dg.y_bar);
      row.effective = true;
      row.y_bar_error = norm2(subtract(dg.y_bar, y));
      row.eta_hg_norm = eta * norm2(matvec(dg.hessian_mid, g));
      row.m_bar_deviation = max_abs(add(m_bar.matrix().matrix(), m.matrix().matrix(), -1.0));
      row.m_bar_spectrum = metric_eigenvalues(m_bar);
    } catch (const EffectivenessError&) {
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

double loglog_slope(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw DimensionError("loglog_slope: size mismatch");
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i] > 0.0 && y[i] > 0.0 && std::isfinite(x[i]) && std::isfinite(y[i])) {
      lx.push_back(std::log(x[i]));
      ly.push_back(std::log(y[i]));
    }
  }
  if (lx.size() < 2) return kNaN;
  const double n = static_cast<double>(lx.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    mx += lx[i];
    my += ly[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxy += (lx[i] - mx) * (ly[i] - my);
    sxx += (lx[i] - mx) * (lx[i] - mx);
  }
  return sxx > 0.0 ? sxy / sxx : kNaN;
}

double continuum_order(const std::vector<ContinuumRow>& rows) {
  std::vector<double> x, y;
  for (const auto& r : rows) {
    if (!r.effective) continue;
    x.push_back(r.eta);
    y.push_back(r.y_bar_error);
  }
  return loglog_slope(x, y);
}

StochasticMetric stochastic_average_metric(std::span<const StochasticSample> samples, double eta,
                                           std::optional<Vector> grad_at_theta) {
  if (samples.empty()) throw InvalidInputError("stochastic_average_metric: no samples");
  if (!(eta > 0.0) || !std::isfinite(eta))
    throw InvalidInputError("stochastic_average_metric: eta must be positive and finite");
  const std::size_t d = samples.front().g.size();
  std::vector<CompensatedSum> sg(d), sy(d), sh(d);
  for (const auto& s : samples) {
    if (s.g.size() != d || s.y_bar.size() != d || s.hg.size() != d)
      throw DimensionError("stochastic_average_metric: samples differ in dimension");
    for (std::size_t i = 0; i < d; ++i) {
      sg[i].add(s.g[i]);
      sy[i].add(s.y_bar[i]);
      sh[i].add(s.hg[i]);
    }
  }
  const double inv_n = 1.0 / static_cast<double>(samples.size());
  Vector mg(d), my(d), mh(d);
  for (std::size_t i = 0; i < d; ++i) {
    mg[i] = sg[i].value() * inv_n;
    my[i] = sy[i].value() * inv_n;
    mh[i] = sh[i].value() * inv_n;
  }

  const Metric m_bar = build_canonical_metric(UpdateGradientPair(mg, my));
  Matrix m = m_bar.matrix().matrix();
  const double hg_dot_g = dot(mh, mg);
  const bool correct = std::abs(hg_dot_g) > tol::kStochasticCorrection * norm2(mh) * norm2(mg);
  if (correct) kernels::rank1_update(m, eta / hg_dot_g, mh, mh);
  SymMatrix sym(std::move(m));

  const Vector grad = grad_at_theta ? *grad_at_theta : scaled(-1.0, axpy(eta, mh, my));
  if (grad.size() != d) throw DimensionError("stochastic_average_metric: gradient size mismatch");
  const double residual = norm2(add(matvec(sym, mg), grad)) / norm2(grad);
  const double lmin = min_eigenvalue(sym);
  return {std::move(sym), lmin > 0.0, correct, lmin, std::move(mg), std::move(my), std::move(mh),
          residual};
}

}  // namespace natgrad
