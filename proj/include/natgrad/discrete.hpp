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

// Discrete updates theta_{t+1} = theta_t + eta g written as natural gradient
// steps. The discrete gradient
//
//   grad_bar L(x, x + p) = grad L(x) + 1/2 hess L(x + lambda p) p,
//
// with lambda the Taylor mean-value point, gives y_bar = -grad_bar L and the
// metric M_bar with M_bar g = y_bar. Moving the Hessian term to the left
// yields (M_bar + eta H) g = -grad L(theta_t), H = 1/2 hess L(midpoint),
// which is a true natural gradient step whenever M_bar + eta H is positive
// definite.

#include <functional>
#include <optional>
#include <vector>

#include "natgrad/loss.hpp"
#include "natgrad/metric.hpp"

namespace natgrad {

/// theta_{t+1} = theta_t + eta g. The endpoint is derived from (theta_t, g,
/// eta) so the step identity holds exactly.
class DiscreteStep {
 public:
  DiscreteStep(Vector theta_t, Vector g, double eta);
  /// g = (theta_next - theta_t) / eta; theta_next() is then recomputed
  /// from g and may differ from the argument in the last bit.
  static DiscreteStep from_endpoints(Vector theta_t, std::span<const double> theta_next,
                                     double eta);

  std::span<const double> theta_t() const { return theta_t_; }
  std::span<const double> g() const { return g_; }
  double eta() const { return eta_; }
  std::size_t dim() const { return g_.size(); }
  Vector theta_next() const;
  /// p = eta g.
  Vector displacement() const;

 private:
  Vector theta_t_;
  Vector g_;
  double eta_;
};

struct DiscreteGradientResult {
  Vector y_bar;
  double lambda_taylor;
  SymMatrix hessian_mid;  // H = 1/2 hess L(theta_t + lambda eta g)
  double psi_bar;
  double loss_before;
  double loss_after;
  /// |L(x+p) - L(x) - p^T grad L(x) - 1/2 p^T hess L(x + lambda p) p|
  double taylor_residual;
  /// |eta g^T y_bar + (L(theta_next) - L(theta_t))|
  double identity_residual;
};

/// The Taylor mean-value point on (0, 1). Scans 64 interior points and
/// bisects the first sign change; a residual flat below tolerance returns
/// 0.5. Throws NoRootError carrying the scanned profile otherwise.
double taylor_lambda(const LossOracle& oracle, std::span<const double> theta,
                     std::span<const double> p);

/// Residual of the second-order Taylor identity at lambda.
double taylor_residual(const LossOracle& oracle, std::span<const double> theta,
                       std::span<const double> p, double lambda);

/// Throws EffectivenessError when the step does not decrease the loss.
DiscreteGradientResult discrete_gradient(const LossOracle& oracle, const DiscreteStep& step);

/// y_bar y_bar^T / (y_bar^T g) + sum u_i u_i^T over the complement of g.
/// Certifies the reconstruction theta_t + eta M_bar^{-1} y_bar = theta_next
/// and throws CertificateError("discrete_reconstruction") if it fails.
Metric build_discrete_metric(const DiscreteStep& step, std::span<const double> y_bar);

/// ||theta_t + eta M_bar^{-1} y_bar - theta_next|| / max(1, ||theta_next||).
double discrete_reconstruction_error(const DiscreteStep& step, const SymMatrix& m_bar,
                                     std::span<const double> y_bar);

struct CombinedMetric {
  SymMatrix matrix;  // M_bar + eta H
  bool is_pd;
  double min_eigenvalue;
};

CombinedMetric combined_metric(const SymMatrix& m_bar, const SymMatrix& hessian_mid, double eta);
CombinedMetric combined_metric(const Metric& m_bar, const SymMatrix& hessian_mid, double eta);

/// ||g + (M_bar + eta H)^{-1} grad L(theta_t)|| / ||g||. Only meaningful
/// when the combined matrix is nonsingular.
double combined_reconstruction_error(const CombinedMetric& combined, std::span<const double> g,
                                     std::span<const double> grad_at_theta);

struct LearningRateBound {
  /// (1/h)(||y_bar|| / ||g||) cos psi_bar. Uses the supremum of
  /// lambda_min(M_bar), which no unit-weight M_bar attains.
  double formula;
  /// lambda_min(M_bar) / h for the unit-weight M_bar actually built; below
  /// this, lambda_min(M_bar + eta H) > 0 is guaranteed.
  double certified;
  double lambda_min_m_bar;
  double h;
};

/// h > 0 is minus the smallest eigenvalue of H (or a lower bound on it).
/// Throws AlignmentError or InvalidInputError.
LearningRateBound max_learning_rate(std::span<const double> y_bar, std::span<const double> g,
                                    double h);

struct ContinuumRow {
  double eta;
  bool effective;
  double y_bar_error;   // ||y_bar - y||
  double eta_hg_norm;   // ||eta H g||
  double m_bar_deviation;  // ||M_bar - M||_max, M the unit-weight metric of (g, y)
  Vector m_bar_spectrum;
};

/// Evaluates the discrete construction for each eta at fixed theta with
/// g = g_rule(theta). Steps that do not decrease the loss are flagged and
/// left with NaN fields.
std::vector<ContinuumRow> continuum_limit_probe(
    const LossOracle& oracle, std::span<const double> theta,
    const std::function<Vector(std::span<const double>)>& g_rule, std::span<const double> etas);

/// Least-squares slope of log(value) against log(eta) over effective rows
/// with positive values. NaN with fewer than two usable rows.
double continuum_order(const std::vector<ContinuumRow>& rows);

/// Least-squares slope of log(y) against log(x) over positive pairs.
double loglog_slope(std::span<const double> x, std::span<const double> y);

struct StochasticSample {
  Vector g;
  Vector y_bar;
  Vector hg;  // H g for this sample
};

struct StochasticMetric {
  SymMatrix matrix;
  bool is_pd;
  bool used_correction;
  double min_eigenvalue;
  Vector mean_g;
  Vector mean_y_bar;
  Vector mean_hg;
  /// ||M <g> + grad L(theta_t)|| / ||grad L(theta_t)||, with grad L taken
  /// from the caller when supplied and as -(<y_bar> + eta <Hg>) otherwise.
  double reconstruction_residual;
};

/// Averaged metric <y_bar><y_bar>^T/(<g>^T<y_bar>) + sum u_i u_i^T over the
/// complement of <g>, plus eta <Hg><Hg>^T/(<Hg>^T<g>) when <Hg>^T<g> is
/// nonzero. Means use compensated summation. Throws AlignmentError when
/// <y_bar>^T<g> <= 0.
StochasticMetric stochastic_average_metric(std::span<const StochasticSample> samples, double eta,
                                           std::optional<Vector> grad_at_theta = std::nullopt);

}  // namespace natgrad
