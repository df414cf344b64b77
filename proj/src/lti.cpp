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

#include <cmath>
#include <limits>
#include <sstream>

#include "natgrad/errors.hpp"
#include "natgrad/experiments.hpp"
#include "natgrad/kernels.hpp"
#include "natgrad/linalg.hpp"
#include "natgrad/sampling.hpp"

namespace natgrad {

namespace {

Vector rk4_step(const Matrix& a, std::span<const double> theta, double dt) {
  const Vector k1 = matvec(a, theta);
  const Vector k2 = matvec(a, axpy(0.5 * dt, k1, theta));
  const Vector k3 = matvec(a, axpy(0.5 * dt, k2, theta));
  const Vector k4 = matvec(a, axpy(dt, k3, theta));
  Vector next(theta.begin(), theta.end());
  for (std::size_t i = 0; i < next.size(); ++i)
    next[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
  return next;
}

}  // namespace

Matrix random_hurwitz(std::uint64_t seed, std::size_t dim) {
  Rng rng(seed);
  Matrix r = random_normal_matrix(rng, dim, dim);
  const double shift = spectral_abscissa(r) + 0.5;
  for (std::size_t i = 0; i < dim; ++i) r(i, i) -= shift;
  return r;
}

LtiResult run_lti(const LtiConfig& config) {
  if (config.dim == 0) throw ConfigError("lti: dim must be >= 1");
  if (!(config.dt > 0.0) || !(config.t_end > 0.0) || !std::isfinite(config.t_end))
    throw ConfigError("lti: dt and t_end must be positive");
  if (config.window_m == 0) throw ConfigError("lti: window_m must be >= 1");

  Matrix a = config.a_matrix ? *config.a_matrix : random_hurwitz(config.seed, config.dim);
  if (!a.square() || a.rows() != config.dim) throw ConfigError("lti: A must be dim x dim");
  if (!a.all_finite()) throw ConfigError("lti: A has non-finite entries");
  if (!is_hurwitz(a)) {
    std::ostringstream os;
    os << "lti: A is not Hurwitz (spectral abscissa " << spectral_abscissa(a) << ")";
    throw ConfigError(os.str());
  }
  Vector theta = config.theta0 ? *config.theta0 : Vector(config.dim, 1.0);
  if (theta.size() != config.dim) throw ConfigError("lti: theta0 must have dim entries");

  const SymMatrix q = SymMatrix::identity(config.dim);
  SymMatrix p = solve_lyapunov(a, q);
  const double lyap = lyapunov_residual(a, p, q);

  const auto steps = static_cast<std::size_t>(std::llround(config.t_end / config.dt));
  TrajectoryTrace trace;
  trace.times.reserve(steps + 1);
  for (std::size_t k = 0; k <= steps; ++k) {
    const Vector g = matvec(a, theta);
    const Vector y = scaled(-2.0, matvec(p, theta));
    if (norm2(g) == 0.0 || norm2(y) == 0.0) {
      trace.truncated = true;
      trace.note = "state reached zero";
      break;
    }
    UpdateGradientPair pair(g, y);
    if (!pair.is_aligned()) {
      trace.truncated = true;
      trace.note = "alignment lost near the origin";
      break;
    }
    double residual = std::numeric_limits<double>::quiet_NaN();
    if (config.verify_every > 0 && k % config.verify_every == 0) {
      const Metric m = optimal_metric(pair);
      residual = norm2(subtract(solve(m.matrix().matrix(), y), g)) / norm2(g);
    }
    trace.times.push_back(static_cast<double>(k) * config.dt);
    trace.losses.push_back(dot(theta, matvec(p, theta)));
    trace.spectra.push_back(closed_form_spectrum(pair, 1.0));
    trace.natgrad_residuals.push_back(residual);
    trace.pairs.push_back(std::move(pair));
    if (k < steps) theta = rk4_step(a, theta, config.dt);
  }
  if (trace.size() > config.window_m)
    trace.effectiveness = check_effectiveness(trace.losses, config.window_m);
  return {std::move(a), std::move(p), lyap, std::move(trace)};
}

}  // namespace natgrad
