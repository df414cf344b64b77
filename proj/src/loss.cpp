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

#include "natgrad/loss.hpp"

#include <cmath>
#include <sstream>

#include "natgrad/errors.hpp"
#include "natgrad/linalg.hpp"
#include "natgrad/tolerances.hpp"

namespace natgrad {

LossOracle::LossOracle(std::string name, std::size_t dim, ValueFn value, GradientFn gradient,
                       HessianFn hessian, std::optional<double> curvature_floor)
    : name_(std::move(name)),
      dim_(dim),
      value_(std::move(value)),
      gradient_(std::move(gradient)),
      hessian_(std::move(hessian)),
      curvature_floor_(curvature_floor) {
  if (dim_ == 0) throw DimensionError("LossOracle: dimension must be >= 1");
  if (!value_ || !gradient_) throw InvalidInputError("LossOracle: value and gradient are required");
}

void LossOracle::check(std::span<const double> theta) const {
  if (theta.size() != dim_) throw DimensionError("LossOracle '" + name_ + "': wrong input size");
}

double LossOracle::value(std::span<const double> theta) const {
  check(theta);
  return value_(theta);
}

Vector LossOracle::gradient(std::span<const double> theta) const {
  check(theta);
  Vector g = gradient_(theta);
  if (g.size() != dim_) throw DimensionError("LossOracle '" + name_ + "': gradient has wrong size");
  return g;
}

SymMatrix LossOracle::hessian(std::span<const double> theta) const {
  check(theta);
  if (hessian_) {
    SymMatrix h = hessian_(theta);
    if (h.dim() != dim_) throw DimensionError("LossOracle '" + name_ + "': Hessian has wrong size");
    return h;
  }
  const double step = tol::kFiniteDifferenceStep * std::max(1.0, norm2(theta));
  Matrix h(dim_, dim_);
  Vector probe(theta.begin(), theta.end());
  for (std::size_t j = 0; j < dim_; ++j) {
    const double saved = probe[j];
    probe[j] = saved + step;
    const Vector gp = gradient_(probe);
    probe[j] = saved - step;
    const Vector gm = gradient_(probe);
    probe[j] = saved;
    for (std::size_t i = 0; i < dim_; ++i) h(i, j) = (gp[i] - gm[i]) / (2.0 * step);
  }
  return SymMatrix::symmetrize(h);
}

GradientSelfTest self_test(const LossOracle& oracle, Rng& rng, std::size_t probes, double radius) {
  GradientSelfTest out{true, 0.0, probes};
  const std::size_t d = oracle.dim();
  for (std::size_t k = 0; k < probes; ++k) {
    Vector theta = scaled(radius, random_normal_vector(rng, d));
    const Vector grad = oracle.gradient(theta);
    const double step = tol::kFiniteDifferenceStep * std::max(1.0, norm2(theta));
    Vector fd(d);
    for (std::size_t j = 0; j < d; ++j) {
      const double saved = theta[j];
      theta[j] = saved + step;
      const double fp = oracle.value(theta);
      theta[j] = saved - step;
      const double fm = oracle.value(theta);
      theta[j] = saved;
      fd[j] = (fp - fm) / (2.0 * step);
    }
    const double err = norm2(subtract(fd, grad)) / std::max(1.0, norm2(grad));
    out.max_relative_error = std::max(out.max_relative_error, err);
  }
  out.ok = out.max_relative_error <= tol::kGradientSelfTest;
  return out;
}

namespace losses {

LossOracle quadratic(const SymMatrix& a) {
  const double floor = sym_eigenvalues(a).front();
  return LossOracle(
      "quadratic", a.dim(),
      [a](std::span<const double> t) { return 0.5 * dot(t, matvec(a, t)); },
      [a](std::span<const double> t) { return matvec(a, t); },
      [a](std::span<const double>) { return a; }, floor);
}

LossOracle half_squared_norm(std::size_t dim) { return quadratic(SymMatrix::identity(dim)); }

LossOracle quartic(std::size_t dim) {
  return LossOracle(
      "quartic", dim,
      [](std::span<const double> t) {
        double s = 0.0;
        for (double v : t) s += v * v * v * v;
        return s;
      },
      [](std::span<const double> t) {
        Vector g(t.size());
        for (std::size_t i = 0; i < t.size(); ++i) g[i] = 4.0 * t[i] * t[i] * t[i];
        return g;
      },
      [](std::span<const double> t) {
        Vector d(t.size());
        for (std::size_t i = 0; i < t.size(); ++i) d[i] = 12.0 * t[i] * t[i];
        return SymMatrix::diagonal(d);
      },
      0.0);
}

LossOracle power(int n) {
  if (n < 2) throw InvalidInputError("losses::power: exponent must be >= 2");
  std::ostringstream name;
  name << "power" << n;
  return LossOracle(
      name.str(), 1, [n](std::span<const double> t) { return std::pow(t[0], n); },
      [n](std::span<const double> t) { return Vector{n * std::pow(t[0], n - 1)}; },
      [n](std::span<const double> t) {
        return SymMatrix{{static_cast<double>(n) * (n - 1) * std::pow(t[0], n - 2)}};
      });
}

LossOracle cosine_valley() {
  return LossOracle(
      "cosine_valley", 2,
      [](std::span<const double> t) { return 0.5 * t[0] * t[0] - std::cos(t[1]); },
      [](std::span<const double> t) { return Vector{t[0], std::sin(t[1])}; },
      [](std::span<const double> t) { return SymMatrix{{1.0, 0.0}, {0.0, std::cos(t[1])}}; },
      -1.0);
}

LossOracle double_well() {
  return LossOracle(
      "double_well", 2,
      [](std::span<const double> t) {
        const double u = t[0] * t[0] - 1.0;
        return u * u + t[1] * t[1];
      },
      [](std::span<const double> t) {
        return Vector{4.0 * t[0] * (t[0] * t[0] - 1.0), 2.0 * t[1]};
      },
      [](std::span<const double> t) {
        return SymMatrix{{12.0 * t[0] * t[0] - 4.0, 0.0}, {0.0, 2.0}};
      },
      -4.0);
}

LossOracle by_name(const std::string& name, std::size_t dim) {
  if (name == "quadratic") return half_squared_norm(dim);
  if (name == "quartic") return quartic(dim);
  if (name == "cosine_valley" || name == "double_well") {
    if (dim != 2) throw ConfigError("loss '" + name + "' is two-dimensional");
    return name == "cosine_valley" ? cosine_valley() : double_well();
  }
  throw ConfigError("unknown loss '" + name + "'");
}

}  // namespace losses

}  // namespace natgrad
