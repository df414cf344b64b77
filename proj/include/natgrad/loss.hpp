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

#include <functional>
#include <optional>
#include <string>

#include "natgrad/matrix.hpp"
#include "natgrad/sampling.hpp"

namespace natgrad {

/// A twice differentiable loss with its gradient and, optionally, an exact
/// Hessian. Without one, the Hessian is taken by central differences of the
/// gradient with step 1e-5 * max(1, ||theta||).
///
/// Evaluation functions must not mutate shared state: oracles may be called
/// concurrently.
class LossOracle {
 public:
  using ValueFn = std::function<double(std::span<const double>)>;
  using GradientFn = std::function<Vector(std::span<const double>)>;
  using HessianFn = std::function<SymMatrix(std::span<const double>)>;

  LossOracle(std::string name, std::size_t dim, ValueFn value, GradientFn gradient,
             HessianFn hessian = {}, std::optional<double> curvature_floor = std::nullopt);

  const std::string& name() const { return name_; }
  std::size_t dim() const { return dim_; }
  bool has_exact_hessian() const { return static_cast<bool>(hessian_); }
  /// A global lower bound on the smallest Hessian eigenvalue, when known.
  std::optional<double> curvature_floor() const { return curvature_floor_; }

  double value(std::span<const double> theta) const;
  Vector gradient(std::span<const double> theta) const;
  SymMatrix hessian(std::span<const double> theta) const;

 private:
  void check(std::span<const double> theta) const;

  std::string name_;
  std::size_t dim_;
  ValueFn value_;
  GradientFn gradient_;
  HessianFn hessian_;
  std::optional<double> curvature_floor_;
};

struct GradientSelfTest {
  bool ok;
  double max_relative_error;
  std::size_t probes;
};

/// Compares the gradient with central differences of the value at `probes`
/// points drawn from N(0, radius^2 I). Passes when every probe agrees to
/// tol::kGradientSelfTest relative to max(1, ||grad||).
GradientSelfTest self_test(const LossOracle& oracle, Rng& rng, std::size_t probes = 8,
                           double radius = 1.0);

namespace losses {

/// 1/2 theta^T A theta.
LossOracle quadratic(const SymMatrix& a);
/// 1/2 ||theta||^2.
LossOracle half_squared_norm(std::size_t dim);
/// sum_i theta_i^4.
LossOracle quartic(std::size_t dim);
/// theta^n in one dimension (n >= 2).
LossOracle power(int n);
/// 1/2 x^2 - cos(y). Hessian diag(1, cos y), floor -1.
LossOracle cosine_valley();
/// (x^2 - 1)^2 + y^2. Hessian diag(12 x^2 - 4, 2), floor -4.
LossOracle double_well();

/// Looks up one of the losses above by name: "quadratic" (identity),
/// "quartic", "cosine_valley", "double_well". Throws ConfigError.
LossOracle by_name(const std::string& name, std::size_t dim);

}  // namespace losses

}  // namespace natgrad
