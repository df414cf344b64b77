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

#include "doctest.h"

#include <cmath>

#include "natgrad/discrete.hpp"
#include "natgrad/errors.hpp"
#include "natgrad/kernels.hpp"
#include "natgrad/linalg.hpp"
#include "natgrad/loss.hpp"
#include "natgrad/sampling.hpp"
#include "natgrad/tolerances.hpp"
#include "support.hpp"

using namespace natgrad;
using natgrad::testing::reference_eigenvalues;
using natgrad::testing::reference_solve;

namespace {

// Independent scalar bisection for the quartic example:
// 1.5 (1 - 0.5 lambda)^2 = 1.0625 on (0, 1).
double quartic_lambda_oracle() {
  auto f = [](double l) { return 1.5 * (1 - 0.5 * l) * (1 - 0.5 * l) - 1.0625; };
  double lo = 0.0, hi = 1.0;
  for (int i = 0; i < 60; ++i) {
    const double mid = 0.5 * (lo + hi);
    if ((f(mid) > 0) == (f(lo) > 0))
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

Vector rotate(std::span<const double> v, double angle) {
  return {std::cos(angle) * v[0] - std::sin(angle) * v[1],
          std::sin(angle) * v[0] + std::cos(angle) * v[1]};
}

}  // namespace

TEST_CASE("loss library gradients agree with finite differences") {
  Rng rng(5);
  for (const auto& oracle :
       {losses::half_squared_norm(4), losses::quartic(3), losses::power(3), losses::power(4),
        losses::cosine_valley(), losses::double_well(), losses::quadratic(random_spd(rng, 5, 10.0))}) {
    CAPTURE(oracle.name());
    const auto st = self_test(oracle, rng);
    CHECK(st.ok);
    CHECK(st.probes == 8);
  }
  const LossOracle wrong(
      "wrong", 2, [](std::span<const double> t) { return t[0] * t[0] + t[1] * t[1]; },
      [](std::span<const double> t) { return Vector{t[0], t[1]}; });
  CHECK_FALSE(self_test(wrong, rng).ok);
}

TEST_CASE("finite-difference Hessian fallback") {
  const LossOracle exact = losses::cosine_valley();
  const LossOracle fd(
      "cosine_valley_fd", 2, [](std::span<const double> t) { return 0.5 * t[0] * t[0] - std::cos(t[1]); },
      [](std::span<const double> t) { return Vector{t[0], std::sin(t[1])}; });
  CHECK_FALSE(fd.has_exact_hessian());
  for (const Vector& theta : {Vector{0.3, 2.5}, Vector{-1.0, 0.2}, Vector{4.0, -3.0}}) {
    const SymMatrix a = exact.hessian(theta);
    const SymMatrix b = fd.hessian(theta);
    CHECK(max_abs(add(a.matrix(), b.matrix(), -1.0)) < 1e-8);
    CHECK(b(0, 1) == b(1, 0));
  }
  CHECK_THROWS_AS(exact.value(Vector{1.0}), DimensionError);
  CHECK_THROWS_AS(losses::by_name("nope", 2), ConfigError);
  CHECK_THROWS_AS(losses::by_name("double_well", 3), ConfigError);
}

TEST_CASE("DiscreteStep") {
  const DiscreteStep s(Vector{1, 2}, Vector{-0.5, 0.25}, 0.1);
  CHECK(s.theta_next() == Vector{1 + 0.1 * -0.5, 2 + 0.1 * 0.25});
  const auto e = DiscreteStep::from_endpoints(Vector{1, 2}, Vector{0.5, 3}, 0.5);
  CHECK(e.g()[0] == doctest::Approx(-1.0));
  CHECK(e.g()[1] == doctest::Approx(2.0));
  CHECK_THROWS_AS(DiscreteStep(Vector{1}, Vector{1}, 0.0), InvalidInputError);
  CHECK_THROWS_AS(DiscreteStep(Vector{1}, Vector{1, 2}, 1.0), DimensionError);
}

TEST_CASE("taylor_lambda") {
  SUBCASE("quadratic: flat residual gives 0.5") {
    const auto q = losses::half_squared_norm(3);
    CHECK(taylor_lambda(q, Vector{1, -2, 0.5}, Vector{0.3, 0.1, -1}) == 0.5);
  }
  SUBCASE("theta^4, theta = 1, p = -0.5") {
    const double lambda = taylor_lambda(losses::power(4), Vector{1.0}, Vector{-0.5});
    CHECK(std::abs(lambda - quartic_lambda_oracle()) <= 1e-6);
    CHECK(lambda == doctest::Approx(2 * (1 - std::sqrt(1.0625 / 1.5))).epsilon(1e-12));
    CHECK(lambda == doctest::Approx(0.31674).epsilon(1e-4));
  }
  SUBCASE("theta^3, theta = 0, p = 1: 3 lambda = 1") {
    const double lambda = taylor_lambda(losses::power(3), Vector{0.0}, Vector{1.0});
    CHECK(lambda == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
    CHECK(std::abs(taylor_residual(losses::power(3), Vector{0.0}, Vector{1.0}, lambda)) < 1e-12);
  }
  SUBCASE("an inconsistent Hessian has no root") {
    const LossOracle broken(
        "broken", 1, [](std::span<const double> t) { return t[0] * t[0]; },
        [](std::span<const double> t) { return Vector{2 * t[0]}; },
        [](std::span<const double>) { return SymMatrix{{100.0}}; });
    try {
      taylor_lambda(broken, Vector{1.0}, Vector{1.0});
      FAIL("expected NoRootError");
    } catch (const NoRootError& e) {
      CHECK(e.lambdas().size() == 64);
      CHECK(e.residuals().size() == 64);
      CHECK(e.residuals().front() == doctest::Approx(1.0 - 50.0));
    }
  }
  CHECK_THROWS_AS(taylor_lambda(losses::power(4), Vector{1.0}, Vector{0.0}), InvalidInputError);
}

TEST_CASE("discrete_gradient") {
  SUBCASE("quadratic step is exact") {
    const DiscreteStep step(Vector{1, 0}, Vector{-1, 0}, 0.1);
    const auto r = discrete_gradient(losses::half_squared_norm(2), step);
    CHECK(r.y_bar[0] == doctest::Approx(-0.95).epsilon(1e-14));
    CHECK(r.y_bar[1] == 0.0);
    CHECK(step.eta() * dot(step.g(), r.y_bar) == doctest::Approx(0.095).epsilon(1e-14));
    CHECK(r.loss_after - r.loss_before == doctest::Approx(-0.095).epsilon(1e-14));
    CHECK(r.identity_residual <= 1e-15);
    CHECK(r.psi_bar == 0.0);
    CHECK(r.hessian_mid(0, 0) == 0.5);
  }
  SUBCASE("theta^4 example: y_bar = -1.875") {
    const DiscreteStep step(Vector{1.0}, Vector{-0.5}, 1.0);
    const auto r = discrete_gradient(losses::power(4), step);
    CHECK(r.y_bar[0] == doctest::Approx(-1.875).epsilon(1e-9));
    CHECK(dot(step.g(), r.y_bar) == doctest::Approx(0.9375).epsilon(1e-9));
    CHECK(r.identity_residual <= 1e-9);
    CHECK(r.taylor_residual <= 1e-9);
  }
  SUBCASE("loss increase is refused") {
    const DiscreteStep up(Vector{1.0, 0.0}, Vector{1.0, 0.0}, 0.1);
    try {
      discrete_gradient(losses::half_squared_norm(2), up);
      FAIL("expected EffectivenessError");
    } catch (const EffectivenessError& e) {
      CHECK(e.loss_after() > e.loss_before());
    }
    const DiscreteStep flat(Vector{1.0, 0.0}, Vector{0.0, 1.0}, 1e-300);
    CHECK_THROWS_AS(discrete_gradient(losses::half_squared_norm(2), flat), EffectivenessError);
  }
}

TEST_CASE("property: the discrete gradient identity on random effective steps") {
  Rng rng(17);
  const LossOracle quad = losses::quadratic(random_spd(rng, 4, 20.0));
  const LossOracle quart = losses::quartic(4);
  for (const LossOracle* oracle : {&quad, &quart}) {
    for (int k = 0; k < 100; ++k) {
      const Vector theta = random_normal_vector(rng, 4);
      const Vector grad = oracle->gradient(theta);
      // A descent direction within 60 degrees of -grad.
      Vector g = scaled(-1.0, grad);
      g = axpy(0.5 * norm2(grad), random_unit_vector(rng, 4), g);
      const double eta = 0.05 / std::max(1.0, max_abs(oracle->hessian(theta).matrix()));
      const DiscreteStep step(theta, g, eta);
      const auto r = discrete_gradient(*oracle, step);
      const double scale = std::max(1.0, std::abs(r.loss_before));
      CHECK(r.identity_residual <= 1e-9 * scale);
      CHECK(r.taylor_residual <= 1e-9 * scale);
      CHECK(r.lambda_taylor > 0.0);
      CHECK(r.lambda_taylor < 1.0);
      CHECK(r.psi_bar < std::numbers::pi / 2);
    }
  }
}

TEST_CASE("build_discrete_metric") {
  SUBCASE("y_bar parallel to g") {
    const DiscreteStep step(Vector{0, 0, 0}, Vector{1, 2, 2}, 0.5);
    const Vector y_bar{3, 6, 6};
    const Metric m = build_discrete_metric(step, y_bar);
    const Vector ev = reference_eigenvalues(m.matrix().matrix());
    CHECK(ev[0] == doctest::Approx(1.0));
    CHECK(ev[1] == doctest::Approx(1.0));
    CHECK(ev[2] == doctest::Approx(3.0));
  }
  SUBCASE("quadratic step maps and reconstructs") {
    const LossOracle q = losses::half_squared_norm(2);
    const DiscreteStep step(Vector{1, 0.5}, Vector{-1, 0.2}, 0.1);
    const auto r = discrete_gradient(q, step);
    const Metric m = build_discrete_metric(step, r.y_bar);
    CHECK(norm2(subtract(matvec(m.matrix(), step.g()), r.y_bar)) <= 1e-10 * norm2(r.y_bar));
    const Vector x = reference_solve(m.matrix().matrix(), r.y_bar);
    const Vector rebuilt = axpy(step.eta(), x, step.theta_t());
    CHECK(norm2(subtract(rebuilt, step.theta_next())) <= 1e-9);
  }
  SUBCASE("misaligned y_bar") {
    const DiscreteStep step(Vector{0, 0}, Vector{1, 0}, 1.0);
    CHECK_THROWS_AS(build_discrete_metric(step, Vector{-1, 0.1}), AlignmentError);
  }
}

TEST_CASE("combined_metric") {
  SUBCASE("convex loss: positive definite for every eta") {
    const LossOracle q = losses::quartic(3);
    for (double eta : {1e-3, 1e-2, 1e-1}) {
      const DiscreteStep step(Vector{0.5, -0.3, 0.8}, scaled(-1.0, q.gradient(Vector{0.5, -0.3, 0.8})), eta);
      const auto r = discrete_gradient(q, step);
      const Metric m_bar = build_discrete_metric(step, r.y_bar);
      const auto c = combined_metric(m_bar, r.hessian_mid, eta);
      CHECK(c.is_pd);
      CHECK(combined_reconstruction_error(c, step.g(), q.gradient(step.theta_t())) <= 1e-8);
    }
  }
  SUBCASE("indefinite H with a large eta") {
    const auto c = combined_metric(SymMatrix::identity(2), SymMatrix{{-1, 0}, {0, 1}}, 2.0);
    CHECK_FALSE(c.is_pd);
    CHECK(c.min_eigenvalue == doctest::Approx(-1.0));
  }
  SUBCASE("eta = 0 returns M_bar") {
    const SymMatrix m{{2, 0.5}, {0.5, 1}};
    const auto c = combined_metric(m, SymMatrix{{-5, 0}, {0, 3}}, 0.0);
    CHECK(c.matrix == m);
    CHECK(c.is_pd);
  }
  CHECK_THROWS_AS(combined_metric(SymMatrix::identity(2), SymMatrix::identity(3), 1.0), DimensionError);
}

TEST_CASE("max_learning_rate") {
  SUBCASE("h = 2, equal norms, psi = 0") {
    const Vector g{1, 0, 0};
    const auto b = max_learning_rate(g, g, 2.0);
    CHECK(b.formula == doctest::Approx(0.5));
    CHECK(b.certified == doctest::Approx(0.5));
    const auto c = combined_metric(SymMatrix::identity(3), SymMatrix::diagonal(Vector{-2, 1, 1}), 0.49);
    CHECK(c.is_pd);
  }
  SUBCASE("limits") {
    const Vector g{1, 0};
    const auto near_orthogonal = max_learning_rate(Vector{1e-8, 1}, g, 1.0);
    CHECK(near_orthogonal.formula < 1e-7);
    CHECK(max_learning_rate(g, g, 1e-12).formula > 1e11);
    CHECK_THROWS_AS(max_learning_rate(g, g, 0.0), InvalidInputError);
    CHECK_THROWS_AS(max_learning_rate(Vector{-1, 0}, g, 1.0), AlignmentError);
  }
  SUBCASE("property: certified bound is below the formula and guarantees PD") {
    Rng rng(23);
    for (int k = 0; k < 200; ++k) {
      const std::size_t d = 2 + k % 5;
      const auto pair = random_aligned_pair(rng, d);
      const Vector g(pair.g().begin(), pair.g().end());
      const Vector y(pair.y().begin(), pair.y().end());
      const double h = std::exp(std::uniform_real_distribution<double>(-3, 3)(rng));
      const auto b = max_learning_rate(y, g, h);
      CHECK(b.certified < b.formula);
      const Metric m = build_canonical_metric(pair);
      CHECK(b.lambda_min_m_bar == doctest::Approx(reference_eigenvalues(m.matrix().matrix()).front()).epsilon(1e-9));
      // Worst case H: smallest eigenvalue -h along M's weakest direction.
      const auto eig = sym_eigen(m.matrix());
      Matrix hm(d, d);
      std::vector<double> col(d);
      for (std::size_t i = 0; i < d; ++i) col[i] = eig.eigenvectors(i, 0);
      kernels::rank1_update(hm, -h, col, col);
      const SymMatrix hs = SymMatrix::symmetrize(hm);
      CHECK(combined_metric(m, hs, 0.999 * b.certified).is_pd);
      CHECK_FALSE(combined_metric(m, hs, 1.001 * b.certified).is_pd);
    }
  }
}

TEST_CASE("natural-gradient reconstruction on a nonconvex loss") {
  const LossOracle valley = losses::cosine_valley();
  const Vector theta{0.4, 2.6};  // cos(2.6) < 0: locally concave in y
  const double h = 0.5;          // -1/2 curvature floor
  const Vector g = rotate(scaled(-1.0, valley.gradient(theta)), 0.4);
  double eta = 0.1;
  for (int it = 0; it < 20; ++it) {
    const DiscreteStep step(theta, g, eta);
    const auto r = discrete_gradient(valley, step);
    eta = 0.9 * max_learning_rate(r.y_bar, g, h).certified;
  }
  const DiscreteStep step(theta, g, eta);
  const auto r = discrete_gradient(valley, step);
  CHECK(min_eigenvalue(r.hessian_mid) < 0.0);
  const auto bound = max_learning_rate(r.y_bar, g, h);
  CHECK(eta < bound.certified);
  const auto c = combined_metric(build_discrete_metric(step, r.y_bar), r.hessian_mid, eta);
  CHECK(c.is_pd);
  CHECK(combined_reconstruction_error(c, g, valley.gradient(theta)) <= 1e-8);
}

TEST_CASE("continuum_limit_probe") {
  const std::vector<double> etas{1e-1, 1e-2, 1e-3, 1e-4, 1e-5};
  SUBCASE("quadratic: error is exactly eta/2 ||A g||") {
    Rng rng(3);
    const SymMatrix a = random_spd(rng, 3, 5.0);
    const LossOracle q = losses::quadratic(a);
    const Vector theta{1, -1, 0.5};
    const auto rule = [&](std::span<const double> t) { return scaled(-1.0, q.gradient(t)); };
    const auto rows = continuum_limit_probe(q, theta, rule, etas);
    const Vector ag = matvec(a, rule(theta));
    for (const auto& row : rows) {
      REQUIRE(row.effective);
      CHECK(row.y_bar_error == doctest::Approx(0.5 * row.eta * norm2(ag)).epsilon(1e-6));
      CHECK(row.eta_hg_norm == doctest::Approx(row.y_bar_error).epsilon(1e-6));
    }
    CHECK(continuum_order(rows) == doctest::Approx(1.0).epsilon(1e-6));
  }
  SUBCASE("quartic: first order and M_bar converges") {
    const LossOracle q = losses::quartic(3);
    const Vector theta{0.9, -0.6, 0.4};
    // Gradient descent plus a fixed bias, so g is not parallel to y.
    const auto rule = [&](std::span<const double> t) {
      return add(scaled(-1.0, q.gradient(t)), Vector{0.1, 0.0, -0.05});
    };
    const auto rows = continuum_limit_probe(q, theta, rule, etas);
    for (const auto& row : rows) CHECK(row.effective);
    const double slope = continuum_order(rows);
    CHECK(slope >= 0.9);
    CHECK(slope <= 1.1);
    const Metric m = build_canonical_metric(UpdateGradientPair(rule(theta), scaled(-1.0, q.gradient(theta))));
    CHECK(rows.back().m_bar_deviation <= 1e-4 * max_abs(m.matrix().matrix()));
  }
  SUBCASE("ineffective steps are flagged") {
    const LossOracle q = losses::half_squared_norm(1);
    const auto rule = [](std::span<const double> t) { return Vector{-t[0]}; };
    const auto rows = continuum_limit_probe(q, Vector{1.0}, rule, std::vector<double>{3.0, 1.0});
    CHECK_FALSE(rows[0].effective);
    CHECK(std::isnan(rows[0].y_bar_error));
    CHECK(rows[1].effective);
  }
  CHECK(loglog_slope(std::vector<double>{1, 10, 100}, std::vector<double>{2, 200, 20000}) ==
        doctest::Approx(2.0));
}

TEST_CASE("stochastic_average_metric") {
  const LossOracle q = losses::half_squared_norm(3);
  const Vector theta{1, -0.5, 0.25};
  const Vector grad = q.gradient(theta);
  const double eta = 0.1;
  auto sample_for = [&](const Vector& g) {
    const auto r = discrete_gradient(q, DiscreteStep(theta, g, eta));
    return StochasticSample{g, r.y_bar, matvec(r.hessian_mid, g)};
  };

  SUBCASE("single deterministic sample") {
    const Vector g = scaled(-1.0, grad);
    const std::vector<StochasticSample> one{sample_for(g)};
    const auto s = stochastic_average_metric(one, eta, grad);
    const Metric m_bar = build_discrete_metric(DiscreteStep(theta, g, eta), one[0].y_bar);
    Matrix expected = m_bar.matrix().matrix();
    kernels::rank1_update(expected, eta / dot(one[0].hg, g), one[0].hg, one[0].hg);
    CHECK(s.used_correction);
    CHECK(max_abs(add(s.matrix.matrix(), expected, -1.0)) <= 1e-14);
    CHECK(s.reconstruction_residual <= 1e-12);
    CHECK(s.is_pd);
  }
  SUBCASE("<Hg> orthogonal to <g> skips the correction") {
    const std::vector<StochasticSample> samples{{Vector{1, 0}, Vector{1, 0.5}, Vector{0, 1}}};
    const auto s = stochastic_average_metric(samples, eta);
    CHECK_FALSE(s.used_correction);
    CHECK(s.is_pd);
  }
  SUBCASE("Monte Carlo with noisy gradients") {
    Rng rng(99);
    std::vector<StochasticSample> samples;
    for (int k = 0; k < 1000; ++k)
      samples.push_back(sample_for(axpy(0.1, random_normal_vector(rng, 3), scaled(-1.0, grad))));
    const auto s = stochastic_average_metric(samples, eta, grad);
    CHECK(s.used_correction);
    CHECK(s.is_pd);
    CHECK(s.min_eigenvalue == doctest::Approx(reference_eigenvalues(s.matrix.matrix()).front()).epsilon(1e-9));
    CHECK(s.reconstruction_residual <= 1e-6);
    const Vector x = reference_solve(s.matrix.matrix(), scaled(-1.0, grad));
    CHECK(norm2(subtract(x, s.mean_g)) <= 1e-6 * norm2(s.mean_g));
  }
  SUBCASE("average misalignment") {
    const std::vector<StochasticSample> bad{{Vector{1, 0}, Vector{-1, 0}, Vector{0, 0}}};
    CHECK_THROWS_AS(stochastic_average_metric(bad, eta), AlignmentError);
  }
}
