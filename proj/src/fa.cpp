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

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "natgrad/errors.hpp"
#include "natgrad/experiments.hpp"
#include "natgrad/kernels.hpp"
#include "natgrad/linalg.hpp"
#include "natgrad/sampling.hpp"

namespace natgrad {

namespace {

struct Network {
  Matrix w1;  // hidden x input
  Matrix w2;  // output x hidden
  bool tanh_hidden;
};

struct Gradients {
  Matrix dw1_bp;
  Matrix dw1_fa;
  Matrix dw2;
  double loss;
};

Matrix rows_of(const Matrix& m, std::span<const std::size_t> idx) {
  Matrix out(idx.size(), m.cols());
  for (std::size_t r = 0; r < idx.size(); ++r) {
    const auto src = m.row(idx[r]);
    std::copy(src.begin(), src.end(), out.row(r).begin());
  }
  return out;
}

Matrix one_hot(std::span<const int> labels, std::span<const std::size_t> idx, std::size_t outputs) {
  Matrix t(idx.size(), outputs);
  for (std::size_t r = 0; r < idx.size(); ++r) t(r, static_cast<std::size_t>(labels[idx[r]])) = 1.0;
  return t;
}

// Loss (1/2N) sum ||W2 f(W1 x) - t||^2 and its gradients on one batch. The
// hidden error signal uses W2 for backpropagation and `feedback` for
// feedback alignment.
Gradients evaluate(const Network& net, const Matrix& x, const Matrix& t, const Matrix& feedback) {
  const double n = static_cast<double>(x.rows());
  Matrix z;
  kernels::gemm_nt(x, net.w1, z);
  Matrix h = z;
  if (net.tanh_hidden)
    for (double& v : h.data()) v = std::tanh(v);
  Matrix o;
  kernels::gemm_nt(h, net.w2, o);

  Matrix e = add(o, t, -1.0);
  const double loss = 0.5 * kernels::dot(e.data(), e.data()) / n;
  for (double& v : e.data()) v /= n;

  Gradients gr;
  gr.loss = loss;
  kernels::gemm_tn(e, h, gr.dw2);

  auto hidden_grad = [&](const Matrix& back) {
    Matrix delta;
    kernels::gemm(e, back, delta);
    if (net.tanh_hidden) {
      auto d = delta.data();
      auto hd = h.data();
      for (std::size_t i = 0; i < d.size(); ++i) d[i] *= 1.0 - hd[i] * hd[i];
    }
    Matrix dw1;
    kernels::gemm_tn(delta, x, dw1);
    return dw1;
  };
  gr.dw1_bp = hidden_grad(net.w2);
  gr.dw1_fa = hidden_grad(feedback);
  return gr;
}

Matrix scaled_matrix(Matrix m, double alpha) {
  for (double& v : m.data()) v *= alpha;
  return m;
}

Vector flatten_negated(const Matrix& dw1, const Matrix& dw2) {
  Vector v;
  v.reserve(dw1.data().size() + dw2.data().size());
  for (double x : dw1.data()) v.push_back(-x);
  for (double x : dw2.data()) v.push_back(-x);
  return v;
}

Dataset load_fa_dataset(const FaConfig& c) {
  if (c.dataset == DatasetKind::kSynthetic)
    return synthetic_clusters(c.seed, c.classes, c.samples_per_class, c.input_dim, c.cluster_spread);
  return load_dataset_file(c.digits_path.empty() ? default_digits_path() : c.digits_path);
}

}  // namespace

FaResult run_feedback_alignment(const FaConfig& config) {
  if (config.input_dim == 0 || config.hidden_dim == 0 || config.output_dim == 0)
    throw ConfigError("fa: layer sizes must be >= 1");
  if (config.window_m == 0 || config.steps < config.window_m)
    throw ConfigError("fa: need steps >= window_m >= 1");
  if (!(config.learning_rate > 0.0) || !std::isfinite(config.learning_rate))
    throw ConfigError("fa: learning_rate must be positive");

  const Dataset data = load_fa_dataset(config);
  if (data.input_dim() != config.input_dim) {
    std::ostringstream os;
    os << "fa: dataset has " << data.input_dim() << " features but input_dim is " << config.input_dim;
    throw ConfigError(os.str());
  }
  if (static_cast<std::size_t>(data.classes) > config.output_dim)
    throw ConfigError("fa: output_dim is smaller than the number of classes");

  // Separate streams for weights and batch order, both derived from the seed.
  std::seed_seq weight_seq{config.seed, std::uint64_t{1}};
  std::seed_seq batch_seq{config.seed, std::uint64_t{2}};
  Rng weight_rng(weight_seq);
  Rng batch_rng(batch_seq);

  Network net{scaled_matrix(random_normal_matrix(weight_rng, config.hidden_dim, config.input_dim),
                            1.0 / std::sqrt(static_cast<double>(config.input_dim))),
              scaled_matrix(random_normal_matrix(weight_rng, config.output_dim, config.hidden_dim),
                            1.0 / std::sqrt(static_cast<double>(config.hidden_dim))),
              config.tanh_hidden};
  const Matrix random_b =
      scaled_matrix(random_normal_matrix(weight_rng, config.output_dim, config.hidden_dim),
                    1.0 / std::sqrt(static_cast<double>(config.hidden_dim)));

  std::vector<std::size_t> all(data.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  const Matrix x_all = data.features;
  const Matrix t_all = one_hot(data.labels, all, config.output_dim);
  const bool full_batch = config.batch_size == 0 || config.batch_size >= data.size();
  std::vector<std::size_t> order = all;
  std::size_t cursor = order.size();

  FaResult result;
  result.parameter_dim = net.w1.data().size() + net.w2.data().size();
  TrajectoryTrace& trace = result.trace;
  trace.times.reserve(config.steps);

  for (std::size_t step = 0; step < config.steps; ++step) {
    const Matrix& feedback = config.feedback == FeedbackMode::kTranspose ? net.w2 : random_b;
    const Gradients full = evaluate(net, x_all, t_all, feedback);

    Matrix dw1_rule = full.dw1_fa;
    Matrix dw2_rule = full.dw2;
    if (!full_batch) {
      if (cursor + config.batch_size > order.size()) {
        std::shuffle(order.begin(), order.end(), batch_rng);
        cursor = 0;
      }
      const std::span<const std::size_t> idx(order.data() + cursor, config.batch_size);
      cursor += config.batch_size;
      const Gradients batch =
          evaluate(net, rows_of(x_all, idx), one_hot(data.labels, idx, config.output_dim), feedback);
      dw1_rule = batch.dw1_fa;
      dw2_rule = batch.dw2;
    }

    Vector g = flatten_negated(dw1_rule, dw2_rule);
    Vector y = flatten_negated(full.dw1_bp, full.dw2);
    if (norm2(g) == 0.0 || norm2(y) == 0.0 || !all_finite(g) || !all_finite(y)) {
      trace.truncated = true;
      trace.note = "update or gradient vanished or diverged";
      break;
    }
    UpdateGradientPair pair(std::move(g), std::move(y));
    std::optional<SpectrumReport> spectrum;
    double residual = std::numeric_limits<double>::quiet_NaN();
    if (pair.is_aligned()) {
      spectrum = closed_form_spectrum(pair, 1.0);
      result.max_map_residual = std::max(result.max_map_residual, family_map_residual(pair, 1.0));
      if (config.verify_every > 0 && step % config.verify_every == 0) {
        const Metric m = optimal_metric(pair);
        ++result.verified_steps;
        if (verify_natural_gradient_form(pair, m.matrix()).is_valid) ++result.verified_ok;
        residual = norm2(subtract(solve(m.matrix().matrix(), pair.y()), pair.g())) / pair.norm_g();
      }
    }
    trace.times.push_back(static_cast<double>(step));
    trace.losses.push_back(full.loss);
    trace.spectra.push_back(spectrum);
    trace.natgrad_residuals.push_back(residual);
    trace.pairs.push_back(std::move(pair));

    // theta <- theta + lr g, with g = -(rule gradient).
    net.w1 = add(net.w1, dw1_rule, -config.learning_rate);
    net.w2 = add(net.w2, dw2_rule, -config.learning_rate);
  }
  if (trace.size() > config.window_m)
    trace.effectiveness = check_effectiveness(trace.losses, config.window_m);
  return result;
}

}  // namespace natgrad
