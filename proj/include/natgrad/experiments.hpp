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

// Desk-scale experiments: a stable linear system recast as natural gradient
// flow on its Lyapunov function, feedback alignment on a small
// classification task, and the windowed effectiveness checker.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "natgrad/matrix.hpp"
#include "natgrad/metric.hpp"

namespace natgrad {

struct EffectivenessReport {
  std::size_t window_m = 1;
  /// L(t+m) < L(t) for every valid t.
  bool windowed_decrease_ok = false;
  /// The width-m moving average is strictly decreasing.
  bool avg_loss_monotone_ok = false;
  /// L(t+1) < L(t) for every t.
  bool instantaneous_monotone_ok = false;
  /// Number of t with L(t+m) >= L(t).
  std::size_t violation_count = 0;
  /// First t with L(t+1) >= L(t), if any.
  std::optional<std::size_t> first_instantaneous_increase;
};

/// Requires losses.size() > window_m >= 1; throws InvalidInputError.
EffectivenessReport check_effectiveness(std::span<const double> losses, std::size_t window_m);

/// Per-step record of an experiment. All vectors have equal length.
/// spectra[k] is empty where the pair is not aligned; natgrad_residuals[k]
/// is ||g + M^{-1} grad L|| / ||g|| for the optimal metric, NaN when not
/// evaluated.
struct TrajectoryTrace {
  std::vector<double> times;
  std::vector<double> losses;
  std::vector<UpdateGradientPair> pairs;
  std::vector<std::optional<SpectrumReport>> spectra;
  std::vector<double> natgrad_residuals;
  EffectivenessReport effectiveness;
  /// Set when the run stopped early; `note` says why.
  bool truncated = false;
  std::string note;

  std::size_t size() const { return times.size(); }
};

// ---------------------------------------------------------------------------
// Linear time-invariant system d theta/dt = A theta.

struct LtiConfig {
  std::size_t dim = 2;
  /// Used when set; otherwise A = R - (max Re lambda(R) + 0.5) I with R
  /// standard normal from `seed`.
  std::optional<Matrix> a_matrix;
  std::uint64_t seed = 0;
  /// Defaults to the all-ones vector.
  std::optional<Vector> theta0;
  double dt = 1e-3;
  double t_end = 10.0;
  std::size_t window_m = 10;
  /// Build and check the optimal metric every this many steps (0 = never).
  std::size_t verify_every = 1;
};

struct LtiResult {
  Matrix a;
  SymMatrix p;               // P A + A^T P = -I
  double lyapunov_residual;  // ||P A + A^T P + I||_max
  TrajectoryTrace trace;
};

/// Random Hurwitz matrix: shifted standard normal with margin 0.5.
Matrix random_hurwitz(std::uint64_t seed, std::size_t dim);

/// RK4 integration with loss theta^T P theta, g = A theta, y = -2 P theta.
/// Throws ConfigError for a non-Hurwitz A or inconsistent sizes.
LtiResult run_lti(const LtiConfig& config);

// ---------------------------------------------------------------------------
// Feedback alignment on a two-layer network.

struct Dataset {
  Matrix features;         // samples x input_dim
  std::vector<int> labels;  // in [0, classes)
  int classes = 0;

  std::size_t size() const { return labels.size(); }
  std::size_t input_dim() const { return features.cols(); }
};

/// `classes` Gaussian clusters with standard normal centres and isotropic
/// spread `spread`, `per_class` samples each, interleaved by class.
Dataset synthetic_clusters(std::uint64_t seed, int classes, std::size_t per_class,
                           std::size_t dim, double spread);

/// Binary layout, little endian: uint32 magic "NGDS", uint32 count,
/// uint32 dims, count*dims float32 row-major features, count uint8 labels.
/// Throws ConfigError on any format problem.
Dataset load_dataset_file(const std::string& path);
void save_dataset_file(const std::string& path, const Dataset& data);

/// Path of the bundled 8x8 digits subset.
std::string default_digits_path();

enum class FeedbackMode {
  kRandom,     // fixed random B
  kTranspose,  // B = W2 at every step, which is plain backpropagation
};

enum class DatasetKind { kSynthetic, kDigits };

struct FaConfig {
  std::uint64_t seed = 42;
  std::size_t input_dim = 64;
  std::size_t hidden_dim = 16;
  std::size_t output_dim = 3;
  DatasetKind dataset = DatasetKind::kSynthetic;
  int classes = 3;
  std::size_t samples_per_class = 100;
  double cluster_spread = 2.0;
  std::string digits_path;  // empty: default_digits_path()
  double learning_rate = 0.002;
  std::size_t steps = 2000;
  std::size_t window_m = 50;
  /// Samples per update; 0 uses the full dataset every step. The recorded
  /// loss and y always use the full dataset.
  std::size_t batch_size = 30;
  bool tanh_hidden = false;
  FeedbackMode feedback = FeedbackMode::kRandom;
  /// Run verify_natural_gradient_form on the dense optimal metric every
  /// this many steps (0 = never). Dense checks cost O(D^3).
  std::size_t verify_every = 0;
};

struct FaResult {
  TrajectoryTrace trace;
  std::size_t parameter_dim;
  /// Steps whose dense metric check ran, and how many passed.
  std::size_t verified_steps = 0;
  std::size_t verified_ok = 0;
  /// max ||M g - y|| / ||y|| of the optimal metric over aligned steps,
  /// evaluated without forming M.
  double max_map_residual = 0.0;
};

/// Trains input -> W1 -> hidden -> W2 -> output on mean squared error
/// against one-hot targets. Parameters are flattened as W1 (row-major,
/// hidden x input) followed by W2 (row-major, output x hidden). Per step the
/// pair is g = the rule's update per unit learning rate and y = minus the
/// full-dataset gradient. Throws ConfigError for bad sizes or data.
FaResult run_feedback_alignment(const FaConfig& config);

}  // namespace natgrad
