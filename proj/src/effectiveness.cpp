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
#include <sstream>

#include "natgrad/errors.hpp"
#include "natgrad/experiments.hpp"

namespace natgrad {

EffectivenessReport check_effectiveness(std::span<const double> losses, std::size_t window_m) {
  if (window_m == 0) throw InvalidInputError("check_effectiveness: window_m must be >= 1");
  if (losses.size() <= window_m) {
    std::ostringstream os;
    os << "check_effectiveness: need more than " << window_m << " losses, got " << losses.size();
    throw InvalidInputError(os.str());
  }
  const std::size_t n = losses.size();
  EffectivenessReport r;
  r.window_m = window_m;

  r.instantaneous_monotone_ok = true;
  for (std::size_t t = 0; t + 1 < n; ++t) {
    if (!(losses[t + 1] < losses[t])) {
      r.instantaneous_monotone_ok = false;
      r.first_instantaneous_increase = t;
      break;
    }
  }

  for (std::size_t t = 0; t + window_m < n; ++t)
    if (!(losses[t + window_m] < losses[t])) ++r.violation_count;
  r.windowed_decrease_ok = r.violation_count == 0;

  // Moving averages, each summed independently in long double.
  std::vector<long double> avg(n - window_m + 1);
  for (std::size_t t = 0; t < avg.size(); ++t) {
    long double s = 0.0L;
    for (std::size_t k = 0; k < window_m; ++k) s += losses[t + k];
    avg[t] = s / static_cast<long double>(window_m);
  }
  r.avg_loss_monotone_ok = true;
  for (std::size_t t = 0; t + 1 < avg.size(); ++t)
    if (!(avg[t + 1] < avg[t])) r.avg_loss_monotone_ok = false;
  return r;
}

}  // namespace natgrad
