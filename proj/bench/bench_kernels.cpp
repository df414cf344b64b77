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

// Serial reference vs OpenMP kernels. Prints median wall time per call and
// checks that both produce identical bits.
//
//   bench_kernels [repeats]

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <functional>
#include <vector>

#include "natgrad/kernels.hpp"
#include "natgrad/sampling.hpp"

namespace {

using natgrad::Matrix;
using natgrad::Vector;

double median_seconds(int repeats, const std::function<void()>& fn) {
  std::vector<double> t;
  for (int i = 0; i < repeats; ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    fn();
    t.push_back(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  }
  std::sort(t.begin(), t.end());
  return t[t.size() / 2];
}

void report(const char* name, double serial, double parallel, bool identical) {
  std::printf("%-22s serial %10.3f ms  parallel %10.3f ms  speedup %5.2fx  %s\n", name,
              serial * 1e3, parallel * 1e3, serial / parallel,
              identical ? "bitwise-equal" : "MISMATCH");
}

}  // namespace

int main(int argc, char** argv) {
  namespace k = natgrad::kernels;
  const int repeats = argc > 1 ? std::max(1, std::atoi(argv[1])) : 7;
  std::printf("threads: %d, repeats: %d\n", k::max_threads(), repeats);
  natgrad::Rng rng(1);
  bool all_equal = true;

  for (std::size_t n : {100000u, 4000000u}) {
    const Vector x = natgrad::random_normal_vector(rng, n);
    const Vector y = natgrad::random_normal_vector(rng, n);
    volatile double sink = 0.0;
    const double ts = median_seconds(repeats, [&] { sink = k::serial::dot(x, y); });
    const double tp = median_seconds(repeats, [&] { sink = k::parallel::dot(x, y); });
    const double a = k::serial::dot(x, y), b = k::parallel::dot(x, y);
    const bool eq = std::memcmp(&a, &b, sizeof a) == 0;
    all_equal = all_equal && eq;
    char name[64];
    std::snprintf(name, sizeof name, "dot n=%zu", n);
    report(name, ts, tp, eq);
  }

  for (std::size_t n : {128u, 384u}) {
    const Matrix a = natgrad::random_normal_matrix(rng, n, n);
    const Matrix b = natgrad::random_normal_matrix(rng, n, n);
    Matrix cs, cp;
    const double ts = median_seconds(repeats, [&] { k::serial::gemm(a, b, cs); });
    const double tp = median_seconds(repeats, [&] { k::parallel::gemm(a, b, cp); });
    const bool eq = cs == cp;
    all_equal = all_equal && eq;
    char name[64];
    std::snprintf(name, sizeof name, "gemm %zux%zu", n, n);
    report(name, ts, tp, eq);
  }

  {
    const std::size_t r = 2000, c = 2000;
    const Matrix a = natgrad::random_normal_matrix(rng, r, c);
    const Vector x = natgrad::random_normal_vector(rng, c);
    Vector os(r), op(r);
    const double ts = median_seconds(repeats, [&] { k::serial::gemv(a, x, os); });
    const double tp = median_seconds(repeats, [&] { k::parallel::gemv(a, x, op); });
    const bool eq = os == op;
    all_equal = all_equal && eq;
    report("gemv 2000x2000", ts, tp, eq);
  }
  return all_equal ? 0 : 1;
}
