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

#include "natgrad/kernels.hpp"

#include <algorithm>
#include <vector>

#include "natgrad/errors.hpp"

#if defined(_OPENMP)
#include <omp.h>
#endif

namespace natgrad::kernels {

namespace {

void check_gemv(const Matrix& a, std::size_t x, std::size_t out) {
  if (a.cols() != x || a.rows() != out)
    throw DimensionError("gemv: matrix/vector size mismatch");
}

void check_gemv_t(const Matrix& a, std::size_t x, std::size_t out) {
  if (a.rows() != x || a.cols() != out)
    throw DimensionError("gemv_t: matrix/vector size mismatch");
}

void prepare_out(Matrix& out, std::size_t rows, std::size_t cols) {
  if (out.rows() != rows || out.cols() != cols) out = Matrix(rows, cols);
  else
    for (double& v : out.data()) v = 0.0;
}

std::size_t num_blocks(std::size_t n) {
  return (n + kReduceBlock - 1) / kReduceBlock;
}

double block_dot(std::span<const double> a, std::span<const double> b,
                 std::size_t block) {
  const std::size_t begin = block * kReduceBlock;
  const std::size_t end = std::min(a.size(), begin + kReduceBlock);
  double s = 0.0;
  for (std::size_t i = begin; i < end; ++i) s += a[i] * b[i];
  return s;
}

double block_sum(std::span<const double> a, std::size_t block) {
  const std::size_t begin = block * kReduceBlock;
  const std::size_t end = std::min(a.size(), begin + kReduceBlock);
  double s = 0.0;
  for (std::size_t i = begin; i < end; ++i) s += a[i];
  return s;
}

}  // namespace

int max_threads() {
#if defined(_OPENMP)
  return omp_get_max_threads();
#else
  return 1;
#endif
}

// ---------------------------------------------------------------------------
// Serial reference.

namespace serial {

double sum(std::span<const double> x) {
  double total = 0.0;
  for (std::size_t b = 0; b < num_blocks(x.size()); ++b) total += block_sum(x, b);
  return total;
}

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw DimensionError("dot: size mismatch");
  double total = 0.0;
  for (std::size_t k = 0; k < num_blocks(a.size()); ++k)
    total += block_dot(a, b, k);
  return total;
}

void gemv(const Matrix& a, std::span<const double> x, std::span<double> out) {
  check_gemv(a, x.size(), out.size());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < a.cols(); ++j) s += a(i, j) * x[j];
    out[i] = s;
  }
}

void gemv_t(const Matrix& a, std::span<const double> x, std::span<double> out) {
  check_gemv_t(a, x.size(), out.size());
  for (std::size_t j = 0; j < a.cols(); ++j) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.rows(); ++i) s += a(i, j) * x[i];
    out[j] = s;
  }
}

void gemm(const Matrix& a, const Matrix& b, Matrix& out) {
  if (a.cols() != b.rows()) throw DimensionError("gemm: inner size mismatch");
  prepare_out(out, a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      for (std::size_t j = 0; j < b.cols(); ++j) out(i, j) += aik * b(k, j);
    }
}

void gemm_tn(const Matrix& a, const Matrix& b, Matrix& out) {
  if (a.rows() != b.rows()) throw DimensionError("gemm_tn: inner size mismatch");
  prepare_out(out, a.cols(), b.cols());
  for (std::size_t i = 0; i < a.cols(); ++i)
    for (std::size_t k = 0; k < a.rows(); ++k) {
      const double aki = a(k, i);
      for (std::size_t j = 0; j < b.cols(); ++j) out(i, j) += aki * b(k, j);
    }
}

void gemm_nt(const Matrix& a, const Matrix& b, Matrix& out) {
  if (a.cols() != b.cols()) throw DimensionError("gemm_nt: inner size mismatch");
  prepare_out(out, a.rows(), b.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.rows(); ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) s += a(i, k) * b(j, k);
      out(i, j) = s;
    }
}

void rank1_update(Matrix& a, double alpha, std::span<const double> x,
                  std::span<const double> y) {
  if (a.rows() != x.size() || a.cols() != y.size())
    throw DimensionError("rank1_update: size mismatch");
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const double ax = alpha * x[i];
    for (std::size_t j = 0; j < a.cols(); ++j) a(i, j) += ax * y[j];
  }
}

void eliminate_below(Matrix& lu, std::size_t p) {
  const std::size_t n = lu.rows();
  const double pivot = lu(p, p);
  for (std::size_t r = p + 1; r < n; ++r) {
    const double m = lu(r, p) / pivot;
    lu(r, p) = m;
    if (m == 0.0) continue;
    for (std::size_t c = p + 1; c < n; ++c) lu(r, c) -= m * lu(p, c);
  }
}

}  // namespace serial

// ---------------------------------------------------------------------------
// OpenMP versions. Loop bodies mirror the serial ones exactly.

namespace parallel {

double sum(std::span<const double> x) {
  const std::size_t nb = num_blocks(x.size());
  std::vector<double> partial(nb);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t b = 0; b < static_cast<std::ptrdiff_t>(nb); ++b)
    partial[b] = block_sum(x, b);
  double total = 0.0;
  for (double p : partial) total += p;
  return total;
}

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw DimensionError("dot: size mismatch");
  const std::size_t nb = num_blocks(a.size());
  std::vector<double> partial(nb);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t k = 0; k < static_cast<std::ptrdiff_t>(nb); ++k)
    partial[k] = block_dot(a, b, k);
  double total = 0.0;
  for (double p : partial) total += p;
  return total;
}

void gemv(const Matrix& a, std::span<const double> x, std::span<double> out) {
  check_gemv(a, x.size(), out.size());
  const auto rows = static_cast<std::ptrdiff_t>(a.rows());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < rows; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < a.cols(); ++j) s += a(i, j) * x[j];
    out[i] = s;
  }
}

void gemv_t(const Matrix& a, std::span<const double> x, std::span<double> out) {
  check_gemv_t(a, x.size(), out.size());
  const auto cols = static_cast<std::ptrdiff_t>(a.cols());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t j = 0; j < cols; ++j) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.rows(); ++i) s += a(i, j) * x[i];
    out[j] = s;
  }
}

void gemm(const Matrix& a, const Matrix& b, Matrix& out) {
  if (a.cols() != b.rows()) throw DimensionError("gemm: inner size mismatch");
  prepare_out(out, a.rows(), b.cols());
  const auto rows = static_cast<std::ptrdiff_t>(a.rows());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < rows; ++i)
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      for (std::size_t j = 0; j < b.cols(); ++j) out(i, j) += aik * b(k, j);
    }
}

void gemm_tn(const Matrix& a, const Matrix& b, Matrix& out) {
  if (a.rows() != b.rows()) throw DimensionError("gemm_tn: inner size mismatch");
  prepare_out(out, a.cols(), b.cols());
  const auto rows = static_cast<std::ptrdiff_t>(a.cols());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < rows; ++i)
    for (std::size_t k = 0; k < a.rows(); ++k) {
      const double aki = a(k, i);
      for (std::size_t j = 0; j < b.cols(); ++j) out(i, j) += aki * b(k, j);
    }
}

void gemm_nt(const Matrix& a, const Matrix& b, Matrix& out) {
  if (a.cols() != b.cols()) throw DimensionError("gemm_nt: inner size mismatch");
  prepare_out(out, a.rows(), b.rows());
  const auto rows = static_cast<std::ptrdiff_t>(a.rows());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < b.rows(); ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) s += a(i, k) * b(j, k);
      out(i, j) = s;
    }
}

void rank1_update(Matrix& a, double alpha, std::span<const double> x,
                  std::span<const double> y) {
  if (a.rows() != x.size() || a.cols() != y.size())
    throw DimensionError("rank1_update: size mismatch");
  const auto rows = static_cast<std::ptrdiff_t>(a.rows());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < rows; ++i) {
    const double ax = alpha * x[i];
    for (std::size_t j = 0; j < a.cols(); ++j) a(i, j) += ax * y[j];
  }
}

void eliminate_below(Matrix& lu, std::size_t p) {
  const auto n = static_cast<std::ptrdiff_t>(lu.rows());
  const double pivot = lu(p, p);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t r = static_cast<std::ptrdiff_t>(p) + 1; r < n; ++r) {
    const double m = lu(r, p) / pivot;
    lu(r, p) = m;
    if (m == 0.0) continue;
    for (std::size_t c = p + 1; c < lu.cols(); ++c) lu(r, c) -= m * lu(p, c);
  }
}

}  // namespace parallel

// ---------------------------------------------------------------------------
// Size-based dispatch.

namespace {
bool go_parallel(std::size_t work) {
  return max_threads() > 1 && work >= kParallelThreshold;
}
}  // namespace

double sum(std::span<const double> x) {
  return go_parallel(x.size()) ? parallel::sum(x) : serial::sum(x);
}

double dot(std::span<const double> a, std::span<const double> b) {
  return go_parallel(a.size()) ? parallel::dot(a, b) : serial::dot(a, b);
}

void gemv(const Matrix& a, std::span<const double> x, std::span<double> out) {
  if (go_parallel(a.rows() * a.cols())) parallel::gemv(a, x, out);
  else serial::gemv(a, x, out);
}

void gemv_t(const Matrix& a, std::span<const double> x, std::span<double> out) {
  if (go_parallel(a.rows() * a.cols())) parallel::gemv_t(a, x, out);
  else serial::gemv_t(a, x, out);
}

void gemm(const Matrix& a, const Matrix& b, Matrix& out) {
  if (go_parallel(a.rows() * a.cols() * b.cols())) parallel::gemm(a, b, out);
  else serial::gemm(a, b, out);
}

void gemm_tn(const Matrix& a, const Matrix& b, Matrix& out) {
  if (go_parallel(a.rows() * a.cols() * b.cols())) parallel::gemm_tn(a, b, out);
  else serial::gemm_tn(a, b, out);
}

void gemm_nt(const Matrix& a, const Matrix& b, Matrix& out) {
  if (go_parallel(a.rows() * a.cols() * b.rows())) parallel::gemm_nt(a, b, out);
  else serial::gemm_nt(a, b, out);
}

void rank1_update(Matrix& a, double alpha, std::span<const double> x,
                  std::span<const double> y) {
  if (go_parallel(a.rows() * a.cols())) parallel::rank1_update(a, alpha, x, y);
  else serial::rank1_update(a, alpha, x, y);
}

void eliminate_below(Matrix& lu, std::size_t pivot) {
  const std::size_t rem = lu.rows() - pivot;
  if (go_parallel(rem * rem)) parallel::eliminate_below(lu, pivot);
  else serial::eliminate_below(lu, pivot);
}

}  // namespace natgrad::kernels
