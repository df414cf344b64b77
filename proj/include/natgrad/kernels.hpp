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

// Data-parallel inner loops.
//
// Every kernel exists twice: `serial::` is the reference implementation kept
// for testing, `parallel::` distributes independent output elements over
// OpenMP threads. Each output element is accumulated in the same order in
// both versions, so their results are bitwise identical for any thread
// count. The unqualified entry points pick one by problem size.

#include <cstddef>
#include <span>

#include "natgrad/matrix.hpp"

namespace natgrad::kernels {

/// Partial sums are taken over fixed blocks of this many elements and then
/// combined in block order; the block layout does not depend on threads.
inline constexpr std::size_t kReduceBlock = 256;

/// Below this many multiply-adds the dispatcher stays serial.
inline constexpr std::size_t kParallelThreshold = 1u << 15;

/// Number of OpenMP threads available (1 without OpenMP).
int max_threads();

namespace serial {
double sum(std::span<const double> x);
double dot(std::span<const double> a, std::span<const double> b);
void gemv(const Matrix& a, std::span<const double> x, std::span<double> out);
void gemv_t(const Matrix& a, std::span<const double> x, std::span<double> out);
void gemm(const Matrix& a, const Matrix& b, Matrix& out);
void gemm_tn(const Matrix& a, const Matrix& b, Matrix& out);
void gemm_nt(const Matrix& a, const Matrix& b, Matrix& out);
void rank1_update(Matrix& a, double alpha, std::span<const double> x,
                  std::span<const double> y);
void eliminate_below(Matrix& lu, std::size_t pivot);
}  // namespace serial

namespace parallel {
double sum(std::span<const double> x);
double dot(std::span<const double> a, std::span<const double> b);
void gemv(const Matrix& a, std::span<const double> x, std::span<double> out);
void gemv_t(const Matrix& a, std::span<const double> x, std::span<double> out);
void gemm(const Matrix& a, const Matrix& b, Matrix& out);
void gemm_tn(const Matrix& a, const Matrix& b, Matrix& out);
void gemm_nt(const Matrix& a, const Matrix& b, Matrix& out);
void rank1_update(Matrix& a, double alpha, std::span<const double> x,
                  std::span<const double> y);
void eliminate_below(Matrix& lu, std::size_t pivot);
}  // namespace parallel

double sum(std::span<const double> x);
double dot(std::span<const double> a, std::span<const double> b);
/// out = a x
void gemv(const Matrix& a, std::span<const double> x, std::span<double> out);
/// out = a^T x
void gemv_t(const Matrix& a, std::span<const double> x, std::span<double> out);
/// out = a b
void gemm(const Matrix& a, const Matrix& b, Matrix& out);
/// out = a^T b
void gemm_tn(const Matrix& a, const Matrix& b, Matrix& out);
/// out = a b^T
void gemm_nt(const Matrix& a, const Matrix& b, Matrix& out);
/// a += alpha x y^T
void rank1_update(Matrix& a, double alpha, std::span<const double> x,
                  std::span<const double> y);
/// One Gaussian elimination step: rows below `pivot` get the multiple of the
/// pivot row subtracted; multipliers are stored in column `pivot`.
void eliminate_below(Matrix& lu, std::size_t pivot);

}  // namespace natgrad::kernels
