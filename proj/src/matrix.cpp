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

#include "natgrad/matrix.hpp"

#include <algorithm>
#include <cmath>

#include "natgrad/errors.hpp"
#include "natgrad/kernels.hpp"

namespace natgrad {

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows)
    : rows_(rows.size()), cols_(rows.size() ? rows.begin()->size() : 0) {
  data_.reserve(rows_ * cols_);
  for (const auto& r : rows) {
    if (r.size() != cols_) throw DimensionError("Matrix: ragged initializer");
    data_.insert(data_.end(), r.begin(), r.end());
  }
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::diagonal(std::span<const double> diag) {
  Matrix m(diag.size(), diag.size());
  for (std::size_t i = 0; i < diag.size(); ++i) m(i, i) = diag[i];
  return m;
}

Matrix Matrix::transpose() const {
  Matrix t(cols_, rows_);
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
  return t;
}

bool Matrix::all_finite() const { return natgrad::all_finite(data_); }

SymMatrix::SymMatrix(Matrix m) : m_(std::move(m)) {
  if (!m_.square()) throw DimensionError("SymMatrix: matrix is not square");
  if (m_.rows() == 0) throw DimensionError("SymMatrix: dimension must be >= 1");
  for (std::size_t i = 0; i < m_.rows(); ++i)
    for (std::size_t j = i + 1; j < m_.cols(); ++j) m_(j, i) = m_(i, j);
}

SymMatrix::SymMatrix(std::initializer_list<std::initializer_list<double>> rows)
    : SymMatrix(Matrix(rows)) {}

SymMatrix SymMatrix::identity(std::size_t n) { return SymMatrix(Matrix::identity(n)); }

SymMatrix SymMatrix::diagonal(std::span<const double> diag) {
  return SymMatrix(Matrix::diagonal(diag));
}

SymMatrix SymMatrix::symmetrize(const Matrix& m) {
  if (!m.square()) throw DimensionError("symmetrize: matrix is not square");
  Matrix s(m.rows(), m.cols());
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = i; j < m.cols(); ++j) s(i, j) = 0.5 * (m(i, j) + m(j, i));
  return SymMatrix(std::move(s));
}

double dot(std::span<const double> a, std::span<const double> b) {
  return kernels::dot(a, b);
}

double norm2(std::span<const double> a) {
  // Scale by the largest magnitude so squares neither overflow nor underflow.
  const double scale = max_abs(a);
  if (scale == 0.0 || !std::isfinite(scale)) return scale;
  double s = 0.0;
  for (double v : a) {
    const double r = v / scale;
    s += r * r;
  }
  return scale * std::sqrt(s);
}

double max_abs(std::span<const double> a) {
  double m = 0.0;
  for (double v : a) m = std::max(m, std::abs(v));
  return m;
}

double max_abs(const Matrix& a) { return max_abs(a.data()); }

Vector axpy(double alpha, std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw DimensionError("axpy: size mismatch");
  Vector out(y.begin(), y.end());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] += alpha * x[i];
  return out;
}

Vector scaled(double alpha, std::span<const double> x) {
  Vector out(x.begin(), x.end());
  for (double& v : out) v *= alpha;
  return out;
}

Vector subtract(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw DimensionError("subtract: size mismatch");
  Vector out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] - b[i];
  return out;
}

Vector add(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw DimensionError("add: size mismatch");
  Vector out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] + b[i];
  return out;
}

bool all_finite(std::span<const double> a) {
  return std::all_of(a.begin(), a.end(), [](double v) { return std::isfinite(v); });
}

Vector matvec(const Matrix& a, std::span<const double> x) {
  Vector out(a.rows());
  kernels::gemv(a, x, out);
  return out;
}

Vector matvec(const SymMatrix& a, std::span<const double> x) {
  return matvec(a.matrix(), x);
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  Matrix out;
  kernels::gemm(a, b, out);
  return out;
}

Matrix add(const Matrix& a, const Matrix& b, double beta) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw DimensionError("add: matrix size mismatch");
  Matrix out = a;
  auto o = out.data();
  auto bd = b.data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] += beta * bd[i];
  return out;
}

Matrix outer(std::span<const double> x, std::span<const double> y) {
  Matrix out(x.size(), y.size());
  kernels::rank1_update(out, 1.0, x, y);
  return out;
}

}  // namespace natgrad
