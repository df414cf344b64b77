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

#include <cstring>

#include "natgrad/kernels.hpp"
#include "natgrad/sampling.hpp"

using namespace natgrad;

namespace {

bool bitwise_equal(std::span<const double> a, std::span<const double> b) {
  return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

bool bitwise_equal(double a, double b) { return std::memcmp(&a, &b, sizeof(double)) == 0; }

}  // namespace

TEST_CASE("parallel kernels reproduce the serial reference bit for bit") {
  Rng rng(7);
  for (std::size_t n : {1u, 3u, 17u, 255u, 256u, 257u, 1000u}) {
    CAPTURE(n);
    const Vector x = random_normal_vector(rng, n);
    const Vector y = random_normal_vector(rng, n);
    CHECK(bitwise_equal(kernels::serial::dot(x, y), kernels::parallel::dot(x, y)));
    CHECK(bitwise_equal(kernels::serial::sum(x), kernels::parallel::sum(x)));
  }
  struct Shape {
    std::size_t r, k, c;
  };
  for (const Shape& sh : {Shape{1, 1, 1}, Shape{5, 7, 3}, Shape{64, 33, 40}, Shape{120, 90, 70}}) {
    const auto [r, k, c] = sh;
    CAPTURE(r);
    CAPTURE(c);
    const Matrix a = random_normal_matrix(rng, r, k);
    const Matrix b = random_normal_matrix(rng, k, c);
    const Matrix bt = b.transpose();
    const Matrix at = a.transpose();
    Matrix s, p;
    kernels::serial::gemm(a, b, s);
    kernels::parallel::gemm(a, b, p);
    CHECK(bitwise_equal(s.data(), p.data()));
    kernels::serial::gemm_nt(a, bt, s);
    kernels::parallel::gemm_nt(a, bt, p);
    CHECK(bitwise_equal(s.data(), p.data()));
    kernels::serial::gemm_tn(at, b, s);
    kernels::parallel::gemm_tn(at, b, p);
    CHECK(bitwise_equal(s.data(), p.data()));

    const Vector x = random_normal_vector(rng, k);
    Vector vs(r), vp(r);
    kernels::serial::gemv(a, x, vs);
    kernels::parallel::gemv(a, x, vp);
    CHECK(bitwise_equal(vs, vp));
    const Vector z = random_normal_vector(rng, r);
    Vector ws(k), wp(k);
    kernels::serial::gemv_t(a, z, ws);
    kernels::parallel::gemv_t(a, z, wp);
    CHECK(bitwise_equal(ws, wp));

    Matrix u1 = a, u2 = a;
    kernels::serial::rank1_update(u1, 0.3, z, x);
    kernels::parallel::rank1_update(u2, 0.3, z, x);
    CHECK(bitwise_equal(u1.data(), u2.data()));
  }
  Matrix l1 = random_normal_matrix(rng, 50, 50), l2 = l1;
  for (std::size_t p = 0; p < 49; ++p) {
    kernels::serial::eliminate_below(l1, p);
    kernels::parallel::eliminate_below(l2, p);
  }
  CHECK(bitwise_equal(l1.data(), l2.data()));
}

TEST_CASE("gemm variants agree with a naive triple loop") {
  Rng rng(11);
  const Matrix a = random_normal_matrix(rng, 6, 4);
  const Matrix b = random_normal_matrix(rng, 4, 5);
  Matrix c;
  kernels::gemm(a, b, c);
  for (std::size_t i = 0; i < 6; ++i)
    for (std::size_t j = 0; j < 5; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < 4; ++k) s += a(i, k) * b(k, j);
      CHECK(c(i, j) == doctest::Approx(s).epsilon(1e-14));
    }
  Matrix tn;
  kernels::gemm_tn(a.transpose(), b, tn);
  CHECK(tn == c);
}

TEST_CASE("kernels reject mismatched shapes") {
  Matrix a(3, 4), b(3, 4), out;
  CHECK_THROWS(kernels::gemm(a, b, out));
  Vector x(3), o(3);
  CHECK_THROWS(kernels::gemv(a, x, o));
  CHECK_THROWS(kernels::dot(Vector(2), Vector(3)));
}
