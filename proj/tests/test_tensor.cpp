// Copyright 2026 The FUSI Scanner Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "fusi/error.hpp"
#include "fusi/kernels.hpp"
#include "fusi/rng.hpp"
#include "fusi/tensor.hpp"
#include "support.hpp"

using namespace fusi;

TEST_CASE("tensor_new fills and validates shapes") {
  const Tensor z = tensor_new({2, 3}, 0.0f);
  CHECK(z.size() == 6);
  CHECK(std::all_of(z.data().begin(), z.data().end(), [](float v) { return v == 0.0f; }));
  const Tensor one = tensor_new({1}, 7.5f);
  CHECK(one.values() == std::vector<float>{7.5f});
  CHECK_THROWS_AS(tensor_new({2, 0}, 1.0f), ShapeError);
  CHECK_THROWS_AS(tensor_new({}, 1.0f), ShapeError);
  CHECK_THROWS_AS(Tensor({2, 2}, std::vector<float>{1, 2, 3}), ShapeError);
}

TEST_CASE("matmul examples") {
  const Tensor eye = Tensor::matrix({{1, 0}, {0, 1}});
  const Tensor b = Tensor::matrix({{3, 4}, {5, 6}});
  CHECK(matmul(eye, b) == b);
  CHECK(matmul(Tensor::matrix({{1, 2}, {3, 4}}), Tensor::matrix({{0}, {0}})) == Tensor::matrix({{0}, {0}}));
  // 1*5+2*7, 1*6+2*8, 3*5+4*7, 3*6+4*8
  CHECK(matmul(Tensor::matrix({{1, 2}, {3, 4}}), Tensor::matrix({{5, 6}, {7, 8}})) ==
        Tensor::matrix({{19, 22}, {43, 50}}));
  CHECK_THROWS_AS(matmul(Tensor({2, 3}), Tensor({2, 3})), ShapeError);
  CHECK_THROWS_AS(matmul(Tensor({6}), Tensor({6, 1})), ShapeError);
}

TEST_CASE("matmul by identity is exact for random square matrices") {
  Rng rng(11);
  for (std::size_t n : {1u, 3u, 17u, 70u}) {
    const Tensor a = testing::random_tensor({n, n}, rng, -100, 100);
    Tensor eye({n, n});
    for (std::size_t i = 0; i < n; ++i) eye.at(i, i) = 1.0f;
    CHECK(matmul(a, eye) == a);
    CHECK(matmul(eye, a) == a);
  }
}

TEST_CASE("parallel matmul matches the serial reference across block boundaries") {
  Rng rng(5);
  for (const auto [m, k, n] : {std::array<std::size_t, 3>{1, 1, 1}, {3, 300, 70}, {65, 257, 129}, {7, 5, 200}}) {
    const Tensor a = testing::random_tensor({m, k}, rng);
    const Tensor b = testing::random_tensor({k, n}, rng);
    std::vector<float> fast(m * n), slow(m * n);
    kernels::parallel::matmul(a.data(), b.data(), fast, m, k, n);
    kernels::reference::matmul(a.data(), b.data(), slow, m, k, n);
    for (std::size_t i = 0; i < fast.size(); ++i) CHECK(fast[i] == doctest::Approx(slow[i]).epsilon(1e-5));
  }
}

TEST_CASE("argmax picks the lowest index on ties") {
  CHECK(argmax(Tensor::vector({0.1f, 0.8f, 0.1f})) == 1);
  CHECK(argmax(Tensor::vector({0.5f, 0.5f})) == 0);
  CHECK(argmax(Tensor::vector({-3, -1, -2})) == 1);
  CHECK_THROWS_AS(argmax(std::span<const float>{}), ShapeError);
  CHECK_THROWS_AS(argmax(Tensor({2, 2})), ShapeError);
}

TEST_CASE("rng_shuffle") {
  Rng a(1);
  CHECK(rng_shuffle(a, 1) == std::vector<std::size_t>{0});
  CHECK(rng_shuffle(a, 0).empty());
  Rng r1(42), r2(42);
  CHECK(rng_shuffle(r1, 5) == rng_shuffle(r2, 5));
  for (std::size_t n = 0; n < 200; n += 7) {
    Rng r(n);
    auto p = rng_shuffle(r, n);
    std::sort(p.begin(), p.end());
    std::vector<std::size_t> iota(n);
    std::iota(iota.begin(), iota.end(), 0);
    CHECK(p == iota);
  }
}

TEST_CASE("rng streams") {
  Rng a(9), b(9);
  for (int i = 0; i < 1000; ++i) REQUIRE(a.next_u64() == b.next_u64());
  // Known splitmix64 outputs for seed 0.
  Rng z(0);
  CHECK(z.next_u64() == 0xE220A8397B1DCDAFull);
  CHECK(z.next_u64() == 0x6E789E6AA1B965F4ull);
  Rng parent(3);
  CHECK(parent.child(1).state() == splitmix64(3 + 1));
  CHECK(parent.child(1).next_u64() != parent.child(2).next_u64());

  Rng u(4);
  double sum = 0, sq = 0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    const double x = u.uniform(2.0, 4.0);
    REQUIRE(x >= 2.0);
    REQUIRE(x < 4.0);
    const double g = u.normal(1.0, 2.0);
    sum += g;
    sq += g * g;
  }
  const double mean = sum / n;
  CHECK(mean == doctest::Approx(1.0).epsilon(0.05));
  CHECK(std::sqrt(sq / n - mean * mean) == doctest::Approx(2.0).epsilon(0.05));
  for (int i = 0; i < 1000; ++i) REQUIRE(u.below(3) < 3);
}

TEST_CASE("elementwise ops, reductions, reshape and slice") {
  const Tensor a = Tensor::matrix({{1, 2, 3}, {4, 5, 6}});
  const Tensor b = Tensor::matrix({{6, 5, 4}, {3, 2, 1}});
  CHECK(add(a, b) == Tensor({2, 3}, 7.0f));
  CHECK(sub(a, a) == Tensor({2, 3}));
  CHECK(mul(a, b).values() == std::vector<float>{6, 10, 12, 12, 10, 6});
  CHECK(scale(a, 2.0f).values() == std::vector<float>{2, 4, 6, 8, 10, 12});
  CHECK_THROWS_AS(add(a, Tensor({3, 2})), ShapeError);
  CHECK(reduce_sum(a) == 21.0);
  CHECK(reduce_mean(a) == 3.5);
  CHECK(a.reshape({3, 2}).reshape({2, 3}) == a);
  CHECK_THROWS_AS(a.reshape({4, 2}), ShapeError);
  CHECK(a.slice(1, 1, 2) == Tensor::matrix({{2, 3}, {5, 6}}));
  CHECK(a.slice(0, 1, 1) == Tensor::matrix({{4, 5, 6}}));
  CHECK_THROWS_AS(a.slice(1, 2, 2), ShapeError);
  const std::vector<Tensor> parts{a, b};
  CHECK(concat_batch(parts).slice(0, 2, 2) == b);
}
