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

// Parallel kernels against their serial references. Thread count follows
// OMP_NUM_THREADS.

#include <benchmark/benchmark.h>

#include <vector>

#include "fusi/kernels.hpp"
#include "fusi/rng.hpp"

namespace k = fusi::kernels;

namespace {

std::vector<float> filled(std::size_t n, std::uint64_t seed) {
  fusi::Rng rng(seed);
  std::vector<float> v(n);
  for (auto& x : v) x = static_cast<float>(rng.uniform(-1.0, 1.0));
  return v;
}

template <bool Parallel>
void BM_Matmul(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto a = filled(n * n, 1), b = filled(n * n, 2);
  std::vector<float> out(n * n);
  for (auto _ : state) {
    if constexpr (Parallel) {
      k::parallel::matmul(a, b, out, n, n, n);
    } else {
      k::reference::matmul(a, b, out, n, n, n);
    }
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(2 * n * n * n));
}

// A ResNet bottleneck 3x3 at stage-3 width, batch 1.
k::ConvGeometry bottleneck(std::size_t size) {
  k::ConvGeometry g;
  g.in_channels = 128;
  g.out_channels = 128;
  g.in_height = g.in_width = size;
  g.kernel_h = g.kernel_w = 3;
  g.pad_h = g.pad_w = 1;
  return g;
}

template <bool Parallel>
void BM_Conv3x3(benchmark::State& state) {
  const auto g = bottleneck(static_cast<std::size_t>(state.range(0)));
  const auto image = filled(g.in_channels * g.in_height * g.in_width, 3);
  const auto weights = filled(g.out_channels * g.patch_size(), 4);
  const auto bias = filled(g.out_channels, 5);
  std::vector<float> out(g.out_channels * g.out_height() * g.out_width());
  for (auto _ : state) {
    if constexpr (Parallel) {
      k::parallel::conv2d_im2col(image, weights, bias, g, out);
    } else {
      k::reference::conv2d_direct(image, weights, bias, g, out);
    }
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() *
                          static_cast<int64_t>(2 * out.size() * g.patch_size()));
}

}  // namespace

BENCHMARK(BM_Matmul<false>)->Name("matmul/reference")->Arg(64)->Arg(256);
BENCHMARK(BM_Matmul<true>)->Name("matmul/parallel")->Arg(64)->Arg(256);
BENCHMARK(BM_Conv3x3<false>)->Name("conv3x3/reference")->Arg(14)->Arg(28);
BENCHMARK(BM_Conv3x3<true>)->Name("conv3x3/parallel")->Arg(14)->Arg(28);

BENCHMARK_MAIN();
