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

#pragma once

// Raw numeric kernels behind the tensor and layer APIs.
//
// `parallel` holds the OpenMP versions used in production paths. `reference`
// holds plain serial loops that are kept only as test oracles and benchmark
// baselines; nothing outside tests and bench calls them.
//
// Every parallel kernel partitions work so that each output element is
// produced by exactly one thread in a fixed accumulation order, so the result
// does not depend on the thread count.

#include <cstddef>
#include <span>

namespace fusi::kernels {

/// Geometry shared by the convolution kernels.
struct ConvGeometry {
  std::size_t in_channels = 1;
  std::size_t in_height = 1;
  std::size_t in_width = 1;
  std::size_t out_channels = 1;
  std::size_t kernel_h = 1;
  std::size_t kernel_w = 1;
  std::size_t stride_h = 1;
  std::size_t stride_w = 1;
  std::size_t pad_h = 0;
  std::size_t pad_w = 0;

  std::size_t out_height() const { return (in_height + 2 * pad_h - kernel_h) / stride_h + 1; }
  std::size_t out_width() const { return (in_width + 2 * pad_w - kernel_w) / stride_w + 1; }
  std::size_t patch_size() const { return in_channels * kernel_h * kernel_w; }
};

namespace parallel {

/// out[m,n] = a[m,k] * b[k,n], double accumulators, rows split across threads.
void matmul(std::span<const float> a, std::span<const float> b, std::span<float> out,
            std::size_t m, std::size_t k, std::size_t n);

/// Unrolls one CHW image into a [C*kh*kw, outH*outW] column matrix with zero
/// padding.
void im2col(std::span<const float> image, const ConvGeometry& g, std::span<float> columns);

/// One image: out[outC, outH*outW] = weights[outC, patch] * im2col(image) + bias.
/// `bias` may be empty.
void conv2d_im2col(std::span<const float> image, std::span<const float> weights,
                   std::span<const float> bias, const ConvGeometry& g, std::span<float> out);

}  // namespace parallel

namespace reference {

void matmul(std::span<const float> a, std::span<const float> b, std::span<float> out,
            std::size_t m, std::size_t k, std::size_t n);

/// Naive nested-loop cross-correlation of one CHW image.
void conv2d_direct(std::span<const float> image, std::span<const float> weights,
                   std::span<const float> bias, const ConvGeometry& g, std::span<float> out);

}  // namespace reference

}  // namespace fusi::kernels
