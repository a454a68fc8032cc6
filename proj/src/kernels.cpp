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

#include "fusi/kernels.hpp"

#include <algorithm>
#include <vector>

namespace fusi::kernels {

namespace {
constexpr std::size_t kColBlock = 64;
constexpr std::size_t kDepthBlock = 256;
}  // namespace

namespace parallel {

void matmul(std::span<const float> a, std::span<const float> b, std::span<float> out,
            std::size_t m, std::size_t k, std::size_t n) {
  const auto col_blocks = static_cast<long long>((n + kColBlock - 1) / kColBlock);

#pragma omp parallel
  {
    std::vector<double> acc(m * kColBlock);
#pragma omp for schedule(static)
    for (long long jb = 0; jb < col_blocks; ++jb) {
      const std::size_t j0 = static_cast<std::size_t>(jb) * kColBlock;
      const std::size_t width = std::min(kColBlock, n - j0);
      std::fill(acc.begin(), acc.end(), 0.0);
      for (std::size_t p0 = 0; p0 < k; p0 += kDepthBlock) {
        const std::size_t p1 = std::min(k, p0 + kDepthBlock);
        for (std::size_t i = 0; i < m; ++i) {
          double* row = acc.data() + i * kColBlock;
          const float* a_row = a.data() + i * k;
          for (std::size_t p = p0; p < p1; ++p) {
            const double aip = a_row[p];
            const float* b_row = b.data() + p * n + j0;
            for (std::size_t j = 0; j < width; ++j) {
              row[j] += aip * static_cast<double>(b_row[j]);
            }
          }
        }
      }
      for (std::size_t i = 0; i < m; ++i) {
        const double* row = acc.data() + i * kColBlock;
        float* o = out.data() + i * n + j0;
        for (std::size_t j = 0; j < width; ++j) o[j] = static_cast<float>(row[j]);
      }
    }
  }
}

void im2col(std::span<const float> image, const ConvGeometry& g, std::span<float> columns) {
  const std::size_t oh = g.out_height();
  const std::size_t ow = g.out_width();
  const auto rows = static_cast<long long>(g.patch_size());

#pragma omp parallel for schedule(static)
  for (long long r = 0; r < rows; ++r) {
    const std::size_t row = static_cast<std::size_t>(r);
    const std::size_t kx = row % g.kernel_w;
    const std::size_t ky = (row / g.kernel_w) % g.kernel_h;
    const std::size_t c = row / (g.kernel_w * g.kernel_h);
    const float* plane = image.data() + c * g.in_height * g.in_width;
    float* dst = columns.data() + row * oh * ow;
    for (std::size_t y = 0; y < oh; ++y) {
      // Signed source coordinates; padding reads as zero.
      const long long sy = static_cast<long long>(y * g.stride_h + ky) - static_cast<long long>(g.pad_h);
      float* dst_row = dst + y * ow;
      if (sy < 0 || sy >= static_cast<long long>(g.in_height)) {
        std::fill(dst_row, dst_row + ow, 0.0f);
        continue;
      }
      const float* src_row = plane + static_cast<std::size_t>(sy) * g.in_width;
      for (std::size_t x = 0; x < ow; ++x) {
        const long long sx = static_cast<long long>(x * g.stride_w + kx) - static_cast<long long>(g.pad_w);
        dst_row[x] = (sx < 0 || sx >= static_cast<long long>(g.in_width))
                         ? 0.0f
                         : src_row[static_cast<std::size_t>(sx)];
      }
    }
  }
}

void conv2d_im2col(std::span<const float> image, std::span<const float> weights,
                   std::span<const float> bias, const ConvGeometry& g, std::span<float> out) {
  const std::size_t spatial = g.out_height() * g.out_width();
  const bool pointwise = g.kernel_h == 1 && g.kernel_w == 1 && g.stride_h == 1 && g.stride_w == 1 &&
                         g.pad_h == 0 && g.pad_w == 0;
  if (pointwise) {
    // The image already is its own column matrix.
    matmul(weights, image, out, g.out_channels, g.patch_size(), spatial);
  } else {
    std::vector<float> columns(g.patch_size() * spatial);
    im2col(image, g, columns);
    matmul(weights, columns, out, g.out_channels, g.patch_size(), spatial);
  }
  if (!bias.empty()) {
    for (std::size_t o = 0; o < g.out_channels; ++o) {
      float* plane = out.data() + o * spatial;
      for (std::size_t i = 0; i < spatial; ++i) plane[i] += bias[o];
    }
  }
}

}  // namespace parallel

namespace reference {

void matmul(std::span<const float> a, std::span<const float> b, std::span<float> out,
            std::size_t m, std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double sum = 0.0;
      for (std::size_t p = 0; p < k; ++p) {
        sum += static_cast<double>(a[i * k + p]) * static_cast<double>(b[p * n + j]);
      }
      out[i * n + j] = static_cast<float>(sum);
    }
  }
}

void conv2d_direct(std::span<const float> image, std::span<const float> weights,
                   std::span<const float> bias, const ConvGeometry& g, std::span<float> out) {
  const std::size_t oh = g.out_height();
  const std::size_t ow = g.out_width();
  for (std::size_t o = 0; o < g.out_channels; ++o) {
    for (std::size_t y = 0; y < oh; ++y) {
      for (std::size_t x = 0; x < ow; ++x) {
        double sum = bias.empty() ? 0.0 : static_cast<double>(bias[o]);
        for (std::size_t c = 0; c < g.in_channels; ++c) {
          for (std::size_t ky = 0; ky < g.kernel_h; ++ky) {
            for (std::size_t kx = 0; kx < g.kernel_w; ++kx) {
              const long long sy = static_cast<long long>(y * g.stride_h + ky) - static_cast<long long>(g.pad_h);
              const long long sx = static_cast<long long>(x * g.stride_w + kx) - static_cast<long long>(g.pad_w);
              if (sy < 0 || sx < 0 || sy >= static_cast<long long>(g.in_height) ||
                  sx >= static_cast<long long>(g.in_width)) {
                continue;
              }
              const float v = image[(c * g.in_height + static_cast<std::size_t>(sy)) * g.in_width +
                                    static_cast<std::size_t>(sx)];
              const float w = weights[((o * g.in_channels + c) * g.kernel_h + ky) * g.kernel_w + kx];
              sum += static_cast<double>(v) * static_cast<double>(w);
            }
          }
        }
        out[(o * oh + y) * ow + x] = static_cast<float>(sum);
      }
    }
  }
}

}  // namespace reference

}  // namespace fusi::kernels
