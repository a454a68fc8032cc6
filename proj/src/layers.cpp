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

#include "fusi/layers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "fusi/error.hpp"
#include "fusi/kernels.hpp"

namespace fusi {

namespace {

void require_rank(const Tensor& x, std::size_t rank, const char* op) {
  if (x.rank() != rank) {
    throw ShapeError(std::string(op) + ": expected rank " + std::to_string(rank) + ", got " +
                     shape_to_string(x.dims()));
  }
}

kernels::ConvGeometry geometry_for(const Tensor& x, const Conv2dParams& p) {
  require_rank(x, 4, "conv2d");
  if (p.weights.rank() != 4) throw ShapeError("conv2d: weights must be [outC, inC, kH, kW]");
  if (x.dim(1) != p.in_channels()) {
    throw ShapeError("conv2d: input has " + std::to_string(x.dim(1)) + " channels, kernel expects " +
                     std::to_string(p.in_channels()));
  }
  if (p.bias && p.bias->size() != p.out_channels()) throw ShapeError("conv2d: bias length mismatch");
  if (p.stride[0] == 0 || p.stride[1] == 0) throw ShapeError("conv2d: stride must be positive");
  kernels::ConvGeometry g;
  g.in_channels = x.dim(1);
  g.in_height = x.dim(2);
  g.in_width = x.dim(3);
  g.out_channels = p.out_channels();
  g.kernel_h = p.kernel_h();
  g.kernel_w = p.kernel_w();
  g.stride_h = p.stride[0];
  g.stride_w = p.stride[1];
  g.pad_h = p.padding[0];
  g.pad_w = p.padding[1];
  window_output_size(g.in_height, g.kernel_h, g.stride_h, g.pad_h);
  window_output_size(g.in_width, g.kernel_w, g.stride_w, g.pad_w);
  return g;
}

template <typename Kernel>
Tensor run_conv(const Tensor& x, const Conv2dParams& p, Kernel kernel) {
  const kernels::ConvGeometry g = geometry_for(x, p);
  const std::size_t n = x.dim(0);
  const std::size_t in_stride = g.in_channels * g.in_height * g.in_width;
  const std::size_t out_stride = g.out_channels * g.out_height() * g.out_width();
  Tensor out({n, g.out_channels, g.out_height(), g.out_width()});
  std::span<const float> bias;
  if (p.bias) bias = p.bias->data();
  for (std::size_t i = 0; i < n; ++i) {
    kernel(x.data().subspan(i * in_stride, in_stride), p.weights.data(), bias, g,
           out.data().subspan(i * out_stride, out_stride));
  }
  return out;
}

template <typename Reduce>
Tensor pool(const Tensor& x, const PoolParams& p, Reduce reduce, const char* op) {
  require_rank(x, 4, op);
  const std::size_t n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  if (p.stride[0] == 0 || p.stride[1] == 0) throw ShapeError(std::string(op) + ": zero stride");
  const std::size_t oh = window_output_size(h, p.window[0], p.stride[0], p.padding[0]);
  const std::size_t ow = window_output_size(w, p.window[1], p.stride[1], p.padding[1]);
  Tensor out({n, c, oh, ow});
  for (std::size_t plane = 0; plane < n * c; ++plane) {
    const float* src = x.data().data() + plane * h * w;
    float* dst = out.data().data() + plane * oh * ow;
    for (std::size_t y = 0; y < oh; ++y) {
      const long long y0 = static_cast<long long>(y * p.stride[0]) - static_cast<long long>(p.padding[0]);
      const long long y1 = std::min<long long>(y0 + static_cast<long long>(p.window[0]), static_cast<long long>(h));
      for (std::size_t xo = 0; xo < ow; ++xo) {
        const long long x0 = static_cast<long long>(xo * p.stride[1]) - static_cast<long long>(p.padding[1]);
        const long long x1 = std::min<long long>(x0 + static_cast<long long>(p.window[1]), static_cast<long long>(w));
        dst[y * ow + xo] = reduce(src, w, std::max(0LL, y0), y1, std::max(0LL, x0), x1);
      }
    }
  }
  return out;
}

Tensor transpose(const Tensor& m) {
  Tensor out({m.dim(1), m.dim(0)});
  for (std::size_t i = 0; i < m.dim(0); ++i) {
    for (std::size_t j = 0; j < m.dim(1); ++j) out.at(j, i) = m.at(i, j);
  }
  return out;
}

void check_labels(std::span<const std::size_t> labels, std::size_t n, std::size_t k) {
  if (labels.size() != n) {
    throw LabelError("got " + std::to_string(labels.size()) + " labels for a batch of " + std::to_string(n));
  }
  for (std::size_t label : labels) {
    if (label >= k) {
      throw LabelError("label " + std::to_string(label) + " out of range for " + std::to_string(k) +
                       " classes");
    }
  }
}

constexpr double kProbabilityFloor = 1e-12;

}  // namespace

std::size_t window_output_size(std::size_t input, std::size_t window, std::size_t stride,
                               std::size_t padding) {
  if (window == 0 || stride == 0) throw ShapeError("window and stride must be positive");
  if (window > input + 2 * padding) {
    throw ShapeError("window " + std::to_string(window) + " larger than padded input " +
                     std::to_string(input + 2 * padding));
  }
  return (input + 2 * padding - window) / stride + 1;
}

Tensor conv2d_forward(const Tensor& x, const Conv2dParams& p) {
  return run_conv(x, p, kernels::parallel::conv2d_im2col);
}

Tensor conv2d_direct(const Tensor& x, const Conv2dParams& p) {
  return run_conv(x, p, kernels::reference::conv2d_direct);
}

Tensor maxpool2d(const Tensor& x, const PoolParams& p) {
  return pool(
      x, p,
      [](const float* src, std::size_t w, long long y0, long long y1, long long x0, long long x1) {
        float best = -std::numeric_limits<float>::infinity();
        for (long long y = y0; y < y1; ++y) {
          for (long long xi = x0; xi < x1; ++xi) best = std::max(best, src[y * static_cast<long long>(w) + xi]);
        }
        return best;
      },
      "maxpool2d");
}

Tensor avgpool2d(const Tensor& x, const PoolParams& p) {
  return pool(
      x, p,
      [](const float* src, std::size_t w, long long y0, long long y1, long long x0, long long x1) {
        double sum = 0.0;
        for (long long y = y0; y < y1; ++y) {
          for (long long xi = x0; xi < x1; ++xi) sum += src[y * static_cast<long long>(w) + xi];
        }
        const auto count = static_cast<double>((y1 - y0) * (x1 - x0));
        return static_cast<float>(sum / count);
      },
      "avgpool2d");
}

Tensor global_avgpool(const Tensor& x) {
  require_rank(x, 4, "global_avgpool");
  const std::size_t n = x.dim(0), c = x.dim(1), spatial = x.dim(2) * x.dim(3);
  Tensor out({n, c});
  for (std::size_t plane = 0; plane < n * c; ++plane) {
    double sum = 0.0;
    const float* src = x.data().data() + plane * spatial;
    for (std::size_t i = 0; i < spatial; ++i) sum += src[i];
    out[plane] = static_cast<float>(sum / static_cast<double>(spatial));
  }
  return out;
}

Tensor global_avgpool_backward(const Shape& input_dims, const Tensor& grad_out) {
  if (input_dims.size() != 4) throw ShapeError("global_avgpool_backward: input must be rank 4");
  const std::size_t n = input_dims[0], c = input_dims[1], spatial = input_dims[2] * input_dims[3];
  if (grad_out.dims() != Shape{n, c}) throw ShapeError("global_avgpool_backward: gradient shape mismatch");
  Tensor grad(input_dims);
  const double inv = 1.0 / static_cast<double>(spatial);
  for (std::size_t plane = 0; plane < n * c; ++plane) {
    const auto g = static_cast<float>(grad_out[plane] * inv);
    std::fill_n(grad.data().begin() + static_cast<std::ptrdiff_t>(plane * spatial), spatial, g);
  }
  return grad;
}

Tensor batchnorm_infer(const Tensor& x, const BatchNormParams& p) {
  if (x.rank() != 4 && x.rank() != 2) throw ShapeError("batchnorm: expected [N,C,H,W] or [N,C]");
  const std::size_t c = x.dim(1);
  if (p.gamma.size() != c || p.beta.size() != c || p.moving_mean.size() != c || p.moving_var.size() != c) {
    throw ShapeError("batchnorm: parameter length does not match " + std::to_string(c) + " channels");
  }
  const std::size_t spatial = x.rank() == 4 ? x.dim(2) * x.dim(3) : 1;
  std::vector<double> gain(c), shift(c);
  for (std::size_t ch = 0; ch < c; ++ch) {
    const double denom = std::sqrt(static_cast<double>(p.moving_var[ch]) + p.epsilon);
    if (!(denom > 0.0)) throw ConfigError("batchnorm: variance + epsilon must be positive");
    gain[ch] = static_cast<double>(p.gamma[ch]) / denom;
    shift[ch] = p.beta[ch];
  }
  Tensor out(x.dims());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const std::size_t ch = (i / spatial) % c;
    out[i] = static_cast<float>(gain[ch] * (static_cast<double>(x[i]) - p.moving_mean[ch]) + shift[ch]);
  }
  return out;
}

Tensor relu(const Tensor& x) {
  Tensor out = x;
  for (float& v : out.data()) v = v > 0.0f ? v : 0.0f;
  return out;
}

Tensor relu_backward(const Tensor& x, const Tensor& grad_out) {
  if (x.dims() != grad_out.dims()) throw ShapeError("relu_backward: shape mismatch");
  Tensor grad(x.dims());
  for (std::size_t i = 0; i < x.size(); ++i) grad[i] = x[i] > 0.0f ? grad_out[i] : 0.0f;
  return grad;
}

Tensor dense_forward(const Tensor& x, const DenseParams& p) {
  require_rank(x, 2, "dense");
  if (x.dim(1) != p.in_features()) {
    throw ShapeError("dense: input has " + std::to_string(x.dim(1)) + " features, layer expects " +
                     std::to_string(p.in_features()));
  }
  if (p.bias.size() != p.out_features()) throw ShapeError("dense: bias length mismatch");
  Tensor out = matmul(x, transpose(p.weights));
  for (std::size_t i = 0; i < out.dim(0); ++i) {
    for (std::size_t j = 0; j < out.dim(1); ++j) out.at(i, j) += p.bias[j];
  }
  return out;
}

DenseGrads dense_backward(const Tensor& x, const DenseParams& p, const Tensor& grad_out) {
  require_rank(x, 2, "dense_backward");
  if (grad_out.dims() != Shape{x.dim(0), p.out_features()}) {
    throw ShapeError("dense_backward: gradient shape mismatch");
  }
  DenseGrads g;
  g.input = matmul(grad_out, p.weights);
  g.weights = matmul(transpose(grad_out), x);
  g.bias = Tensor({p.out_features()});
  for (std::size_t j = 0; j < p.out_features(); ++j) {
    double sum = 0.0;
    for (std::size_t i = 0; i < grad_out.dim(0); ++i) sum += grad_out.at(i, j);
    g.bias[j] = static_cast<float>(sum);
  }
  return g;
}

Tensor softmax(const Tensor& logits) {
  require_rank(logits, 2, "softmax");
  const std::size_t n = logits.dim(0), k = logits.dim(1);
  Tensor out(logits.dims());
  std::vector<double> e(k);
  for (std::size_t i = 0; i < n; ++i) {
    double top = logits.at(i, 0);
    for (std::size_t j = 1; j < k; ++j) top = std::max(top, static_cast<double>(logits.at(i, j)));
    double sum = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      e[j] = std::exp(static_cast<double>(logits.at(i, j)) - top);
      sum += e[j];
    }
    for (std::size_t j = 0; j < k; ++j) out.at(i, j) = static_cast<float>(e[j] / sum);
  }
  return out;
}

double cross_entropy(const Tensor& probs, std::span<const std::size_t> labels) {
  require_rank(probs, 2, "cross_entropy");
  check_labels(labels, probs.dim(0), probs.dim(1));
  double total = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    total -= std::log(std::max(static_cast<double>(probs.at(i, labels[i])), kProbabilityFloor));
  }
  return total / static_cast<double>(labels.size());
}

double cross_entropy(const Tensor& probs, const Tensor& one_hot) {
  require_rank(probs, 2, "cross_entropy");
  if (one_hot.dims() != probs.dims()) throw LabelError("one-hot labels do not match probabilities");
  double total = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (one_hot[i] != 0.0f) {
      total -= one_hot[i] * std::log(std::max(static_cast<double>(probs[i]), kProbabilityFloor));
    }
  }
  return total / static_cast<double>(probs.dim(0));
}

Tensor softmax_xent_backward(const Tensor& logits, std::span<const std::size_t> labels) {
  require_rank(logits, 2, "softmax_xent_backward");
  const std::size_t n = logits.dim(0);
  check_labels(labels, n, logits.dim(1));
  Tensor grad = softmax(logits);
  const double inv_n = 1.0 / static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < logits.dim(1); ++j) {
      const double target = j == labels[i] ? 1.0 : 0.0;
      grad.at(i, j) = static_cast<float>((grad.at(i, j) - target) * inv_n);
    }
  }
  return grad;
}

Tensor concat_channels(std::span<const Tensor* const> parts) {
  if (parts.empty()) throw ShapeError("concat of zero tensors");
  const Tensor& first = *parts.front();
  require_rank(first, 4, "concat");
  const std::size_t n = first.dim(0), h = first.dim(2), w = first.dim(3);
  std::size_t channels = 0;
  for (const Tensor* t : parts) {
    require_rank(*t, 4, "concat");
    if (t->dim(0) != n || t->dim(2) != h || t->dim(3) != w) {
      throw ShapeError("concat: inputs disagree outside the channel axis");
    }
    channels += t->dim(1);
  }
  Tensor out({n, channels, h, w});
  float* dst = out.data().data();
  for (std::size_t b = 0; b < n; ++b) {
    for (const Tensor* t : parts) {
      const std::size_t block = t->dim(1) * h * w;
      const float* src = t->data().data() + b * block;
      dst = std::copy(src, src + block, dst);
    }
  }
  return out;
}

double grad_check(const ScalarFunction& f, std::span<const double> x, std::span<const double> analytic,
                  double step) {
  if (analytic.size() != x.size()) throw ShapeError("grad_check: gradient length mismatch");
  std::vector<double> probe(x.begin(), x.end());
  double worst = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    probe[i] = x[i] + step;
    const double up = f(probe);
    probe[i] = x[i] - step;
    const double down = f(probe);
    probe[i] = x[i];
    const double numeric = (up - down) / (2.0 * step);
    const double denom = std::max({1.0, std::abs(analytic[i]), std::abs(numeric)});
    worst = std::max(worst, std::abs(analytic[i] - numeric) / denom);
  }
  return worst;
}

}  // namespace fusi
