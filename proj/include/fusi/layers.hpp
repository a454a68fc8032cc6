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

// Layer forward passes, head backward passes, and a finite-difference checker.
// Every function here is pure.

#include <array>
#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "fusi/tensor.hpp"

namespace fusi {

struct Conv2dParams {
  Tensor weights;               // [outC, inC, kH, kW]
  std::optional<Tensor> bias;   // [outC]; absent when a batch-norm follows
  std::array<std::size_t, 2> stride{1, 1};
  std::array<std::size_t, 2> padding{0, 0};

  std::size_t out_channels() const { return weights.dim(0); }
  std::size_t in_channels() const { return weights.dim(1); }
  std::size_t kernel_h() const { return weights.dim(2); }
  std::size_t kernel_w() const { return weights.dim(3); }
};

struct BatchNormParams {
  Tensor gamma;
  Tensor beta;
  Tensor moving_mean;
  Tensor moving_var;
  double epsilon = 1e-3;

  std::size_t channels() const { return gamma.size(); }
};

struct PoolParams {
  std::array<std::size_t, 2> window{2, 2};
  std::array<std::size_t, 2> stride{2, 2};
  std::array<std::size_t, 2> padding{0, 0};
};

struct DenseParams {
  Tensor weights;  // [outF, inF]
  Tensor bias;     // [outF]

  std::size_t out_features() const { return weights.dim(0); }
  std::size_t in_features() const { return weights.dim(1); }
};

struct DenseGrads {
  Tensor input;
  Tensor weights;
  Tensor bias;
};

/// Output spatial extent of a sliding window; throws ShapeError when the
/// window does not fit the padded input.
std::size_t window_output_size(std::size_t input, std::size_t window, std::size_t stride,
                               std::size_t padding);

/// Cross-correlation, zero padding, im2col + matmul.
Tensor conv2d_forward(const Tensor& x, const Conv2dParams& p);

/// Same contract as conv2d_forward via the naive nested loops. Test oracle.
Tensor conv2d_direct(const Tensor& x, const Conv2dParams& p);

/// Padded positions never win the max.
Tensor maxpool2d(const Tensor& x, const PoolParams& p);

/// Mean over the in-bounds part of each window (padding excluded from the
/// count).
Tensor avgpool2d(const Tensor& x, const PoolParams& p);

Tensor global_avgpool(const Tensor& x);
Tensor global_avgpool_backward(const Shape& input_dims, const Tensor& grad_out);

/// Works on [N,C,H,W] and [N,C].
Tensor batchnorm_infer(const Tensor& x, const BatchNormParams& p);

Tensor relu(const Tensor& x);
/// Gradient passes only where x > 0.
Tensor relu_backward(const Tensor& x, const Tensor& grad_out);

/// out = x * W^T + b.
Tensor dense_forward(const Tensor& x, const DenseParams& p);
DenseGrads dense_backward(const Tensor& x, const DenseParams& p, const Tensor& grad_out);

/// Row-wise, max-subtracted, evaluated in double.
Tensor softmax(const Tensor& logits);

/// Mean of -log(max(p[label], 1e-12)). Throws LabelError on a bad index.
double cross_entropy(const Tensor& probs, std::span<const std::size_t> labels);
/// One-hot variant: labels is [N,K].
double cross_entropy(const Tensor& probs, const Tensor& one_hot);

/// d(mean xent(softmax(logits)))/d logits = (softmax - onehot) / N.
Tensor softmax_xent_backward(const Tensor& logits, std::span<const std::size_t> labels);

/// Concatenate along the channel axis of [N,C,H,W] tensors.
Tensor concat_channels(std::span<const Tensor* const> parts);

using ScalarFunction = std::function<double(std::span<const double>)>;

/// Largest relative error between `analytic` and central differences of `f`
/// around `x`, using max(1, |analytic|, |numeric|) as the denominator.
double grad_check(const ScalarFunction& f, std::span<const double> x,
                  std::span<const double> analytic, double step);

}  // namespace fusi
