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

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace fusi {

using Shape = std::vector<std::size_t>;

/// Product of the entries. Throws ShapeError on an empty shape or a zero
/// entry.
std::size_t shape_size(const Shape& dims);
std::string shape_to_string(const Shape& dims);

/// Dense row-major array of 32-bit reals. Image batches are NCHW.
///
/// A default-constructed tensor is a single zero, so that the type stays
/// regular while still satisfying the non-empty shape invariant.
class Tensor {
 public:
  Tensor();
  explicit Tensor(Shape dims, float fill = 0.0f);
  Tensor(Shape dims, std::vector<float> data);

  /// Row-by-row literal, mostly for tests: `Tensor::matrix({{1, 2}, {3, 4}})`.
  static Tensor matrix(std::initializer_list<std::initializer_list<float>> rows);
  static Tensor vector(std::initializer_list<float> values);

  const Shape& dims() const { return dims_; }
  std::size_t rank() const { return dims_.size(); }
  std::size_t dim(std::size_t i) const { return dims_.at(i); }
  std::size_t size() const { return data_.size(); }

  std::span<float> data() { return data_; }
  std::span<const float> data() const { return data_; }
  const std::vector<float>& values() const { return data_; }

  float& operator[](std::size_t i) { return data_[i]; }
  float operator[](std::size_t i) const { return data_[i]; }

  float& at(std::size_t i, std::size_t j);
  float at(std::size_t i, std::size_t j) const;
  float& at(std::size_t n, std::size_t c, std::size_t h, std::size_t w);
  float at(std::size_t n, std::size_t c, std::size_t h, std::size_t w) const;

  Tensor reshape(Shape dims) const;

  /// Copy of `length` consecutive indices starting at `start` along `axis`.
  Tensor slice(std::size_t axis, std::size_t start, std::size_t length) const;

  void fill(float value);

  friend bool operator==(const Tensor& a, const Tensor& b) = default;

 private:
  Shape dims_;
  std::vector<float> data_;
};

Tensor tensor_new(const Shape& dims, float fill);

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, float factor);

// Reductions accumulate in double.
double reduce_sum(const Tensor& t);
double reduce_mean(const Tensor& t);

/// a[m,k] * b[k,n] with double accumulation. Runs on the parallel kernel.
Tensor matmul(const Tensor& a, const Tensor& b);

/// Index of the largest value, lowest index on ties.
std::size_t argmax(std::span<const float> values);
std::size_t argmax(const Tensor& t);

/// Concatenate along axis 0. All parts must agree on the remaining axes.
Tensor concat_batch(std::span<const Tensor> parts);

}  // namespace fusi
