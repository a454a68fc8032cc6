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

#include "fusi/tensor.hpp"

#include <algorithm>
#include <sstream>
#include <utility>

#include "fusi/error.hpp"
#include "fusi/kernels.hpp"

namespace fusi {

std::size_t shape_size(const Shape& dims) {
  if (dims.empty()) throw ShapeError("shape must have at least one dimension");
  std::size_t total = 1;
  for (std::size_t d : dims) {
    if (d == 0) throw ShapeError("zero dimension in shape " + shape_to_string(dims));
    total *= d;
  }
  return total;
}

std::string shape_to_string(const Shape& dims) {
  std::ostringstream os;
  for (std::size_t i = 0; i < dims.size(); ++i) {
    if (i != 0) os << 'x';
    os << dims[i];
  }
  return os.str();
}

Tensor::Tensor() : dims_{1}, data_(1, 0.0f) {}

Tensor::Tensor(Shape dims, float fill) : dims_(std::move(dims)), data_(shape_size(dims_), fill) {}

Tensor::Tensor(Shape dims, std::vector<float> data) : dims_(std::move(dims)), data_(std::move(data)) {
  if (shape_size(dims_) != data_.size()) {
    throw ShapeError("data length " + std::to_string(data_.size()) + " does not match shape " +
                     shape_to_string(dims_));
  }
}

Tensor Tensor::matrix(std::initializer_list<std::initializer_list<float>> rows) {
  const std::size_t m = rows.size();
  const std::size_t n = m == 0 ? 0 : rows.begin()->size();
  std::vector<float> data;
  data.reserve(m * n);
  for (const auto& row : rows) {
    if (row.size() != n) throw ShapeError("ragged matrix literal");
    data.insert(data.end(), row.begin(), row.end());
  }
  return Tensor({m, n}, std::move(data));
}

Tensor Tensor::vector(std::initializer_list<float> values) {
  return Tensor({values.size()}, std::vector<float>(values));
}

float& Tensor::at(std::size_t i, std::size_t j) { return data_[i * dims_[1] + j]; }
float Tensor::at(std::size_t i, std::size_t j) const { return data_[i * dims_[1] + j]; }

float& Tensor::at(std::size_t n, std::size_t c, std::size_t h, std::size_t w) {
  return data_[((n * dims_[1] + c) * dims_[2] + h) * dims_[3] + w];
}
float Tensor::at(std::size_t n, std::size_t c, std::size_t h, std::size_t w) const {
  return data_[((n * dims_[1] + c) * dims_[2] + h) * dims_[3] + w];
}

Tensor Tensor::reshape(Shape dims) const {
  if (shape_size(dims) != data_.size()) {
    throw ShapeError("cannot reshape " + shape_to_string(dims_) + " to " + shape_to_string(dims));
  }
  return Tensor(std::move(dims), data_);
}

Tensor Tensor::slice(std::size_t axis, std::size_t start, std::size_t length) const {
  if (axis >= dims_.size()) throw ShapeError("slice axis out of range");
  if (length == 0 || start + length > dims_[axis]) {
    throw ShapeError("slice [" + std::to_string(start) + ", " + std::to_string(start + length) +
                     ") out of range for dimension " + std::to_string(dims_[axis]));
  }
  std::size_t outer = 1;
  for (std::size_t i = 0; i < axis; ++i) outer *= dims_[i];
  std::size_t inner = 1;
  for (std::size_t i = axis + 1; i < dims_.size(); ++i) inner *= dims_[i];

  Shape out_dims = dims_;
  out_dims[axis] = length;
  std::vector<float> out;
  out.reserve(outer * length * inner);
  for (std::size_t o = 0; o < outer; ++o) {
    const auto first = data_.begin() + static_cast<std::ptrdiff_t>((o * dims_[axis] + start) * inner);
    out.insert(out.end(), first, first + static_cast<std::ptrdiff_t>(length * inner));
  }
  return Tensor(std::move(out_dims), std::move(out));
}

void Tensor::fill(float value) { std::fill(data_.begin(), data_.end(), value); }

Tensor tensor_new(const Shape& dims, float fill) { return Tensor(dims, fill); }

namespace {

template <typename Op>
Tensor elementwise(const Tensor& a, const Tensor& b, Op op, const char* name) {
  if (a.dims() != b.dims()) {
    throw ShapeError(std::string(name) + ": shape mismatch " + shape_to_string(a.dims()) + " vs " +
                     shape_to_string(b.dims()));
  }
  Tensor out(a.dims());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = op(a[i], b[i]);
  return out;
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  return elementwise(a, b, [](float x, float y) { return x + y; }, "add");
}
Tensor sub(const Tensor& a, const Tensor& b) {
  return elementwise(a, b, [](float x, float y) { return x - y; }, "sub");
}
Tensor mul(const Tensor& a, const Tensor& b) {
  return elementwise(a, b, [](float x, float y) { return x * y; }, "mul");
}

Tensor scale(const Tensor& a, float factor) {
  Tensor out = a;
  for (float& v : out.data()) v *= factor;
  return out;
}

double reduce_sum(const Tensor& t) {
  double sum = 0.0;
  for (float v : t.data()) sum += v;
  return sum;
}

double reduce_mean(const Tensor& t) { return reduce_sum(t) / static_cast<double>(t.size()); }

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2) throw ShapeError("matmul expects 2-D operands");
  if (a.dim(1) != b.dim(0)) {
    throw ShapeError("matmul inner dimensions differ: " + shape_to_string(a.dims()) + " * " +
                     shape_to_string(b.dims()));
  }
  Tensor out({a.dim(0), b.dim(1)});
  kernels::parallel::matmul(a.data(), b.data(), out.data(), a.dim(0), a.dim(1), b.dim(1));
  return out;
}

std::size_t argmax(std::span<const float> values) {
  if (values.empty()) throw ShapeError("argmax of an empty sequence");
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[best]) best = i;
  }
  return best;
}

std::size_t argmax(const Tensor& t) {
  if (t.rank() != 1) throw ShapeError("argmax expects a 1-D tensor");
  return argmax(t.data());
}

Tensor concat_batch(std::span<const Tensor> parts) {
  if (parts.empty()) throw ShapeError("concat_batch of nothing");
  Shape dims = parts.front().dims();
  const Shape tail(dims.begin() + 1, dims.end());
  std::size_t batch = 0;
  std::vector<float> data;
  for (const Tensor& p : parts) {
    if (Shape(p.dims().begin() + 1, p.dims().end()) != tail) {
      throw ShapeError("concat_batch: trailing dimensions differ");
    }
    batch += p.dim(0);
    data.insert(data.end(), p.data().begin(), p.data().end());
  }
  dims[0] = batch;
  return Tensor(std::move(dims), std::move(data));
}

}  // namespace fusi
