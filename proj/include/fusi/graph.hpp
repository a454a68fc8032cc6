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

// Layer graphs: the model description shared by training, the model file,
// and inference.

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "fusi/layers.hpp"
#include "fusi/tensor.hpp"

namespace fusi {

enum class LayerKind {
  kConv,
  kBatchNorm,
  kRelu,
  kMaxPool,
  kAvgPool,
  kGlobalAvgPool,
  kDense,
  kSoftmax,
  kConcat,
  kAdd,
};

std::string_view to_string(LayerKind kind);
std::optional<LayerKind> parse_layer_kind(std::string_view name);

using LayerParams = std::variant<std::monostate, Conv2dParams, BatchNormParams, PoolParams, DenseParams>;

/// Id every graph uses for the image batch fed to the model.
inline constexpr std::string_view kInputId = "input";

struct LayerNode {
  std::string id;
  LayerKind kind = LayerKind::kRelu;
  LayerParams params;
  std::vector<std::string> inputs;
};

/// Topologically ordered layer graph plus its weights. The last node is the
/// single output and must be a softmax.
struct ModelSpec {
  std::string architecture_name;
  std::array<std::size_t, 3> input_shape{3, 32, 32};  // C, H, W
  std::vector<std::string> class_labels;
  std::vector<LayerNode> nodes;

  std::size_t input_size() const { return input_shape[1]; }
  const LayerNode* find(std::string_view id) const;
  LayerNode* find(std::string_view id);
};

/// Output shape of every node at the given batch size, in node order.
/// Checks ids, topological order, parameter shapes, single output and the
/// label count. Throws ShapeError on any violation.
std::vector<Shape> infer_shapes(const ModelSpec& m, std::size_t batch = 1);

/// Throws unless the spec is well formed; see infer_shapes.
void validate(const ModelSpec& m);

/// Softmax probabilities [N, K].
Tensor forward(const ModelSpec& m, const Tensor& x);

/// Output of the node named `node_id`. Only the nodes it depends on run.
Tensor forward_to(const ModelSpec& m, const Tensor& x, std::string_view node_id);

/// Locations of the trainable classifier head: the dense layer that feeds the
/// final softmax, and the node feeding that dense layer.
struct HeadView {
  std::size_t dense_index = 0;
  std::string feature_id;
};
HeadView find_head(const ModelSpec& m);

std::size_t count_parameters(const LayerParams& p);
std::size_t count_parameters(const ModelSpec& m);

/// 4 bytes x (parameters + peak live activation elements at batch 1), live
/// ranges taken from topological order.
std::uint64_t estimate_memory_bytes(const ModelSpec& m);
std::size_t peak_activation_elements(const ModelSpec& m);

/// Named tensors of a node in a fixed order, e.g. "conv1/weights".
std::vector<std::pair<std::string, const Tensor*>> named_tensors(const LayerNode& node);
std::vector<std::pair<std::string, Tensor*>> named_tensors(LayerNode& node);

/// One tab-separated line per node: id, kind, output shape at batch 1,
/// parameter count.
std::string inspect_dump(const ModelSpec& m);

/// FNV-1a over every weight's bit pattern, in node order.
std::uint64_t weights_checksum(const ModelSpec& m);

}  // namespace fusi
