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

#include "fusi/architectures.hpp"

#include <cmath>
#include <unordered_map>

#include "fusi/error.hpp"
#include "fusi/rng.hpp"

namespace fusi {

namespace {

/// Appends nodes to a ModelSpec while tracking each node's output shape at
/// batch 1, so padding can be resolved to explicit values as blocks are laid
/// down.
class GraphBuilder {
 public:
  GraphBuilder(ModelSpec& model, InitOptions init) : model_(model), init_(init), rng_(init.seed) {
    shapes_.emplace(std::string(kInputId), Shape{model.input_shape[0], model.input_shape[1], model.input_shape[2]});
  }

  const Shape& shape(const std::string& id) const { return shapes_.at(id); }
  std::size_t channels(const std::string& id) const { return shape(id)[0]; }

  std::string conv(const std::string& id, const std::string& input, std::size_t out_channels,
                   std::array<std::size_t, 2> kernel, std::array<std::size_t, 2> stride,
                   std::array<std::size_t, 2> padding, bool with_bias) {
    const Shape& in = shape(input);
    Conv2dParams p;
    p.weights = Tensor({out_channels, in[0], kernel[0], kernel[1]});
    he_normal(p.weights, in[0] * kernel[0] * kernel[1]);
    if (with_bias) p.bias = Tensor({out_channels});
    p.stride = stride;
    p.padding = padding;
    const Shape out{out_channels, window_output_size(in[1], kernel[0], stride[0], padding[0]),
                    window_output_size(in[2], kernel[1], stride[1], padding[1])};
    return push(id, LayerKind::kConv, std::move(p), {input}, out);
  }

  std::string batchnorm(const std::string& id, const std::string& input) {
    const std::size_t c = channels(input);
    BatchNormParams p{Tensor({c}, 1.0f), Tensor({c}, 0.0f), Tensor({c}, 0.0f), Tensor({c}, 1.0f), 1e-3};
    return push(id, LayerKind::kBatchNorm, std::move(p), {input}, shape(input));
  }

  std::string relu(const std::string& id, const std::string& input) {
    return push(id, LayerKind::kRelu, std::monostate{}, {input}, shape(input));
  }

  /// Conv without bias, batch-norm, relu. Stride-1 odd kernels get "same"
  /// padding when `same` is set, otherwise no padding.
  std::string conv_bn_relu(const std::string& prefix, const std::string& input, std::size_t out_channels,
                           std::array<std::size_t, 2> kernel, std::size_t stride = 1, bool same = true) {
    const std::array<std::size_t, 2> pad =
        same ? std::array<std::size_t, 2>{(kernel[0] - 1) / 2, (kernel[1] - 1) / 2} : std::array<std::size_t, 2>{0, 0};
    const auto c = conv(prefix + "_conv", input, out_channels, kernel, {stride, stride}, pad, false);
    const auto b = batchnorm(prefix + "_bn", c);
    return relu(prefix + "_relu", b);
  }

  std::string pool(const std::string& id, LayerKind kind, const std::string& input, std::size_t window,
                   std::size_t stride, std::size_t padding) {
    const Shape& in = shape(input);
    PoolParams p{{window, window}, {stride, stride}, {padding, padding}};
    const Shape out{in[0], window_output_size(in[1], window, stride, padding),
                    window_output_size(in[2], window, stride, padding)};
    return push(id, kind, p, {input}, out);
  }

  std::string concat(const std::string& id, const std::vector<std::string>& inputs) {
    Shape out = shape(inputs.front());
    out[0] = 0;
    for (const auto& in : inputs) out[0] += channels(in);
    return push(id, LayerKind::kConcat, std::monostate{}, inputs, out);
  }

  std::string add(const std::string& id, const std::vector<std::string>& inputs) {
    return push(id, LayerKind::kAdd, std::monostate{}, inputs, shape(inputs.front()));
  }

  /// Global average pool, dense classifier, softmax.
  void head(std::size_t num_classes, const std::string& input) {
    const std::size_t features = channels(input);
    const auto pooled = push("avg_pool", LayerKind::kGlobalAvgPool, std::monostate{}, {input}, {features});
    DenseParams d{Tensor({num_classes, features}), Tensor({num_classes})};
    he_normal(d.weights, features);
    const auto logits = push("predictions", LayerKind::kDense, std::move(d), {pooled}, {num_classes});
    push("probabilities", LayerKind::kSoftmax, std::monostate{}, {logits}, {num_classes});
  }

 private:
  void he_normal(Tensor& w, std::size_t fan_in) {
    if (init_.zero_weights) return;
    const double stddev = std::sqrt(2.0 / static_cast<double>(fan_in));
    for (float& v : w.data()) v = static_cast<float>(rng_.normal(0.0, stddev));
  }

  std::string push(const std::string& id, LayerKind kind, LayerParams params,
                   std::vector<std::string> inputs, Shape out) {
    model_.nodes.push_back(LayerNode{id, kind, std::move(params), std::move(inputs)});
    shapes_[id] = std::move(out);
    return id;
  }

  ModelSpec& model_;
  InitOptions init_;
  Rng rng_;
  std::unordered_map<std::string, Shape> shapes_;
};

ModelSpec make_spec(std::string name, std::size_t num_classes, std::size_t input_size) {
  if (num_classes < 2) throw ConfigError("a classifier needs at least two classes");
  ModelSpec m;
  m.architecture_name = std::move(name);
  m.input_shape = {3, input_size, input_size};
  m.class_labels = default_class_labels(num_classes);
  return m;
}

std::string bottleneck(GraphBuilder& b, const std::string& prefix, const std::string& input, std::size_t filters,
                       std::size_t stride) {
  const std::size_t expanded = 4 * filters;
  std::string shortcut = input;
  if (stride != 1 || b.channels(input) != expanded) {
    const auto proj = b.conv(prefix + "_0_conv", input, expanded, {1, 1}, {stride, stride}, {0, 0}, false);
    shortcut = b.batchnorm(prefix + "_0_bn", proj);
  }
  auto x = b.conv(prefix + "_1_conv", input, filters, {1, 1}, {1, 1}, {0, 0}, false);
  x = b.relu(prefix + "_1_relu", b.batchnorm(prefix + "_1_bn", x));
  x = b.conv(prefix + "_2_conv", x, filters, {3, 3}, {stride, stride}, {1, 1}, false);
  x = b.relu(prefix + "_2_relu", b.batchnorm(prefix + "_2_bn", x));
  x = b.conv(prefix + "_3_conv", x, expanded, {1, 1}, {1, 1}, {0, 0}, false);
  x = b.batchnorm(prefix + "_3_bn", x);
  x = b.add(prefix + "_add", {shortcut, x});
  return b.relu(prefix + "_out", x);
}

struct InceptionAWidths {
  std::size_t branch1x1, branch5x5_reduce, branch5x5, dbl_reduce, dbl, pool_proj;
};

std::string inception_a(GraphBuilder& b, const std::string& name, const std::string& input, const InceptionAWidths& w) {
  const auto b1 = b.conv_bn_relu(name + "_1x1", input, w.branch1x1, {1, 1});
  auto b5 = b.conv_bn_relu(name + "_5x5_reduce", input, w.branch5x5_reduce, {1, 1});
  b5 = b.conv_bn_relu(name + "_5x5", b5, w.branch5x5, {5, 5});
  auto b3 = b.conv_bn_relu(name + "_3x3dbl_reduce", input, w.dbl_reduce, {1, 1});
  b3 = b.conv_bn_relu(name + "_3x3dbl_1", b3, w.dbl, {3, 3});
  b3 = b.conv_bn_relu(name + "_3x3dbl_2", b3, w.dbl, {3, 3});
  auto bp = b.pool(name + "_pool", LayerKind::kAvgPool, input, 3, 1, 1);
  bp = b.conv_bn_relu(name + "_pool_proj", bp, w.pool_proj, {1, 1});
  return b.concat(name, {b1, b5, b3, bp});
}

std::string inception_b(GraphBuilder& b, const std::string& name, const std::string& input, std::size_t c7) {
  const auto b1 = b.conv_bn_relu(name + "_1x1", input, 192, {1, 1});
  auto b7 = b.conv_bn_relu(name + "_7x7_reduce", input, c7, {1, 1});
  b7 = b.conv_bn_relu(name + "_7x7_1x7", b7, c7, {1, 7});
  b7 = b.conv_bn_relu(name + "_7x7_7x1", b7, 192, {7, 1});
  auto bd = b.conv_bn_relu(name + "_7x7dbl_reduce", input, c7, {1, 1});
  bd = b.conv_bn_relu(name + "_7x7dbl_7x1a", bd, c7, {7, 1});
  bd = b.conv_bn_relu(name + "_7x7dbl_1x7a", bd, c7, {1, 7});
  bd = b.conv_bn_relu(name + "_7x7dbl_7x1b", bd, c7, {7, 1});
  bd = b.conv_bn_relu(name + "_7x7dbl_1x7b", bd, 192, {1, 7});
  auto bp = b.pool(name + "_pool", LayerKind::kAvgPool, input, 3, 1, 1);
  bp = b.conv_bn_relu(name + "_pool_proj", bp, 192, {1, 1});
  return b.concat(name, {b1, b7, bd, bp});
}

std::string inception_c(GraphBuilder& b, const std::string& name, const std::string& input) {
  const auto b1 = b.conv_bn_relu(name + "_1x1", input, 320, {1, 1});
  const auto b3 = b.conv_bn_relu(name + "_3x3_reduce", input, 384, {1, 1});
  const auto b3a = b.conv_bn_relu(name + "_3x3_1x3", b3, 384, {1, 3});
  const auto b3b = b.conv_bn_relu(name + "_3x3_3x1", b3, 384, {3, 1});
  const auto b3cat = b.concat(name + "_3x3", {b3a, b3b});
  auto bd = b.conv_bn_relu(name + "_3x3dbl_reduce", input, 448, {1, 1});
  bd = b.conv_bn_relu(name + "_3x3dbl_3x3", bd, 384, {3, 3});
  const auto bda = b.conv_bn_relu(name + "_3x3dbl_1x3", bd, 384, {1, 3});
  const auto bdb = b.conv_bn_relu(name + "_3x3dbl_3x1", bd, 384, {3, 1});
  const auto bdcat = b.concat(name + "_3x3dbl", {bda, bdb});
  auto bp = b.pool(name + "_pool", LayerKind::kAvgPool, input, 3, 1, 1);
  bp = b.conv_bn_relu(name + "_pool_proj", bp, 192, {1, 1});
  return b.concat(name, {b1, b3cat, bdcat, bp});
}

}  // namespace

std::vector<std::string> default_class_labels(std::size_t num_classes) {
  if (num_classes == 3) return {"black_sigatoka", "fusarium_wilt_race1", "healthy"};
  std::vector<std::string> labels;
  for (std::size_t i = 0; i < num_classes; ++i) labels.push_back("class_" + std::to_string(i));
  return labels;
}

ModelSpec build_resnet152(std::size_t num_classes, std::size_t input_size, InitOptions init) {
  if (input_size < 32) throw ShapeError("resnet152 needs an input of at least 32 pixels");
  ModelSpec m = make_spec("resnet152", num_classes, input_size);
  GraphBuilder b(m, init);
  auto x = b.conv("conv1_conv", std::string(kInputId), 64, {7, 7}, {2, 2}, {3, 3}, false);
  x = b.relu("conv1_relu", b.batchnorm("conv1_bn", x));
  x = b.pool("pool1_pool", LayerKind::kMaxPool, x, 3, 2, 1);

  struct Stage {
    std::size_t blocks, filters, stride;
  };
  constexpr std::array<Stage, 4> kStages{{{3, 64, 1}, {8, 128, 2}, {36, 256, 2}, {3, 512, 2}}};
  for (std::size_t s = 0; s < kStages.size(); ++s) {
    for (std::size_t blk = 0; blk < kStages[s].blocks; ++blk) {
      const std::string prefix = "conv" + std::to_string(s + 2) + "_block" + std::to_string(blk + 1);
      x = bottleneck(b, prefix, x, kStages[s].filters, blk == 0 ? kStages[s].stride : 1);
    }
  }
  b.head(num_classes, x);
  validate(m);
  return m;
}

ModelSpec build_inception_v3(std::size_t num_classes, std::size_t input_size, InitOptions init) {
  ModelSpec m = make_spec("inceptionv3", num_classes, input_size);
  GraphBuilder b(m, init);
  auto x = b.conv_bn_relu("stem_1", std::string(kInputId), 32, {3, 3}, 2, false);
  x = b.conv_bn_relu("stem_2", x, 32, {3, 3}, 1, false);
  x = b.conv_bn_relu("stem_3", x, 64, {3, 3});
  x = b.pool("stem_pool1", LayerKind::kMaxPool, x, 3, 2, 0);
  x = b.conv_bn_relu("stem_4", x, 80, {1, 1}, 1, false);
  x = b.conv_bn_relu("stem_5", x, 192, {3, 3}, 1, false);
  x = b.pool("stem_pool2", LayerKind::kMaxPool, x, 3, 2, 0);

  x = inception_a(b, "mixed0", x, {64, 48, 64, 64, 96, 32});
  x = inception_a(b, "mixed1", x, {64, 48, 64, 64, 96, 64});
  x = inception_a(b, "mixed2", x, {64, 48, 64, 64, 96, 64});

  {  // grid reduction 35 -> 17
    const auto r3 = b.conv_bn_relu("mixed3_3x3", x, 384, {3, 3}, 2, false);
    auto rd = b.conv_bn_relu("mixed3_3x3dbl_reduce", x, 64, {1, 1});
    rd = b.conv_bn_relu("mixed3_3x3dbl_1", rd, 96, {3, 3});
    rd = b.conv_bn_relu("mixed3_3x3dbl_2", rd, 96, {3, 3}, 2, false);
    const auto rp = b.pool("mixed3_pool", LayerKind::kMaxPool, x, 3, 2, 0);
    x = b.concat("mixed3", {r3, rd, rp});
  }

  x = inception_b(b, "mixed4", x, 128);
  x = inception_b(b, "mixed5", x, 160);
  x = inception_b(b, "mixed6", x, 160);
  x = inception_b(b, "mixed7", x, 192);

  {  // grid reduction 17 -> 8
    auto r3 = b.conv_bn_relu("mixed8_3x3_reduce", x, 192, {1, 1});
    r3 = b.conv_bn_relu("mixed8_3x3", r3, 320, {3, 3}, 2, false);
    auto r7 = b.conv_bn_relu("mixed8_7x7x3_reduce", x, 192, {1, 1});
    r7 = b.conv_bn_relu("mixed8_7x7x3_1x7", r7, 192, {1, 7});
    r7 = b.conv_bn_relu("mixed8_7x7x3_7x1", r7, 192, {7, 1});
    r7 = b.conv_bn_relu("mixed8_7x7x3_3x3", r7, 192, {3, 3}, 2, false);
    const auto rp = b.pool("mixed8_pool", LayerKind::kMaxPool, x, 3, 2, 0);
    x = b.concat("mixed8", {r3, r7, rp});
  }

  x = inception_c(b, "mixed9", x);
  x = inception_c(b, "mixed10", x);
  b.head(num_classes, x);
  validate(m);
  return m;
}

ModelSpec build_tiny(TinyPreset preset, std::size_t num_classes, std::size_t input_size, InitOptions init) {
  if (input_size < 8) throw ShapeError("tiny presets need an input of at least 8 pixels");
  const bool residual = preset == TinyPreset::kResidual;
  ModelSpec m = make_spec(residual ? "tiny-residual" : "tiny-inception", num_classes, input_size);
  GraphBuilder b(m, init);
  if (residual) {
    auto x = b.conv("conv1_conv", std::string(kInputId), 16, {3, 3}, {1, 1}, {1, 1}, false);
    x = b.relu("conv1_relu", b.batchnorm("conv1_bn", x));
    x = b.pool("pool1_pool", LayerKind::kMaxPool, x, 2, 2, 0);
    x = bottleneck(b, "conv2_block1", x, 8, 1);
    x = bottleneck(b, "conv3_block1", x, 16, 2);
    b.head(num_classes, x);
  } else {
    auto x = b.conv_bn_relu("stem_1", std::string(kInputId), 32, {3, 3});
    x = b.pool("stem_pool1", LayerKind::kMaxPool, x, 2, 2, 0);
    x = inception_a(b, "mixed0", x, {16, 12, 16, 16, 24, 8});
    x = inception_a(b, "mixed1", x, {16, 12, 16, 16, 24, 16});
    b.head(num_classes, x);
  }
  validate(m);
  return m;
}

std::size_t default_input_size(std::string_view name) {
  if (name == "resnet152") return 224;
  if (name == "inceptionv3") return 299;
  if (name == "tiny-residual" || name == "tiny-inception") return 32;
  throw ConfigError("unknown architecture '" + std::string(name) + "'");
}

bool is_known_architecture(std::string_view name) {
  return name == "resnet152" || name == "inceptionv3" || name == "tiny-residual" || name == "tiny-inception";
}

ModelSpec build_architecture(std::string_view name, std::size_t num_classes, std::size_t input_size,
                             InitOptions init) {
  if (input_size == 0) input_size = default_input_size(name);
  if (name == "resnet152") return build_resnet152(num_classes, input_size, init);
  if (name == "inceptionv3") return build_inception_v3(num_classes, input_size, init);
  if (name == "tiny-residual") return build_tiny(TinyPreset::kResidual, num_classes, input_size, init);
  if (name == "tiny-inception") return build_tiny(TinyPreset::kInception, num_classes, input_size, init);
  throw ConfigError("unknown architecture '" + std::string(name) + "'");
}

bool is_projection_shortcut(std::string_view id) { return id.ends_with("_0_conv"); }

std::size_t count_weighted_layers(const ModelSpec& m) {
  std::size_t count = 0;
  for (const LayerNode& n : m.nodes) {
    if ((n.kind == LayerKind::kConv || n.kind == LayerKind::kDense) && !is_projection_shortcut(n.id)) ++count;
  }
  return count;
}

}  // namespace fusi
