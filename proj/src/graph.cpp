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

#include "fusi/graph.hpp"

#include <algorithm>
#include <bit>
#include <sstream>
#include <unordered_map>

#include "fusi/error.hpp"

namespace fusi {

namespace {

constexpr std::array<std::pair<LayerKind, std::string_view>, 10> kKindNames{{
    {LayerKind::kConv, "conv"},
    {LayerKind::kBatchNorm, "batchnorm"},
    {LayerKind::kRelu, "relu"},
    {LayerKind::kMaxPool, "maxpool"},
    {LayerKind::kAvgPool, "avgpool"},
    {LayerKind::kGlobalAvgPool, "global_avgpool"},
    {LayerKind::kDense, "dense"},
    {LayerKind::kSoftmax, "softmax"},
    {LayerKind::kConcat, "concat"},
    {LayerKind::kAdd, "add"},
}};

template <typename P>
const P& params_as(const LayerNode& node) {
  const P* p = std::get_if<P>(&node.params);
  if (p == nullptr) throw ShapeError("node '" + node.id + "' has parameters of the wrong kind");
  return *p;
}

[[noreturn]] void fail(const LayerNode& node, const std::string& what) {
  throw ShapeError("node '" + node.id + "' (" + std::string(to_string(node.kind)) + "): " + what);
}

Shape node_output_shape(const LayerNode& node, const std::vector<const Shape*>& in) {
  auto single = [&]() -> const Shape& {
    if (in.size() != 1) fail(node, "expects exactly one input");
    return *in.front();
  };
  switch (node.kind) {
    case LayerKind::kConv: {
      const Shape& x = single();
      const auto& p = params_as<Conv2dParams>(node);
      if (x.size() != 4) fail(node, "input must be rank 4");
      if (p.weights.rank() != 4) fail(node, "weights must be rank 4");
      if (p.in_channels() != x[1]) fail(node, "channel mismatch");
      if (p.bias && p.bias->size() != p.out_channels()) fail(node, "bias length mismatch");
      return {x[0], p.out_channels(), window_output_size(x[2], p.kernel_h(), p.stride[0], p.padding[0]),
              window_output_size(x[3], p.kernel_w(), p.stride[1], p.padding[1])};
    }
    case LayerKind::kBatchNorm: {
      const Shape& x = single();
      const auto& p = params_as<BatchNormParams>(node);
      if (x.size() < 2 || p.gamma.size() != x[1] || p.beta.size() != x[1] || p.moving_mean.size() != x[1] ||
          p.moving_var.size() != x[1]) {
        fail(node, "parameter length does not match channels");
      }
      return x;
    }
    case LayerKind::kRelu:
      return single();
    case LayerKind::kMaxPool:
    case LayerKind::kAvgPool: {
      const Shape& x = single();
      const auto& p = params_as<PoolParams>(node);
      if (x.size() != 4) fail(node, "input must be rank 4");
      return {x[0], x[1], window_output_size(x[2], p.window[0], p.stride[0], p.padding[0]),
              window_output_size(x[3], p.window[1], p.stride[1], p.padding[1])};
    }
    case LayerKind::kGlobalAvgPool: {
      const Shape& x = single();
      if (x.size() != 4) fail(node, "input must be rank 4");
      return {x[0], x[1]};
    }
    case LayerKind::kDense: {
      const Shape& x = single();
      const auto& p = params_as<DenseParams>(node);
      if (x.size() != 2) fail(node, "input must be rank 2");
      if (p.weights.rank() != 2 || p.in_features() != x[1]) fail(node, "feature count mismatch");
      if (p.bias.size() != p.out_features()) fail(node, "bias length mismatch");
      return {x[0], p.out_features()};
    }
    case LayerKind::kSoftmax: {
      const Shape& x = single();
      if (x.size() != 2) fail(node, "input must be rank 2");
      return x;
    }
    case LayerKind::kConcat: {
      if (in.empty()) fail(node, "needs at least one input");
      Shape out = *in.front();
      if (out.size() != 4) fail(node, "inputs must be rank 4");
      out[1] = 0;
      for (const Shape* s : in) {
        if (s->size() != 4 || (*s)[0] != out[0] || (*s)[2] != out[2] || (*s)[3] != out[3]) {
          fail(node, "inputs disagree outside the channel axis");
        }
        out[1] += (*s)[1];
      }
      return out;
    }
    case LayerKind::kAdd: {
      if (in.size() < 2) fail(node, "needs at least two inputs");
      for (const Shape* s : in) {
        if (*s != *in.front()) fail(node, "summand shapes differ");
      }
      return *in.front();
    }
  }
  fail(node, "unknown layer kind");
}

Tensor run_node(const LayerNode& node, const std::vector<const Tensor*>& in) {
  switch (node.kind) {
    case LayerKind::kConv:
      return conv2d_forward(*in[0], params_as<Conv2dParams>(node));
    case LayerKind::kBatchNorm:
      return batchnorm_infer(*in[0], params_as<BatchNormParams>(node));
    case LayerKind::kRelu:
      return relu(*in[0]);
    case LayerKind::kMaxPool:
      return maxpool2d(*in[0], params_as<PoolParams>(node));
    case LayerKind::kAvgPool:
      return avgpool2d(*in[0], params_as<PoolParams>(node));
    case LayerKind::kGlobalAvgPool:
      return global_avgpool(*in[0]);
    case LayerKind::kDense:
      return dense_forward(*in[0], params_as<DenseParams>(node));
    case LayerKind::kSoftmax:
      return softmax(*in[0]);
    case LayerKind::kConcat:
      return concat_channels(in);
    case LayerKind::kAdd: {
      Tensor out = *in[0];
      for (std::size_t i = 1; i < in.size(); ++i) out = add(out, *in[i]);
      return out;
    }
  }
  throw ShapeError("unknown layer kind");
}

/// Index of each node's inputs; kInputId maps to -1.
std::vector<std::vector<long>> resolve_inputs(const ModelSpec& m) {
  std::unordered_map<std::string_view, long> index;
  std::vector<std::vector<long>> resolved(m.nodes.size());
  for (std::size_t i = 0; i < m.nodes.size(); ++i) {
    const LayerNode& node = m.nodes[i];
    for (const std::string& name : node.inputs) {
      if (name == kInputId) {
        resolved[i].push_back(-1);
        continue;
      }
      const auto it = index.find(name);
      if (it == index.end()) fail(node, "input '" + name + "' is not an earlier node");
      resolved[i].push_back(it->second);
    }
    if (node.id.empty() || node.id == kInputId) fail(node, "reserved or empty id");
    if (!index.emplace(node.id, static_cast<long>(i)).second) fail(node, "duplicate id");
  }
  return resolved;
}

/// last_use[i] = index of the last node reading node i (i itself if none);
/// the final entry is the image input.
std::vector<std::size_t> last_uses(const std::vector<std::vector<long>>& inputs) {
  const std::size_t n = inputs.size();
  std::vector<std::size_t> last(n + 1);
  for (std::size_t i = 0; i < n; ++i) last[i] = i;
  last[n] = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (long src : inputs[i]) last[src < 0 ? n : static_cast<std::size_t>(src)] = i;
  }
  return last;
}

Tensor evaluate(const ModelSpec& m, const Tensor& x, std::size_t target) {
  const auto inputs = resolve_inputs(m);
  const auto& in_shape = m.input_shape;
  if (x.rank() != 4 || x.dim(1) != in_shape[0] || x.dim(2) != in_shape[1] || x.dim(3) != in_shape[2]) {
    throw ShapeError("input " + shape_to_string(x.dims()) + " does not match model input " +
                     shape_to_string({in_shape[0], in_shape[1], in_shape[2]}));
  }
  std::vector<bool> needed(m.nodes.size(), false);
  needed[target] = true;
  for (std::size_t i = target + 1; i-- > 0;) {
    if (!needed[i]) continue;
    for (long src : inputs[i]) {
      if (src >= 0) needed[static_cast<std::size_t>(src)] = true;
    }
  }
  std::vector<std::size_t> last(m.nodes.size(), 0);
  for (std::size_t i = 0; i <= target; ++i) {
    if (!needed[i]) continue;
    for (long src : inputs[i]) {
      if (src >= 0) last[static_cast<std::size_t>(src)] = i;
    }
  }

  std::vector<std::optional<Tensor>> values(m.nodes.size());
  std::vector<const Tensor*> args;
  for (std::size_t i = 0; i <= target; ++i) {
    if (!needed[i]) continue;
    args.clear();
    for (long src : inputs[i]) {
      args.push_back(src < 0 ? &x : &*values[static_cast<std::size_t>(src)]);
    }
    values[i] = run_node(m.nodes[i], args);
    for (long src : inputs[i]) {
      if (src >= 0 && last[static_cast<std::size_t>(src)] == i && static_cast<std::size_t>(src) != target) {
        values[static_cast<std::size_t>(src)].reset();
      }
    }
  }
  return std::move(*values[target]);
}

}  // namespace

std::string_view to_string(LayerKind kind) {
  for (const auto& [k, name] : kKindNames) {
    if (k == kind) return name;
  }
  return "unknown";
}

std::optional<LayerKind> parse_layer_kind(std::string_view name) {
  for (const auto& [k, n] : kKindNames) {
    if (n == name) return k;
  }
  return std::nullopt;
}

const LayerNode* ModelSpec::find(std::string_view id) const {
  for (const LayerNode& n : nodes) {
    if (n.id == id) return &n;
  }
  return nullptr;
}

LayerNode* ModelSpec::find(std::string_view id) {
  for (LayerNode& n : nodes) {
    if (n.id == id) return &n;
  }
  return nullptr;
}

std::vector<Shape> infer_shapes(const ModelSpec& m, std::size_t batch) {
  if (m.nodes.empty()) throw ShapeError("model has no layers");
  for (std::size_t d : m.input_shape) {
    if (d == 0) throw ShapeError("model input shape has a zero dimension");
  }
  const auto inputs = resolve_inputs(m);
  const Shape input{batch, m.input_shape[0], m.input_shape[1], m.input_shape[2]};
  std::vector<Shape> shapes;
  shapes.reserve(m.nodes.size());
  std::vector<const Shape*> in;
  for (std::size_t i = 0; i < m.nodes.size(); ++i) {
    in.clear();
    for (long src : inputs[i]) in.push_back(src < 0 ? &input : &shapes[static_cast<std::size_t>(src)]);
    shapes.push_back(node_output_shape(m.nodes[i], in));
  }

  const auto last = last_uses(inputs);
  for (std::size_t i = 0; i + 1 < m.nodes.size(); ++i) {
    if (last[i] == i) fail(m.nodes[i], "output is never consumed; a model has exactly one output");
  }
  const LayerNode& out = m.nodes.back();
  if (out.kind != LayerKind::kSoftmax) fail(out, "the output node must be a softmax");
  if (shapes.back()[1] != m.class_labels.size()) {
    fail(out, "output width " + std::to_string(shapes.back()[1]) + " differs from " +
                  std::to_string(m.class_labels.size()) + " class labels");
  }
  return shapes;
}

void validate(const ModelSpec& m) { infer_shapes(m, 1); }

Tensor forward(const ModelSpec& m, const Tensor& x) {
  if (m.nodes.empty()) throw ShapeError("model has no layers");
  return evaluate(m, x, m.nodes.size() - 1);
}

Tensor forward_to(const ModelSpec& m, const Tensor& x, std::string_view node_id) {
  for (std::size_t i = 0; i < m.nodes.size(); ++i) {
    if (m.nodes[i].id == node_id) return evaluate(m, x, i);
  }
  throw ShapeError("no node named '" + std::string(node_id) + "'");
}

HeadView find_head(const ModelSpec& m) {
  if (m.nodes.size() < 2) throw ShapeError("model has no classifier head");
  const LayerNode& out = m.nodes.back();
  if (out.kind != LayerKind::kSoftmax || out.inputs.size() != 1) throw ShapeError("model does not end in softmax");
  for (std::size_t i = 0; i + 1 < m.nodes.size(); ++i) {
    const LayerNode& node = m.nodes[i];
    if (node.id == out.inputs.front()) {
      if (node.kind != LayerKind::kDense || node.inputs.size() != 1) {
        throw ShapeError("softmax is not fed by a dense layer");
      }
      return {i, node.inputs.front()};
    }
  }
  throw ShapeError("softmax input not found");
}

std::size_t count_parameters(const LayerParams& p) {
  return std::visit(
      [](const auto& v) -> std::size_t {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, Conv2dParams>) {
          return v.weights.size() + (v.bias ? v.bias->size() : 0);
        } else if constexpr (std::is_same_v<T, BatchNormParams>) {
          return 4 * v.gamma.size();
        } else if constexpr (std::is_same_v<T, DenseParams>) {
          return v.weights.size() + v.bias.size();
        } else {
          return 0;
        }
      },
      p);
}

std::size_t count_parameters(const ModelSpec& m) {
  std::size_t total = 0;
  for (const LayerNode& n : m.nodes) total += count_parameters(n.params);
  return total;
}

std::size_t peak_activation_elements(const ModelSpec& m) {
  const auto shapes = infer_shapes(m, 1);
  const auto last = last_uses(resolve_inputs(m));
  const std::size_t n = m.nodes.size();
  const std::size_t input_elems = m.input_shape[0] * m.input_shape[1] * m.input_shape[2];

  std::size_t live = input_elems;
  std::size_t peak = live;
  for (std::size_t i = 0; i < n; ++i) {
    live += shape_size(shapes[i]);
    peak = std::max(peak, live);
    // Release everything whose last reader was this node.
    if (last[n] == i) live -= input_elems;
    for (std::size_t j = 0; j < i; ++j) {
      if (last[j] == i) live -= shape_size(shapes[j]);
    }
  }
  return peak;
}

std::uint64_t estimate_memory_bytes(const ModelSpec& m) {
  return 4ULL * (static_cast<std::uint64_t>(count_parameters(m)) + peak_activation_elements(m));
}

std::vector<std::pair<std::string, const Tensor*>> named_tensors(const LayerNode& node) {
  std::vector<std::pair<std::string, const Tensor*>> out;
  auto put = [&](const char* name, const Tensor& t) { out.emplace_back(node.id + "/" + name, &t); };
  if (const auto* c = std::get_if<Conv2dParams>(&node.params)) {
    put("weights", c->weights);
    if (c->bias) put("bias", *c->bias);
  } else if (const auto* b = std::get_if<BatchNormParams>(&node.params)) {
    put("gamma", b->gamma);
    put("beta", b->beta);
    put("moving_mean", b->moving_mean);
    put("moving_var", b->moving_var);
  } else if (const auto* d = std::get_if<DenseParams>(&node.params)) {
    put("weights", d->weights);
    put("bias", d->bias);
  }
  return out;
}

std::vector<std::pair<std::string, Tensor*>> named_tensors(LayerNode& node) {
  std::vector<std::pair<std::string, Tensor*>> out;
  for (const auto& [name, t] : named_tensors(static_cast<const LayerNode&>(node))) {
    out.emplace_back(name, const_cast<Tensor*>(t));
  }
  return out;
}

std::string inspect_dump(const ModelSpec& m) {
  const auto shapes = infer_shapes(m, 1);
  std::ostringstream os;
  for (std::size_t i = 0; i < m.nodes.size(); ++i) {
    const LayerNode& n = m.nodes[i];
    os << n.id << '\t' << to_string(n.kind) << '\t' << shape_to_string(shapes[i]) << '\t'
       << count_parameters(n.params) << '\n';
  }
  return os.str();
}

std::uint64_t weights_checksum(const ModelSpec& m) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const LayerNode& node : m.nodes) {
    for (const auto& [name, t] : named_tensors(node)) {
      for (float v : t->data()) {
        h ^= std::bit_cast<std::uint32_t>(v);
        h *= 0x100000001b3ULL;
      }
    }
  }
  return h;
}

}  // namespace fusi
