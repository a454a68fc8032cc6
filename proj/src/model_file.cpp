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

#include "fusi/model_file.hpp"

#include <zlib.h>

#include <json.hpp>

#include <bit>
#include <cstring>
#include <unordered_map>

#include "fusi/error.hpp"
#include "fusi/image.hpp"

namespace fusi {

using nlohmann::json;

namespace {

constexpr std::array<std::uint8_t, 4> kMagic{'F', 'U', 'S', 'I'};
constexpr double kRescale = 1.0 / 255.0;

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint16_t get_u16(std::span<const std::uint8_t> b, std::size_t at) {
  return static_cast<std::uint16_t>(b[at] | (b[at + 1] << 8));
}

std::uint32_t get_u32(std::span<const std::uint8_t> b, std::size_t at) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[at + i]) << (8 * i);
  return v;
}

json pair_json(const std::array<std::size_t, 2>& a) { return json::array({a[0], a[1]}); }

std::array<std::size_t, 2> pair_from(const json& j) {
  return {j.at(0).get<std::size_t>(), j.at(1).get<std::size_t>()};
}

json node_attrs(const LayerNode& node) {
  json attrs = json::object();
  if (const auto* c = std::get_if<Conv2dParams>(&node.params)) {
    attrs["stride"] = pair_json(c->stride);
    attrs["padding"] = pair_json(c->padding);
    attrs["bias"] = c->bias.has_value();
  } else if (const auto* b = std::get_if<BatchNormParams>(&node.params)) {
    attrs["epsilon"] = b->epsilon;
  } else if (const auto* p = std::get_if<PoolParams>(&node.params)) {
    attrs["window"] = pair_json(p->window);
    attrs["stride"] = pair_json(p->stride);
    attrs["padding"] = pair_json(p->padding);
  }
  return attrs;
}

struct Header {
  json doc;
  std::size_t payload_offset = 0;
  std::size_t payload_size = 0;
  std::uint16_t version = 0;
};

/// Validates the framing and CRC and parses the header JSON.
Header read_frame(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kModelPrefixSize + 4) {
    throw FormatError(FormatErrorKind::kTruncated, bytes.size(), "file too short for the fixed prefix");
  }
  if (!std::equal(kMagic.begin(), kMagic.end(), bytes.begin())) {
    throw FormatError(FormatErrorKind::kBadMagic, 0, "not a FUSI model file");
  }
  const std::size_t header_len = get_u32(bytes, 6);
  if (kModelPrefixSize + header_len + 4 > bytes.size()) {
    throw FormatError(FormatErrorKind::kTruncated, bytes.size(),
                      "header claims " + std::to_string(header_len) + " bytes but the file ends first");
  }
  const std::size_t body = bytes.size() - 4;
  const std::uint32_t stored = get_u32(bytes, body);
  if (crc32(bytes.first(body)) != stored) {
    throw FormatError(FormatErrorKind::kCrcMismatch, body, "checksum does not match contents");
  }
  Header h;
  h.version = get_u16(bytes, 4);
  if (h.version != kModelFormatVersion) {
    throw FormatError(FormatErrorKind::kUnsupportedVersion, 4, "format version " + std::to_string(h.version));
  }
  const auto text = bytes.subspan(kModelPrefixSize, header_len);
  try {
    h.doc = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw FormatError(FormatErrorKind::kBadHeader, kModelPrefixSize + (e.byte > 0 ? e.byte - 1 : 0),
                      "header is not valid JSON");
  }
  if (!h.doc.is_object()) throw FormatError(FormatErrorKind::kBadHeader, kModelPrefixSize, "header is not an object");
  h.payload_offset = kModelPrefixSize + header_len;
  h.payload_size = body - h.payload_offset;
  return h;
}

Tensor read_tensor(std::span<const std::uint8_t> payload, std::size_t offset, const Shape& dims,
                   std::size_t file_offset) {
  const std::size_t n = shape_size(dims);
  if (offset + n * 4 > payload.size()) {
    throw FormatError(FormatErrorKind::kInconsistent, file_offset + offset, "tensor extends past the payload");
  }
  std::vector<float> data(n);
  for (std::size_t i = 0; i < n; ++i) data[i] = std::bit_cast<float>(get_u32(payload, offset + 4 * i));
  return Tensor(dims, std::move(data));
}

LayerParams params_for(LayerKind kind, const json& attrs, std::unordered_map<std::string, Tensor>& tensors,
                       const std::string& id) {
  auto take = [&](const char* name) {
    const auto it = tensors.find(id + "/" + name);
    if (it == tensors.end()) throw ShapeError("missing tensor " + id + "/" + name);
    Tensor t = std::move(it->second);
    tensors.erase(it);
    return t;
  };
  switch (kind) {
    case LayerKind::kConv: {
      Conv2dParams p;
      p.weights = take("weights");
      if (attrs.at("bias").get<bool>()) p.bias = take("bias");
      p.stride = pair_from(attrs.at("stride"));
      p.padding = pair_from(attrs.at("padding"));
      return p;
    }
    case LayerKind::kBatchNorm: {
      BatchNormParams p;
      p.gamma = take("gamma");
      p.beta = take("beta");
      p.moving_mean = take("moving_mean");
      p.moving_var = take("moving_var");
      p.epsilon = attrs.at("epsilon").get<double>();
      return p;
    }
    case LayerKind::kMaxPool:
    case LayerKind::kAvgPool: {
      PoolParams p;
      p.window = pair_from(attrs.at("window"));
      p.stride = pair_from(attrs.at("stride"));
      p.padding = pair_from(attrs.at("padding"));
      return p;
    }
    case LayerKind::kDense: {
      DenseParams p;
      p.weights = take("weights");
      p.bias = take("bias");
      return p;
    }
    default:
      return std::monostate{};
  }
}

ModelInfo info_from_header(const Header& h, std::size_t file_size) {
  ModelInfo info;
  info.architecture_name = h.doc.at("architectureName").get<std::string>();
  info.input_size = h.doc.at("inputSize").get<std::size_t>();
  info.class_labels = h.doc.at("classLabels").get<std::vector<std::string>>();
  info.rescale = h.doc.at("preprocessing").at("rescale").get<double>();
  for (const auto& t : h.doc.at("tensors")) info.parameter_count += shape_size(t.at("dims").get<Shape>());
  info.file_size = file_size;
  info.format_version = h.version;
  return info;
}

[[noreturn]] void rethrow_as_format(const std::exception& e, std::size_t offset) {
  throw FormatError(FormatErrorKind::kBadHeader, offset, e.what());
}

}  // namespace

std::uint32_t crc32(std::span<const std::uint8_t> bytes) {
  uLong crc = ::crc32(0L, Z_NULL, 0);
  std::size_t done = 0;
  while (done < bytes.size()) {
    const auto chunk = static_cast<uInt>(std::min<std::size_t>(bytes.size() - done, 1u << 30));
    crc = ::crc32(crc, bytes.data() + done, chunk);
    done += chunk;
  }
  return static_cast<std::uint32_t>(crc);
}

std::vector<std::uint8_t> serialize_model(const ModelSpec& m) {
  validate(m);
  json graph = json::array();
  json directory = json::array();
  std::size_t offset = 0;
  std::vector<const Tensor*> order;
  for (const LayerNode& node : m.nodes) {
    graph.push_back({{"id", node.id}, {"kind", std::string(to_string(node.kind))}, {"inputs", node.inputs},
                     {"attrs", node_attrs(node)}});
    for (const auto& [name, t] : named_tensors(node)) {
      directory.push_back({{"name", name}, {"dims", t->dims()}, {"byteOffset", offset}});
      offset += t->size() * 4;
      order.push_back(t);
    }
  }
  json header;
  header["architectureName"] = m.architecture_name;
  header["inputSize"] = m.input_shape[1];
  header["inputShape"] = m.input_shape;
  header["classLabels"] = m.class_labels;
  header["preprocessing"] = {{"rescale", kRescale}, {"resize", "bilinear"}};
  header["graph"] = std::move(graph);
  header["tensors"] = std::move(directory);
  const std::string text = header.dump();

  std::vector<std::uint8_t> out;
  out.reserve(kModelPrefixSize + text.size() + offset + 4);
  for (std::uint8_t c : kMagic) out.push_back(c);
  put_u16(out, kModelFormatVersion);
  put_u32(out, static_cast<std::uint32_t>(text.size()));
  out.insert(out.end(), text.begin(), text.end());
  for (const Tensor* t : order) {
    for (float v : t->data()) put_u32(out, std::bit_cast<std::uint32_t>(v));
  }
  put_u32(out, crc32(out));
  return out;
}

ModelSpec deserialize_model(std::span<const std::uint8_t> bytes) {
  const Header h = read_frame(bytes);
  const auto payload = bytes.subspan(h.payload_offset, h.payload_size);
  ModelSpec m;
  try {
    const json& doc = h.doc;
    m.architecture_name = doc.at("architectureName").get<std::string>();
    const auto shape = doc.at("inputShape").get<std::vector<std::size_t>>();
    if (shape.size() != 3) throw ShapeError("inputShape must have three entries");
    m.input_shape = {shape[0], shape[1], shape[2]};
    m.class_labels = doc.at("classLabels").get<std::vector<std::string>>();

    std::unordered_map<std::string, Tensor> tensors;
    std::size_t expected = 0;
    for (const auto& entry : doc.at("tensors")) {
      const auto name = entry.at("name").get<std::string>();
      const auto dims = entry.at("dims").get<Shape>();
      const auto at = entry.at("byteOffset").get<std::size_t>();
      if (at != expected) {
        throw FormatError(FormatErrorKind::kInconsistent, h.payload_offset + at,
                          "tensor '" + name + "' is not contiguous with the previous one");
      }
      tensors.emplace(name, read_tensor(payload, at, dims, h.payload_offset));
      expected = at + shape_size(dims) * 4;
    }
    if (expected != payload.size()) {
      throw FormatError(FormatErrorKind::kInconsistent, h.payload_offset + expected,
                        "payload size does not match the tensor directory");
    }
    for (const auto& node : doc.at("graph")) {
      LayerNode n;
      n.id = node.at("id").get<std::string>();
      const auto kind = parse_layer_kind(node.at("kind").get<std::string>());
      if (!kind) throw ShapeError("unknown layer kind in node '" + n.id + "'");
      n.kind = *kind;
      n.inputs = node.at("inputs").get<std::vector<std::string>>();
      n.params = params_for(n.kind, node.at("attrs"), tensors, n.id);
      m.nodes.push_back(std::move(n));
    }
    if (!tensors.empty()) throw ShapeError("tensor '" + tensors.begin()->first + "' belongs to no node");
    validate(m);
  } catch (const FormatError&) {
    throw;
  } catch (const json::exception& e) {
    rethrow_as_format(e, kModelPrefixSize);
  } catch (const Error& e) {
    throw FormatError(FormatErrorKind::kInconsistent, kModelPrefixSize, e.what());
  }
  return m;
}

void save_model(const ModelSpec& m, const std::filesystem::path& path) {
  write_file_bytes(path, serialize_model(m));
}

ModelSpec load_model(const std::filesystem::path& path) { return deserialize_model(read_file_bytes(path)); }

ModelInfo model_info(std::span<const std::uint8_t> bytes) {
  const Header h = read_frame(bytes);
  try {
    return info_from_header(h, bytes.size());
  } catch (const json::exception& e) {
    rethrow_as_format(e, kModelPrefixSize);
  } catch (const Error& e) {
    rethrow_as_format(e, kModelPrefixSize);
  }
}

ModelInfo model_info(const std::filesystem::path& path) { return model_info(read_file_bytes(path)); }

std::string model_info_to_json(const ModelInfo& info) {
  nlohmann::ordered_json j;
  j["architectureName"] = info.architecture_name;
  j["inputSize"] = info.input_size;
  j["classLabels"] = info.class_labels;
  j["parameterCount"] = info.parameter_count;
  j["fileSize"] = info.file_size;
  j["formatVersion"] = info.format_version;
  j["preprocessing"] = {{"rescale", info.rescale}};
  return j.dump();
}

std::size_t copy_matching_weights(const ModelSpec& source, ModelSpec& target, const std::vector<std::string>& skip) {
  std::size_t copied = 0;
  for (LayerNode& node : target.nodes) {
    if (std::find(skip.begin(), skip.end(), node.id) != skip.end()) continue;
    const LayerNode* from = source.find(node.id);
    if (from == nullptr || from->kind != node.kind) continue;
    const auto src = named_tensors(*from);
    auto dst = named_tensors(node);
    if (src.size() != dst.size()) throw ShapeError("node '" + node.id + "' has a different parameter layout");
    for (std::size_t i = 0; i < dst.size(); ++i) {
      if (src[i].second->dims() != dst[i].second->dims()) {
        throw ShapeError("tensor '" + dst[i].first + "' shape differs between models");
      }
      *dst[i].second = *src[i].second;
      ++copied;
    }
  }
  return copied;
}

}  // namespace fusi
