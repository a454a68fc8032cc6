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

// On-disk deployment artifact.
//
//   offset  size  field
//   0       4     magic "FUSI"
//   4       2     format version, u16 little-endian
//   6       4     header length L, u32 little-endian
//   10      L     header, UTF-8 JSON with sorted keys
//   10+L    P     payload: tensors as little-endian f32, in directory order
//   10+L+P  4     CRC-32 (IEEE) of bytes [0, 10+L+P), u32 little-endian
//
// Directory offsets in the header are relative to the start of the payload.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "fusi/graph.hpp"

namespace fusi {

inline constexpr std::uint16_t kModelFormatVersion = 1;
inline constexpr std::size_t kModelPrefixSize = 10;

std::uint32_t crc32(std::span<const std::uint8_t> bytes);

std::vector<std::uint8_t> serialize_model(const ModelSpec& m);
/// Throws FormatError naming the failure kind and byte offset.
ModelSpec deserialize_model(std::span<const std::uint8_t> bytes);

void save_model(const ModelSpec& m, const std::filesystem::path& path);
ModelSpec load_model(const std::filesystem::path& path);

struct ModelInfo {
  std::string architecture_name;
  std::size_t input_size = 0;
  std::vector<std::string> class_labels;
  std::size_t parameter_count = 0;
  std::uint64_t file_size = 0;
  std::uint16_t format_version = 0;
  double rescale = 0.0;
};

ModelInfo model_info(const std::filesystem::path& path);
ModelInfo model_info(std::span<const std::uint8_t> bytes);
std::string model_info_to_json(const ModelInfo& info);

/// Copies every weight tensor of `source` into the node with the same id in
/// `target`, except the nodes listed in `skip`. Returns the number of tensors
/// copied; shapes must agree.
std::size_t copy_matching_weights(const ModelSpec& source, ModelSpec& target,
                                  const std::vector<std::string>& skip = {});

}  // namespace fusi
