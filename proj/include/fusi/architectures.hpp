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
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "fusi/graph.hpp"

namespace fusi {

/// Canonical label strings in class-code order.
std::vector<std::string> default_class_labels(std::size_t num_classes);

enum class TinyPreset { kResidual, kInception };

/// Weights are He-normal (std = sqrt(2 / fan_in)), biases zero, batch-norm
/// gamma = 1, beta = 0, moving mean 0, moving variance 1.
struct InitOptions {
  std::uint64_t seed = 0;
  /// Skip random initialization and leave every weight at zero. Useful when
  /// weights are about to be loaded from a file.
  bool zero_weights = false;
};

/// ResNet-152 with v1.5 bottlenecks (stride on the 3x3), stages (3, 8, 36, 3).
ModelSpec build_resnet152(std::size_t num_classes, std::size_t input_size = 224, InitOptions init = {});

/// Inception-v3 without the auxiliary classifier.
ModelSpec build_inception_v3(std::size_t num_classes, std::size_t input_size = 299, InitOptions init = {});

/// Desk-scale stand-ins: two bottleneck blocks or two Inception-A blocks.
ModelSpec build_tiny(TinyPreset preset, std::size_t num_classes, std::size_t input_size = 32,
                     InitOptions init = {});

/// Dispatch by name: resnet152, inceptionv3, tiny-residual, tiny-inception.
/// `input_size` 0 selects the architecture's default.
ModelSpec build_architecture(std::string_view name, std::size_t num_classes, std::size_t input_size = 0,
                             InitOptions init = {});
std::size_t default_input_size(std::string_view name);
bool is_known_architecture(std::string_view name);

/// Conv and dense layers on the main path; residual projection shortcuts are
/// not counted.
std::size_t count_weighted_layers(const ModelSpec& m);

/// True for ids that name a residual projection shortcut convolution.
bool is_projection_shortcut(std::string_view id);

}  // namespace fusi
