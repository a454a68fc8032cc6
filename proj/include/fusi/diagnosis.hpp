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

// The inference-time decision: argmax over the head plus a confidence gate.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "fusi/graph.hpp"
#include "fusi/image.hpp"

namespace fusi {

inline constexpr double kDefaultThreshold = 0.70;
inline constexpr const char* kRetakeRecommendation = "Retake a clearer photo of the leaf";

struct Diagnosis {
  std::string label;
  std::size_t index = 0;
  double confidence = 0.0;
  std::vector<std::pair<std::string, double>> per_class;
  std::optional<std::string> recommendation;
};

/// Applies the decision rule to one probability row. The gate is inclusive:
/// confidence >= threshold carries no recommendation. Both sides are compared
/// at the model's float precision so a stored 0.70 is exactly "at least 70%".
Diagnosis diagnose_probabilities(std::span<const float> probs, const std::vector<std::string>& labels,
                                 double threshold = kDefaultThreshold);

/// Resizes to the model input, rescales by 1/255 and runs the full graph.
/// Pure over a shared model. Shape failures surface as InternalError.
Diagnosis classify(const ModelSpec& m, const RgbImage& img, double threshold = kDefaultThreshold);

/// As above from encoded bytes; decode failures surface as InputError.
Diagnosis classify_bytes(const ModelSpec& m, std::span<const std::uint8_t> bytes,
                         double threshold = kDefaultThreshold);

void check_threshold(double threshold);

}  // namespace fusi
