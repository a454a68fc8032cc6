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

#include "fusi/diagnosis.hpp"

#include <cmath>

#include "fusi/augment.hpp"
#include "fusi/error.hpp"
#include "fusi/tensor.hpp"

namespace fusi {

void check_threshold(double threshold) {
  if (!std::isfinite(threshold) || threshold < 0.0 || threshold > 1.0) {
    throw ConfigError("threshold must be within [0, 1]");
  }
}

Diagnosis diagnose_probabilities(std::span<const float> probs, const std::vector<std::string>& labels,
                                 double threshold) {
  check_threshold(threshold);
  if (probs.size() != labels.size()) {
    throw InternalError("model produced " + std::to_string(probs.size()) + " probabilities for " +
                        std::to_string(labels.size()) + " labels");
  }
  Diagnosis d;
  d.index = argmax(probs);
  d.label = labels[d.index];
  d.confidence = probs[d.index];
  d.per_class.reserve(probs.size());
  for (std::size_t i = 0; i < probs.size(); ++i) d.per_class.emplace_back(labels[i], probs[i]);
  if (!(probs[d.index] >= static_cast<float>(threshold))) d.recommendation = kRetakeRecommendation;
  return d;
}

Diagnosis classify(const ModelSpec& m, const RgbImage& img, double threshold) {
  check_threshold(threshold);
  Tensor probs;
  try {
    probs = forward(m, to_model_input(img, m.input_size()));
  } catch (const ShapeError& e) {
    throw InternalError(std::string("inference failed: ") + e.what());
  }
  if (probs.rank() != 2 || probs.dim(0) != 1) throw InternalError("unexpected output shape " + shape_to_string(probs.dims()));
  return diagnose_probabilities(probs.data(), m.class_labels, threshold);
}

Diagnosis classify_bytes(const ModelSpec& m, std::span<const std::uint8_t> bytes, double threshold) {
  check_threshold(threshold);
  RgbImage img;
  try {
    img = decode_image(bytes);
  } catch (const Error& e) {
    throw InputError(std::string("cannot decode image: ") + e.what());
  }
  return classify(m, img, threshold);
}

}  // namespace fusi
