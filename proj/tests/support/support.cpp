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

#include "support.hpp"

#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>

#include "fusi/architectures.hpp"
#include "fusi/augment.hpp"
#include "fusi/image.hpp"

namespace fusi::testing {

namespace fs = std::filesystem;

Tensor random_tensor(const Shape& dims, Rng& rng, double lo, double hi) {
  Tensor t(dims);
  for (float& v : t.data()) v = static_cast<float>(rng.uniform(lo, hi));
  return t;
}

std::vector<LabeledImage> color_noise_dataset(std::size_t per_class, std::size_t size, std::uint64_t seed) {
  static constexpr int kBase[3][3] = {{200, 40, 40}, {40, 200, 40}, {40, 40, 200}};
  Rng rng(seed);
  std::vector<LabeledImage> out;
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    for (std::size_t i = 0; i < per_class; ++i) {
      LabeledImage img;
      img.pixels = RgbImage(size, size);
      for (std::size_t p = 0; p < img.pixels.pixels.size(); ++p) {
        const int v = kBase[c][p % 3] + static_cast<int>(rng.below(81)) - 40;
        img.pixels.pixels[p] = static_cast<std::uint8_t>(std::clamp(v, 0, 255));
      }
      img.label = class_from_code(c);
      img.source_path = std::string(directory_name(img.label)) + "/img_" + std::to_string(i) + ".png";
      out.push_back(std::move(img));
    }
  }
  return out;
}

void write_dataset_dir(const fs::path& root, const std::vector<LabeledImage>& images) {
  for (std::size_t c = 0; c < kNumClasses; ++c) fs::create_directories(root / directory_name(class_from_code(c)));
  std::size_t i = 0;
  for (const auto& img : images) {
    char name[32];
    std::snprintf(name, sizeof name, "img_%04zu.png", i++);
    write_image(root / directory_name(img.label) / name, img.pixels);
  }
}

RgbImage noise_image(std::size_t height, std::size_t width, Rng& rng) {
  RgbImage img(height, width);
  for (auto& p : img.pixels) p = static_cast<std::uint8_t>(rng.below(256));
  return img;
}

ModelSpec probe_model(double target_confidence, std::size_t input_size) {
  ModelSpec m;
  m.architecture_name = "probe";
  m.input_shape = {3, input_size, input_size};
  m.class_labels = default_class_labels(3);
  m.nodes.push_back({"avg_pool", LayerKind::kGlobalAvgPool, std::monostate{}, {std::string(kInputId)}});
  DenseParams head;
  head.weights = Tensor({3, 3});
  head.bias = Tensor({3});
  m.nodes.push_back({"predictions", LayerKind::kDense, head, {"avg_pool"}});
  m.nodes.push_back({"probabilities", LayerKind::kSoftmax, std::monostate{}, {"predictions"}});

  const float want = static_cast<float>(target_confidence);
  auto& bias = std::get<DenseParams>(m.nodes[1].params).bias;
  // p = e^L / (e^L + 2) for logits [L, 0, 0].
  float logit = static_cast<float>(std::log(2.0 * target_confidence / (1.0 - target_confidence)));
  const Tensor x({1, 3, input_size, input_size});
  for (int step = 0; step < 256; ++step) {
    bias[0] = logit;
    const float got = forward(m, x)[0];
    if (got == want) return m;
    logit = std::nextafter(logit, got < want ? std::numeric_limits<float>::infinity()
                                              : -std::numeric_limits<float>::infinity());
  }
  throw std::runtime_error("no float logit reproduces the requested confidence");
}

fs::path temp_dir(const std::string& tag) {
  static std::uint64_t counter = 0;
  const fs::path dir = fs::temp_directory_path() /
                       ("fusi_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace fusi::testing

#include <chrono>

#include "fusi/training.hpp"

namespace fusi::testing {

bool smoothed_non_increasing(const std::vector<double>& values, std::size_t window) {
  if (values.size() < window) return true;
  double prev = INFINITY;
  for (std::size_t end = window; end <= values.size(); ++end) {
    double mean = 0.0;
    for (std::size_t i = end - window; i < end; ++i) mean += values[i];
    mean /= static_cast<double>(window);
    if (mean > prev) return false;
    prev = mean;
  }
  return true;
}

OverfitOutcome run_overfit_oracle(std::uint64_t seed) {
  const auto t0 = std::chrono::steady_clock::now();
  AugmentationConfig aug;
  aug.per_image_variants = 0;
  const Dataset data = prepare_dataset(color_noise_dataset(20, 32, seed), aug, {1.0, 0.0, 0.0}, seed, false);
  ModelSpec model = build_tiny(TinyPreset::kResidual, 3, 32, {.seed = seed});
  TrainingConfig cfg;
  cfg.epochs = 30;
  cfg.batch_size = 8;
  cfg.seed = seed;
  const TrainingReport report = transfer_train(model, data, cfg);
  OverfitOutcome out;
  out.train_accuracy = evaluate(model, data, Split::kTrain).accuracy;
  out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  for (const auto& e : report.per_epoch) out.epoch_losses.push_back(e.train_loss);
  out.smoothed_loss_decreasing = smoothed_non_increasing(out.epoch_losses);
  return out;
}

}  // namespace fusi::testing
