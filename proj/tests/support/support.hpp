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

// Fixtures shared by the unit suites and the acceptance runner.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "fusi/dataset.hpp"
#include "fusi/graph.hpp"
#include "fusi/rng.hpp"
#include "fusi/tensor.hpp"

namespace fusi::testing {

Tensor random_tensor(const Shape& dims, Rng& rng, double lo = -1.0, double hi = 1.0);

/// Class-colored noise: each class has a dominant channel, every pixel is that
/// base color plus uniform noise of +-40. Linearly separable by mean color.
std::vector<LabeledImage> color_noise_dataset(std::size_t per_class, std::size_t size, std::uint64_t seed);

/// Writes images as PNG under root/<class dir>/img_<i>.png.
void write_dataset_dir(const std::filesystem::path& root, const std::vector<LabeledImage>& images);

/// All pixels drawn uniformly from [0, 255].
RgbImage noise_image(std::size_t height, std::size_t width, Rng& rng);

/// Input-independent classifier: global average pool, a dense layer with zero
/// weights and bias [b, 0, 0], softmax. The bias is searched over adjacent
/// floats until the first class's probability is exactly float(target), so
/// threshold boundaries can be hit without rounding slop.
ModelSpec probe_model(double target_confidence, std::size_t input_size = 8);

/// Fresh empty directory under the system temp dir.
std::filesystem::path temp_dir(const std::string& tag);

}  // namespace fusi::testing

namespace fusi::testing {

struct OverfitOutcome {
  double train_accuracy = 0.0;
  double seconds = 0.0;
  std::vector<double> epoch_losses;
  bool smoothed_loss_decreasing = false;
};

/// Frozen random tiny-residual backbone, head trained for 30 epochs on 20
/// color-noise images per class (all in the training split). Batch 8 at the
/// default learning rate 0.001: with batch 32 the 60 images give only 60
/// updates in total, too few for the head to leave its initialization.
OverfitOutcome run_overfit_oracle(std::uint64_t seed);

/// True when every 5-epoch trailing mean is <= the previous one.
bool smoothed_non_increasing(const std::vector<double>& values, std::size_t window = 5);

}  // namespace fusi::testing
