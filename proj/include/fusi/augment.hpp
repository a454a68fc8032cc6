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

// Label-preserving geometric augmentation. All resampling is bilinear with
// nearest-edge fill, and output images keep the input size.

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "fusi/image.hpp"
#include "fusi/rng.hpp"
#include "fusi/tensor.hpp"

namespace fusi {

/// Destination-to-source map in pixel coordinates centred on the image
/// centre: src - c = [a b; c d] (dst - c) + (tx, ty).
struct AffineMatrix {
  std::array<double, 6> m{1, 0, 0, 0, 1, 0};  // a, b, tx, c, d, ty

  double determinant() const { return m[0] * m[4] - m[1] * m[3]; }
  /// Linear parts composed as this * other; translations compose accordingly.
  AffineMatrix operator*(const AffineMatrix& other) const;
};

AffineMatrix identity_matrix();
/// Samples the source at dst / factor, so factor > 1 magnifies.
AffineMatrix zoom_matrix(double factor);
AffineMatrix shear_matrix(double shear);
AffineMatrix rotation_matrix(double degrees);

RgbImage horizontal_flip(const RgbImage& img);

/// Throws TransformError when |det| < 1e-9.
RgbImage affine_transform(const RgbImage& img, const AffineMatrix& matrix);

/// Resize with pixel-centre alignment; same-size resize is exact.
RgbImage resize_bilinear(const RgbImage& img, std::size_t height, std::size_t width);

struct CropWindow {
  std::size_t x = 0;
  std::size_t y = 0;
  std::size_t width = 0;
  std::size_t height = 0;

  friend bool operator==(const CropWindow&, const CropWindow&) = default;
};

/// Window of round(fraction * size) pixels per side at an rng-chosen offset.
CropWindow draw_crop_window(std::size_t height, std::size_t width, double fraction, Rng& rng);
/// Crops the window and resizes back to the original size.
RgbImage crop_and_resize(const RgbImage& img, const CropWindow& window);
RgbImage random_crop(const RgbImage& img, double fraction, Rng& rng);

struct AugmentationConfig {
  bool horizontal_flip = true;
  double zoom_range = 0.2;
  double shear_range = 0.1;
  std::array<double, 2> rotation_pair{20.0, -20.0};
  double crop_fraction = 0.9;
  double rescale = 1.0 / 255.0;
  std::size_t per_image_variants = 5;
};

/// Throws ConfigError on out-of-range fields.
void validate(const AugmentationConfig& cfg);

/// The parameters one augmentation draw used, recorded per variant.
struct AugmentationLineage {
  std::uint64_t source_id = 0;
  std::size_t variant = 0;
  bool flipped = false;
  double zoom = 1.0;
  double shear = 0.0;
  double rotation_degrees = 0.0;
  CropWindow crop;

  friend bool operator==(const AugmentationLineage&, const AugmentationLineage&) = default;
};

struct AugmentedImage {
  RgbImage pixels;
  AugmentationLineage lineage;
};

/// Draws cfg.per_image_variants variants. Each draw: rotation(r) * shear(s) *
/// zoom(z) affine warp, optional horizontal flip, crop back to full size.
std::vector<AugmentedImage> augment(const RgbImage& img, const AugmentationConfig& cfg, Rng& rng,
                                    std::uint64_t source_id = 0);

/// Float bilinear resize to size x size, value / 255, CHW. Same-size input is
/// passed through without resampling.
Tensor to_chw_tensor(const RgbImage& img, std::size_t size, double rescale_factor = 1.0 / 255.0);

/// Stacks images into [N, 3, size, size], in list order.
Tensor to_model_input(const std::vector<const RgbImage*>& images, std::size_t size,
                      double rescale_factor = 1.0 / 255.0);
Tensor to_model_input(const RgbImage& image, std::size_t size, double rescale_factor = 1.0 / 255.0);

/// [3, H, W] with value / 255, no resizing.
Tensor rescale(const RgbImage& img, double rescale_factor = 1.0 / 255.0);

}  // namespace fusi
