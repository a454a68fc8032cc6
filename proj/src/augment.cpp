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

#include "fusi/augment.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "fusi/error.hpp"

namespace fusi {

namespace {

double clampd(double v, double lo, double hi) { return std::min(std::max(v, lo), hi); }

std::uint8_t to_u8(double v) { return static_cast<std::uint8_t>(clampd(std::round(v), 0.0, 255.0)); }

/// Bilinear sample of channel c at (sx, sy); coordinates are clamped to the
/// image, which is the nearest-edge fill.
double sample(const RgbImage& img, double sx, double sy, std::size_t c) {
  sx = clampd(sx, 0.0, static_cast<double>(img.width - 1));
  sy = clampd(sy, 0.0, static_cast<double>(img.height - 1));
  const auto x0 = static_cast<std::size_t>(sx);
  const auto y0 = static_cast<std::size_t>(sy);
  const std::size_t x1 = std::min(x0 + 1, img.width - 1);
  const std::size_t y1 = std::min(y0 + 1, img.height - 1);
  const double fx = sx - static_cast<double>(x0);
  const double fy = sy - static_cast<double>(y0);
  const double top = img.at(y0, x0, c) * (1.0 - fx) + img.at(y0, x1, c) * fx;
  const double bottom = img.at(y1, x0, c) * (1.0 - fx) + img.at(y1, x1, c) * fx;
  return top * (1.0 - fy) + bottom * fy;
}

double source_coordinate(std::size_t dst, std::size_t in, std::size_t out) {
  const double scale = static_cast<double>(in) / static_cast<double>(out);
  return (static_cast<double>(dst) + 0.5) * scale - 0.5;
}

}  // namespace

AffineMatrix AffineMatrix::operator*(const AffineMatrix& o) const {
  const auto& l = m;
  const auto& r = o.m;
  return {{l[0] * r[0] + l[1] * r[3], l[0] * r[1] + l[1] * r[4], l[0] * r[2] + l[1] * r[5] + l[2],
           l[3] * r[0] + l[4] * r[3], l[3] * r[1] + l[4] * r[4], l[3] * r[2] + l[4] * r[5] + l[5]}};
}

AffineMatrix identity_matrix() { return {}; }

AffineMatrix zoom_matrix(double factor) {
  if (!(factor > 0.0)) throw TransformError("zoom factor must be positive");
  return {{1.0 / factor, 0, 0, 0, 1.0 / factor, 0}};
}

AffineMatrix shear_matrix(double shear) { return {{1, shear, 0, 0, 1, 0}}; }

AffineMatrix rotation_matrix(double degrees) {
  const double t = degrees * std::numbers::pi / 180.0;
  return {{std::cos(t), -std::sin(t), 0, std::sin(t), std::cos(t), 0}};
}

RgbImage horizontal_flip(const RgbImage& img) {
  RgbImage out(img.height, img.width);
  for (std::size_t y = 0; y < img.height; ++y) {
    for (std::size_t x = 0; x < img.width; ++x) {
      for (std::size_t c = 0; c < 3; ++c) out.at(y, img.width - 1 - x, c) = img.at(y, x, c);
    }
  }
  return out;
}

RgbImage affine_transform(const RgbImage& img, const AffineMatrix& matrix) {
  if (std::abs(matrix.determinant()) < 1e-9) throw TransformError("singular affine matrix");
  if (img.width == 0 || img.height == 0) throw TransformError("empty image");
  const auto& m = matrix.m;
  const double cx = (static_cast<double>(img.width) - 1.0) / 2.0;
  const double cy = (static_cast<double>(img.height) - 1.0) / 2.0;
  RgbImage out(img.height, img.width);
  for (std::size_t y = 0; y < img.height; ++y) {
    const double dy = static_cast<double>(y) - cy;
    for (std::size_t x = 0; x < img.width; ++x) {
      const double dx = static_cast<double>(x) - cx;
      const double sx = m[0] * dx + m[1] * dy + m[2] + cx;
      const double sy = m[3] * dx + m[4] * dy + m[5] + cy;
      for (std::size_t c = 0; c < 3; ++c) out.at(y, x, c) = to_u8(sample(img, sx, sy, c));
    }
  }
  return out;
}

RgbImage resize_bilinear(const RgbImage& img, std::size_t height, std::size_t width) {
  if (height == 0 || width == 0) throw TransformError("resize to an empty image");
  RgbImage out(height, width);
  for (std::size_t y = 0; y < height; ++y) {
    const double sy = source_coordinate(y, img.height, height);
    for (std::size_t x = 0; x < width; ++x) {
      const double sx = source_coordinate(x, img.width, width);
      for (std::size_t c = 0; c < 3; ++c) out.at(y, x, c) = to_u8(sample(img, sx, sy, c));
    }
  }
  return out;
}

CropWindow draw_crop_window(std::size_t height, std::size_t width, double fraction, Rng& rng) {
  if (!(fraction > 0.0 && fraction <= 1.0)) throw ConfigError("crop fraction must be in (0, 1]");
  CropWindow w;
  w.width = std::clamp<std::size_t>(static_cast<std::size_t>(std::lround(fraction * static_cast<double>(width))), 1, width);
  w.height = std::clamp<std::size_t>(static_cast<std::size_t>(std::lround(fraction * static_cast<double>(height))), 1, height);
  w.x = rng.below(width - w.width + 1);
  w.y = rng.below(height - w.height + 1);
  return w;
}

RgbImage crop_and_resize(const RgbImage& img, const CropWindow& window) {
  if (window.width == 0 || window.height == 0 || window.x + window.width > img.width ||
      window.y + window.height > img.height) {
    throw TransformError("crop window outside the image");
  }
  RgbImage crop(window.height, window.width);
  for (std::size_t y = 0; y < window.height; ++y) {
    const auto* src = img.pixels.data() + ((window.y + y) * img.width + window.x) * 3;
    std::copy_n(src, window.width * 3, crop.pixels.data() + y * window.width * 3);
  }
  return resize_bilinear(crop, img.height, img.width);
}

RgbImage random_crop(const RgbImage& img, double fraction, Rng& rng) {
  return crop_and_resize(img, draw_crop_window(img.height, img.width, fraction, rng));
}

void validate(const AugmentationConfig& cfg) {
  if (!(cfg.zoom_range >= 0.0 && cfg.zoom_range < 1.0)) throw ConfigError("zoom range must be in [0, 1)");
  if (!(cfg.shear_range >= 0.0 && cfg.shear_range < 1.0)) throw ConfigError("shear range must be in [0, 1)");
  if (!(cfg.crop_fraction > 0.0 && cfg.crop_fraction <= 1.0)) throw ConfigError("crop fraction must be in (0, 1]");
  if (!(cfg.rescale > 0.0)) throw ConfigError("rescale must be positive");
}

std::vector<AugmentedImage> augment(const RgbImage& img, const AugmentationConfig& cfg, Rng& rng,
                                    std::uint64_t source_id) {
  validate(cfg);
  std::vector<AugmentedImage> out;
  out.reserve(cfg.per_image_variants);
  for (std::size_t v = 0; v < cfg.per_image_variants; ++v) {
    AugmentationLineage lin;
    lin.source_id = source_id;
    lin.variant = v;
    lin.flipped = cfg.horizontal_flip && rng.uniform() < 0.5;
    lin.zoom = rng.uniform(1.0 - cfg.zoom_range, 1.0 + cfg.zoom_range);
    lin.shear = rng.uniform(-cfg.shear_range, cfg.shear_range);
    const std::array<double, 3> angles{cfg.rotation_pair[0], cfg.rotation_pair[1], 0.0};
    lin.rotation_degrees = angles[rng.below(angles.size())];
    lin.crop = draw_crop_window(img.height, img.width, cfg.crop_fraction, rng);

    const AffineMatrix warp = rotation_matrix(lin.rotation_degrees) * shear_matrix(lin.shear) * zoom_matrix(lin.zoom);
    RgbImage pixels = affine_transform(img, warp);
    if (lin.flipped) pixels = horizontal_flip(pixels);
    pixels = crop_and_resize(pixels, lin.crop);
    out.push_back({std::move(pixels), lin});
  }
  return out;
}

Tensor rescale(const RgbImage& img, double rescale_factor) {
  Tensor out({3, img.height, img.width});
  const std::size_t plane = img.height * img.width;
  for (std::size_t i = 0; i < plane; ++i) {
    for (std::size_t c = 0; c < 3; ++c) out[c * plane + i] = static_cast<float>(img.pixels[i * 3 + c] * rescale_factor);
  }
  return out;
}

Tensor to_chw_tensor(const RgbImage& img, std::size_t size, double rescale_factor) {
  if (img.height == size && img.width == size) return rescale(img, rescale_factor);
  Tensor out({3, size, size});
  const std::size_t plane = size * size;
  for (std::size_t y = 0; y < size; ++y) {
    const double sy = source_coordinate(y, img.height, size);
    for (std::size_t x = 0; x < size; ++x) {
      const double sx = source_coordinate(x, img.width, size);
      for (std::size_t c = 0; c < 3; ++c) {
        out[c * plane + y * size + x] = static_cast<float>(sample(img, sx, sy, c) * rescale_factor);
      }
    }
  }
  return out;
}

Tensor to_model_input(const std::vector<const RgbImage*>& images, std::size_t size, double rescale_factor) {
  if (images.empty()) throw ShapeError("no images to stack");
  const std::size_t per = 3 * size * size;
  std::vector<float> data;
  data.reserve(images.size() * per);
  for (const RgbImage* img : images) {
    const Tensor t = to_chw_tensor(*img, size, rescale_factor);
    data.insert(data.end(), t.data().begin(), t.data().end());
  }
  return Tensor({images.size(), 3, size, size}, std::move(data));
}

Tensor to_model_input(const RgbImage& image, std::size_t size, double rescale_factor) {
  return to_model_input(std::vector<const RgbImage*>{&image}, size, rescale_factor);
}

}  // namespace fusi
