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
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace fusi {

/// 8-bit RGB pixels, row-major HWC.
struct RgbImage {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<std::uint8_t> pixels;

  RgbImage() = default;
  RgbImage(std::size_t h, std::size_t w, std::uint8_t fill = 0);

  std::uint8_t& at(std::size_t y, std::size_t x, std::size_t c) { return pixels[(y * width + x) * 3 + c]; }
  std::uint8_t at(std::size_t y, std::size_t x, std::size_t c) const { return pixels[(y * width + x) * 3 + c]; }

  friend bool operator==(const RgbImage&, const RgbImage&) = default;
};

enum class ClassLabel : std::uint8_t {
  kBlackSigatoka = 0,
  kFusariumWiltRace1 = 1,
  kHealthy = 2,
};

inline constexpr std::size_t kNumClasses = 3;

/// Directory name, e.g. "black_sigatoka".
std::string_view directory_name(ClassLabel label);
/// Human readable, e.g. "Black Sigatoka".
std::string_view display_name(ClassLabel label);
std::optional<ClassLabel> parse_class_label(std::string_view directory);
ClassLabel class_from_code(std::size_t code);
inline std::size_t class_code(ClassLabel label) { return static_cast<std::size_t>(label); }

enum class ImageCodec { kPng, kJpeg, kPpm };

/// Detects the codec from the leading bytes.
std::optional<ImageCodec> sniff_codec(std::span<const std::uint8_t> bytes);

/// Decodes PNG, baseline JPEG, or binary PPM (P6, maxval 255) to RGB.
/// Throws DecodeError.
RgbImage decode_image(std::span<const std::uint8_t> bytes);

std::vector<std::uint8_t> encode_png(const RgbImage& img);
std::vector<std::uint8_t> encode_jpeg(const RgbImage& img, int quality = 95);
std::vector<std::uint8_t> encode_ppm(const RgbImage& img);

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

RgbImage read_image(const std::filesystem::path& path);
/// Codec chosen from the extension (.png, .jpg/.jpeg, .ppm).
void write_image(const std::filesystem::path& path, const RgbImage& img);

}  // namespace fusi
