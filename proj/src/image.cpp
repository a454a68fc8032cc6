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

#include "fusi/image.hpp"

#include <png.h>
// clang-format off
#include <cstdio>
#include <jpeglib.h>
// clang-format on

#include <algorithm>
#include <array>
#include <csetjmp>
#include <cstring>
#include <fstream>
#include <iterator>

#include "fusi/error.hpp"

namespace fusi {

namespace {

constexpr std::array<std::pair<ClassLabel, std::string_view>, 3> kDirectoryNames{{
    {ClassLabel::kBlackSigatoka, "black_sigatoka"},
    {ClassLabel::kFusariumWiltRace1, "fusarium_wilt_race1"},
    {ClassLabel::kHealthy, "healthy"},
}};

constexpr std::size_t kMaxDimension = 1u << 15;
// Bounds the allocation a small compressed file can demand.
constexpr std::size_t kMaxPixels = std::size_t{1} << 26;

bool dims_ok(std::size_t height, std::size_t width) {
  return height > 0 && width > 0 && height <= kMaxDimension && width <= kMaxDimension &&
         height * width <= kMaxPixels;
}

RgbImage decode_png(std::span<const std::uint8_t> bytes) {
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  if (png_image_begin_read_from_memory(&image, bytes.data(), bytes.size()) == 0) {
    throw DecodeError(std::string("png: ") + image.message);
  }
  image.format = PNG_FORMAT_RGB;
  if (!dims_ok(image.height, image.width)) {
    png_image_free(&image);
    throw DecodeError("png: unsupported dimensions");
  }
  RgbImage out(image.height, image.width);
  if (png_image_finish_read(&image, nullptr, out.pixels.data(), 0, nullptr) == 0) {
    const std::string msg = image.message;
    png_image_free(&image);
    throw DecodeError("png: " + msg);
  }
  return out;
}

struct JpegErrorManager {
  jpeg_error_mgr base;
  std::jmp_buf jump;
  char message[JMSG_LENGTH_MAX];
};

void jpeg_error_exit(j_common_ptr info) {
  auto* err = reinterpret_cast<JpegErrorManager*>(info->err);
  (*info->err->format_message)(info, err->message);
  std::longjmp(err->jump, 1);
}

void jpeg_silent(j_common_ptr, int) {}

// Plain C-style frame: nothing with a destructor lives here across setjmp.
bool decode_jpeg_into(std::span<const std::uint8_t> bytes, std::vector<std::uint8_t>& pixels,
                      std::size_t& height, std::size_t& width, char* message) {
  jpeg_decompress_struct info;
  JpegErrorManager err;
  info.err = jpeg_std_error(&err.base);
  err.base.error_exit = jpeg_error_exit;
  err.base.emit_message = jpeg_silent;
  if (setjmp(err.jump)) {
    std::strncpy(message, err.message, JMSG_LENGTH_MAX);
    jpeg_destroy_decompress(&info);
    return false;
  }
  jpeg_create_decompress(&info);
  jpeg_mem_src(&info, bytes.data(), static_cast<unsigned long>(bytes.size()));
  jpeg_read_header(&info, TRUE);
  info.out_color_space = JCS_RGB;
  jpeg_start_decompress(&info);
  if (info.output_components != 3 || !dims_ok(info.output_height, info.output_width)) {
    std::strncpy(message, "unsupported jpeg layout", JMSG_LENGTH_MAX);
    jpeg_destroy_decompress(&info);
    return false;
  }
  height = info.output_height;
  width = info.output_width;
  pixels.resize(height * width * 3);
  while (info.output_scanline < info.output_height) {
    JSAMPROW row = pixels.data() + static_cast<std::size_t>(info.output_scanline) * width * 3;
    jpeg_read_scanlines(&info, &row, 1);
  }
  jpeg_finish_decompress(&info);
  jpeg_destroy_decompress(&info);
  return true;
}

RgbImage decode_jpeg(std::span<const std::uint8_t> bytes) {
  RgbImage out;
  char message[JMSG_LENGTH_MAX] = {};
  if (!decode_jpeg_into(bytes, out.pixels, out.height, out.width, message)) {
    throw DecodeError(std::string("jpeg: ") + message);
  }
  return out;
}

bool encode_jpeg_into(const RgbImage& img, int quality, unsigned char** buffer, unsigned long* size) {
  jpeg_compress_struct info;
  JpegErrorManager err;
  info.err = jpeg_std_error(&err.base);
  err.base.error_exit = jpeg_error_exit;
  if (setjmp(err.jump)) {
    jpeg_destroy_compress(&info);
    return false;
  }
  jpeg_create_compress(&info);
  jpeg_mem_dest(&info, buffer, size);
  info.image_width = static_cast<JDIMENSION>(img.width);
  info.image_height = static_cast<JDIMENSION>(img.height);
  info.input_components = 3;
  info.in_color_space = JCS_RGB;
  jpeg_set_defaults(&info);
  jpeg_set_quality(&info, quality, TRUE);
  jpeg_start_compress(&info, TRUE);
  while (info.next_scanline < info.image_height) {
    auto* row = const_cast<JSAMPROW>(img.pixels.data() + static_cast<std::size_t>(info.next_scanline) * img.width * 3);
    jpeg_write_scanlines(&info, &row, 1);
  }
  jpeg_finish_compress(&info);
  jpeg_destroy_compress(&info);
  return true;
}

// Reads one whitespace-separated unsigned integer from a PPM header,
// skipping '#' comments.
std::size_t ppm_number(std::span<const std::uint8_t> bytes, std::size_t& pos) {
  while (pos < bytes.size()) {
    if (bytes[pos] == '#') {
      while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
    } else if (std::isspace(bytes[pos]) != 0) {
      ++pos;
    } else {
      break;
    }
  }
  std::size_t value = 0;
  std::size_t digits = 0;
  while (pos < bytes.size() && bytes[pos] >= '0' && bytes[pos] <= '9') {
    value = value * 10 + (bytes[pos] - '0');
    if (++digits > 6) throw DecodeError("ppm: header number too large");
    ++pos;
  }
  if (digits == 0) throw DecodeError("ppm: malformed header");
  return value;
}

RgbImage decode_ppm(std::span<const std::uint8_t> bytes) {
  std::size_t pos = 2;
  const std::size_t width = ppm_number(bytes, pos);
  const std::size_t height = ppm_number(bytes, pos);
  const std::size_t maxval = ppm_number(bytes, pos);
  if (maxval != 255) throw DecodeError("ppm: only maxval 255 is supported");
  if (!dims_ok(height, width)) {
    throw DecodeError("ppm: unsupported dimensions");
  }
  if (pos >= bytes.size() || std::isspace(bytes[pos]) == 0) throw DecodeError("ppm: malformed header");
  ++pos;
  const std::size_t need = width * height * 3;
  if (bytes.size() - pos < need) throw DecodeError("ppm: truncated pixel data");
  RgbImage out(height, width);
  std::copy_n(bytes.begin() + static_cast<std::ptrdiff_t>(pos), need, out.pixels.begin());
  return out;
}

}  // namespace

RgbImage::RgbImage(std::size_t h, std::size_t w, std::uint8_t fill) : height(h), width(w), pixels(h * w * 3, fill) {}

std::string_view directory_name(ClassLabel label) {
  for (const auto& [l, name] : kDirectoryNames) {
    if (l == label) return name;
  }
  return "unknown";
}

std::string_view display_name(ClassLabel label) {
  switch (label) {
    case ClassLabel::kBlackSigatoka:
      return "Black Sigatoka";
    case ClassLabel::kFusariumWiltRace1:
      return "Fusarium wilt race 1";
    case ClassLabel::kHealthy:
      return "Healthy";
  }
  return "Unknown";
}

std::optional<ClassLabel> parse_class_label(std::string_view directory) {
  for (const auto& [l, name] : kDirectoryNames) {
    if (name == directory) return l;
  }
  return std::nullopt;
}

ClassLabel class_from_code(std::size_t code) {
  if (code >= kNumClasses) throw LabelError("class code " + std::to_string(code) + " out of range");
  return static_cast<ClassLabel>(code);
}

std::optional<ImageCodec> sniff_codec(std::span<const std::uint8_t> bytes) {
  static constexpr std::array<std::uint8_t, 8> kPngSig{0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
  if (bytes.size() >= 8 && std::equal(kPngSig.begin(), kPngSig.end(), bytes.begin())) return ImageCodec::kPng;
  if (bytes.size() >= 3 && bytes[0] == 0xFF && bytes[1] == 0xD8 && bytes[2] == 0xFF) return ImageCodec::kJpeg;
  if (bytes.size() >= 3 && bytes[0] == 'P' && bytes[1] == '6' && std::isspace(bytes[2]) != 0) return ImageCodec::kPpm;
  return std::nullopt;
}

RgbImage decode_image(std::span<const std::uint8_t> bytes) {
  const auto codec = sniff_codec(bytes);
  if (!codec) throw DecodeError("unrecognized image format");
  switch (*codec) {
    case ImageCodec::kPng:
      return decode_png(bytes);
    case ImageCodec::kJpeg:
      return decode_jpeg(bytes);
    case ImageCodec::kPpm:
      return decode_ppm(bytes);
  }
  throw DecodeError("unrecognized image format");
}

std::vector<std::uint8_t> encode_png(const RgbImage& img) {
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(img.width);
  image.height = static_cast<png_uint_32>(img.height);
  image.format = PNG_FORMAT_RGB;
  png_alloc_size_t size = 0;
  if (png_image_write_to_memory(&image, nullptr, &size, 0, img.pixels.data(), 0, nullptr) == 0) {
    throw DecodeError(std::string("png encode: ") + image.message);
  }
  std::vector<std::uint8_t> out(size);
  if (png_image_write_to_memory(&image, out.data(), &size, 0, img.pixels.data(), 0, nullptr) == 0) {
    throw DecodeError(std::string("png encode: ") + image.message);
  }
  out.resize(size);
  return out;
}

std::vector<std::uint8_t> encode_jpeg(const RgbImage& img, int quality) {
  unsigned char* buffer = nullptr;
  unsigned long size = 0;
  const bool ok = encode_jpeg_into(img, quality, &buffer, &size);
  std::vector<std::uint8_t> out;
  if (ok) out.assign(buffer, buffer + size);
  std::free(buffer);
  if (!ok) throw DecodeError("jpeg encode failed");
  return out;
}

std::vector<std::uint8_t> encode_ppm(const RgbImage& img) {
  const std::string header = "P6\n" + std::to_string(img.width) + " " + std::to_string(img.height) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.insert(out.end(), img.pixels.begin(), img.pixels.end());
  return out;
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DataError("short write to " + path.string());
}

RgbImage read_image(const std::filesystem::path& path) { return decode_image(read_file_bytes(path)); }

void write_image(const std::filesystem::path& path, const RgbImage& img) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  if (ext == ".png") {
    write_file_bytes(path, encode_png(img));
  } else if (ext == ".jpg" || ext == ".jpeg") {
    write_file_bytes(path, encode_jpeg(img));
  } else if (ext == ".ppm") {
    write_file_bytes(path, encode_ppm(img));
  } else {
    throw DataError("no encoder for extension '" + ext + "'");
  }
}

}  // namespace fusi
