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

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "fusi/augment.hpp"
#include "fusi/image.hpp"

namespace fusi {

struct LabeledImage {
  RgbImage pixels;
  ClassLabel label = ClassLabel::kBlackSigatoka;
  std::string source_path;
  std::optional<AugmentationLineage> lineage;
};

struct SkippedFile {
  std::string path;
  std::string reason;
};

struct LoadResult {
  std::vector<LabeledImage> images;
  std::vector<SkippedFile> skipped;
};

/// Reads `<root>/{black_sigatoka,fusarium_wilt_race1,healthy}/*.{png,jpg,jpeg,ppm}`
/// in class-code order, files sorted lexicographically within each class.
/// Throws LayoutError when a class directory is missing; undecodable files
/// are reported in `skipped`.
LoadResult load_directory_dataset(const std::filesystem::path& root);

struct SplitRatios {
  double train = 0.80;
  double validation = 0.15;
  double test = 0.05;
};

/// Parses "0.8,0.15,0.05".
SplitRatios parse_split_ratios(const std::string& text);

enum class Split { kTrain, kValidation, kTest };
const char* to_string(Split split);

struct ManifestEntry {
  std::uint64_t image_id = 0;
  std::string source_path;
  ClassLabel label = ClassLabel::kBlackSigatoka;
  Split split = Split::kTrain;
  std::optional<AugmentationLineage> lineage;
};

struct SplitCounts {
  std::size_t train = 0;
  std::size_t validation = 0;
  std::size_t test = 0;

  friend bool operator==(const SplitCounts&, const SplitCounts&) = default;
};

struct DatasetManifest {
  std::vector<ManifestEntry> entries;
  std::uint64_t seed = 0;

  SplitCounts counts() const;
  /// counts()[class code] per split.
  std::array<SplitCounts, kNumClasses> counts_by_class() const;
  std::vector<std::size_t> indices(Split split) const;
};

/// Train gets floor(train * n), validation floor(validation * n), test the
/// remainder.
SplitCounts split_sizes(std::size_t n, const SplitRatios& ratios);

/// Fisher-Yates shuffle driven by `seed`, then the split_sizes allocation
/// over the shuffled order. Entries keep their ids; their order in the
/// manifest follows the shuffle.
DatasetManifest shuffle_split(std::vector<ManifestEntry> entries, const SplitRatios& ratios, std::uint64_t seed);

/// Stable key order: seed, counts, entries; each entry has imageId,
/// sourcePath, label, split, lineage.
std::string manifest_to_json(const DatasetManifest& manifest);
DatasetManifest manifest_from_json(const std::string& text);

/// Manifest plus the pixels for each entry; images[i] belongs to
/// manifest.entries[i].
struct Dataset {
  DatasetManifest manifest;
  std::vector<LabeledImage> images;
};

/// Each source becomes itself followed by its variants.
std::vector<LabeledImage> expand_with_augmentation(const std::vector<LabeledImage>& sources,
                                                   const AugmentationConfig& cfg, std::uint64_t seed,
                                                   std::uint64_t first_id = 0);

/// Default order: split the sources, then augment the training split only.
/// `paper_faithful` augments every source first and splits the expanded
/// corpus, so augmented twins can land in different splits.
Dataset prepare_dataset(const std::vector<LabeledImage>& sources, const AugmentationConfig& cfg,
                        const SplitRatios& ratios, std::uint64_t seed, bool paper_faithful);

}  // namespace fusi
