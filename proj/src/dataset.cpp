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

#include "fusi/dataset.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "fusi/error.hpp"
#include "fusi/rng.hpp"

namespace fusi {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

namespace {

bool has_image_extension(const fs::path& p) {
  std::string ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext == ".png" || ext == ".jpg" || ext == ".jpeg" || ext == ".ppm";
}

ordered_json lineage_to_json(const std::optional<AugmentationLineage>& lin) {
  if (!lin) return nullptr;
  ordered_json j;
  j["sourceId"] = lin->source_id;
  j["variant"] = lin->variant;
  j["flipped"] = lin->flipped;
  j["zoom"] = lin->zoom;
  j["shear"] = lin->shear;
  j["rotationDegrees"] = lin->rotation_degrees;
  j["crop"] = {lin->crop.x, lin->crop.y, lin->crop.width, lin->crop.height};
  return j;
}

std::optional<AugmentationLineage> lineage_from_json(const ordered_json& j) {
  if (j.is_null()) return std::nullopt;
  AugmentationLineage lin;
  lin.source_id = j.at("sourceId").get<std::uint64_t>();
  lin.variant = j.at("variant").get<std::size_t>();
  lin.flipped = j.at("flipped").get<bool>();
  lin.zoom = j.at("zoom").get<double>();
  lin.shear = j.at("shear").get<double>();
  lin.rotation_degrees = j.at("rotationDegrees").get<double>();
  const auto& c = j.at("crop");
  lin.crop = {c.at(0).get<std::size_t>(), c.at(1).get<std::size_t>(), c.at(2).get<std::size_t>(),
              c.at(3).get<std::size_t>()};
  return lin;
}

Split parse_split(const std::string& s) {
  if (s == "train") return Split::kTrain;
  if (s == "validation") return Split::kValidation;
  if (s == "test") return Split::kTest;
  throw DataError("unknown split '" + s + "'");
}

ordered_json counts_to_json(const SplitCounts& c) {
  ordered_json j;
  j["train"] = c.train;
  j["validation"] = c.validation;
  j["test"] = c.test;
  return j;
}

void tally(SplitCounts& c, Split s) {
  switch (s) {
    case Split::kTrain:
      ++c.train;
      break;
    case Split::kValidation:
      ++c.validation;
      break;
    case Split::kTest:
      ++c.test;
      break;
  }
}

std::vector<AugmentedImage> variants_for(const LabeledImage& src, const AugmentationConfig& cfg, std::uint64_t seed,
                                         std::uint64_t image_id) {
  Rng rng = Rng(seed).child(image_id);
  return augment(src.pixels, cfg, rng, image_id);
}

LabeledImage as_variant(const LabeledImage& src, AugmentedImage&& v) {
  LabeledImage out;
  out.pixels = std::move(v.pixels);
  out.label = src.label;
  out.source_path = src.source_path + "#aug" + std::to_string(v.lineage.variant);
  out.lineage = v.lineage;
  return out;
}

}  // namespace

LoadResult load_directory_dataset(const fs::path& root) {
  if (!fs::is_directory(root)) throw LayoutError("dataset root '" + root.string() + "' is not a directory");
  LoadResult result;
  for (std::size_t code = 0; code < kNumClasses; ++code) {
    const ClassLabel label = class_from_code(code);
    const fs::path dir = root / directory_name(label);
    if (!fs::is_directory(dir)) throw LayoutError("missing class directory '" + dir.string() + "'");
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir)) {
      if (entry.is_regular_file() && has_image_extension(entry.path())) files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    for (const auto& file : files) {
      try {
        result.images.push_back({read_image(file), label, file.string(), std::nullopt});
      } catch (const Error& e) {
        result.skipped.push_back({file.string(), e.what()});
      }
    }
  }
  return result;
}

SplitRatios parse_split_ratios(const std::string& text) {
  std::vector<double> parts;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      parts.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ConfigError("bad ratio '" + item + "'");
    }
  }
  if (parts.size() != 3) throw ConfigError("expected three comma-separated ratios");
  return {parts[0], parts[1], parts[2]};
}

const char* to_string(Split split) {
  switch (split) {
    case Split::kTrain:
      return "train";
    case Split::kValidation:
      return "validation";
    case Split::kTest:
      return "test";
  }
  return "unknown";
}

SplitCounts DatasetManifest::counts() const {
  SplitCounts c;
  for (const auto& e : entries) tally(c, e.split);
  return c;
}

std::array<SplitCounts, kNumClasses> DatasetManifest::counts_by_class() const {
  std::array<SplitCounts, kNumClasses> c{};
  for (const auto& e : entries) tally(c[class_code(e.label)], e.split);
  return c;
}

std::vector<std::size_t> DatasetManifest::indices(Split split) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (entries[i].split == split) out.push_back(i);
  }
  return out;
}

SplitCounts split_sizes(std::size_t n, const SplitRatios& r) {
  if (r.train < 0 || r.validation < 0 || r.test < 0) throw ConfigError("split ratios must be non-negative");
  if (std::abs(r.train + r.validation + r.test - 1.0) > 1e-9) throw ConfigError("split ratios must sum to 1");
  // The small guard keeps products like 0.15 * 100 from flooring to 14.
  const auto floor_share = [n](double ratio) {
    return static_cast<std::size_t>(std::floor(ratio * static_cast<double>(n) + 1e-9));
  };
  SplitCounts c;
  c.train = std::min(n, floor_share(r.train));
  c.validation = std::min(n - c.train, floor_share(r.validation));
  c.test = n - c.train - c.validation;
  return c;
}

DatasetManifest shuffle_split(std::vector<ManifestEntry> entries, const SplitRatios& ratios, std::uint64_t seed) {
  const SplitCounts sizes = split_sizes(entries.size(), ratios);
  Rng rng(seed);
  const auto perm = rng_shuffle(rng, entries.size());
  DatasetManifest m;
  m.seed = seed;
  m.entries.reserve(entries.size());
  for (std::size_t i = 0; i < perm.size(); ++i) {
    ManifestEntry e = std::move(entries[perm[i]]);
    e.split = i < sizes.train ? Split::kTrain
              : i < sizes.train + sizes.validation ? Split::kValidation
                                                   : Split::kTest;
    m.entries.push_back(std::move(e));
  }
  return m;
}

std::string manifest_to_json(const DatasetManifest& m) {
  ordered_json doc;
  doc["seed"] = m.seed;
  ordered_json counts = counts_to_json(m.counts());
  ordered_json by_class = ordered_json::object();
  const auto per_class = m.counts_by_class();
  for (std::size_t code = 0; code < kNumClasses; ++code) {
    by_class[std::string(directory_name(class_from_code(code)))] = counts_to_json(per_class[code]);
  }
  counts["byClass"] = std::move(by_class);
  doc["counts"] = std::move(counts);
  ordered_json entries = ordered_json::array();
  for (const auto& e : m.entries) {
    ordered_json j;
    j["imageId"] = e.image_id;
    j["sourcePath"] = e.source_path;
    j["label"] = directory_name(e.label);
    j["split"] = to_string(e.split);
    j["lineage"] = lineage_to_json(e.lineage);
    entries.push_back(std::move(j));
  }
  doc["entries"] = std::move(entries);
  return doc.dump(2) + "\n";
}

DatasetManifest manifest_from_json(const std::string& text) {
  DatasetManifest m;
  try {
    const auto doc = ordered_json::parse(text);
    m.seed = doc.at("seed").get<std::uint64_t>();
    for (const auto& j : doc.at("entries")) {
      ManifestEntry e;
      e.image_id = j.at("imageId").get<std::uint64_t>();
      e.source_path = j.at("sourcePath").get<std::string>();
      const auto label = parse_class_label(j.at("label").get<std::string>());
      if (!label) throw DataError("unknown label in manifest");
      e.label = *label;
      e.split = parse_split(j.at("split").get<std::string>());
      e.lineage = lineage_from_json(j.at("lineage"));
      m.entries.push_back(std::move(e));
    }
  } catch (const nlohmann::json::exception& ex) {
    throw DataError(std::string("malformed manifest: ") + ex.what());
  }
  return m;
}

std::vector<LabeledImage> expand_with_augmentation(const std::vector<LabeledImage>& sources,
                                                   const AugmentationConfig& cfg, std::uint64_t seed,
                                                   std::uint64_t first_id) {
  validate(cfg);
  std::vector<LabeledImage> out;
  out.reserve(sources.size() * (cfg.per_image_variants + 1));
  std::uint64_t id = first_id;
  for (const LabeledImage& src : sources) {
    const std::uint64_t source_id = id;
    out.push_back(src);
    ++id;
    for (auto& v : variants_for(src, cfg, seed, source_id)) {
      out.push_back(as_variant(src, std::move(v)));
      ++id;
    }
  }
  return out;
}

Dataset prepare_dataset(const std::vector<LabeledImage>& sources, const AugmentationConfig& cfg,
                        const SplitRatios& ratios, std::uint64_t seed, bool paper_faithful) {
  validate(cfg);
  Dataset ds;
  if (paper_faithful) {
    std::vector<LabeledImage> corpus = expand_with_augmentation(sources, cfg, seed);
    std::vector<ManifestEntry> entries;
    entries.reserve(corpus.size());
    for (std::size_t i = 0; i < corpus.size(); ++i) {
      entries.push_back({i, corpus[i].source_path, corpus[i].label, Split::kTrain, corpus[i].lineage});
    }
    ds.manifest = shuffle_split(std::move(entries), ratios, seed);
    ds.images.reserve(corpus.size());
    for (const auto& e : ds.manifest.entries) ds.images.push_back(corpus[e.image_id]);
    return ds;
  }

  std::vector<ManifestEntry> entries;
  for (std::size_t i = 0; i < sources.size(); ++i) {
    entries.push_back({i, sources[i].source_path, sources[i].label, Split::kTrain, std::nullopt});
  }
  ds.manifest = shuffle_split(std::move(entries), ratios, seed);
  for (const auto& e : ds.manifest.entries) ds.images.push_back(sources[e.image_id]);

  std::uint64_t next_id = sources.size();
  const std::size_t originals = ds.manifest.entries.size();
  for (std::size_t i = 0; i < originals; ++i) {
    if (ds.manifest.entries[i].split != Split::kTrain) continue;
    const std::uint64_t source_id = ds.manifest.entries[i].image_id;
    const LabeledImage& src = sources[source_id];
    for (auto& v : variants_for(src, cfg, seed, source_id)) {
      LabeledImage img = as_variant(src, std::move(v));
      ds.manifest.entries.push_back({next_id++, img.source_path, img.label, Split::kTrain, img.lineage});
      ds.images.push_back(std::move(img));
    }
  }
  return ds;
}

}  // namespace fusi
