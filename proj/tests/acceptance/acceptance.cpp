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

// Acceptance runner: one PASS/FAIL line per primary criterion. Exit status is
// the number of failed criteria.

#include <json.hpp>
#include <omp.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <sstream>
#include <string>

#include "fusi/architectures.hpp"
#include "fusi/dataset.hpp"
#include "fusi/diagnosis.hpp"
#include "fusi/error.hpp"
#include "fusi/graph.hpp"
#include "fusi/image.hpp"
#include "fusi/model_file.hpp"
#include "oracles.hpp"
#include "service_harness.hpp"
#include "support.hpp"

using namespace fusi;

namespace {

// Pinned tolerances and budgets.
constexpr double kConvRelTol = 1e-4;
constexpr int kConvInstances = 200;
constexpr double kConvBudgetSeconds = 30.0;
constexpr double kGradRelTol = 1e-4;
constexpr int kGradInstances = 20;
constexpr double kRowSumTol = 1e-6;
constexpr double kBuildBudgetSeconds = 60.0;
constexpr double kOverfitMinAccuracy = 0.95;
constexpr double kOverfitBudgetSeconds = 120.0;
constexpr int kCrcFuzzPositions = 100;
constexpr std::size_t kServiceFuzzBodies = 1000;

struct Verdict {
  bool pass;
  std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

Verdict conv_oracle() {
  const auto t0 = std::chrono::steady_clock::now();
  Rng rng(20240601);
  double worst = 0.0;
  for (int i = 0; i < kConvInstances; ++i) worst = std::max(worst, testing::conv_equivalence_error(rng));
  const double s = seconds_since(t0);
  return {worst < kConvRelTol && s < kConvBudgetSeconds,
          fmt("%d instances, max rel err %.3g (tol %.0e), %.2f s (budget %.0f s)", kConvInstances, worst, kConvRelTol,
              s, kConvBudgetSeconds)};
}

Verdict gradient_suite() {
  Rng rng(31337);
  const std::pair<const char*, double (*)(Rng&)> checks[] = {
      {"dense", testing::dense_gradient_error},
      {"relu", testing::relu_gradient_error},
      {"global_avgpool", testing::global_avgpool_gradient_error},
      {"softmax_xent", testing::softmax_xent_gradient_error}};
  bool pass = true;
  std::string detail = fmt("%d instances each, tol %.0e:", kGradInstances, kGradRelTol);
  for (const auto& [name, fn] : checks) {
    double worst = 0.0;
    for (int i = 0; i < kGradInstances; ++i) worst = std::max(worst, fn(rng));
    pass = pass && worst < kGradRelTol;
    detail += fmt(" %s %.2g", name, worst);
  }
  return {pass, detail};
}

Verdict softmax_normalization() {
  struct Preset {
    const char* name;
    std::size_t size;
    int trials;
  };
  // Full backbones run at reduced resolution to keep the suite fast; the
  // graph is otherwise identical.
  const Preset presets[] = {{"tiny-residual", 32, 20}, {"tiny-inception", 32, 20}, {"resnet152", 64, 3},
                            {"inceptionv3", 75, 3}};
  Rng rng(4);
  double worst = 0.0;
  std::size_t rows = 0;
  for (const auto& p : presets) {
    for (int t = 0; t < p.trials; ++t) {
      const ModelSpec m = build_architecture(p.name, 3, p.size, {.seed = static_cast<std::uint64_t>(t)});
      const Tensor probs = forward(m, testing::random_tensor({2, 3, p.size, p.size}, rng, 0.0, 1.0));
      for (std::size_t i = 0; i < probs.dim(0); ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < probs.dim(1); ++j) s += probs.at(i, j);
        worst = std::max(worst, std::abs(s - 1.0));
        ++rows;
      }
    }
  }
  return {worst <= kRowSumTol, fmt("%zu rows over 4 presets, max |sum-1| %.3g (tol %.0e)", rows, worst, kRowSumTol)};
}

struct FullGraphs {
  ModelSpec resnet;
  ModelSpec inception;
  double seconds = 0.0;
};

const FullGraphs& full_graphs() {
  static const FullGraphs g = [] {
    const auto t0 = std::chrono::steady_clock::now();
    FullGraphs out{build_resnet152(3, 224), build_inception_v3(3, 299)};
    infer_shapes(out.resnet);
    infer_shapes(out.inception);
    out.seconds = seconds_since(t0);
    return out;
  }();
  return g;
}

Verdict memory_ordering() {
  const FullGraphs& g = full_graphs();
  const std::size_t pr = count_parameters(g.resnet), pi = count_parameters(g.inception);
  const std::uint64_t mr = estimate_memory_bytes(g.resnet), mi = estimate_memory_bytes(g.inception);
  return {pi < pr && mi < mr && g.seconds < kBuildBudgetSeconds,
          fmt("params inception %zu < resnet %zu; memory %llu < %llu bytes; build+shapes %.2f s (budget %.0f s)", pi,
              pr, static_cast<unsigned long long>(mi), static_cast<unsigned long long>(mr), g.seconds,
              kBuildBudgetSeconds)};
}

Verdict resnet_structure() {
  const ModelSpec& m = full_graphs().resnet;
  std::map<int, int> stages;
  for (const auto& n : m.nodes) {
    if (n.kind == LayerKind::kAdd) ++stages[n.id[4] - '0'];
  }
  std::size_t blocks = 0;
  for (const auto& [s, c] : stages) blocks += static_cast<std::size_t>(c);
  const bool schedule = stages == std::map<int, int>{{2, 3}, {3, 8}, {4, 36}, {5, 3}};

  std::istringstream dump(inspect_dump(m));
  std::string line;
  std::size_t weighted = 0;
  while (std::getline(dump, line)) {
    std::istringstream f(line);
    std::string id, kind;
    std::getline(f, id, '\t');
    std::getline(f, kind, '\t');
    if ((kind == "conv" || kind == "dense") && !is_projection_shortcut(id)) ++weighted;
  }
  return {blocks == 50 && schedule && weighted == 152,
          fmt("%zu blocks, schedule (%d,%d,%d,%d), %zu weighted layers in inspect dump", blocks, stages[2], stages[3],
              stages[4], stages[5], weighted)};
}

Verdict split_exactness() {
  const SplitCounts a = split_sizes(18000, {});
  const SplitCounts b = split_sizes(20, {});
  bool partition = true;
  for (std::size_t n = 1; n <= 1000; ++n) {
    const SplitCounts c = split_sizes(n, {});
    partition = partition && c.train + c.validation + c.test == n && c.train == (n * 8) / 10 &&
                c.validation == (n * 15) / 100;
  }
  // The shuffled manifest must realize the same counts.
  std::vector<ManifestEntry> entries(18000);
  for (std::size_t i = 0; i < entries.size(); ++i) entries[i].image_id = i;
  const SplitCounts realized = shuffle_split(std::move(entries), {}, 1).counts();
  const bool pass = a == SplitCounts{14400, 2700, 900} && b == SplitCounts{16, 3, 1} && partition && realized == a;
  return {pass, fmt("18000 -> (%zu, %zu, %zu), 20 -> (%zu, %zu, %zu), partition 1..1000 %s", a.train, a.validation,
                    a.test, b.train, b.validation, b.test, partition ? "holds" : "broken")};
}

Verdict paper_faithful_expansion() {
  const auto sources30 = testing::color_noise_dataset(10, 24, 5);
  const Dataset a = prepare_dataset(sources30, {}, {}, 42, true);
  const Dataset b = prepare_dataset(sources30, {}, {}, 42, true);
  bool identical = a.images.size() == b.images.size() && manifest_to_json(a.manifest) == manifest_to_json(b.manifest);
  for (std::size_t i = 0; identical && i < a.images.size(); ++i) identical = a.images[i].pixels == b.images[i].pixels;

  // The corpus-size claim at full count, with 8x8 images standing in for leaves.
  const Dataset full = prepare_dataset(testing::color_noise_dataset(1000, 8, 6), {}, {}, 7, true);
  const SplitCounts c = full.manifest.counts();
  const bool pass = a.images.size() == 180 && identical && full.images.size() == 18000 &&
                    c == SplitCounts{14400, 2700, 900};
  return {pass, fmt("30 sources -> %zu images, repeat run %s; 3000 sources -> %zu images split (%zu, %zu, %zu)",
                    a.images.size(), identical ? "bitwise identical" : "DIFFERS", full.images.size(), c.train,
                    c.validation, c.test)};
}

Verdict overfit_oracle() {
  const int threads = omp_get_max_threads();
  omp_set_num_threads(1);
  const auto out = testing::run_overfit_oracle(1);
  omp_set_num_threads(threads);
  return {out.train_accuracy >= kOverfitMinAccuracy && out.seconds < kOverfitBudgetSeconds,
          fmt("train accuracy %.4f (min %.2f) in %.2f s single-threaded (budget %.0f s); smoothed loss %s",
              out.train_accuracy, kOverfitMinAccuracy, out.seconds, kOverfitBudgetSeconds,
              out.smoothed_loss_decreasing ? "non-increasing" : "NOT monotone")};
}

Verdict model_file_round_trip() {
  bool identical = true;
  std::size_t largest = 0;
  const ModelSpec tiny_res = build_tiny(TinyPreset::kResidual, 3);
  const ModelSpec tiny_inc = build_tiny(TinyPreset::kInception, 3);
  for (const ModelSpec* m : {&tiny_res, &tiny_inc, &full_graphs().inception}) {
    const auto first = serialize_model(*m);
    identical = identical && serialize_model(deserialize_model(first)) == first;
    largest = std::max(largest, first.size());
  }
  const auto good = serialize_model(build_tiny(TinyPreset::kInception, 3));
  Rng rng(99);
  int detected = 0, crc_named = 0, beyond_prefix = 0;
  for (int i = 0; i < kCrcFuzzPositions; ++i) {
    auto bad = good;
    const std::size_t pos = rng.below(bad.size());
    bad[pos] ^= static_cast<std::uint8_t>(1 + rng.below(255));
    try {
      deserialize_model(bad);
    } catch (const FormatError& e) {
      ++detected;
      if (pos >= kModelPrefixSize) {
        ++beyond_prefix;
        crc_named += e.kind() == FormatErrorKind::kCrcMismatch ? 1 : 0;
      }
    }
  }
  const bool pass = identical && detected == kCrcFuzzPositions && crc_named == beyond_prefix;
  return {pass, fmt("save-load-save byte-identical %s (largest %zu bytes); %d/%d corruptions rejected, %d/%d past the "
                    "prefix reported as CRC mismatch",
                    identical ? "yes" : "NO", largest, detected, kCrcFuzzPositions, crc_named, beyond_prefix)};
}

Verdict threshold_rule() {
  Rng rng(12);
  const RgbImage img = testing::noise_image(20, 20, rng);
  const auto png = encode_png(img);
  bool pass = true;
  std::string detail;
  for (const auto [conf, expect_rec] : {std::pair{0.69, true}, {0.70, false}, {0.99, false}}) {
    const ModelSpec probe = testing::probe_model(conf);
    const Diagnosis d = classify(probe, img);
    testing::ServiceHarness h(probe);
    auto c = h.client();
    httplib::MultipartFormDataItems items{{"image", std::string(png.begin(), png.end()), "leaf.png", "image/png"}};
    const auto r = c.Post("/v1/classify", items);
    bool http_rec = false, http_ok = false;
    if (r && r->status == 200) {
      const auto j = nlohmann::json::parse(r->body);
      http_ok = j["confidence"].get<float>() == static_cast<float>(conf);
      http_rec = j["recommendation"].is_string();
    }
    const bool ok = static_cast<float>(d.confidence) == static_cast<float>(conf) &&
                    d.recommendation.has_value() == expect_rec && http_ok && http_rec == expect_rec;
    pass = pass && ok;
    detail += fmt("%.2f -> %s/%s; ", conf, d.recommendation ? "retake" : "none", http_rec ? "retake" : "none");
  }
  testing::ServiceHarness h(testing::probe_model(0.9));
  const auto f = testing::fuzz_classify(h.port(), kServiceFuzzBodies, 2026);
  const auto health = h.client().Get("/v1/health");
  const bool alive = health && health->status == 200;
  pass = pass && f.unexpected_status == 0 && f.transport_failures == 0 && f.malformed_error_body == 0 && alive;
  detail += fmt("fuzz %zu bodies: %zu outside {400,413,422}, %zu bad error bodies, %zu transport failures, service %s",
                f.requests, f.unexpected_status, f.malformed_error_body, f.transport_failures,
                alive ? "alive" : "DOWN");
  return {pass, detail};
}

}  // namespace

int main() {
  const std::pair<const char*, std::function<Verdict()>> criteria[] = {
      {"convolution oracle equivalence", conv_oracle},
      {"gradient suite", gradient_suite},
      {"softmax normalization", softmax_normalization},
      {"memory ordering", memory_ordering},
      {"resnet152 structure", resnet_structure},
      {"split exactness", split_exactness},
      {"paper-faithful expansion", paper_faithful_expansion},
      {"overfit oracle", overfit_oracle},
      {"model-file round trip", model_file_round_trip},
      {"threshold rule", threshold_rule},
  };
  int failed = 0;
  for (const auto& [name, run] : criteria) {
    Verdict v;
    try {
      v = run();
    } catch (const std::exception& e) {
      v = {false, std::string("threw: ") + e.what()};
    }
    failed += v.pass ? 0 : 1;
    std::printf("%s  %-32s %s\n", v.pass ? "PASS" : "FAIL", name, v.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(std::size(criteria)) - failed, std::size(criteria));
  return failed;
}
