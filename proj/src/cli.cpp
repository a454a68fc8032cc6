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

#include "fusi/cli.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <csignal>
#include <fstream>
#include <iostream>
#include <optional>

#include "fusi/architectures.hpp"
#include "fusi/dataset.hpp"
#include "fusi/diagnosis.hpp"
#include "fusi/error.hpp"
#include "fusi/model_file.hpp"
#include "fusi/service.hpp"
#include "fusi/training.hpp"

namespace fusi {

namespace fs = std::filesystem;

namespace {

struct TrainArgs {
  std::string arch;
  std::string data;
  std::optional<std::size_t> epochs;
  std::uint64_t seed = 0;
  std::string out;
  std::string report;
  bool paper_faithful = false;
  std::optional<double> learning_rate;
  std::optional<std::size_t> batch_size;
  std::optional<double> momentum;
  std::size_t variants = 5;
  std::size_t input_size = 0;
  std::string ratios = "0.8,0.15,0.05";
  std::string backbone;
};

struct AugmentArgs {
  std::string data;
  std::string out;
  std::uint64_t seed = 0;
  std::size_t variants = 5;
};

struct SplitArgs {
  std::string data;
  std::string ratios = "0.8,0.15,0.05";
  std::uint64_t seed = 0;
  std::string manifest;
};

struct ClassifyArgs {
  std::string model;
  std::string image;
  double threshold = kDefaultThreshold;
  bool json = false;
};

struct ServeArgs {
  std::string model;
  int port = 8080;
  std::string bind = "127.0.0.1";
  std::string cors_origin;
  double threshold = kDefaultThreshold;
};

LoadResult load_sources(const std::string& root, std::ostream& err) {
  LoadResult loaded = load_directory_dataset(root);
  for (const auto& s : loaded.skipped) err << "warning: skipped " << s.path << ": " << s.reason << "\n";
  return loaded;
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot open '" + path.string() + "' for writing");
  f << text;
  if (!f) throw DataError("failed writing '" + path.string() + "'");
}

std::string human_label(const std::string& label) {
  const auto parsed = parse_class_label(label);
  return parsed ? std::string(display_name(*parsed)) : label;
}

int cmd_train(const TrainArgs& a, std::ostream& out, std::ostream& err) {
  TrainingConfig cfg = default_training_config(a.arch);
  if (a.epochs) cfg.epochs = *a.epochs;
  if (a.learning_rate) cfg.learning_rate = *a.learning_rate;
  if (a.batch_size) cfg.batch_size = *a.batch_size;
  if (a.momentum) cfg.momentum = *a.momentum;
  cfg.seed = a.seed;
  validate(cfg);

  const LoadResult loaded = load_sources(a.data, err);
  AugmentationConfig aug;
  aug.per_image_variants = a.variants;
  const Dataset data = prepare_dataset(loaded.images, aug, parse_split_ratios(a.ratios), a.seed, a.paper_faithful);
  const auto counts = data.manifest.counts();
  out << "dataset: " << data.images.size() << " images (train " << counts.train << ", validation "
      << counts.validation << ", test " << counts.test << ")\n";

  InitOptions init;
  init.seed = a.seed;
  ModelSpec model = build_architecture(a.arch, kNumClasses, a.input_size, init);
  if (!a.backbone.empty()) {
    const ModelSpec source = load_model(a.backbone);
    const std::size_t copied = copy_matching_weights(source, model, {model.nodes[find_head(model).dense_index].id});
    out << "backbone: copied " << copied << " tensors from " << a.backbone << "\n";
  }
  const TrainingReport report = transfer_train(model, data, cfg);
  save_model(model, a.out);
  if (!a.report.empty()) write_text(a.report, report_to_json(report));
  out << report_to_table(report);
  return kExitOk;
}

int cmd_augment(const AugmentArgs& a, std::ostream& out, std::ostream& err) {
  const LoadResult loaded = load_sources(a.data, err);
  AugmentationConfig cfg;
  cfg.per_image_variants = a.variants;
  const auto expanded = expand_with_augmentation(loaded.images, cfg, a.seed);
  for (const auto& img : expanded) {
    const fs::path src(img.source_path.substr(0, img.source_path.find('#')));
    std::string name = src.stem().string();
    if (img.lineage) name += "_aug" + std::to_string(img.lineage->variant);
    const fs::path dest = fs::path(a.out) / directory_name(img.label) / (name + ".png");
    fs::create_directories(dest.parent_path());
    write_image(dest, img.pixels);
  }
  out << "wrote " << expanded.size() << " images from " << loaded.images.size() << " sources to " << a.out << "\n";
  return kExitOk;
}

int cmd_split(const SplitArgs& a, std::ostream& out, std::ostream& err) {
  const SplitRatios ratios = parse_split_ratios(a.ratios);
  const LoadResult loaded = load_sources(a.data, err);
  std::vector<ManifestEntry> entries;
  entries.reserve(loaded.images.size());
  for (std::size_t i = 0; i < loaded.images.size(); ++i) {
    entries.push_back({i, loaded.images[i].source_path, loaded.images[i].label, Split::kTrain, std::nullopt});
  }
  const DatasetManifest m = shuffle_split(std::move(entries), ratios, a.seed);
  write_text(a.manifest, manifest_to_json(m));
  const auto c = m.counts();
  out << "train " << c.train << ", validation " << c.validation << ", test " << c.test << "\n";
  return kExitOk;
}

int cmd_classify(const ClassifyArgs& a, std::ostream& out) {
  const ModelSpec model = load_model(a.model);
  const auto bytes = read_file_bytes(a.image);
  const auto start = std::chrono::steady_clock::now();
  const Diagnosis d = classify_bytes(model, bytes, a.threshold);
  const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  if (a.json) {
    out << classify_response_json(d, model.architecture_name, ms) << "\n";
    return kExitOk;
  }
  char line[128];
  std::snprintf(line, sizeof line, "%s (%.1f%% confidence)\n", human_label(d.label).c_str(), 100.0 * d.confidence);
  out << line;
  for (const auto& [label, p] : d.per_class) {
    std::snprintf(line, sizeof line, "  %-24s %.4f\n", label.c_str(), p);
    out << line;
  }
  if (d.recommendation) out << *d.recommendation << "\n";
  return kExitOk;
}

InferenceService* g_running = nullptr;

extern "C" void on_signal(int) {
  if (g_running != nullptr) g_running->stop();
}

int cmd_serve(const ServeArgs& a, std::ostream& out) {
  const ModelInfo info = model_info(a.model);
  ModelSpec model = load_model(a.model);
  ServiceOptions opts;
  opts.bind_address = a.bind;
  opts.port = a.port;
  if (!a.cors_origin.empty()) opts.cors_origin = a.cors_origin;
  opts.default_threshold = a.threshold;
  InferenceService service(std::move(model), info, opts);
  const int port = service.bind();
  out << "serving " << info.architecture_name << " on http://" << a.bind << ":" << port << std::endl;
  g_running = &service;
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  service.run();
  g_running = nullptr;
  return kExitOk;
}

int cmd_inspect(const std::string& path, std::ostream& out) {
  const ModelInfo info = model_info(path);
  const ModelSpec m = load_model(path);
  out << "architecture: " << info.architecture_name << "\n"
      << "format version: " << info.format_version << "\n"
      << "input size: " << info.input_size << "\n"
      << "file size: " << info.file_size << " bytes\n"
      << "parameters: " << info.parameter_count << "\n"
      << "weighted layers: " << count_weighted_layers(m) << "\n"
      << "estimated memory: " << estimate_memory_bytes(m) << " bytes\n"
      << "labels:";
  for (std::size_t i = 0; i < info.class_labels.size(); ++i) out << " " << i << "=" << info.class_labels[i];
  out << "\n" << inspect_dump(m);
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"FUSI Scanner: banana leaf disease classifier"};
  app.require_subcommand(1);

  TrainArgs train;
  auto* t = app.add_subcommand("train", "Train the classifier head of a backbone on a dataset directory");
  t->add_option("--arch", train.arch, "Architecture")
      ->required()
      ->check(CLI::IsMember({"resnet152", "inceptionv3", "tiny-residual", "tiny-inception"}));
  t->add_option("--data", train.data, "Dataset root with one directory per class")->required();
  t->add_option("--epochs", train.epochs, "Epochs (default 50, or 150 for inceptionv3)");
  t->add_option("--seed", train.seed, "Seed for splits, augmentation and initialization");
  t->add_option("--out", train.out, "Output model file")->required();
  t->add_option("--report", train.report, "Training report JSON");
  t->add_flag("--paper-faithful", train.paper_faithful, "Augment every image before splitting");
  t->add_option("--lr", train.learning_rate, "Learning rate (default 0.001)");
  t->add_option("--batch-size", train.batch_size, "Batch size (default 32)");
  t->add_option("--momentum", train.momentum, "SGD momentum (default 0.9)");
  t->add_option("--variants", train.variants, "Augmented variants per image");
  t->add_option("--input-size", train.input_size, "Square input size (default per architecture)");
  t->add_option("--ratios", train.ratios, "train,validation,test ratios");
  t->add_option("--backbone", train.backbone, "Model file to copy backbone weights from");

  AugmentArgs aug;
  auto* a = app.add_subcommand("augment", "Write each image and its augmented variants as PNG");
  a->add_option("--data", aug.data, "Dataset root")->required();
  a->add_option("--out", aug.out, "Output root")->required();
  a->add_option("--seed", aug.seed, "Seed");
  a->add_option("--variants", aug.variants, "Variants per image");

  SplitArgs split;
  auto* s = app.add_subcommand("split", "Shuffle a dataset into train/validation/test and write a manifest");
  s->add_option("--data", split.data, "Dataset root")->required();
  s->add_option("--ratios", split.ratios, "train,validation,test ratios");
  s->add_option("--seed", split.seed, "Seed");
  s->add_option("--manifest", split.manifest, "Manifest JSON output")->required();

  ClassifyArgs cls;
  auto* c = app.add_subcommand("classify", "Diagnose one leaf image");
  c->add_option("--model", cls.model, "Model file")->required();
  c->add_option("--image", cls.image, "PNG, JPEG or PPM image")->required();
  c->add_option("--threshold", cls.threshold, "Confidence below which a retake is advised")
      ->check(CLI::Range(0.0, 1.0));
  c->add_flag("--json", cls.json, "Print the service response JSON");

  ServeArgs serve;
  auto* v = app.add_subcommand("serve", "Run the HTTP inference service");
  v->add_option("--model", serve.model, "Model file")->envname("FUSI_MODEL");
  v->add_option("--port", serve.port, "Port, 0 for any free port")->envname("FUSI_PORT")->check(CLI::Range(0, 65535));
  v->add_option("--bind", serve.bind, "Bind address");
  v->add_option("--cors-origin", serve.cors_origin, "Allowed browser origin");
  v->add_option("--threshold", serve.threshold, "Default confidence gate for requests without one")
      ->check(CLI::Range(0.0, 1.0));

  std::string inspect_path;
  auto* i = app.add_subcommand("inspect-model", "Print a model's header and layer table");
  i->add_option("--model", inspect_path, "Model file")->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
    if (serve.model.empty() && v->parsed()) throw CLI::RequiredError("--model (or FUSI_MODEL)");
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (t->parsed()) return cmd_train(train, out, err);
    if (a->parsed()) return cmd_augment(aug, out, err);
    if (s->parsed()) return cmd_split(split, out, err);
    if (c->parsed()) return cmd_classify(cls, out);
    if (v->parsed()) return cmd_serve(serve, out);
    if (i->parsed()) return cmd_inspect(inspect_path, out);
  } catch (const NumericError& e) {
    err << "error: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitUsage;
}

int run_cli(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run_cli(args, std::cout, std::cerr);
}

}  // namespace fusi
