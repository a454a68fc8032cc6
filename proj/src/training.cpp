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

#include "fusi/training.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "fusi/error.hpp"
#include "fusi/layers.hpp"
#include "fusi/rng.hpp"

namespace fusi {

namespace {

constexpr std::uint64_t kHeadInitStream = 0x4EAD;

/// Backbone outputs for a set of dataset rows, one row per image.
struct FeatureTable {
  std::size_t width = 0;
  std::vector<float> values;
  std::vector<std::size_t> labels;

  std::size_t rows() const { return labels.size(); }
};

FeatureTable extract_features(const ModelSpec& m, const std::string& feature_id, const Dataset& data,
                              std::span<const std::size_t> rows, std::size_t batch_size) {
  FeatureTable table;
  for (std::size_t start = 0; start < rows.size(); start += batch_size) {
    const std::size_t end = std::min(rows.size(), start + batch_size);
    std::vector<const RgbImage*> images;
    for (std::size_t i = start; i < end; ++i) {
      images.push_back(&data.images[rows[i]].pixels);
      table.labels.push_back(class_code(data.images[rows[i]].label));
    }
    const Tensor features = forward_to(m, to_model_input(images, m.input_size()), feature_id);
    if (features.rank() != 2) throw InternalError("head input is not a feature matrix");
    table.width = features.dim(1);
    table.values.insert(table.values.end(), features.data().begin(), features.data().end());
  }
  return table;
}

Tensor gather(const FeatureTable& t, std::span<const std::size_t> order, std::size_t start, std::size_t end,
              std::vector<std::size_t>& labels) {
  Tensor x({end - start, t.width});
  labels.clear();
  for (std::size_t i = start; i < end; ++i) {
    const std::size_t r = order[i];
    std::copy_n(t.values.begin() + static_cast<std::ptrdiff_t>(r * t.width), t.width,
                x.data().begin() + static_cast<std::ptrdiff_t>((i - start) * t.width));
    labels.push_back(t.labels[r]);
  }
  return x;
}

std::size_t correct_predictions(const Tensor& probs, std::span<const std::size_t> labels) {
  std::size_t correct = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (argmax(probs.data().subspan(i * probs.dim(1), probs.dim(1))) == labels[i]) ++correct;
  }
  return correct;
}

Evaluation evaluate_head(const DenseParams& head, const FeatureTable& t, std::size_t batch_size) {
  std::vector<std::size_t> order(t.rows());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::vector<std::size_t> labels;
  double loss_sum = 0.0;
  std::size_t correct = 0;
  for (std::size_t start = 0; start < order.size(); start += batch_size) {
    const std::size_t end = std::min(order.size(), start + batch_size);
    const Tensor probs = softmax(dense_forward(gather(t, order, start, end, labels), head));
    loss_sum += cross_entropy(probs, labels) * static_cast<double>(labels.size());
    correct += correct_predictions(probs, labels);
  }
  if (order.empty()) return {};
  const auto n = static_cast<double>(order.size());
  return {static_cast<double>(correct) / n, loss_sum / n};
}

float max_abs(const Tensor& t) {
  float m = 0.0f;
  for (float v : t.data()) m = std::max(m, std::abs(v));
  return m;
}

bool non_finite(const Tensor& t) {
  return std::any_of(t.data().begin(), t.data().end(), [](float v) { return !std::isfinite(v); });
}

}  // namespace

TrainingConfig default_training_config(std::string_view architecture) {
  TrainingConfig cfg;
  cfg.epochs = architecture.find("inception") != std::string_view::npos ? 150 : 50;
  return cfg;
}

void validate(const TrainingConfig& cfg) {
  if (cfg.epochs < 1) throw ConfigError("epochs must be at least 1");
  if (cfg.batch_size < 1) throw ConfigError("batch size must be at least 1");
  if (!(cfg.learning_rate >= 0.0)) throw ConfigError("learning rate must be non-negative");
  if (!(cfg.momentum >= 0.0 && cfg.momentum < 1.0)) throw ConfigError("momentum must be in [0, 1)");
  if (!cfg.freeze_backbone) throw ConfigError("only head training with a frozen backbone is supported");
}

void sgd_momentum_step(std::span<float> params, std::span<const float> grads, std::span<float> velocity,
                       double learning_rate, double momentum) {
  if (params.size() != grads.size() || params.size() != velocity.size()) {
    throw ShapeError("sgd: parameter, gradient and velocity lengths differ");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double v = momentum * velocity[i] - learning_rate * grads[i];
    velocity[i] = static_cast<float>(v);
    params[i] = static_cast<float>(params[i] + v);
  }
}

Evaluation evaluate(const ModelSpec& m, const Dataset& data, std::span<const std::size_t> rows,
                    std::size_t batch_size) {
  if (rows.empty()) return {};
  if (batch_size == 0) throw ConfigError("batch size must be positive");
  double loss_sum = 0.0;
  std::size_t correct = 0;
  std::vector<std::size_t> labels;
  for (std::size_t start = 0; start < rows.size(); start += batch_size) {
    const std::size_t end = std::min(rows.size(), start + batch_size);
    std::vector<const RgbImage*> images;
    labels.clear();
    for (std::size_t i = start; i < end; ++i) {
      images.push_back(&data.images[rows[i]].pixels);
      labels.push_back(class_code(data.images[rows[i]].label));
    }
    const Tensor probs = forward(m, to_model_input(images, m.input_size()));
    loss_sum += cross_entropy(probs, labels) * static_cast<double>(labels.size());
    correct += correct_predictions(probs, labels);
  }
  const auto n = static_cast<double>(rows.size());
  return {static_cast<double>(correct) / n, loss_sum / n};
}

Evaluation evaluate(const ModelSpec& m, const Dataset& data, Split split, std::size_t batch_size) {
  const auto rows = data.manifest.indices(split);
  return evaluate(m, data, rows, batch_size);
}

TrainingReport transfer_train(ModelSpec& model, const Dataset& data, const TrainingConfig& cfg) {
  validate(cfg);
  validate(model);
  if (data.images.size() != data.manifest.entries.size()) throw DataError("manifest and pixels disagree");
  const HeadView head_view = find_head(model);
  auto& head = std::get<DenseParams>(model.nodes[head_view.dense_index].params);
  if (head.out_features() != kNumClasses) {
    throw ConfigError("model predicts " + std::to_string(head.out_features()) + " classes, dataset has " +
                      std::to_string(kNumClasses));
  }
  const auto train_rows = data.manifest.indices(Split::kTrain);
  const auto val_rows = data.manifest.indices(Split::kValidation);
  const auto test_rows = data.manifest.indices(Split::kTest);
  if (train_rows.empty()) throw DataError("training split is empty");

  Rng init_rng = Rng(cfg.seed).child(kHeadInitStream);
  const double stddev = std::sqrt(2.0 / static_cast<double>(head.in_features()));
  for (float& w : head.weights.data()) w = static_cast<float>(init_rng.normal(0.0, stddev));
  head.bias.fill(0.0f);

  const std::size_t extract_batch = std::max<std::size_t>(cfg.batch_size, 16);
  const FeatureTable train = extract_features(model, head_view.feature_id, data, train_rows, extract_batch);
  const FeatureTable val = extract_features(model, head_view.feature_id, data, val_rows, extract_batch);

  Tensor vel_w(head.weights.dims());
  Tensor vel_b(head.bias.dims());
  TrainingReport report;
  report.architecture_name = model.architecture_name;
  report.config = cfg;
  std::vector<std::size_t> labels;

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    Rng epoch_rng = Rng(cfg.seed).child(epoch + 1);
    const auto order = rng_shuffle(epoch_rng, train.rows());
    double loss_sum = 0.0;
    std::size_t correct = 0;
    std::size_t batch_index = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size, ++batch_index) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      const Tensor x = gather(train, order, start, end, labels);
      const Tensor logits = dense_forward(x, head);
      const Tensor probs = softmax(logits);
      const double loss = cross_entropy(probs, labels);
      if (non_finite(logits) || !std::isfinite(loss)) {
        std::ostringstream os;
        os << "non-finite loss at epoch " << epoch << ", batch " << batch_index << " (max |logit| "
           << max_abs(logits) << ")";
        throw NumericError(os.str());
      }
      loss_sum += loss * static_cast<double>(labels.size());
      correct += correct_predictions(probs, labels);

      const DenseGrads g = dense_backward(x, head, softmax_xent_backward(logits, labels));
      sgd_momentum_step(head.weights.data(), g.weights.data(), vel_w.data(), cfg.learning_rate, cfg.momentum);
      sgd_momentum_step(head.bias.data(), g.bias.data(), vel_b.data(), cfg.learning_rate, cfg.momentum);
    }
    EpochMetrics em;
    em.epoch_index = epoch;
    em.train_loss = loss_sum / static_cast<double>(order.size());
    em.train_accuracy = static_cast<double>(correct) / static_cast<double>(order.size());
    const Evaluation v = evaluate_head(head, val, extract_batch);
    em.validation_loss = v.mean_loss;
    em.validation_accuracy = v.accuracy;
    em.seconds_elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    report.per_epoch.push_back(em);
  }

  if (!test_rows.empty()) {
    const Evaluation t = evaluate_head(
        head, extract_features(model, head_view.feature_id, data, test_rows, extract_batch), extract_batch);
    report.test_accuracy = t.accuracy;
    report.test_loss = t.mean_loss;
  }
  const EpochMetrics& last = report.per_epoch.back();
  report.final_validation_accuracy = last.validation_accuracy;
  report.final_loss = last.train_loss;
  double total = 0.0;
  for (const auto& e : report.per_epoch) total += e.seconds_elapsed;
  report.mean_seconds_per_epoch = total / static_cast<double>(report.per_epoch.size());
  return report;
}

std::string report_to_json(const TrainingReport& r) {
  nlohmann::ordered_json doc;
  doc["architectureName"] = r.architecture_name;
  doc["config"] = {{"epochs", r.config.epochs},
                   {"batchSize", r.config.batch_size},
                   {"learningRate", r.config.learning_rate},
                   {"momentum", r.config.momentum},
                   {"seed", r.config.seed},
                   {"freezeBackbone", r.config.freeze_backbone}};
  auto epochs = nlohmann::ordered_json::array();
  for (const auto& e : r.per_epoch) {
    epochs.push_back({{"epochIndex", e.epoch_index},
                      {"trainLoss", e.train_loss},
                      {"trainAccuracy", e.train_accuracy},
                      {"validationLoss", e.validation_loss},
                      {"validationAccuracy", e.validation_accuracy},
                      {"secondsElapsed", e.seconds_elapsed}});
  }
  doc["perEpoch"] = std::move(epochs);
  doc["finalValidationAccuracy"] = r.final_validation_accuracy;
  doc["testAccuracy"] = r.test_accuracy;
  doc["testLoss"] = r.test_loss;
  doc["finalLoss"] = r.final_loss;
  doc["meanSecondsPerEpoch"] = r.mean_seconds_per_epoch;
  return doc.dump(2) + "\n";
}

std::string report_to_table(const TrainingReport& r) {
  char row[256];
  std::string out;
  std::snprintf(row, sizeof row, "%-16s %-21s %-15s %-7s %-15s %-8s\n", "Model", "Validation accuracy",
                "Test accuracy", "Epoch", "Time(s/epoch)", "Loss");
  out += row;
  std::snprintf(row, sizeof row, "%-16s %-21.4f %-15.4f %-7zu %-15.3f %-8.4f\n", r.architecture_name.c_str(),
                r.final_validation_accuracy, r.test_accuracy, r.per_epoch.size(), r.mean_seconds_per_epoch,
                r.final_loss);
  out += row;
  return out;
}

}  // namespace fusi
