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

// Transfer learning: the backbone stays frozen and only the dense classifier
// head is reinitialized and trained.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fusi/dataset.hpp"
#include "fusi/graph.hpp"

namespace fusi {

struct TrainingConfig {
  std::size_t epochs = 50;
  std::size_t batch_size = 32;
  double learning_rate = 0.001;
  double momentum = 0.9;
  std::uint64_t seed = 0;
  bool freeze_backbone = true;
};

/// 50 epochs for residual models, 150 for inception ones.
TrainingConfig default_training_config(std::string_view architecture);
void validate(const TrainingConfig& cfg);

struct EpochMetrics {
  std::size_t epoch_index = 0;
  double train_loss = 0.0;
  double train_accuracy = 0.0;
  double validation_loss = 0.0;
  double validation_accuracy = 0.0;
  double seconds_elapsed = 0.0;
};

struct TrainingReport {
  std::string architecture_name;
  TrainingConfig config;
  std::vector<EpochMetrics> per_epoch;
  double final_validation_accuracy = 0.0;
  double test_accuracy = 0.0;
  double test_loss = 0.0;
  double final_loss = 0.0;
  double mean_seconds_per_epoch = 0.0;
};

struct Evaluation {
  double accuracy = 0.0;
  double mean_loss = 0.0;
};

/// v <- momentum * v - lr * g;  p <- p + v.
void sgd_momentum_step(std::span<float> params, std::span<const float> grads, std::span<float> velocity,
                       double learning_rate, double momentum);

/// Accuracy and mean cross-entropy of `m` over the given dataset rows. Never
/// touches the weights.
Evaluation evaluate(const ModelSpec& m, const Dataset& data, std::span<const std::size_t> rows,
                    std::size_t batch_size = 32);
Evaluation evaluate(const ModelSpec& m, const Dataset& data, Split split, std::size_t batch_size = 32);

/// Reinitializes the head (He-normal weights, zero bias) and trains it with
/// SGD + momentum on the train split, evaluating validation after each epoch
/// and the test split once at the end.
///
/// Backbone features are computed once per image up front; the backbone is
/// frozen and runs in inference mode, so they do not change between epochs.
TrainingReport transfer_train(ModelSpec& model, const Dataset& data, const TrainingConfig& cfg);

std::string report_to_json(const TrainingReport& report);
/// Aligned columns: Model, Validation accuracy, Test accuracy, Epoch,
/// Time(s/epoch), Loss.
std::string report_to_table(const TrainingReport& report);

}  // namespace fusi
