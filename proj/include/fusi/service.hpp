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

// Offline HTTP inference service.
//
//   POST /v1/classify    multipart field "image" or JSON {"image_b64", "threshold"}
//   GET  /v1/health      {"status":"ok","model":name}
//   GET  /v1/model-info  header summary of the loaded artifact
//
// Every error is a JSON body {"code", "message"}.

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fusi/diagnosis.hpp"
#include "fusi/graph.hpp"
#include "fusi/model_file.hpp"

namespace fusi {

inline constexpr std::size_t kMaxRequestBytes = std::size_t{10} << 20;

struct ServiceOptions {
  std::string bind_address = "127.0.0.1";
  int port = 8080;  // 0 picks a free port
  std::optional<std::string> cors_origin;
  double default_threshold = kDefaultThreshold;
};

/// Returns nullopt on any character outside the standard alphabet or bad padding.
/// Whitespace is ignored.
std::optional<std::vector<std::uint8_t>> base64_decode(std::string_view text);
std::string base64_encode(std::span<const std::uint8_t> bytes);

/// Single-line JSON shared by the service and `fusi classify --json`.
std::string classify_response_json(const Diagnosis& d, const std::string& model_name, double latency_ms);
std::string error_json(std::string_view code, std::string_view message);

class InferenceService {
 public:
  InferenceService(ModelSpec model, ModelInfo info, ServiceOptions options);
  ~InferenceService();
  InferenceService(const InferenceService&) = delete;
  InferenceService& operator=(const InferenceService&) = delete;

  /// Binds the socket; throws ConfigError when the address or port is unusable.
  /// Returns the bound port.
  int bind();
  /// Blocks serving requests until stop().
  void run();
  void stop();
  int port() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace fusi
