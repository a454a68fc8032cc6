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

// Runs an InferenceService on a free loopback port for the duration of a test.

#include <httplib.h>

#include <cstddef>
#include <cstdint>
#include <memory>
#include <string>
#include <thread>
#include <vector>

#include "fusi/service.hpp"

namespace fusi::testing {

class ServiceHarness {
 public:
  explicit ServiceHarness(ModelSpec model, ServiceOptions options = {});
  ~ServiceHarness();

  int port() const { return port_; }
  httplib::Client client() const;

 private:
  std::unique_ptr<InferenceService> service_;
  std::thread thread_;
  int port_ = 0;
};

struct FuzzOutcome {
  std::size_t requests = 0;
  std::size_t unexpected_status = 0;  // outside {400, 413, 422}
  std::size_t malformed_error_body = 0;
  std::size_t transport_failures = 0;
  std::vector<std::string> examples;  // first few offending cases
};

/// Sends `count` malformed POST /v1/classify requests drawn from a mix of
/// generators: random bytes under assorted content types, broken JSON, bad
/// base64, non-image payloads, broken multipart bodies, bad thresholds and a
/// few bodies over the size cap.
FuzzOutcome fuzz_classify(int port, std::size_t count, std::uint64_t seed);

}  // namespace fusi::testing
