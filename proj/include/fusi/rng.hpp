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
#include <vector>

namespace fusi {

/// One splitmix64 step applied to `x`: advance by the golden gamma and mix.
std::uint64_t splitmix64(std::uint64_t x);

/// splitmix64 generator. Single owner; never share one across threads, derive
/// a child instead.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64();

  /// [0, 1) from the top 53 bits.
  double uniform();
  double uniform(double lo, double hi);

  /// Box-Muller, one draw per call (the paired sample is discarded).
  double normal(double mean, double stddev);

  /// Integer in [0, n). n must be positive.
  std::size_t below(std::size_t n);

  /// Independent stream seeded with splitmix64(state + stream_id).
  Rng child(std::uint64_t stream_id) const;

  std::uint64_t state() const { return state_; }

 private:
  std::uint64_t state_;
};

/// Fisher-Yates permutation of 0..n-1.
std::vector<std::size_t> rng_shuffle(Rng& rng, std::size_t n);

}  // namespace fusi
