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

#include "fusi/error.hpp"

namespace fusi {

const char* to_string(FormatErrorKind kind) {
  switch (kind) {
    case FormatErrorKind::kBadMagic:
      return "bad magic";
    case FormatErrorKind::kUnsupportedVersion:
      return "unsupported version";
    case FormatErrorKind::kTruncated:
      return "truncated";
    case FormatErrorKind::kCrcMismatch:
      return "crc mismatch";
    case FormatErrorKind::kBadHeader:
      return "bad header";
    case FormatErrorKind::kInconsistent:
      return "inconsistent";
  }
  return "unknown";
}

FormatError::FormatError(FormatErrorKind kind, std::size_t offset, const std::string& what)
    : Error(std::string(to_string(kind)) + " at byte " + std::to_string(offset) + ": " + what),
      kind_(kind),
      offset_(offset) {}

}  // namespace fusi
