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
#include <stdexcept>
#include <string>

namespace fusi {

/// Root of every error the library throws. Callers that only need to report
/// a failure can catch this; the CLI maps the subclasses to exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

class LabelError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Dataset root does not have the expected class directories.
class LayoutError : public Error {
 public:
  using Error::Error;
};

class TransformError : public Error {
 public:
  using Error::Error;
};

/// Image bytes that none of the supported codecs accept.
class DecodeError : public Error {
 public:
  using Error::Error;
};

class DataError : public Error {
 public:
  using Error::Error;
};

/// Non-finite values during training. Never recovered from.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// Bad input to classify, such as an undecodable image.
class InputError : public Error {
 public:
  using Error::Error;
};

/// A failure inside the engine while running a model that validated at load.
class InternalError : public Error {
 public:
  using Error::Error;
};

enum class FormatErrorKind {
  kBadMagic,
  kUnsupportedVersion,
  kTruncated,
  kCrcMismatch,
  kBadHeader,
  kInconsistent,
};

const char* to_string(FormatErrorKind kind);

/// Model file could not be read. `offset` is the byte position in the file
/// where the problem was detected.
class FormatError : public Error {
 public:
  FormatError(FormatErrorKind kind, std::size_t offset, const std::string& what);

  FormatErrorKind kind() const { return kind_; }
  std::size_t offset() const { return offset_; }

 private:
  FormatErrorKind kind_;
  std::size_t offset_;
};

}  // namespace fusi
