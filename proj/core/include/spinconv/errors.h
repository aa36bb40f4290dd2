// Copyright 2026 The spinconv Authors.
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

#ifndef SPINCONV_ERRORS_H_
#define SPINCONV_ERRORS_H_

#include <stdexcept>
#include <string>

namespace spinconv {

// Root of every error thrown by the library. The CLI maps the concrete
// subclasses onto process exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Tensor shapes that do not line up (wrong rank, mismatched axes, window
// larger than input, ...).
class DimensionError : public Error {
 public:
  using Error::Error;
};

// Internal state that disagrees with its producer: stale argmax caches,
// image/label count mismatches, out-of-range cached indices.
class ConsistencyError : public Error {
 public:
  using Error::Error;
};

// Caller-supplied values outside their domain (labels, k, angle counts).
class InputError : public Error {
 public:
  using Error::Error;
};

// Run configuration rejected during validation.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Malformed file contents (bad magic, bad header).
class FormatError : public Error {
 public:
  using Error::Error;
};

// Unreadable, unwritable or truncated files.
class IoError : public Error {
 public:
  using Error::Error;
};

// Non-finite values encountered during training.
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace spinconv

#endif  // SPINCONV_ERRORS_H_
