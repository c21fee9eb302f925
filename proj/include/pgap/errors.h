// Copyright 2026 The pgap Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef PGAP_ERRORS_H_
#define PGAP_ERRORS_H_

#include <stdexcept>
#include <string>

namespace pgap {

// Root of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Operand shapes do not conform.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// Non-finite values or an iterative routine that failed to converge.
class NumericError : public Error {
 public:
  using Error::Error;
};

// Malformed text input (CSV, config).
class ParseError : public Error {
 public:
  using Error::Error;
};

// File system failures.
class IoError : public Error {
 public:
  using Error::Error;
};

// Binary file with the wrong magic, version, or a corrupted body.
class FormatError : public Error {
 public:
  using Error::Error;
};

// Invalid configuration values or unknown keys.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Operation invoked in a state that does not satisfy its precondition.
class StateError : public Error {
 public:
  using Error::Error;
};

// Broken internal invariant, e.g. parameters not restored after a probe.
class InternalError : public Error {
 public:
  using Error::Error;
};

}  // namespace pgap

#endif  // PGAP_ERRORS_H_
