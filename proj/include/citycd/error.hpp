// Copyright 2026 The citycd Authors.
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

#ifndef CITYCD_ERROR_HPP_
#define CITYCD_ERROR_HPP_

#include <stdexcept>
#include <string>

namespace citycd {

// Every failure surfaced by the library derives from Error. The CLI maps the
// concrete kind onto its exit code.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad argument to a primitive (non-finite coordinate, empty point list...).
class InvalidInput : public Error {
 public:
  using Error::Error;
};

// Invalid or inconsistent configuration: overlapping windows, unknown keys,
// strategy asking for more cities than exist.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Unreadable files and data-integrity violations.
class DataError : public Error {
 public:
  using Error::Error;
};

// Singular normal equations and similar solver failures.
class NumericalError : public Error {
 public:
  using Error::Error;
};

class DegenerateMidpoint : public InvalidInput {
 public:
  using InvalidInput::InvalidInput;
};

}  // namespace citycd

#endif  // CITYCD_ERROR_HPP_
