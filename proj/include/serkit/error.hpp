// serkit/error.hpp
//
// Copyright 2026 The serkit authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef SERKIT_ERROR_HPP_
#define SERKIT_ERROR_HPP_

#include <stdexcept>
#include <string>

namespace serkit {

/// Base class for all serkit errors.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Caller passed values that violate an operation's preconditions
/// (length mismatches, out-of-range labels, non-finite inputs, ...).
class InvalidInputError : public Error {
 public:
  explicit InvalidInputError(const std::string& msg) : Error(msg) {}
};

/// A file or corpus resource is missing, malformed or inconsistent.
class DataError : public Error {
 public:
  explicit DataError(const std::string& msg) : Error(msg) {}
};

/// An API contract between modules was violated, e.g. fitting a layer
/// probe on an encoder that is not fully frozen.
class ContractError : public Error {
 public:
  explicit ContractError(const std::string& msg) : Error(msg) {}
};

/// A run-time failure inside a long-running operation (non-finite loss,
/// unavailable transcriber, output directory already locked, ...).
class RunError : public Error {
 public:
  explicit RunError(const std::string& msg) : Error(msg) {}
};

}  // namespace serkit

#endif  // SERKIT_ERROR_HPP_
