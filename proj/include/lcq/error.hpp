// Copyright 2026 The LCQ Authors
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

namespace lcq {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed N-Triples or query text. `line` and `column` are 1-based; 0 when
// the location is not known.
class ParseError : public Error {
 public:
  ParseError(const std::string& message, std::size_t line, std::size_t column = 0)
      : Error(format(message, line, column)), line_(line), column_(column) {}

  std::size_t line() const { return line_; }
  std::size_t column() const { return column_; }

 private:
  static std::string format(const std::string& message, std::size_t line, std::size_t column) {
    if (line == 0) return message;
    std::string out = "line " + std::to_string(line);
    if (column != 0) out += ", column " + std::to_string(column);
    return out + ": " + message;
  }

  std::size_t line_;
  std::size_t column_;
};

// Query uses SPARQL outside the supported subset. The message is exactly
// "unsupported construct: <NAME>".
class UnsupportedConstruct : public Error {
 public:
  explicit UnsupportedConstruct(const std::string& construct)
      : Error("unsupported construct: " + construct), construct_(construct) {}
  const std::string& construct() const { return construct_; }

 private:
  std::string construct_;
};

class InvalidIri : public Error {
 public:
  using Error::Error;
};

// A caller broke a documented precondition.
class ContractViolation : public Error {
 public:
  using Error::Error;
};

// Network or broker failure. Retryable.
class TransportError : public Error {
 public:
  using Error::Error;
};

// The server truncated change-log events the client still needs; the client
// has to start over with an initial sync.
class LogTruncated : public Error {
 public:
  using Error::Error;
};

class DecodeError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace lcq
