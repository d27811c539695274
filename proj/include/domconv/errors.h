// Copyright 2026 The Domconv Authors.
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

#ifndef DOMCONV_ERRORS_H_
#define DOMCONV_ERRORS_H_

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

namespace domconv {

// Base of every error raised on bad input data. The CLI maps these to exit
// code 2.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad magic, version, dtype or malformed text/JSON input.
class FormatError : public Error {
 public:
  using Error::Error;
};

// Payload shorter or longer than the header declares.
class CorruptionError : public Error {
 public:
  using Error::Error;
};

class NormalizationError : public Error {
 public:
  // `source` names the file or store the row came from, if known.
  NormalizationError(std::size_t row, double norm, std::string_view source = {});

  std::size_t row() const { return row_; }
  double norm() const { return norm_; }

 private:
  std::size_t row_;
  double norm_;
};

// Inconsistent shapes or counts between stores, or a missing composed table.
class MismatchError : public Error {
 public:
  using Error::Error;
};

// Requested operation needs a provider tier that is not configured.
class CapabilityError : public Error {
 public:
  using Error::Error;
};

// Fused query vector has (numerically) zero length.
class DegenerateQueryError : public Error {
 public:
  using Error::Error;
};

class InvalidArgumentError : public Error {
 public:
  using Error::Error;
};

}  // namespace domconv

#endif  // DOMCONV_ERRORS_H_
