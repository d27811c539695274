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

#include "domconv/errors.h"

#include <sstream>

namespace domconv {

namespace {

std::string DescribeRow(std::size_t row, double norm, std::string_view source) {
  std::ostringstream out;
  if (!source.empty()) out << source << ": ";
  out << "row " << row << " is not unit-norm (norm " << norm << ")";
  return out.str();
}

}  // namespace

NormalizationError::NormalizationError(std::size_t row, double norm,
                                       std::string_view source)
    : Error(DescribeRow(row, norm, source)), row_(row), norm_(norm) {}

}  // namespace domconv
