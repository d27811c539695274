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

#include "domconv/embedding_matrix.h"

#include <cmath>
#include <sstream>

#include "domconv/errors.h"

namespace domconv {

EmbeddingMatrix::EmbeddingMatrix(std::size_t rows, std::size_t dim,
                                 std::vector<float> data)
    : rows_(rows), dim_(dim), data_(std::move(data)) {
  if (rows_ == 0 || dim_ == 0) {
    throw FormatError("embedding matrix must have at least one row and one "
                      "dimension");
  }
  if (data_.size() != rows_ * dim_) {
    std::ostringstream msg;
    msg << "embedding matrix payload has " << data_.size()
        << " values, expected " << rows_ << " x " << dim_;
    throw CorruptionError(msg.str());
  }
}

double Norm(std::span<const float> v) {
  double sum = 0.0;
  for (float x : v) sum += static_cast<double>(x) * static_cast<double>(x);
  return std::sqrt(sum);
}

std::optional<std::size_t> FindNonUnitRow(const EmbeddingMatrix& m,
                                          double tol) {
  for (std::size_t i = 0; i < m.rows(); ++i) {
    const double norm = Norm(m.row(i));
    if (!(std::abs(norm - 1.0) <= tol)) return i;
  }
  return std::nullopt;
}

void ValidateUnitRows(const EmbeddingMatrix& m, double tol) {
  if (auto bad = FindNonUnitRow(m, tol)) {
    throw NormalizationError(*bad, Norm(m.row(*bad)));
  }
}

EmbeddingMatrix Renormalized(const EmbeddingMatrix& m) {
  std::vector<float> out(m.data().begin(), m.data().end());
  for (std::size_t i = 0; i < m.rows(); ++i) {
    const double norm = Norm(m.row(i));
    if (!(norm > 0.0) || !std::isfinite(norm)) {
      throw NormalizationError(i, norm);
    }
    for (std::size_t j = 0; j < m.dim(); ++j) {
      float& x = out[i * m.dim() + j];
      x = static_cast<float>(static_cast<double>(x) / norm);
    }
  }
  return EmbeddingMatrix(m.rows(), m.dim(), std::move(out));
}

namespace {

template <typename T>
std::vector<float> NormalizeImpl(std::span<const T> v, double min_norm) {
  double sum = 0.0;
  for (T x : v) sum += static_cast<double>(x) * static_cast<double>(x);
  const double norm = std::sqrt(sum);
  if (!(norm >= min_norm) || !std::isfinite(norm)) {
    throw DegenerateQueryError(
        "fused query vector has zero length and cannot be normalized");
  }
  std::vector<float> out(v.size());
  // Vectors that are already unit length at float precision pass through
  // unchanged, so normalizing a stored row is bitwise idempotent.
  const double scale = std::abs(norm - 1.0) <= 1e-6 ? 1.0 : norm;
  for (std::size_t i = 0; i < v.size(); ++i) {
    out[i] = static_cast<float>(static_cast<double>(v[i]) / scale);
  }
  return out;
}

}  // namespace

std::vector<float> Normalized(std::span<const double> v, double min_norm) {
  return NormalizeImpl(v, min_norm);
}

std::vector<float> Normalized(std::span<const float> v, double min_norm) {
  return NormalizeImpl(v, min_norm);
}

}  // namespace domconv
