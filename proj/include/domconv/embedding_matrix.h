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

#ifndef DOMCONV_EMBEDDING_MATRIX_H_
#define DOMCONV_EMBEDDING_MATRIX_H_

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace domconv {

// Maximum allowed deviation of a row norm from 1.
inline constexpr double kUnitNormTolerance = 1e-3;

// Dense row-major matrix of 32-bit floats. Rows are expected to be unit
// vectors; construction only checks the shape; use ValidateUnitRows() or
// the loaders for the norm invariant.
class EmbeddingMatrix {
 public:
  EmbeddingMatrix(std::size_t rows, std::size_t dim, std::vector<float> data);

  std::size_t rows() const { return rows_; }
  std::size_t dim() const { return dim_; }

  std::span<const float> row(std::size_t i) const {
    return {data_.data() + i * dim_, dim_};
  }
  std::span<const float> data() const { return data_; }

  friend bool operator==(const EmbeddingMatrix&,
                         const EmbeddingMatrix&) = default;

 private:
  std::size_t rows_;
  std::size_t dim_;
  std::vector<float> data_;
};

// Euclidean norm accumulated in double precision.
double Norm(std::span<const float> v);

// First row whose norm is outside [1 - tol, 1 + tol], if any.
std::optional<std::size_t> FindNonUnitRow(const EmbeddingMatrix& m,
                                          double tol = kUnitNormTolerance);

// Throws NormalizationError naming the first offending row.
void ValidateUnitRows(const EmbeddingMatrix& m,
                      double tol = kUnitNormTolerance);

// Copy of `m` with every row divided by its norm. Zero rows throw
// NormalizationError.
EmbeddingMatrix Renormalized(const EmbeddingMatrix& m);

// Unit-length copy of `v`. Throws DegenerateQueryError when the norm is
// below `min_norm`.
std::vector<float> Normalized(std::span<const double> v,
                              double min_norm = 1e-12);
std::vector<float> Normalized(std::span<const float> v,
                              double min_norm = 1e-12);

}  // namespace domconv

#endif  // DOMCONV_EMBEDDING_MATRIX_H_
