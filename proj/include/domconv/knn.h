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

#ifndef DOMCONV_KNN_H_
#define DOMCONV_KNN_H_

#include <cstddef>
#include <span>
#include <vector>

#include "domconv/embedding_matrix.h"

namespace domconv {

struct Neighbor {
  std::size_t index = 0;
  double score = 0.0;

  friend bool operator==(const Neighbor&, const Neighbor&) = default;
};

// Ranking order used everywhere: higher score first, then lower index.
inline bool RanksBefore(const Neighbor& a, const Neighbor& b) {
  return a.score > b.score || (a.score == b.score && a.index < b.index);
}

// Dot product of float vectors with double accumulation. The summation order
// is fixed, so the result does not depend on threading.
double Dot(std::span<const float> a, std::span<const float> b);

// score[i] = <query, row i>. Throws MismatchError on dimension mismatch.
std::vector<double> AllScores(std::span<const float> query,
                              const EmbeddingMatrix& matrix);

// Scores of several queries against the same matrix in one pass over its
// rows; result[q][i] = <queries[q], row i>.
std::vector<std::vector<double>> AllScoresBatch(
    std::span<const std::span<const float>> queries,
    const EmbeddingMatrix& matrix);

// The min(k, candidates) best rows by RanksBefore. Rows whose flag is set in
// `excluded` (when non-null and non-empty) are not candidates.
std::vector<Neighbor> SelectTopK(std::span<const double> scores, std::size_t k,
                                 const std::vector<bool>* excluded = nullptr);

// Exact top-k cosine search over pre-normalized rows. k must be >= 1.
std::vector<Neighbor> TopK(std::span<const float> query,
                           const EmbeddingMatrix& matrix, std::size_t k,
                           const std::vector<bool>* excluded = nullptr);

std::vector<std::vector<Neighbor>> TopKBatch(
    std::span<const std::span<const float>> queries,
    const EmbeddingMatrix& matrix, std::size_t k,
    const std::vector<bool>* excluded = nullptr);

// Every index of `scores` in ranking order.
std::vector<std::size_t> RankAll(std::span<const double> scores);

}  // namespace domconv

#endif  // DOMCONV_KNN_H_
