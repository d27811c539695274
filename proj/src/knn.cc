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

#include "domconv/knn.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "domconv/errors.h"
#include "domconv/parallel.h"

#if defined(__AVX512F__) || (defined(__AVX2__) && defined(__FMA__))
#include <immintrin.h>
#endif

namespace domconv {

namespace {

constexpr std::size_t kRowGrain = 2048;

// Every dot product uses the same summation order: lane j (of 8) accumulates
// elements j, j + 8, ... with multiply-adds, then the lanes are summed
// pairwise. All kernels of a build perform identical operations, so scores
// do not depend on tiling or threading.
constexpr std::size_t kLanes = 8;

// Fused where the target has an instruction for it; std::fma is a slow
// library call otherwise.
inline double MulAdd(double a, double b, double acc) {
#if defined(__FMA__) || defined(FP_FAST_FMA)
  return std::fma(a, b, acc);
#else
  return a * b + acc;
#endif
}

#if defined(__AVX512F__)
struct Lanes {
  __m512d v;
};
inline Lanes Zero() { return {_mm512_setzero_pd()}; }
inline Lanes Load(const double* p) { return {_mm512_loadu_pd(p)}; }
inline Lanes Load(const float* p) {
  return {_mm512_cvtps_pd(_mm256_loadu_ps(p))};
}
inline void Fma(const Lanes& a, const Lanes& b, Lanes& acc) {
  acc.v = _mm512_fmadd_pd(a.v, b.v, acc.v);
}
inline void Store(const Lanes& a, double* p) { _mm512_storeu_pd(p, a.v); }
// Tile of query x row accumulators held in registers.
constexpr std::size_t kTileQueries = 5;
constexpr std::size_t kTileRows = 4;
#elif defined(__AVX2__) && defined(__FMA__)
struct Lanes {
  __m256d lo, hi;
};
inline Lanes Zero() { return {_mm256_setzero_pd(), _mm256_setzero_pd()}; }
inline Lanes Load(const double* p) {
  return {_mm256_loadu_pd(p), _mm256_loadu_pd(p + 4)};
}
inline Lanes Load(const float* p) {
  return {_mm256_cvtps_pd(_mm_loadu_ps(p)), _mm256_cvtps_pd(_mm_loadu_ps(p + 4))};
}
inline void Fma(const Lanes& a, const Lanes& b, Lanes& acc) {
  acc.lo = _mm256_fmadd_pd(a.lo, b.lo, acc.lo);
  acc.hi = _mm256_fmadd_pd(a.hi, b.hi, acc.hi);
}
inline void Store(const Lanes& a, double* p) {
  _mm256_storeu_pd(p, a.lo);
  _mm256_storeu_pd(p + 4, a.hi);
}
constexpr std::size_t kTileQueries = 3;
constexpr std::size_t kTileRows = 2;
#else
struct Lanes {
  double v[kLanes];
};
inline Lanes Zero() { return {}; }
template <typename T>
inline Lanes Load(const T* p) {
  Lanes out;
  std::copy(p, p + kLanes, out.v);
  return out;
}
inline void Fma(const Lanes& a, const Lanes& b, Lanes& acc) {
  for (std::size_t j = 0; j < kLanes; ++j) {
    acc.v[j] = MulAdd(a.v[j], b.v[j], acc.v[j]);
  }
}
inline void Store(const Lanes& a, double* p) { std::copy(a.v, a.v + kLanes, p); }
constexpr std::size_t kTileQueries = 2;
constexpr std::size_t kTileRows = 2;
#endif

// Finishes the elements past the last full chunk and reduces the lanes.
template <typename T>
inline double Finish(const Lanes& acc, const double* a, const T* b,
                     std::size_t from, std::size_t d) {
  double lanes[kLanes];
  Store(acc, lanes);
  for (std::size_t i = from, j = 0; i < d; ++i, ++j) {
    lanes[j] = MulAdd(a[i], static_cast<double>(b[i]), lanes[j]);
  }
  for (std::size_t width = kLanes / 2; width > 0; width /= 2) {
    for (std::size_t j = 0; j < width; ++j) lanes[j] += lanes[j + width];
  }
  return lanes[0];
}

// out[q * R + r] = <queries[q], rows[r]> for a full Q x R tile.
template <std::size_t Q, std::size_t R, typename T>
inline void DotTile(const double* const* queries, const T* const* rows,
                    std::size_t d, double* out) {
  Lanes acc[Q][R];
  for (auto& row : acc) {
    for (auto& a : row) a = Zero();
  }
  std::size_t i = 0;
  for (; i + kLanes <= d; i += kLanes) {
    Lanes r[R];
    for (std::size_t k = 0; k < R; ++k) r[k] = Load(rows[k] + i);
    for (std::size_t q = 0; q < Q; ++q) {
      const Lanes x = Load(queries[q] + i);
      for (std::size_t k = 0; k < R; ++k) Fma(x, r[k], acc[q][k]);
    }
  }
  for (std::size_t q = 0; q < Q; ++q) {
    for (std::size_t k = 0; k < R; ++k) {
      out[q * R + k] = Finish(acc[q][k], queries[q], rows[k], i, d);
    }
  }
}

inline double DotRaw(const float* a, const float* b, std::size_t d) {
  const std::vector<double> wide(a, a + d);
  const double* query = wide.data();
  double out = 0.0;
  DotTile<1, 1>(&query, &b, d, &out);
  return out;
}

void CheckDim(std::size_t query_dim, const EmbeddingMatrix& matrix) {
  if (query_dim != matrix.dim()) {
    std::ostringstream msg;
    msg << "query has dim " << query_dim << " but matrix has dim "
        << matrix.dim();
    throw MismatchError(msg.str());
  }
}

}  // namespace

double Dot(std::span<const float> a, std::span<const float> b) {
  if (a.size() != b.size()) {
    throw MismatchError("dot product of vectors with different dims");
  }
  return DotRaw(a.data(), b.data(), a.size());
}

std::vector<double> AllScores(std::span<const float> query,
                              const EmbeddingMatrix& matrix) {
  CheckDim(query.size(), matrix);
  std::vector<double> scores(matrix.rows());
  const std::size_t d = matrix.dim();
  const float* base = matrix.data().data();
  const std::vector<double> wide(query.begin(), query.end());
  const double* query_ptr = wide.data();
  ParallelFor(matrix.rows(), kRowGrain, [&](std::size_t begin, std::size_t end) {
    constexpr std::size_t kRows = 4;
    const float* rows[kRows];
    double out[kRows];
    std::size_t i = begin;
    for (; i + kRows <= end; i += kRows) {
      for (std::size_t k = 0; k < kRows; ++k) rows[k] = base + (i + k) * d;
      DotTile<1, kRows>(&query_ptr, rows, d, out);
      std::copy(out, out + kRows, scores.begin() + i);
    }
    for (; i < end; ++i) {
      rows[0] = base + i * d;
      DotTile<1, 1>(&query_ptr, rows, d, out);
      scores[i] = out[0];
    }
  });
  return scores;
}

std::vector<std::vector<double>> AllScoresBatch(
    std::span<const std::span<const float>> queries,
    const EmbeddingMatrix& matrix) {
  for (const auto& q : queries) CheckDim(q.size(), matrix);
  std::vector<std::vector<double>> scores(
      queries.size(), std::vector<double>(matrix.rows()));
  if (queries.empty() || matrix.rows() == 0) return scores;
  const std::size_t d = matrix.dim();
  const float* base = matrix.data().data();
  std::vector<double> wide;
  wide.reserve(queries.size() * d);
  for (const auto& q : queries) wide.insert(wide.end(), q.begin(), q.end());
  // Partial tiles repeat their last query or row; the extra results are
  // dropped.
  std::vector<const double*> query_ptrs;
  const std::size_t query_tiles =
      (queries.size() + kTileQueries - 1) / kTileQueries;
  for (std::size_t q = 0; q < query_tiles * kTileQueries; ++q) {
    query_ptrs.push_back(wide.data() + std::min(q, queries.size() - 1) * d);
  }
  ParallelFor(matrix.rows(), kRowGrain, [&](std::size_t begin, std::size_t end) {
    std::vector<double> rows(kTileRows * d);
    const double* row_ptrs[kTileRows];
    double out[kTileQueries * kTileRows];
    for (std::size_t block = begin; block < end; block += kTileRows) {
      const std::size_t count = std::min(kTileRows, end - block);
      std::copy(base + block * d, base + (block + count) * d, rows.begin());
      for (std::size_t k = 0; k < kTileRows; ++k) {
        row_ptrs[k] = rows.data() + std::min(k, count - 1) * d;
      }
      for (std::size_t t = 0; t < query_tiles; ++t) {
        DotTile<kTileQueries, kTileRows>(query_ptrs.data() + t * kTileQueries, row_ptrs, d, out);
        for (std::size_t q = 0; q < kTileQueries; ++q) {
          const std::size_t query = t * kTileQueries + q;
          if (query >= queries.size()) break;
          for (std::size_t k = 0; k < count; ++k) {
            scores[query][block + k] = out[q * kTileRows + k];
          }
        }
      }
    }
  });
  return scores;
}

std::vector<Neighbor> SelectTopK(std::span<const double> scores, std::size_t k,
                                 const std::vector<bool>* excluded) {
  if (k == 0) throw InvalidArgumentError("k must be at least 1");
  const bool filter = excluded != nullptr && !excluded->empty();
  std::vector<Neighbor> candidates;
  candidates.reserve(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (filter && (*excluded)[i]) continue;
    candidates.push_back({i, scores[i]});
  }
  const std::size_t keep = std::min(k, candidates.size());
  std::partial_sort(candidates.begin(), candidates.begin() + keep,
                    candidates.end(), RanksBefore);
  candidates.resize(keep);
  return candidates;
}

std::vector<Neighbor> TopK(std::span<const float> query,
                           const EmbeddingMatrix& matrix, std::size_t k,
                           const std::vector<bool>* excluded) {
  if (k == 0) throw InvalidArgumentError("k must be at least 1");
  return SelectTopK(AllScores(query, matrix), k, excluded);
}

std::vector<std::vector<Neighbor>> TopKBatch(
    std::span<const std::span<const float>> queries,
    const EmbeddingMatrix& matrix, std::size_t k,
    const std::vector<bool>* excluded) {
  if (k == 0) throw InvalidArgumentError("k must be at least 1");
  const auto scores = AllScoresBatch(queries, matrix);
  std::vector<std::vector<Neighbor>> out;
  out.reserve(scores.size());
  for (const auto& s : scores) out.push_back(SelectTopK(s, k, excluded));
  return out;
}

std::vector<std::size_t> RankAll(std::span<const double> scores) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return scores[a] > scores[b] || (scores[a] == scores[b] && a < b);
  });
  return order;
}

}  // namespace domconv
