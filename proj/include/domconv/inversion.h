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

#ifndef DOMCONV_INVERSION_H_
#define DOMCONV_INVERSION_H_

// Textual inversion by nearest-neighbor lookup in a word vocabulary, with
// optional expansion of the query through proxy images from a visual memory.

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "domconv/store.h"

namespace domconv {

// Similarity at or above which a memory row is treated as a copy of the
// query and skipped during proxy expansion.
inline constexpr double kDuplicateSimilarity = 1.0 - 1e-6;

enum class ProxySource { kQuery, kMemory };

struct Proxy {
  ProxySource source = ProxySource::kQuery;
  std::optional<std::size_t> memory_index;
  std::span<const float> embedding;
};

struct ProxySet {
  // entries[0] is always the query.
  std::vector<Proxy> entries;
  std::size_t k = 1;
  // Set when k > 1 was requested against an empty memory.
  bool memory_empty = false;
};

enum class LabelProvenance { kPlain, kExpanded, kOracle };

// A term is a vocabulary word id, or an auxiliary class-name term when the
// id is at or above the vocabulary size (see EmbeddingProvider).
struct Label {
  WordId word = 0;
  double weight = 1.0;

  friend bool operator==(const Label&, const Label&) = default;
};

// Labels in nonincreasing weight order with unique, positive-weight words.
struct LabelSet {
  std::vector<Label> labels;
  LabelProvenance provenance = LabelProvenance::kPlain;

  std::size_t size() const { return labels.size(); }
  bool empty() const { return labels.empty(); }
};

// The m nearest vocabulary words to `y`, all with weight 1.
LabelSet NnInvert(std::span<const float> y, const TextMemory& text_memory,
                  std::size_t m);

// The query plus its k-1 nearest memory rows, skipping copies of the query.
ProxySet ExpandProxies(std::span<const float> y, const VisualMemory& memory,
                       std::size_t k);

// Per-word occurrence counts over the n-nearest-word lists of every proxy.
struct WordCount {
  WordId word = 0;
  std::size_t count = 0;
  // Similarity of the word to the original query, used for tie-breaking.
  double query_similarity = 0.0;
};

// Counts of every word that occurs in some proxy's n-nearest list, sorted by
// descending count, then descending query similarity, then ascending id.
std::vector<WordCount> CountProxyWords(std::span<const float> y,
                                       const ProxySet& proxies,
                                       const TextMemory& text_memory,
                                       std::size_t n);

// Expanded inversion: the m most frequent words over the proxies' n-nearest
// lists, weighted by count / max count.
LabelSet ExpandedInvert(std::span<const float> y, const VisualMemory& memory,
                        const TextMemory& text_memory, std::size_t k,
                        std::size_t n, std::size_t m);

// Derived memory without the `ell` active words nearest to `anchor`.
TextMemory RemoveNearestWords(const TextMemory& text_memory,
                              std::span<const float> anchor, std::size_t ell);

enum class InjectMode { kAppend, kReplaceAll };

// Adds `word` to the labels (kAppend) or replaces them with it (kReplaceAll,
// weight forced to 1). Appending a word that is already present adds to its
// weight. `term_count` bounds valid ids.
LabelSet InjectLabel(const LabelSet& labels, WordId word, double weight,
                     InjectMode mode, std::size_t term_count);

}  // namespace domconv

#endif  // DOMCONV_INVERSION_H_
