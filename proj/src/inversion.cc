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

#include "domconv/inversion.h"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <unordered_map>

#include "domconv/errors.h"
#include "domconv/knn.h"

namespace domconv {

namespace {

void RequireCount(std::size_t value, const char* name) {
  if (value == 0) {
    throw InvalidArgumentError(std::string(name) + " must be at least 1");
  }
}

void RequireVocabulary(const TextMemory& text_memory, std::size_t dim) {
  if (text_memory.active_size() == 0) {
    throw InvalidArgumentError("empty vocabulary");
  }
  if (text_memory.dim() != dim) {
    std::ostringstream msg;
    msg << "query has dim " << dim << " but the vocabulary has dim "
        << text_memory.dim();
    throw MismatchError(msg.str());
  }
}

}  // namespace

LabelSet NnInvert(std::span<const float> y, const TextMemory& text_memory,
                  std::size_t m) {
  RequireCount(m, "m");
  RequireVocabulary(text_memory, y.size());
  LabelSet out;
  out.provenance = LabelProvenance::kPlain;
  for (const auto& nb :
       TopK(y, text_memory.embeddings(), m, &text_memory.removed_mask())) {
    out.labels.push_back({static_cast<WordId>(nb.index), 1.0});
  }
  return out;
}

ProxySet ExpandProxies(std::span<const float> y, const VisualMemory& memory,
                       std::size_t k) {
  RequireCount(k, "k");
  if (y.size() != memory.embeddings().dim()) {
    std::ostringstream msg;
    msg << "query has dim " << y.size() << " but the visual memory has dim "
        << memory.embeddings().dim();
    throw MismatchError(msg.str());
  }
  ProxySet proxies;
  proxies.k = k;
  proxies.entries.push_back({ProxySource::kQuery, std::nullopt, y});
  if (k == 1) return proxies;
  if (memory.size() == 0) {
    proxies.memory_empty = true;
    return proxies;
  }

  const auto scores = AllScores(y, memory.embeddings());
  const auto duplicates = static_cast<std::size_t>(
      std::count_if(scores.begin(), scores.end(),
                    [](double s) { return s >= kDuplicateSimilarity; }));
  for (const auto& nb : SelectTopK(scores, k - 1 + duplicates)) {
    if (nb.score >= kDuplicateSimilarity) continue;
    if (proxies.entries.size() == k) break;
    proxies.entries.push_back({ProxySource::kMemory, nb.index,
                               memory.embeddings().row(nb.index)});
  }
  return proxies;
}

std::vector<WordCount> CountProxyWords(std::span<const float> y,
                                       const ProxySet& proxies,
                                       const TextMemory& text_memory,
                                       std::size_t n) {
  RequireCount(n, "n");
  RequireVocabulary(text_memory, y.size());
  std::vector<std::span<const float>> queries;
  queries.reserve(proxies.entries.size());
  for (const auto& p : proxies.entries) queries.push_back(p.embedding);

  const auto lists = TopKBatch(queries, text_memory.embeddings(), n,
                               &text_memory.removed_mask());
  std::unordered_map<WordId, std::size_t> counts;
  for (const auto& list : lists) {
    for (const auto& nb : list) ++counts[static_cast<WordId>(nb.index)];
  }

  std::vector<WordCount> out;
  out.reserve(counts.size());
  for (const auto& [word, count] : counts) {
    out.push_back({word, count, Dot(y, text_memory.embedding(word))});
  }
  std::sort(out.begin(), out.end(), [](const WordCount& a, const WordCount& b) {
    if (a.count != b.count) return a.count > b.count;
    if (a.query_similarity != b.query_similarity) {
      return a.query_similarity > b.query_similarity;
    }
    return a.word < b.word;
  });
  return out;
}

LabelSet ExpandedInvert(std::span<const float> y, const VisualMemory& memory,
                        const TextMemory& text_memory, std::size_t k,
                        std::size_t n, std::size_t m) {
  RequireCount(m, "m");
  const ProxySet proxies = ExpandProxies(y, memory, k);
  const auto counts = CountProxyWords(y, proxies, text_memory, n);

  LabelSet out;
  out.provenance = LabelProvenance::kExpanded;
  const std::size_t keep = std::min(m, counts.size());
  const double max_count = static_cast<double>(counts.front().count);
  for (std::size_t i = 0; i < keep; ++i) {
    out.labels.push_back(
        {counts[i].word, static_cast<double>(counts[i].count) / max_count});
  }
  return out;
}

TextMemory RemoveNearestWords(const TextMemory& text_memory,
                              std::span<const float> anchor, std::size_t ell) {
  if (ell >= text_memory.active_size()) {
    std::ostringstream msg;
    msg << "cannot remove " << ell << " words from a vocabulary of "
        << text_memory.active_size();
    throw InvalidArgumentError(msg.str());
  }
  if (anchor.size() != text_memory.dim()) {
    throw MismatchError("anchor dim does not match the vocabulary");
  }
  if (ell == 0) return text_memory;
  std::vector<WordId> ids;
  for (const auto& nb : TopK(anchor, text_memory.embeddings(), ell,
                             &text_memory.removed_mask())) {
    ids.push_back(static_cast<WordId>(nb.index));
  }
  return text_memory.WithRemoved(ids);
}

LabelSet InjectLabel(const LabelSet& labels, WordId word, double weight,
                     InjectMode mode, std::size_t term_count) {
  if (word >= term_count) {
    throw InvalidArgumentError("invalid word id " + std::to_string(word));
  }
  if (!(weight > 0.0) || !std::isfinite(weight)) {
    throw InvalidArgumentError("injected label weight must be positive");
  }
  LabelSet out;
  out.provenance = LabelProvenance::kOracle;
  if (mode == InjectMode::kReplaceAll) {
    out.labels.push_back({word, 1.0});
    return out;
  }
  out.labels = labels.labels;
  auto it = std::find_if(out.labels.begin(), out.labels.end(),
                         [&](const Label& l) { return l.word == word; });
  if (it != out.labels.end()) {
    it->weight += weight;
  } else {
    out.labels.push_back({word, weight});
  }
  std::stable_sort(
      out.labels.begin(), out.labels.end(),
      [](const Label& a, const Label& b) { return a.weight > b.weight; });
  return out;
}

}  // namespace domconv
