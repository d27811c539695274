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

#ifndef DOMCONV_SYNTHETIC_H_
#define DOMCONV_SYNTHETIC_H_

// Synthetic bundles with a known answer.
//
// Cluster layout (default): every (class, domain) cluster owns an orthogonal
// direction e_ct and images embed as normalize(e_ct + noise). In the text
// encoder the last domain token of a string acts as a modifier on the other
// tokens, so "object_03 style_1" lands exactly on e_31, and every other
// domain named in the string conditions them too; a bare class word is
// the normalized mean of its clusters and a bare domain word the normalized
// mean of the clusters in that domain.
//
// Factored layout: classes and domains own orthogonal axes u_c and v_t,
// images embed as normalize(u_c + domain_weight * v_t + noise) and strings
// embed as the normalized sum of their token vectors.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "domconv/provider.h"
#include "domconv/store.h"

namespace domconv {

enum class SyntheticLayout { kCluster, kFactored };

struct SyntheticConfig {
  SyntheticLayout layout = SyntheticLayout::kCluster;
  std::size_t classes = 8;
  std::size_t domains = 4;
  std::size_t dim = 64;
  // Database images per (class, domain) cluster.
  std::size_t images_per_cluster = 6;
  // Query images per (class, domain) cluster.
  std::size_t queries_per_cluster = 1;
  // Random words with no relation to any class or domain.
  std::size_t distractor_words = 64;
  // Words at a fixed angle from each class direction; see synonym_alignment.
  std::size_t synonyms_per_class = 0;
  // Cosine between a synonym and its class direction.
  double synonym_alignment = 0.8;
  // Per-coordinate standard deviation of the image noise.
  double noise = 0.05;
  // Factored layout only.
  double domain_weight = 1.0;
  // When false the bare class names are left out of the vocabulary, so the
  // oracle experiments need class tables.
  bool class_words_in_vocab = true;
  bool domain_words_in_vocab = true;
  std::uint64_t seed = 7;
};

std::string SyntheticClassName(std::size_t c);
std::string SyntheticDomainName(std::size_t t);

// Text encoder matching the bundle layout. Unknown tokens map to a direction
// derived from a hash of the token (and of the modifying domain).
class SyntheticTextEncoder final : public StringEncoder {
 public:
  explicit SyntheticTextEncoder(const SyntheticConfig& config);

  std::size_t dim() const override { return dim_; }
  std::vector<float> Encode(std::string_view text) override;
  std::vector<float> Embed(std::string_view text) const;

  const std::vector<std::string>& vocabulary() const { return vocabulary_; }

  // Unit direction of image cluster (class, domain) without noise.
  std::vector<double> ClusterDirection(std::size_t cls,
                                       std::size_t domain) const;

 private:
  enum class Kind { kClass, kSynonym, kDomain, kOther };
  struct TokenInfo {
    Kind kind = Kind::kOther;
    std::size_t index = 0;
    // Synonyms: the off-class component. Others: their fixed direction.
    std::vector<double> residual;
  };

  TokenInfo Lookup(std::string_view token) const;
  // Conditioned on the domains named in the string; the bare class when
  // `domains` is empty.
  std::vector<double> ClassVector(std::size_t cls,
                                  std::span<const std::size_t> domains) const;
  std::vector<double> DomainVector(std::size_t domain) const;
  std::vector<double> TokenVector(const TokenInfo& info, std::string_view token,
                                  std::span<const std::size_t> domains) const;

  SyntheticConfig config_;
  std::size_t dim_;
  std::unordered_map<std::string, TokenInfo> lexicon_;
  std::vector<std::string> vocabulary_;
};

Bundle MakeSyntheticBundle(const SyntheticConfig& config);

// Writes every bundle file under `dir` (created if needed) and returns the
// paths to load it with.
BundlePaths WriteSyntheticBundle(const SyntheticConfig& config,
                                 const std::filesystem::path& dir);

// Line-protocol provider loop over the synthetic encoder: reads strings
// from `in`, writes embeddings to `out`. Returns at end of input.
void ServeSyntheticProvider(const SyntheticConfig& config, std::istream& in,
                            std::ostream& out);

}  // namespace domconv

#endif  // DOMCONV_SYNTHETIC_H_
