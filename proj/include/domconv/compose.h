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

#ifndef DOMCONV_COMPOSE_H_
#define DOMCONV_COMPOSE_H_

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "domconv/embedding_matrix.h"
#include "domconv/inversion.h"
#include "domconv/provider.h"
#include "domconv/store.h"

namespace domconv {

enum class Weighting { kUniform, kFrequency };

// Composed query from the first label only: "<w1> <domain>".
std::vector<float> ComposeSingle(const LabelSet& labels, DomainId domain,
                                 const EmbeddingProvider& provider);

// "<w1> <w2> ... <wm> <domain>" in label order.
std::string EarlyFusionText(const LabelSet& labels, DomainId domain,
                            const EmbeddingProvider& provider);

// Embedding of EarlyFusionText(). A single label is served from the table
// tier; more labels need the string tier.
std::vector<float> ComposeEarly(const LabelSet& labels, DomainId domain,
                                const EmbeddingProvider& provider);

// Normalized sum of a_i * embedding("<w_i> <domain>"), with a_i = 1 or the
// label weights.
std::vector<float> ComposeLate(const LabelSet& labels, DomainId domain,
                               const EmbeddingProvider& provider,
                               Weighting weighting);

std::vector<double> ScoreEmbedding(std::span<const float> h,
                                   const EmbeddingMatrix& database);

enum class BaselineKind { kText, kImage, kSum, kProduct, kWeiCom };

// Standard normal CDF of (s - mean) / std with population statistics over
// all scores. A constant vector maps to 0.5 and sets *constant.
std::vector<double> NormalCdfTransform(std::span<const double> scores,
                                       bool* constant = nullptr);

std::vector<double> ScoreBaseline(BaselineKind kind,
                                  std::span<const float> text_embedding,
                                  std::span<const float> image_embedding,
                                  const EmbeddingMatrix& database,
                                  std::vector<std::string>* warnings = nullptr);

enum class Method {
  kText,
  kImage,
  kSum,
  kProduct,
  kWeiCom,
  kSingle,
  kEarly,
  kLate,
  kFreedom,
  kEarlyExpanded,
  kLateExpanded,
};

std::string_view MethodName(Method method);
std::optional<Method> ParseMethod(std::string_view name);
const std::vector<Method>& AllMethods();
bool UsesLabels(Method method);
bool UsesExpansion(Method method);
bool NeedsStringTier(Method method, std::size_t label_count);

struct InversionParams {
  std::size_t k = 20;
  std::size_t n = 7;
  std::size_t m = 7;
};

struct ComposedQuery {
  std::string query_id;
  std::span<const float> y;
  DomainId target_domain = 0;
  // Only used to group results.
  DomainId source_domain = 0;
};

struct QueryStores {
  const EmbeddingMatrix& database;
  const TextMemory& text_memory;
  const VisualMemory& visual_memory;
  const EmbeddingProvider& provider;
};

// Applied to the inverted labels before composition (oracle experiments).
using LabelTransform = std::function<LabelSet(const LabelSet&)>;

// Labels a label-based method composes from; throws InvalidArgumentError for
// the baselines.
LabelSet InvertForMethod(std::span<const float> y, Method method,
                         const InversionParams& params,
                         const QueryStores& stores);

std::vector<float> ComposeForMethod(const LabelSet& labels, Method method,
                                    DomainId domain,
                                    const EmbeddingProvider& provider);

// Score of every database row for the composed query.
std::vector<double> RunQuery(const ComposedQuery& query, Method method,
                             const InversionParams& params,
                             const QueryStores& stores,
                             const LabelTransform* transform = nullptr,
                             std::vector<std::string>* warnings = nullptr);

}  // namespace domconv

#endif  // DOMCONV_COMPOSE_H_
