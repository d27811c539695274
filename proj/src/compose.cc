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

#include "domconv/compose.h"

#include <array>
#include <cmath>
#include <sstream>
#include <utility>

#include "domconv/errors.h"
#include "domconv/knn.h"

namespace domconv {

namespace {

// Fused vectors shorter than this are treated as cancelled out.
constexpr double kMinFusedNorm = 1e-6;

void RequireLabels(const LabelSet& labels) {
  if (labels.empty()) throw InvalidArgumentError("label set is empty");
}

constexpr std::array<std::pair<Method, std::string_view>, 11> kMethodNames{{
    {Method::kText, "text"},
    {Method::kImage, "image"},
    {Method::kSum, "sum"},
    {Method::kProduct, "product"},
    {Method::kWeiCom, "weicom"},
    {Method::kSingle, "single"},
    {Method::kEarly, "early"},
    {Method::kLate, "late"},
    {Method::kFreedom, "freedom"},
    {Method::kEarlyExpanded, "early_expanded"},
    {Method::kLateExpanded, "late_expanded"},
}};

BaselineKind BaselineFor(Method method) {
  switch (method) {
    case Method::kText:
      return BaselineKind::kText;
    case Method::kImage:
      return BaselineKind::kImage;
    case Method::kSum:
      return BaselineKind::kSum;
    case Method::kProduct:
      return BaselineKind::kProduct;
    case Method::kWeiCom:
      return BaselineKind::kWeiCom;
    default:
      throw InvalidArgumentError("not a baseline method");
  }
}

}  // namespace

std::vector<float> ComposeSingle(const LabelSet& labels, DomainId domain,
                                 const EmbeddingProvider& provider) {
  RequireLabels(labels);
  return Normalized(provider.Composed(labels.labels.front().word, domain),
                    kMinFusedNorm);
}

std::string EarlyFusionText(const LabelSet& labels, DomainId domain,
                            const EmbeddingProvider& provider) {
  std::string text;
  for (const auto& label : labels.labels) {
    text += provider.TermText(label.word);
    text += ' ';
  }
  text += provider.DomainName(domain);
  return text;
}

std::vector<float> ComposeEarly(const LabelSet& labels, DomainId domain,
                                const EmbeddingProvider& provider) {
  RequireLabels(labels);
  if (labels.size() == 1) return ComposeSingle(labels, domain, provider);
  if (!provider.has_string_tier()) {
    throw CapabilityError(
        "early fusion of several labels needs a string-tier embedding "
        "provider; rerun with --provider <command>");
  }
  const auto embedding =
      provider.EmbedString(EarlyFusionText(labels, domain, provider));
  return Normalized(std::span<const float>(embedding), kMinFusedNorm);
}

std::vector<float> ComposeLate(const LabelSet& labels, DomainId domain,
                               const EmbeddingProvider& provider,
                               Weighting weighting) {
  RequireLabels(labels);
  std::vector<double> sum(provider.dim(), 0.0);
  for (const auto& label : labels.labels) {
    const double a = weighting == Weighting::kUniform ? 1.0 : label.weight;
    const auto row = provider.Composed(label.word, domain);
    if (row.size() != sum.size()) {
      throw MismatchError("composed row dim does not match the provider");
    }
    for (std::size_t i = 0; i < sum.size(); ++i) {
      sum[i] += a * static_cast<double>(row[i]);
    }
  }
  return Normalized(std::span<const double>(sum), kMinFusedNorm);
}

std::vector<double> ScoreEmbedding(std::span<const float> h,
                                   const EmbeddingMatrix& database) {
  return AllScores(h, database);
}

std::vector<double> NormalCdfTransform(std::span<const double> scores,
                                       bool* constant) {
  if (constant) *constant = false;
  if (scores.empty()) return {};
  double mean = 0.0;
  for (double s : scores) mean += s;
  mean /= static_cast<double>(scores.size());
  double var = 0.0;
  for (double s : scores) var += (s - mean) * (s - mean);
  var /= static_cast<double>(scores.size());
  const double sd = std::sqrt(var);

  std::vector<double> out(scores.size(), 0.5);
  if (!(sd > 0.0)) {
    if (constant) *constant = true;
    return out;
  }
  for (std::size_t i = 0; i < scores.size(); ++i) {
    out[i] = 0.5 * std::erfc(-(scores[i] - mean) / (sd * std::sqrt(2.0)));
  }
  return out;
}

std::vector<double> ScoreBaseline(BaselineKind kind,
                                  std::span<const float> text_embedding,
                                  std::span<const float> image_embedding,
                                  const EmbeddingMatrix& database,
                                  std::vector<std::string>* warnings) {
  switch (kind) {
    case BaselineKind::kText:
      return AllScores(text_embedding, database);
    case BaselineKind::kImage:
      return AllScores(image_embedding, database);
    case BaselineKind::kSum: {
      if (text_embedding.size() != image_embedding.size()) {
        throw MismatchError("text and image embeddings differ in dim");
      }
      std::vector<double> sum(text_embedding.size());
      for (std::size_t i = 0; i < sum.size(); ++i) {
        sum[i] = static_cast<double>(text_embedding[i]) +
                 static_cast<double>(image_embedding[i]);
      }
      return AllScores(Normalized(std::span<const double>(sum), kMinFusedNorm),
                       database);
    }
    case BaselineKind::kProduct: {
      auto text = AllScores(text_embedding, database);
      const auto image = AllScores(image_embedding, database);
      for (std::size_t i = 0; i < text.size(); ++i) text[i] *= image[i];
      return text;
    }
    case BaselineKind::kWeiCom: {
      bool text_constant = false;
      bool image_constant = false;
      auto text = NormalCdfTransform(AllScores(text_embedding, database),
                                     &text_constant);
      const auto image = NormalCdfTransform(
          AllScores(image_embedding, database), &image_constant);
      if (warnings && text_constant) {
        warnings->push_back("weicom: text scores are constant");
      }
      if (warnings && image_constant) {
        warnings->push_back("weicom: image scores are constant");
      }
      for (std::size_t i = 0; i < text.size(); ++i) text[i] += image[i];
      return text;
    }
  }
  throw InvalidArgumentError("unknown baseline");
}

std::string_view MethodName(Method method) {
  for (const auto& [m, name] : kMethodNames) {
    if (m == method) return name;
  }
  return "unknown";
}

std::optional<Method> ParseMethod(std::string_view name) {
  for (const auto& [m, n] : kMethodNames) {
    if (n == name) return m;
  }
  return std::nullopt;
}

const std::vector<Method>& AllMethods() {
  static const std::vector<Method> methods = [] {
    std::vector<Method> out;
    for (const auto& entry : kMethodNames) out.push_back(entry.first);
    return out;
  }();
  return methods;
}

bool UsesLabels(Method method) {
  switch (method) {
    case Method::kSingle:
    case Method::kEarly:
    case Method::kLate:
    case Method::kFreedom:
    case Method::kEarlyExpanded:
    case Method::kLateExpanded:
      return true;
    default:
      return false;
  }
}

bool UsesExpansion(Method method) {
  return method == Method::kFreedom || method == Method::kEarlyExpanded ||
         method == Method::kLateExpanded;
}

bool NeedsStringTier(Method method, std::size_t label_count) {
  return (method == Method::kEarly || method == Method::kEarlyExpanded) &&
         label_count > 1;
}

LabelSet InvertForMethod(std::span<const float> y, Method method,
                         const InversionParams& params,
                         const QueryStores& stores) {
  switch (method) {
    case Method::kSingle:
      return NnInvert(y, stores.text_memory, 1);
    case Method::kEarly:
    case Method::kLate:
      return NnInvert(y, stores.text_memory, params.m);
    case Method::kFreedom:
    case Method::kEarlyExpanded:
    case Method::kLateExpanded:
      return ExpandedInvert(y, stores.visual_memory, stores.text_memory,
                            params.k, params.n, params.m);
    default:
      throw InvalidArgumentError("method '" + std::string(MethodName(method)) +
                                 "' does not invert the query");
  }
}

std::vector<float> ComposeForMethod(const LabelSet& labels, Method method,
                                    DomainId domain,
                                    const EmbeddingProvider& provider) {
  switch (method) {
    case Method::kSingle:
      return ComposeSingle(labels, domain, provider);
    case Method::kEarly:
    case Method::kEarlyExpanded:
      return ComposeEarly(labels, domain, provider);
    case Method::kLate:
    case Method::kLateExpanded:
      return ComposeLate(labels, domain, provider, Weighting::kUniform);
    case Method::kFreedom:
      return ComposeLate(labels, domain, provider, Weighting::kFrequency);
    default:
      throw InvalidArgumentError("method '" + std::string(MethodName(method)) +
                                 "' does not compose labels");
  }
}

std::vector<double> RunQuery(const ComposedQuery& query, Method method,
                             const InversionParams& params,
                             const QueryStores& stores,
                             const LabelTransform* transform,
                             std::vector<std::string>* warnings) {
  if (!UsesLabels(method)) {
    std::vector<float> text;
    if (method != Method::kImage) {
      text = stores.provider.DomainText(query.target_domain);
    }
    return ScoreBaseline(BaselineFor(method), text, query.y, stores.database,
                         warnings);
  }
  LabelSet labels = InvertForMethod(query.y, method, params, stores);
  if (transform && *transform) labels = (*transform)(labels);
  return ScoreEmbedding(
      ComposeForMethod(labels, method, query.target_domain, stores.provider),
      stores.database);
}

}  // namespace domconv
