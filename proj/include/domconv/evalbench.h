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

#ifndef DOMCONV_EVALBENCH_H_
#define DOMCONV_EVALBENCH_H_

// Domain-conversion benchmark: every query image is paired with every other
// domain as the target; an item is relevant when it has the query's class
// and the target domain.

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "domconv/compose.h"
#include "domconv/metrics.h"
#include "domconv/provider.h"
#include "domconv/store.h"

namespace domconv {

struct EvalQuery {
  ComposedQuery query;
  std::size_t query_row = 0;
  ClassId class_id = 0;
  // Database row holding the query image itself, kept out of the ranking.
  std::optional<std::size_t> excluded_row;
};

std::vector<EvalQuery> EnumerateQueries(const Bundle& bundle);

// Flags of database rows with the query's class and target domain.
std::vector<bool> RelevanceMask(const Bundle& bundle, const EvalQuery& query);

// Full ranking of database rows, without the excluded row.
std::vector<std::size_t> RankDatabase(std::span<const double> scores,
                                      std::optional<std::size_t> excluded);

struct MetricSpec {
  bool map = true;
  std::vector<std::size_t> recall_ks;
  RecallMode recall_mode = RecallMode::kProportional;

  // "map", "recall@10", ...
  std::vector<std::string> Names() const;
  // Parses "map,recall@10,recall@50".
  static MetricSpec Parse(const std::string& list);
};

struct PairMetrics {
  DomainId source = 0;
  DomainId target = 0;
  // Aligned with EvalReport::metric_names; empty optionals when no query of
  // the pair could be evaluated.
  std::vector<std::optional<double>> values;
  std::size_t n_queries = 0;
  std::size_t skipped = 0;
};

struct LatencyStats {
  double mean_ms = 0.0;
  double p50_ms = 0.0;
  double p95_ms = 0.0;
  std::size_t samples = 0;
};

struct EvalReport {
  std::string method;
  InversionParams params;
  RecallMode recall_mode = RecallMode::kProportional;
  std::vector<std::string> metric_names;
  std::vector<std::string> domain_names;
  // One entry per (source, target) pair with source != target, ordered by
  // source then target.
  std::vector<PairMetrics> pairs;
  // Indexed by source domain: mean over that source's pairs.
  std::vector<std::vector<std::optional<double>>> per_source;
  // Unweighted mean over pairs.
  std::vector<std::optional<double>> grand;
  std::size_t total_queries = 0;
  std::size_t skipped_queries = 0;
  std::vector<std::string> notices;
  std::map<std::string, std::string> file_hashes;
  std::optional<std::int64_t> seed;
  LatencyStats latency;

  std::optional<double> Grand(const std::string& metric) const;
  std::optional<double> Pair(DomainId source, DomainId target,
                             const std::string& metric) const;
};

// Scores one query, or returns nullopt to skip it (with a notice).
using QueryScorer = std::function<std::optional<std::vector<double>>(
    const EvalQuery&, std::vector<std::string>& notices)>;

struct EvalConfig {
  std::string method_label;
  InversionParams params;
  MetricSpec metrics;
};

// Runs `scorer` over `queries` (in parallel when threads allow) and reduces
// the results in query order.
EvalReport Evaluate(const Bundle& bundle, std::span<const EvalQuery> queries,
                    const QueryScorer& scorer, const EvalConfig& config);

struct BenchmarkOptions {
  Method method = Method::kFreedom;
  InversionParams params;
  MetricSpec metrics;
};

QueryStores StoresFor(const Bundle& bundle, const EmbeddingProvider& provider);

EvalReport Benchmark(const Bundle& bundle, const EmbeddingProvider& provider,
                     const BenchmarkOptions& options);

struct SweepGrid {
  std::vector<Method> methods;
  std::vector<std::size_t> ks;
  std::vector<std::size_t> ns;
  std::vector<std::size_t> ms;
};

struct SweepCell {
  Method method = Method::kFreedom;
  InversionParams params;
  std::optional<double> grand_map;
};

std::vector<SweepCell> Sweep(const Bundle& bundle,
                             const EmbeddingProvider& provider,
                             const SweepGrid& grid,
                             const MetricSpec& metrics = {});

enum class HistCategory {
  kNegative = 0,        // wrong class, wrong domain
  kPositiveObject = 1,  // right class, wrong domain
  kPositiveDomain = 2,  // wrong class, right domain
  kPositive = 3,        // right class, right domain
};

struct HistogramBin {
  double left = 0.0;
  double right = 0.0;
  std::array<std::size_t, 4> counts{};
};

struct HistogramResult {
  std::vector<HistogramBin> bins;
  std::array<std::size_t, 4> totals{};
  std::optional<double> average_precision;
};

// Equal-width bins over [min score, max score]; the maximum lands in the
// last bin.
HistogramResult BinScores(std::span<const double> scores,
                          std::span<const HistCategory> categories,
                          std::size_t bins);

HistogramResult Histogram(const Bundle& bundle,
                          const EmbeddingProvider& provider,
                          const EvalQuery& query, Method method,
                          const InversionParams& params, std::size_t bins);

enum class OracleKind {
  kInjectInlier,
  kInjectOutlier,
  kUpperBound,
  kRemoveWords,
};

std::string_view OracleName(OracleKind kind);
std::optional<OracleKind> ParseOracle(std::string_view name);

struct OracleOptions {
  OracleKind kind = OracleKind::kUpperBound;
  std::size_t ell = 5;
  BenchmarkOptions bench;
};

// Baseline and oracle runs over the same set of queries.
struct OracleReport {
  OracleKind kind = OracleKind::kUpperBound;
  std::size_t ell = 0;
  EvalReport baseline;
  EvalReport oracle;

  // oracle - baseline of the grand mean.
  std::optional<double> GrandDelta(const std::string& metric) const;
};

OracleReport OracleRun(const Bundle& bundle, const BundleProvider& provider,
                       const OracleOptions& options);

// Serialization. Latency lives under a separate "timing" key so the rest of
// the document is reproducible byte for byte.
std::string ReportJson(const EvalReport& report, bool include_timing = true);
std::string ReportCsv(const EvalReport& report);
std::string SweepJson(const std::vector<SweepCell>& cells);
std::string SweepCsv(const std::vector<SweepCell>& cells);
std::string HistogramCsv(const HistogramResult& result);
std::string OracleJson(const OracleReport& report, bool include_timing = true);
std::string OracleCsv(const OracleReport& report);

}  // namespace domconv

#endif  // DOMCONV_EVALBENCH_H_
