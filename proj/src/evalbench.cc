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

#include "domconv/evalbench.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

#include "domconv/errors.h"
#include "domconv/knn.h"
#include "domconv/parallel.h"

namespace domconv {

namespace {

struct QueryOutcome {
  bool scored = false;
  bool skipped = false;
  bool no_relevant = false;
  std::vector<double> values;
  double latency_ms = 0.0;
  std::vector<std::string> notices;
};

std::optional<double> Mean(const std::vector<double>& xs) {
  if (xs.empty()) return std::nullopt;
  double sum = 0.0;
  for (double x : xs) sum += x;
  return sum / static_cast<double>(xs.size());
}

std::optional<double> MeanOfPresent(
    const std::vector<std::optional<double>>& xs) {
  std::vector<double> present;
  for (const auto& x : xs) {
    if (x) present.push_back(*x);
  }
  return Mean(present);
}

double NearestRank(std::vector<double> sorted, double q) {
  if (sorted.empty()) return 0.0;
  const auto rank = static_cast<std::size_t>(
      std::ceil(q * static_cast<double>(sorted.size())));
  return sorted[std::clamp<std::size_t>(rank, 1, sorted.size()) - 1];
}

std::size_t MetricIndex(const std::vector<std::string>& names,
                        const std::string& metric) {
  auto it = std::find(names.begin(), names.end(), metric);
  if (it == names.end()) {
    throw InvalidArgumentError("metric '" + metric + "' was not computed");
  }
  return static_cast<std::size_t>(it - names.begin());
}

}  // namespace

std::vector<EvalQuery> EnumerateQueries(const Bundle& bundle) {
  const auto& manifest = bundle.manifest;
  const std::size_t domains = manifest.domain_names().size();
  std::vector<EvalQuery> out;
  for (std::size_t row = 0; row < manifest.query_items().size(); ++row) {
    const auto& item = manifest.items()[manifest.query_items()[row]];
    const auto excluded = manifest.FindDatabaseRow(item.id);
    for (DomainId target = 0; target < domains; ++target) {
      if (target == item.domain_id) continue;
      EvalQuery q;
      q.query = ComposedQuery{item.id, bundle.queries->row(row), target,
                              item.domain_id};
      q.query_row = row;
      q.class_id = item.class_id;
      q.excluded_row = excluded;
      out.push_back(std::move(q));
    }
  }
  return out;
}

std::vector<bool> RelevanceMask(const Bundle& bundle, const EvalQuery& query) {
  const auto& manifest = bundle.manifest;
  std::vector<bool> mask(manifest.database_items().size(), false);
  for (std::size_t row = 0; row < mask.size(); ++row) {
    const auto& item = manifest.items()[manifest.database_items()[row]];
    mask[row] = item.class_id == query.class_id &&
                item.domain_id == query.query.target_domain;
  }
  if (query.excluded_row) mask[*query.excluded_row] = false;
  return mask;
}

std::vector<std::size_t> RankDatabase(std::span<const double> scores,
                                      std::optional<std::size_t> excluded) {
  auto ranking = RankAll(scores);
  if (excluded) {
    ranking.erase(std::remove(ranking.begin(), ranking.end(), *excluded),
                  ranking.end());
  }
  return ranking;
}

std::vector<std::string> MetricSpec::Names() const {
  std::vector<std::string> names;
  if (map) names.push_back("map");
  for (std::size_t k : recall_ks) names.push_back("recall@" + std::to_string(k));
  return names;
}

MetricSpec MetricSpec::Parse(const std::string& list) {
  MetricSpec spec;
  spec.map = false;
  std::stringstream in(list);
  std::string item;
  while (std::getline(in, item, ',')) {
    if (item == "map") {
      spec.map = true;
    } else if (item.rfind("recall@", 0) == 0) {
      const std::string digits = item.substr(7);
      if (digits.empty() ||
          !std::all_of(digits.begin(), digits.end(),
                       [](char c) { return c >= '0' && c <= '9'; })) {
        throw InvalidArgumentError("bad metric '" + item + "'");
      }
      const auto k = std::stoul(digits);
      if (k == 0) throw InvalidArgumentError("recall cutoff must be >= 1");
      spec.recall_ks.push_back(k);
    } else {
      throw InvalidArgumentError("unknown metric '" + item + "'");
    }
  }
  if (!spec.map && spec.recall_ks.empty()) {
    throw InvalidArgumentError("no metrics requested");
  }
  return spec;
}

std::optional<double> EvalReport::Grand(const std::string& metric) const {
  return grand[MetricIndex(metric_names, metric)];
}

std::optional<double> EvalReport::Pair(DomainId source, DomainId target,
                                       const std::string& metric) const {
  const std::size_t idx = MetricIndex(metric_names, metric);
  for (const auto& pair : pairs) {
    if (pair.source == source && pair.target == target) return pair.values[idx];
  }
  return std::nullopt;
}

EvalReport Evaluate(const Bundle& bundle, std::span<const EvalQuery> queries,
                    const QueryScorer& scorer, const EvalConfig& config) {
  const auto names = config.metrics.Names();
  std::vector<QueryOutcome> outcomes(queries.size());

  ParallelFor(queries.size(), 1, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const auto& q = queries[i];
      auto& outcome = outcomes[i];
      const auto start = std::chrono::steady_clock::now();
      auto scores = scorer(q, outcome.notices);
      const auto stop = std::chrono::steady_clock::now();
      if (!scores) {
        outcome.skipped = true;
        continue;
      }
      outcome.scored = true;
      outcome.latency_ms =
          std::chrono::duration<double, std::milli>(stop - start).count();
      const auto relevant = RelevanceMask(bundle, q);
      const auto ranking = RankDatabase(*scores, q.excluded_row);
      if (config.metrics.map) {
        const auto ap = AveragePrecision(ranking, relevant);
        if (!ap) {
          outcome.skipped = true;
          outcome.no_relevant = true;
          continue;
        }
        outcome.values.push_back(*ap);
      }
      for (std::size_t k : config.metrics.recall_ks) {
        const auto recall =
            RecallAtK(ranking, relevant, k, config.metrics.recall_mode);
        if (!recall) {
          outcome.skipped = true;
          outcome.no_relevant = true;
          break;
        }
        outcome.values.push_back(*recall);
      }
    }
  });

  const auto& domain_names = bundle.manifest.domain_names();
  const std::size_t domains = domain_names.size();
  EvalReport report;
  report.method = config.method_label;
  report.params = config.params;
  report.recall_mode = config.metrics.recall_mode;
  report.metric_names = names;
  report.domain_names = domain_names;
  report.file_hashes = bundle.file_hashes;
  report.seed = bundle.manifest.seed();
  report.total_queries = queries.size();

  // pair_values[source * domains + target][metric] -> per-query values
  std::vector<std::vector<std::vector<double>>> pair_values(
      domains * domains, std::vector<std::vector<double>>(names.size()));
  std::vector<std::size_t> pair_skipped(domains * domains, 0);
  std::vector<std::size_t> pair_evaluated(domains * domains, 0);
  std::vector<double> latencies;
  std::set<std::string> seen_notices;
  std::size_t no_relevant = 0;
  for (std::size_t i = 0; i < queries.size(); ++i) {
    const auto& q = queries[i].query;
    const auto& outcome = outcomes[i];
    const std::size_t slot = q.source_domain * domains + q.target_domain;
    for (const auto& notice : outcome.notices) {
      if (seen_notices.insert(notice).second) report.notices.push_back(notice);
    }
    if (outcome.scored) latencies.push_back(outcome.latency_ms);
    if (outcome.skipped) {
      ++pair_skipped[slot];
      ++report.skipped_queries;
      if (outcome.no_relevant) ++no_relevant;
      continue;
    }
    ++pair_evaluated[slot];
    for (std::size_t m = 0; m < names.size(); ++m) {
      pair_values[slot][m].push_back(outcome.values[m]);
    }
  }
  if (no_relevant > 0) {
    report.notices.push_back(std::to_string(no_relevant) +
                             " queries skipped: no relevant database items");
  }
  if (queries.empty()) {
    report.notices.push_back(
        "empty benchmark: no (source, target) domain pairs to evaluate");
  }

  report.per_source.assign(domains,
                           std::vector<std::optional<double>>(names.size()));
  std::vector<std::vector<std::optional<double>>> grand_inputs(names.size());
  for (DomainId s = 0; s < domains; ++s) {
    std::vector<std::vector<std::optional<double>>> source_inputs(names.size());
    for (DomainId t = 0; t < domains; ++t) {
      if (s == t) continue;
      const std::size_t slot = s * domains + t;
      PairMetrics pair;
      pair.source = s;
      pair.target = t;
      pair.n_queries = pair_evaluated[slot];
      pair.skipped = pair_skipped[slot];
      for (std::size_t m = 0; m < names.size(); ++m) {
        pair.values.push_back(Mean(pair_values[slot][m]));
        source_inputs[m].push_back(pair.values.back());
        grand_inputs[m].push_back(pair.values.back());
      }
      report.pairs.push_back(std::move(pair));
    }
    for (std::size_t m = 0; m < names.size(); ++m) {
      report.per_source[s][m] = MeanOfPresent(source_inputs[m]);
    }
  }
  for (std::size_t m = 0; m < names.size(); ++m) {
    report.grand.push_back(MeanOfPresent(grand_inputs[m]));
  }

  if (!latencies.empty()) {
    std::vector<double> sorted = latencies;
    std::sort(sorted.begin(), sorted.end());
    report.latency.samples = sorted.size();
    report.latency.mean_ms =
        std::accumulate(sorted.begin(), sorted.end(), 0.0) /
        static_cast<double>(sorted.size());
    report.latency.p50_ms = NearestRank(sorted, 0.50);
    report.latency.p95_ms = NearestRank(sorted, 0.95);
  }
  return report;
}

QueryStores StoresFor(const Bundle& bundle, const EmbeddingProvider& provider) {
  return QueryStores{*bundle.database, bundle.text_memory,
                     bundle.visual_memory, provider};
}

EvalReport Benchmark(const Bundle& bundle, const EmbeddingProvider& provider,
                     const BenchmarkOptions& options) {
  const auto queries = EnumerateQueries(bundle);
  const QueryStores stores = StoresFor(bundle, provider);
  QueryScorer scorer = [&](const EvalQuery& q,
                           std::vector<std::string>& notices)
      -> std::optional<std::vector<double>> {
    return RunQuery(q.query, options.method, options.params, stores, nullptr,
                    &notices);
  };
  return Evaluate(bundle, queries, scorer,
                  {std::string(MethodName(options.method)), options.params,
                   options.metrics});
}

std::vector<SweepCell> Sweep(const Bundle& bundle,
                             const EmbeddingProvider& provider,
                             const SweepGrid& grid,
                             const MetricSpec& metrics) {
  if (grid.methods.empty() || grid.ks.empty() || grid.ns.empty() ||
      grid.ms.empty()) {
    throw InvalidArgumentError("sweep grids must be nonempty");
  }
  MetricSpec spec = metrics;
  spec.map = true;
  std::vector<SweepCell> cells;
  for (Method method : grid.methods) {
    for (std::size_t m : grid.ms) {
      for (std::size_t k : grid.ks) {
        for (std::size_t n : grid.ns) {
          BenchmarkOptions options{method, {k, n, m}, spec};
          const auto report = Benchmark(bundle, provider, options);
          cells.push_back({method, options.params, report.Grand("map")});
        }
      }
    }
  }
  return cells;
}

HistogramResult BinScores(std::span<const double> scores,
                          std::span<const HistCategory> categories,
                          std::size_t bins) {
  if (bins < 2) throw InvalidArgumentError("histogram needs at least 2 bins");
  if (scores.size() != categories.size()) {
    throw InvalidArgumentError("scores and categories differ in length");
  }
  HistogramResult result;
  result.bins.resize(bins);
  double lo = 0.0;
  double hi = 0.0;
  if (!scores.empty()) {
    const auto [mn, mx] = std::minmax_element(scores.begin(), scores.end());
    lo = *mn;
    hi = *mx;
  }
  const double width = (hi - lo) / static_cast<double>(bins);
  for (std::size_t b = 0; b < bins; ++b) {
    result.bins[b].left = lo + width * static_cast<double>(b);
    result.bins[b].right =
        b + 1 == bins ? hi : lo + width * static_cast<double>(b + 1);
  }
  for (std::size_t i = 0; i < scores.size(); ++i) {
    std::size_t b = 0;
    if (width > 0.0) {
      b = static_cast<std::size_t>((scores[i] - lo) / width);
      b = std::min(b, bins - 1);
    }
    const auto c = static_cast<std::size_t>(categories[i]);
    ++result.bins[b].counts[c];
    ++result.totals[c];
  }
  return result;
}

HistogramResult Histogram(const Bundle& bundle,
                          const EmbeddingProvider& provider,
                          const EvalQuery& query, Method method,
                          const InversionParams& params, std::size_t bins) {
  if (bins < 2) throw InvalidArgumentError("histogram needs at least 2 bins");
  const auto scores =
      RunQuery(query.query, method, params, StoresFor(bundle, provider));
  const auto& manifest = bundle.manifest;
  std::vector<double> kept;
  std::vector<HistCategory> categories;
  for (std::size_t row = 0; row < scores.size(); ++row) {
    if (query.excluded_row && *query.excluded_row == row) continue;
    const auto& item = manifest.items()[manifest.database_items()[row]];
    const bool object = item.class_id == query.class_id;
    const bool domain = item.domain_id == query.query.target_domain;
    kept.push_back(scores[row]);
    categories.push_back(object && domain ? HistCategory::kPositive
                         : object         ? HistCategory::kPositiveObject
                         : domain         ? HistCategory::kPositiveDomain
                                          : HistCategory::kNegative);
  }
  auto result = BinScores(kept, categories, bins);
  result.average_precision =
      AveragePrecision(RankDatabase(scores, query.excluded_row),
                       RelevanceMask(bundle, query));
  return result;
}

std::string_view OracleName(OracleKind kind) {
  switch (kind) {
    case OracleKind::kInjectInlier:
      return "inject_inlier";
    case OracleKind::kInjectOutlier:
      return "inject_outlier";
    case OracleKind::kUpperBound:
      return "upper_bound";
    case OracleKind::kRemoveWords:
      return "remove_words";
  }
  return "unknown";
}

std::optional<OracleKind> ParseOracle(std::string_view name) {
  for (auto kind : {OracleKind::kInjectInlier, OracleKind::kInjectOutlier,
                    OracleKind::kUpperBound, OracleKind::kRemoveWords}) {
    if (OracleName(kind) == name) return kind;
  }
  return std::nullopt;
}

std::optional<double> OracleReport::GrandDelta(
    const std::string& metric) const {
  const auto b = baseline.Grand(metric);
  const auto o = oracle.Grand(metric);
  if (!b || !o) return std::nullopt;
  return *o - *b;
}

OracleReport OracleRun(const Bundle& bundle, const BundleProvider& provider,
                       const OracleOptions& options) {
  const Method method = options.bench.method;
  if (!UsesLabels(method)) {
    throw InvalidArgumentError("oracle runs need a label-based method, not '" +
                               std::string(MethodName(method)) + "'");
  }
  const auto queries = EnumerateQueries(bundle);
  const QueryStores stores = StoresFor(bundle, provider);
  const auto& class_names = bundle.manifest.class_names();

  // Resolves what each query needs up front so both runs skip the same ones.
  auto unresolved = [&](const EvalQuery& q,
                        std::vector<std::string>& notices) -> bool {
    switch (options.kind) {
      case OracleKind::kInjectInlier:
      case OracleKind::kUpperBound:
        if (provider.ClassTerm(q.class_id)) return false;
        notices.push_back("class '" + class_names[q.class_id] +
                          "' has no vocabulary term; its queries are skipped");
        return true;
      case OracleKind::kInjectOutlier:
        if (provider.DomainTerm(q.query.source_domain)) return false;
        notices.push_back(
            "domain '" +
            std::string(provider.DomainName(q.query.source_domain)) +
            "' has no vocabulary term; its queries are skipped");
        return true;
      case OracleKind::kRemoveWords:
        if (options.ell == 0 || provider.ClassText(q.class_id)) return false;
        notices.push_back("class '" + class_names[q.class_id] +
                          "' has no text embedding; its queries are skipped");
        return true;
    }
    return true;
  };

  QueryScorer baseline = [&](const EvalQuery& q,
                             std::vector<std::string>& notices)
      -> std::optional<std::vector<double>> {
    if (unresolved(q, notices)) return std::nullopt;
    return RunQuery(q.query, method, options.bench.params, stores);
  };

  QueryScorer oracle = [&](const EvalQuery& q,
                           std::vector<std::string>& notices)
      -> std::optional<std::vector<double>> {
    if (unresolved(q, notices)) return std::nullopt;
    const std::size_t terms = provider.term_count();
    switch (options.kind) {
      case OracleKind::kInjectInlier: {
        const WordId term = *provider.ClassTerm(q.class_id);
        LabelTransform t = [&](const LabelSet& l) {
          return InjectLabel(l, term, 1.0, InjectMode::kAppend, terms);
        };
        return RunQuery(q.query, method, options.bench.params, stores, &t);
      }
      case OracleKind::kInjectOutlier: {
        const WordId term = *provider.DomainTerm(q.query.source_domain);
        LabelTransform t = [&](const LabelSet& l) {
          return InjectLabel(l, term, 1.0, InjectMode::kAppend, terms);
        };
        return RunQuery(q.query, method, options.bench.params, stores, &t);
      }
      case OracleKind::kUpperBound: {
        const WordId term = *provider.ClassTerm(q.class_id);
        LabelTransform t = [&](const LabelSet& l) {
          return InjectLabel(l, term, 1.0, InjectMode::kReplaceAll, terms);
        };
        return RunQuery(q.query, method, options.bench.params, stores, &t);
      }
      case OracleKind::kRemoveWords: {
        if (options.ell == 0) {
          return RunQuery(q.query, method, options.bench.params, stores);
        }
        const auto anchor = *provider.ClassText(q.class_id);
        const TextMemory reduced =
            RemoveNearestWords(bundle.text_memory, anchor, options.ell);
        const QueryStores reduced_stores{stores.database, reduced,
                                         stores.visual_memory, provider};
        return RunQuery(q.query, method, options.bench.params, reduced_stores);
      }
    }
    return std::nullopt;
  };

  const std::string label(MethodName(method));
  OracleReport report;
  report.kind = options.kind;
  report.ell = options.kind == OracleKind::kRemoveWords ? options.ell : 0;
  report.baseline = Evaluate(bundle, queries, baseline,
                             {label, options.bench.params,
                              options.bench.metrics});
  report.oracle = Evaluate(bundle, queries, oracle,
                           {label + "+" + std::string(OracleName(options.kind)),
                            options.bench.params, options.bench.metrics});
  return report;
}

}  // namespace domconv
