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

#include <gtest/gtest.h>

#include <algorithm>
#include <memory>
#include <numeric>
#include <random>
#include <vector>

#include "domconv/errors.h"
#include "domconv/evalbench.h"
#include "domconv/knn.h"
#include "domconv/parallel.h"
#include "domconv/synthetic.h"
#include "json.hpp"
#include "test_util.h"

namespace domconv {
namespace {

using testing::RandomUnitMatrix;

// Bundle over `manifest` with random embeddings and a tiny vocabulary.
Bundle RandomBundle(DatasetManifest manifest, std::size_t dim = 8) {
  const std::size_t queries = manifest.query_items().size();
  const std::size_t database = manifest.database_items().size();
  std::vector<std::string> ids;
  for (std::size_t i : manifest.database_items()) {
    ids.push_back(manifest.items()[i].id);
  }
  auto db = std::make_shared<const EmbeddingMatrix>(
      RandomUnitMatrix(database, dim, 1));
  std::vector<std::string> words{"alpha", "beta", "gamma", "delta"};
  std::vector<ComposedTable> composed;
  for (std::size_t d = 0; d < manifest.domain_names().size(); ++d) {
    composed.push_back({manifest.domain_names()[d],
                        std::make_shared<const EmbeddingMatrix>(
                            RandomUnitMatrix(words.size(), dim, 10 + d))});
  }
  const std::size_t domains = manifest.domain_names().size();
  Bundle b{
      .manifest = std::move(manifest),
      .database = db,
      .queries = std::make_shared<const EmbeddingMatrix>(
          RandomUnitMatrix(queries, dim, 2)),
      .text_memory = TextMemory(words, std::make_shared<const EmbeddingMatrix>(
                                           RandomUnitMatrix(4, dim, 3))),
      .visual_memory = VisualMemory(std::move(ids), db),
      .composed = std::move(composed),
      .domain_text = std::make_shared<const EmbeddingMatrix>(
          RandomUnitMatrix(domains, dim, 4)),
      .class_text = nullptr,
      .class_tables = {},
      .file_hashes = {},
  };
  ValidateBundle(b);
  return b;
}

ManifestItem Item(std::string id, ClassId c, DomainId d, Split s) {
  return {std::move(id), c, d, s};
}

TEST(EnumerateQueries, EveryOtherDomainIsATarget) {
  DatasetManifest m({"cat"}, {"A", "B", "C"},
                    {Item("q1", 0, 0, Split::kQuery),
                     Item("q2", 0, 0, Split::kQuery),
                     Item("d1", 0, 1, Split::kDatabase)});
  const Bundle b = RandomBundle(std::move(m));
  const auto queries = EnumerateQueries(b);
  ASSERT_EQ(queries.size(), 4u);
  EXPECT_EQ(queries[0].query.query_id, "q1");
  EXPECT_EQ(queries[0].query.target_domain, 1u);
  EXPECT_EQ(queries[1].query.target_domain, 2u);
  EXPECT_EQ(queries[3].query.query_id, "q2");
  for (const auto& q : queries) {
    EXPECT_NE(q.query.source_domain, q.query.target_domain);
    EXPECT_FALSE(q.excluded_row);
  }
}

TEST(EnumerateQueries, TwoDomainsGiveOneTargetEach) {
  DatasetManifest m({"bridge", "tower"}, {"today", "archive"},
                    {Item("q1", 0, 0, Split::kQuery),
                     Item("q2", 1, 1, Split::kQuery),
                     Item("d1", 0, 1, Split::kDatabase)});
  const Bundle b = RandomBundle(std::move(m));
  const auto queries = EnumerateQueries(b);
  ASSERT_EQ(queries.size(), 2u);
  EXPECT_EQ(queries[0].query.target_domain, 1u);
  EXPECT_EQ(queries[1].query.target_domain, 0u);
}

TEST(EnumerateQueries, SingleDomainIsEmptyBenchmark) {
  DatasetManifest m({"cat"}, {"A"},
                    {Item("q1", 0, 0, Split::kQuery),
                     Item("d1", 0, 0, Split::kDatabase)});
  const Bundle b = RandomBundle(std::move(m));
  EXPECT_TRUE(EnumerateQueries(b).empty());
  const BundleProvider provider(b);
  const auto report = Benchmark(b, provider, {Method::kImage, {}, {}});
  EXPECT_EQ(report.total_queries, 0u);
  ASSERT_EQ(report.notices.size(), 1u);
  EXPECT_NE(report.notices[0].find("empty benchmark"), std::string::npos);
  EXPECT_FALSE(report.Grand("map"));
}

TEST(EnumerateQueries, QueryStoredInDatabaseIsExcluded) {
  DatasetManifest m({"cat", "dog"}, {"A", "B"},
                    {Item("x", 0, 0, Split::kQuery),
                     Item("y", 1, 1, Split::kDatabase),
                     Item("x", 0, 0, Split::kDatabase),
                     Item("z", 0, 1, Split::kDatabase)});
  const Bundle b = RandomBundle(std::move(m));
  const auto queries = EnumerateQueries(b);
  ASSERT_EQ(queries.size(), 1u);
  EXPECT_EQ(queries[0].excluded_row, std::size_t{1});
  const auto mask = RelevanceMask(b, queries[0]);
  EXPECT_EQ(mask, (std::vector<bool>{false, false, true}));
  const std::vector<double> scores{0.1, 0.9, 0.5};
  EXPECT_EQ(RankDatabase(scores, queries[0].excluded_row),
            (std::vector<std::size_t>{2, 0}));
}

TEST(EnumerateQueries, ClassMissingFromTargetIsSkippedAndCounted) {
  DatasetManifest m({"cat", "dog"}, {"A", "B"},
                    {Item("q1", 0, 0, Split::kQuery),
                     Item("q2", 1, 0, Split::kQuery),
                     Item("d1", 0, 1, Split::kDatabase),
                     Item("d2", 1, 0, Split::kDatabase)});
  const Bundle b = RandomBundle(std::move(m));
  const BundleProvider provider(b);
  const auto report = Benchmark(b, provider, {Method::kImage, {}, {}});
  EXPECT_EQ(report.total_queries, 2u);
  EXPECT_EQ(report.skipped_queries, 1u);
  EXPECT_EQ(report.pairs[0].n_queries, 1u);
  EXPECT_EQ(report.pairs[0].skipped, 1u);
  ASSERT_FALSE(report.notices.empty());
  EXPECT_NE(report.notices.back().find("no relevant"), std::string::npos);
  EXPECT_EQ(report.Grand("map"), 1.0);
}

TEST(MetricSpec, ParsesLists) {
  const auto spec = MetricSpec::Parse("map,recall@10,recall@50");
  EXPECT_TRUE(spec.map);
  EXPECT_EQ(spec.recall_ks, (std::vector<std::size_t>{10, 50}));
  EXPECT_EQ(spec.Names(),
            (std::vector<std::string>{"map", "recall@10", "recall@50"}));
  EXPECT_FALSE(MetricSpec::Parse("recall@5").map);
  EXPECT_THROW(MetricSpec::Parse("precision"), InvalidArgumentError);
  EXPECT_THROW(MetricSpec::Parse("recall@0"), InvalidArgumentError);
  EXPECT_THROW(MetricSpec::Parse("recall@x"), InvalidArgumentError);
}

// Synthetic fixtures: bundle plus a provider with the matching encoder.
struct Suite {
  explicit Suite(const SyntheticConfig& config)
      : bundle(MakeSyntheticBundle(config)),
        provider(bundle, std::make_shared<SyntheticTextEncoder>(config)) {}

  EvalReport Run(Method method, InversionParams params = {},
                 const std::string& metrics = "map") const {
    return Benchmark(bundle, provider,
                     {method, params, MetricSpec::Parse(metrics)});
  }
  double Map(Method method, InversionParams params = {}) const {
    return *Run(method, params).Grand("map");
  }

  Bundle bundle;
  BundleProvider provider;
};

SyntheticConfig Separable() {
  SyntheticConfig c;
  c.noise = 0.01;
  return c;
}

TEST(Benchmark, SeparableBundleIsSolved) {
  const Suite suite(Separable());
  EXPECT_EQ(suite.Map(Method::kFreedom), 1.0);
  EXPECT_EQ(suite.Map(Method::kSingle), 1.0);
}

TEST(Benchmark, TextBaselineAtClassPrior) {
  SyntheticConfig c = Separable();
  c.images_per_cluster = 20;
  const Suite suite(c);
  EXPECT_NEAR(suite.Map(Method::kText), 1.0 / c.classes, 0.05);
}

TEST(Benchmark, FreedomBeatsSum) {
  const Suite suite{SyntheticConfig{}};
  EXPECT_GT(suite.Map(Method::kFreedom), suite.Map(Method::kSum));
}

TEST(Benchmark, EarlyFusionSuffersFromConflictingDomains) {
  const Suite suite{SyntheticConfig{}};
  EXPECT_LT(suite.Map(Method::kEarly), suite.Map(Method::kLate));
  EXPECT_LT(suite.Map(Method::kEarlyExpanded),
            suite.Map(Method::kLateExpanded));
}

TEST(Benchmark, AggregatesArePairMeans) {
  const Suite suite{SyntheticConfig{}};
  const auto report = suite.Run(Method::kLate, {}, "map,recall@5");
  const std::size_t domains = report.domain_names.size();
  ASSERT_EQ(report.pairs.size(), domains * (domains - 1));
  for (std::size_t metric = 0; metric < 2; ++metric) {
    double total = 0.0;
    std::vector<double> per_source(domains, 0.0);
    for (const auto& pair : report.pairs) {
      total += *pair.values[metric];
      per_source[pair.source] += *pair.values[metric];
    }
    EXPECT_NEAR(*report.grand[metric], total / report.pairs.size(), 1e-15);
    for (std::size_t s = 0; s < domains; ++s) {
      EXPECT_NEAR(*report.per_source[s][metric],
                  per_source[s] / (domains - 1), 1e-15);
    }
  }
  for (const auto& pair : report.pairs) {
    EXPECT_EQ(pair.n_queries, 8u);
    for (const auto& v : pair.values) {
      EXPECT_GE(*v, 0.0);
      EXPECT_LE(*v, 1.0);
    }
  }
  EXPECT_EQ(report.latency.samples, report.total_queries);
  EXPECT_LE(report.latency.p50_ms, report.latency.p95_ms);
}

TEST(Benchmark, DeterministicAcrossThreadCounts) {
  const Suite suite{SyntheticConfig{}};
  SetThreadCount(1);
  const auto one = ReportJson(suite.Run(Method::kFreedom), false);
  SetThreadCount(4);
  const auto four = ReportJson(suite.Run(Method::kFreedom), false);
  SetThreadCount(0);
  EXPECT_EQ(one, four);
}

TEST(Sweep, SingleCellEqualsBenchmark) {
  const Suite suite{SyntheticConfig{}};
  const auto cells = Sweep(suite.bundle, suite.provider,
                           {{Method::kFreedom}, {20}, {7}, {7}});
  ASSERT_EQ(cells.size(), 1u);
  EXPECT_EQ(cells[0].grand_map, suite.Run(Method::kFreedom).Grand("map"));
}

TEST(Sweep, OneProxyEqualsNoExpansion) {
  const Suite suite{SyntheticConfig{}};
  const auto cells = Sweep(suite.bundle, suite.provider,
                           {{Method::kFreedom}, {1}, {1, 2, 4, 7}, {7}});
  ASSERT_EQ(cells.size(), 4u);
  for (const auto& cell : cells) {
    const std::size_t m = std::min(cell.params.n, cell.params.m);
    EXPECT_NEAR(*cell.grand_map, suite.Map(Method::kLate, {20, 7, m}), 1e-12)
        << "n=" << cell.params.n;
  }
  EXPECT_THROW(Sweep(suite.bundle, suite.provider, {{}, {1}, {1}, {1}}),
               InvalidArgumentError);
}

TEST(Sweep, CsvShapes) {
  const Suite suite{SyntheticConfig{}};
  const auto grid = Sweep(suite.bundle, suite.provider,
                          {{Method::kFreedom}, {1, 20}, {1, 7}, {7}});
  const auto csv = SweepCsv(grid);
  // Header plus one row per (method, m, k); n values are columns.
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "method,m,k,n=1,n=7");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 3);
  const auto json = nlohmann::json::parse(SweepJson(grid));
  ASSERT_EQ(json.size(), 4u);
  EXPECT_EQ(json[3]["k"], 20);
  EXPECT_EQ(json[3]["n"], 7);
}

TEST(Histogram, BinsMatchNaiveOracle) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> scores(300);
  std::vector<HistCategory> cats(300);
  for (std::size_t i = 0; i < 300; ++i) {
    scores[i] = u(rng);
    cats[i] = static_cast<HistCategory>(rng() % 4);
  }
  const auto result = BinScores(scores, cats, 13);
  const double lo = *std::min_element(scores.begin(), scores.end());
  const double hi = *std::max_element(scores.begin(), scores.end());
  std::vector<std::array<std::size_t, 4>> expected(13);
  for (std::size_t i = 0; i < 300; ++i) {
    std::size_t b = 0;
    while (b + 1 < 13 && scores[i] >= lo + (hi - lo) * (b + 1) / 13.0) ++b;
    ++expected[b][static_cast<std::size_t>(cats[i])];
  }
  for (std::size_t b = 0; b < 13; ++b) {
    EXPECT_EQ(result.bins[b].counts, expected[b]) << "bin " << b;
  }
  EXPECT_EQ(result.bins.back().right, hi);
  EXPECT_THROW(BinScores(scores, cats, 1), InvalidArgumentError);
}

TEST(Histogram, PositivesOccupyTopBins) {
  const Suite suite(Separable());
  const auto queries = EnumerateQueries(suite.bundle);
  const auto result = Histogram(suite.bundle, suite.provider, queries[5],
                                Method::kFreedom, {}, 20);
  std::size_t total = 0;
  for (std::size_t c = 0; c < 4; ++c) total += result.totals[c];
  EXPECT_EQ(total, suite.bundle.database->rows());
  EXPECT_EQ(result.totals[3], 6u);
  EXPECT_EQ(result.average_precision, 1.0);
  // Every positive lies above every other item.
  std::size_t first_positive = 20;
  std::size_t last_other = 0;
  for (std::size_t b = 0; b < 20; ++b) {
    const auto& counts = result.bins[b].counts;
    if (counts[3] > 0) first_positive = std::min(first_positive, b);
    if (counts[0] + counts[1] + counts[2] > 0) last_other = b;
  }
  EXPECT_GT(first_positive, last_other);
  EXPECT_EQ(result.bins.back().counts[3] > 0, true);
  const auto csv = HistogramCsv(result);
  EXPECT_EQ(csv.substr(0, csv.find('\n')),
            "bin_left,bin_right,neg,pos_object,pos_domain,pos");
}

SyntheticConfig HardSuite() {
  SyntheticConfig c;
  c.class_words_in_vocab = false;
  c.synonyms_per_class = 2;
  c.synonym_alignment = 0.6;
  return c;
}

OracleReport Oracle(const Suite& suite, OracleKind kind, Method method,
                    InversionParams params = {}, std::size_t ell = 5) {
  OracleOptions options;
  options.kind = kind;
  options.ell = ell;
  options.bench = {method, params, {}};
  return OracleRun(suite.bundle, suite.provider, options);
}

TEST(Oracle, InlierGainsMoreWithLateFusion) {
  const Suite suite(HardSuite());
  const double late =
      *Oracle(suite, OracleKind::kInjectInlier, Method::kLate).GrandDelta("map");
  const double early =
      *Oracle(suite, OracleKind::kInjectInlier, Method::kEarly).GrandDelta("map");
  EXPECT_GT(late, 0.0);
  EXPECT_GT(late, early);
}

TEST(Oracle, SourceDomainDistractorHurts) {
  const Suite suite(HardSuite());
  EXPECT_LT(*Oracle(suite, OracleKind::kInjectOutlier, Method::kFreedom)
                 .GrandDelta("map"),
            0.0);
  EXPECT_LT(*Oracle(suite, OracleKind::kInjectOutlier, Method::kLate,
                    {20, 7, 1})
                 .GrandDelta("map"),
            0.0);
}

TEST(Oracle, UpperBoundSolvesSynthetic) {
  const Suite suite(HardSuite());
  const auto report = Oracle(suite, OracleKind::kUpperBound, Method::kFreedom);
  EXPECT_EQ(report.oracle.Grand("map"), 1.0);
  EXPECT_GE(*report.GrandDelta("map"), 0.0);
}

TEST(Oracle, RemovingZeroWordsIsNoOp) {
  const Suite suite{SyntheticConfig{}};
  const auto report =
      Oracle(suite, OracleKind::kRemoveWords, Method::kFreedom, {}, 0);
  EXPECT_EQ(report.GrandDelta("map"), 0.0);
}

TEST(Oracle, RemovingClassWordsHurts) {
  const Suite suite{SyntheticConfig{}};
  EXPECT_LT(*Oracle(suite, OracleKind::kRemoveWords, Method::kFreedom)
                 .GrandDelta("map"),
            0.0);
}

TEST(Oracle, UnresolvableClassIsSkippedInBothRuns) {
  SyntheticConfig c;
  c.class_words_in_vocab = false;
  // Without class tables the class name has no term at all.
  Bundle bundle = MakeSyntheticBundle(c);
  bundle.class_tables.clear();
  const BundleProvider provider(bundle);
  OracleOptions options;
  options.kind = OracleKind::kUpperBound;
  const auto report = OracleRun(bundle, provider, options);
  EXPECT_EQ(report.baseline.skipped_queries, report.baseline.total_queries);
  EXPECT_EQ(report.oracle.skipped_queries, report.oracle.total_queries);
  EXPECT_FALSE(report.GrandDelta("map"));
  EXPECT_FALSE(report.baseline.notices.empty());
}

TEST(Oracle, BaselineMethodsAreRejected) {
  const Suite suite{SyntheticConfig{}};
  EXPECT_THROW(Oracle(suite, OracleKind::kUpperBound, Method::kSum),
               InvalidArgumentError);
}

TEST(Report, JsonSeparatesTiming) {
  const Suite suite{SyntheticConfig{}};
  const auto report = suite.Run(Method::kFreedom, {}, "map,recall@10");
  const auto with = nlohmann::json::parse(ReportJson(report));
  const auto without = nlohmann::json::parse(ReportJson(report, false));
  EXPECT_TRUE(with.contains("timing"));
  EXPECT_FALSE(without.contains("timing"));
  auto stripped = with;
  stripped.erase("timing");
  EXPECT_EQ(stripped, without);
  EXPECT_EQ(without["config"]["method"], "freedom");
  EXPECT_EQ(without["config"]["k"], 20);
  EXPECT_EQ(without["per_pair"].size(), 12u);
  EXPECT_TRUE(without["grand_avg"].contains("recall@10"));
}

TEST(Report, CsvIsTargetBySourceMatrix) {
  const Suite suite{SyntheticConfig{}};
  const auto csv = ReportCsv(suite.Run(Method::kLate));
  std::vector<std::string> lines;
  std::size_t start = 0;
  while (start < csv.size()) {
    const auto end = csv.find('\n', start);
    lines.push_back(csv.substr(start, end - start));
    start = end + 1;
  }
  // Header, one row per target, AVG.
  ASSERT_EQ(lines.size(), 6u);
  EXPECT_EQ(lines[0], "metric,target,style_0,style_1,style_2,style_3,AVG");
  EXPECT_EQ(lines.back().substr(0, 8), "map,AVG,");
}

}  // namespace
}  // namespace domconv
