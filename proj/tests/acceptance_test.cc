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

// Acceptance checks: one PASS/FAIL line per criterion; exits nonzero when
// any check fails.

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <memory>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "domconv/compose.h"
#include "domconv/evalbench.h"
#include "domconv/inversion.h"
#include "domconv/knn.h"
#include "domconv/metrics.h"
#include "domconv/provider.h"
#include "domconv/synthetic.h"
#include "json.hpp"
#include "test_util.h"

namespace domconv {
namespace {

using Clock = std::chrono::steady_clock;

double Seconds(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

struct Check {
  bool ok = true;
  std::string detail;

  void Fail(const std::string& why) {
    if (ok) detail = why;
    ok = false;
  }
};

// Random unit rows, with some rows repeated so that ties occur.
EmbeddingMatrix TieHeavyMatrix(std::mt19937_64& rng, std::size_t rows,
                               std::size_t dim) {
  std::vector<float> data;
  data.reserve(rows * dim);
  for (std::size_t r = 0; r < rows; ++r) {
    if (r > 0 && rng() % 4 == 0) {
      const std::size_t src = rng() % r;
      data.insert(data.end(), data.begin() + src * dim,
                  data.begin() + (src + 1) * dim);
    } else {
      const auto v = testing::RandomUnit(rng, dim);
      data.insert(data.end(), v.begin(), v.end());
    }
  }
  return EmbeddingMatrix(rows, dim, std::move(data));
}

Check TopKOracle() {
  Check check;
  std::mt19937_64 rng(101);
  const auto start = Clock::now();
  for (int c = 0; c < 1000 && check.ok; ++c) {
    const std::size_t rows = 1 + rng() % 400;
    const std::size_t dim = 1 + rng() % 48;
    const std::size_t k = 1 + rng() % (rows + 5);
    const auto matrix = TieHeavyMatrix(rng, rows, dim);
    std::vector<float> query;
    if (rng() % 3 == 0) {
      const auto row = matrix.row(rng() % rows);
      query.assign(row.begin(), row.end());
    } else {
      query = testing::RandomUnit(rng, dim);
    }
    std::vector<double> scores(rows);
    for (std::size_t i = 0; i < rows; ++i) {
      long double sum = 0.0L;
      const auto row = matrix.row(i);
      for (std::size_t j = 0; j < dim; ++j) {
        sum += static_cast<long double>(query[j]) * row[j];
      }
      scores[i] = static_cast<double>(sum);
    }
    const auto got = TopK(query, matrix, k);
    const auto engine_scores = AllScores(query, matrix);
    std::vector<Neighbor> all(rows);
    for (std::size_t i = 0; i < rows; ++i) all[i] = {i, engine_scores[i]};
    std::sort(all.begin(), all.end(), RanksBefore);
    all.resize(std::min(k, rows));
    if (got != all) {
      check.Fail("case " + std::to_string(c) + " differs from full sort");
    }
    for (std::size_t i = 0; i < rows && check.ok; ++i) {
      if (std::abs(engine_scores[i] - scores[i]) > 1e-6) {
        check.Fail("case " + std::to_string(c) + " score drift");
      }
    }
  }
  const double elapsed = Seconds(start);
  if (check.ok && elapsed >= 10.0) check.Fail("too slow");
  std::ostringstream s;
  s << "1000 cases in " << elapsed << " s";
  if (check.ok) check.detail = s.str();
  return check;
}

// Random labels over the bundle's vocabulary with random positive weights.
LabelSet RandomLabels(std::mt19937_64& rng, std::size_t vocab,
                      std::size_t count) {
  std::vector<WordId> words(vocab);
  std::iota(words.begin(), words.end(), WordId{0});
  std::shuffle(words.begin(), words.end(), rng);
  std::uniform_real_distribution<double> weight(0.05, 1.0);
  LabelSet labels;
  for (std::size_t i = 0; i < count; ++i) {
    labels.labels.push_back({words[i], weight(rng)});
  }
  std::sort(labels.labels.begin(), labels.labels.end(),
            [](const Label& a, const Label& b) { return a.weight > b.weight; });
  labels.labels.front().weight = 1.0;
  return labels;
}

SyntheticConfig RandomConfig(std::mt19937_64& rng) {
  SyntheticConfig c;
  c.classes = 2 + rng() % 5;
  c.domains = 2 + rng() % 3;
  c.dim = 32;
  c.images_per_cluster = 2 + rng() % 4;
  c.distractor_words = 4 + rng() % 16;
  c.synonyms_per_class = rng() % 3;
  c.noise = 0.02 + 0.1 * (rng() % 5) / 4.0;
  c.seed = rng();
  return c;
}

Check FusionLinearity() {
  Check check;
  std::mt19937_64 rng(202);
  for (int b = 0; b < 200 && check.ok; ++b) {
    const auto config = RandomConfig(rng);
    const Bundle bundle = MakeSyntheticBundle(config);
    const BundleProvider provider(bundle);
    const DomainId domain = rng() % config.domains;
    const std::size_t count = 1 + rng() % 7;
    const auto labels =
        RandomLabels(rng, bundle.text_memory.size(), count);
    const auto weighting =
        rng() % 2 == 0 ? Weighting::kUniform : Weighting::kFrequency;
    const auto h = ComposeLate(labels, domain, provider, weighting);
    const auto composed = ScoreEmbedding(h, *bundle.database);
    std::vector<double> reference(bundle.database->rows(), 0.0);
    for (const auto& label : labels.labels) {
      const auto row = provider.Composed(label.word, domain);
      const auto s = ScoreEmbedding(row, *bundle.database);
      const double a = weighting == Weighting::kUniform ? 1.0 : label.weight;
      for (std::size_t i = 0; i < s.size(); ++i) reference[i] += a * s[i];
    }
    // Scores agree up to one positive factor; the rankings must agree
    // except among items whose reference scores tie within float rounding.
    double scale = 0.0;
    for (double r : reference) scale = std::max(scale, std::abs(r));
    const double tie = 1e-5 * std::max(scale, 1.0);
    const auto order = RankAll(composed);
    for (std::size_t i = 1; i < order.size(); ++i) {
      if (reference[order[i - 1]] < reference[order[i]] - tie) {
        check.Fail("bundle " + std::to_string(b) + " rank " +
                   std::to_string(i));
        break;
      }
    }
    const auto ref_order = RankAll(reference);
    for (std::size_t i = 1; i < ref_order.size() && check.ok; ++i) {
      if (composed[ref_order[i - 1]] < composed[ref_order[i]] - tie) {
        check.Fail("bundle " + std::to_string(b) + " reverse rank " +
                   std::to_string(i));
      }
    }
  }
  if (check.ok) check.detail = "200 bundles";
  return check;
}

Check CollapseIdentities() {
  Check check;
  std::mt19937_64 rng(303);
  int cases = 0;
  for (int b = 0; b < 40 && check.ok; ++b) {
    const auto config = RandomConfig(rng);
    const Bundle bundle = MakeSyntheticBundle(config);
    const BundleProvider provider(
        bundle, std::make_shared<SyntheticTextEncoder>(config));
    const QueryStores stores{*bundle.database, bundle.text_memory,
                             bundle.visual_memory, provider};
    const auto queries = EnumerateQueries(bundle);
    for (int q = 0; q < 5 && check.ok; ++q) {
      const auto& query = queries[rng() % queries.size()].query;
      const std::size_t m = 1 + rng() % 8;
      const auto freedom =
          RunQuery(query, Method::kFreedom, {1, m, m}, stores);
      const auto late = RunQuery(query, Method::kLate, {20, m, m}, stores);
      for (std::size_t i = 0; i < late.size(); ++i) {
        if (std::abs(freedom[i] - late[i]) > 1e-12) {
          check.Fail("freedom k=1 differs from late");
          break;
        }
      }
      const auto labels = NnInvert(query.y, bundle.text_memory, 1 + rng() % 5);
      LabelSet first;
      first.labels = {labels.labels.front()};
      if (ComposeEarly(first, query.target_domain, provider) !=
          ComposeSingle(labels, query.target_domain, provider)) {
        check.Fail("early singleton differs from single");
      }
      const auto weighted =
          RandomLabels(rng, bundle.text_memory.size(), 1 + rng() % 7);
      const auto h = ComposeLate(weighted, query.target_domain, provider,
                                 Weighting::kFrequency);
      std::uniform_real_distribution<double> log_scale(-6.0, 6.0);
      LabelSet scaled = weighted;
      const double c = std::exp(log_scale(rng));
      for (auto& label : scaled.labels) label.weight *= c;
      const auto hc = ComposeLate(scaled, query.target_domain, provider,
                                  Weighting::kFrequency);
      for (std::size_t i = 0; i < h.size(); ++i) {
        if (std::abs(h[i] - hc[i]) > 1e-6) {
          check.Fail("scaled weights changed the composed vector");
          break;
        }
      }
      ++cases;
    }
  }
  if (check.ok) check.detail = std::to_string(cases) + " random queries";
  return check;
}

Check Metrics() {
  Check check;
  const std::vector<std::size_t> ranking{0, 1, 2};
  const auto ap = AveragePrecision(ranking, std::vector<bool>{true, false, true});
  if (!ap || std::abs(*ap - 5.0 / 6.0) > 1e-9) check.Fail("AP([+,-,+])");
  std::mt19937_64 rng(404);
  for (int t = 0; t < 200 && check.ok; ++t) {
    const std::size_t n = 1 + rng() % 60;
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<bool> relevant(n);
    std::size_t positives = 0;
    for (std::size_t i = 0; i < n; ++i) {
      relevant[i] = rng() % 3 == 0;
      positives += relevant[i];
    }
    if (positives == 0) relevant[order.back()] = true;
    double previous = 0.0;
    for (std::size_t k = 1; k <= n + 2; ++k) {
      const double r = *RecallAtK(order, relevant, k);
      if (r < previous) check.Fail("recall not monotone in k");
      previous = r;
    }
    std::stable_partition(order.begin(), order.end(),
                          [&](std::size_t i) { return relevant[i]; });
    if (AveragePrecision(order, relevant) != 1.0) {
      check.Fail("perfect ranking AP != 1");
    }
  }
  SyntheticConfig c;
  c.noise = 0.01;
  const Bundle bundle = MakeSyntheticBundle(c);
  const BundleProvider provider(bundle);
  const auto report = Benchmark(bundle, provider, {Method::kSingle, {}, {}});
  if (report.Grand("map") != 1.0) check.Fail("perfect benchmark mAP != 1");
  if (check.ok) check.detail = "AP, recall and mAP identities";
  return check;
}

Check SyntheticBenchmark() {
  Check check;
  const auto start = Clock::now();
  const SyntheticConfig config;
  const Bundle bundle = MakeSyntheticBundle(config);
  const BundleProvider provider(bundle);
  const auto freedom = Benchmark(bundle, provider, {Method::kFreedom, {}, {}});
  const auto sum = Benchmark(bundle, provider, {Method::kSum, {}, {}});
  const Bundle again = MakeSyntheticBundle(config);
  const BundleProvider again_provider(again);
  const auto repeat =
      Benchmark(again, again_provider, {Method::kFreedom, {}, {}});
  const double elapsed = Seconds(start);
  const double f = *freedom.Grand("map");
  const double s = *sum.Grand("map");
  if (f < 0.95) check.Fail("freedom mAP below 0.95");
  if (!(f > s)) check.Fail("freedom does not beat sum");
  if (ReportJson(freedom, false) != ReportJson(repeat, false)) {
    check.Fail("not deterministic");
  }
  if (elapsed >= 30.0) check.Fail("too slow");
  std::ostringstream d;
  d << "freedom " << f << ", sum " << s << ", " << elapsed << " s";
  if (check.ok) {
    check.detail = d.str();
  } else {
    check.detail += " (" + d.str() + ")";
  }
  return check;
}

std::string RunCli(const std::string& args, int* code) {
  const std::string command = std::string(DOMCONV_CLI_PATH) + " " + args;
  std::string out;
  FILE* pipe = popen(command.c_str(), "r");
  if (pipe == nullptr) {
    *code = -1;
    return out;
  }
  char buf[4096];
  std::size_t n;
  while ((n = std::fread(buf, 1, sizeof(buf), pipe)) > 0) out.append(buf, n);
  const int status = pclose(pipe);
  *code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return out;
}

Check CliDeterminism() {
  Check check;
  testing::TempDir dir;
  const auto paths = WriteSyntheticBundle(SyntheticConfig{}, dir.path());
  const std::string args =
      "bench --manifest " + paths.manifest.string() + " --db-emb " +
      paths.db_emb.string() + " --query-emb " + paths.query_emb.string() +
      " --vocab " + paths.vocab.string() + " --vocab-emb " +
      paths.vocab_emb.string() + " --composed " + paths.composed.string();
  int code_a = 0;
  int code_b = 0;
  const auto a = RunCli(args + " --threads 1", &code_a);
  const auto b = RunCli(args, &code_b);
  if (code_a != 0 || code_b != 0) {
    check.Fail("bench exited with an error");
    return check;
  }
  auto ja = nlohmann::ordered_json::parse(a);
  auto jb = nlohmann::ordered_json::parse(b);
  ja.erase("timing");
  jb.erase("timing");
  if (ja.dump(2) != jb.dump(2)) check.Fail("payloads differ");
  if (check.ok) check.detail = "two bench runs byte-identical without timing";
  return check;
}

std::shared_ptr<const EmbeddingMatrix> LargeMatrix(std::size_t rows,
                                                   std::size_t dim,
                                                   std::uint64_t seed) {
  return std::make_shared<const EmbeddingMatrix>(
      testing::RandomUnitMatrix(rows, dim, seed));
}

Check Latency() {
  Check check;
  constexpr std::size_t kDim = 768;
  constexpr std::size_t kDatabase = 30000;
  constexpr std::size_t kWords = 20000;
  constexpr std::size_t kDomains = 5;
  constexpr std::size_t kQueries = 40;

  std::vector<std::string> domains;
  std::vector<ManifestItem> items;
  for (std::size_t d = 0; d < kDomains; ++d) {
    domains.push_back("domain" + std::to_string(d));
  }
  std::vector<std::string> ids;
  for (std::size_t i = 0; i < kDatabase; ++i) {
    ids.push_back("db" + std::to_string(i));
    items.push_back({ids.back(), static_cast<ClassId>(i % 200),
                     static_cast<DomainId>(i % kDomains), Split::kDatabase});
  }
  for (std::size_t i = 0; i < kQueries; ++i) {
    items.push_back({"q" + std::to_string(i), static_cast<ClassId>(i % 200),
                     static_cast<DomainId>(i % kDomains), Split::kQuery});
  }
  std::vector<std::string> classes;
  for (std::size_t c = 0; c < 200; ++c) classes.push_back("c" + std::to_string(c));
  std::vector<std::string> words;
  for (std::size_t w = 0; w < kWords; ++w) words.push_back("w" + std::to_string(w));

  const auto database = LargeMatrix(kDatabase, kDim, 1);
  std::vector<ComposedTable> composed;
  for (std::size_t d = 0; d < kDomains; ++d) {
    composed.push_back({domains[d], LargeMatrix(kWords, kDim, 10 + d)});
  }
  Bundle bundle{
      .manifest = DatasetManifest(classes, domains, std::move(items)),
      .database = database,
      .queries = LargeMatrix(kQueries, kDim, 2),
      .text_memory = TextMemory(words, LargeMatrix(kWords, kDim, 3)),
      .visual_memory = VisualMemory(std::move(ids), database),
      .composed = std::move(composed),
      .domain_text = LargeMatrix(kDomains, kDim, 4),
      .class_text = nullptr,
      .class_tables = {},
      .file_hashes = {},
  };
  ValidateBundle(bundle);
  const BundleProvider provider(bundle);
  const QueryStores stores{*bundle.database, bundle.text_memory,
                           bundle.visual_memory, provider};
  double total_ms = 0.0;
  for (std::size_t q = 0; q < kQueries; ++q) {
    const ComposedQuery query{"q" + std::to_string(q), bundle.queries->row(q),
                              static_cast<DomainId>((q + 1) % kDomains),
                              static_cast<DomainId>(q % kDomains)};
    const auto start = Clock::now();
    const auto scores = RunQuery(query, Method::kFreedom, {}, stores);
    total_ms += Seconds(start) * 1000.0;
    if (scores.size() != kDatabase) check.Fail("wrong score count");
  }
  const double mean = total_ms / kQueries;
  if (mean > 100.0) check.Fail("mean latency above 100 ms");
  std::ostringstream d;
  d << "mean " << mean << " ms over " << kQueries << " queries";
  if (check.ok) {
    check.detail = d.str();
  } else {
    check.detail += " (" + d.str() + ")";
  }
  return check;
}

}  // namespace
}  // namespace domconv

int main() {
  using domconv::Check;
  const std::vector<std::pair<std::string, std::function<Check()>>> checks{
      {"oracle_equivalence", domconv::TopKOracle},
      {"fusion_linearity", domconv::FusionLinearity},
      {"collapse_identities", domconv::CollapseIdentities},
      {"metric_unit_tests", domconv::Metrics},
      {"synthetic_benchmark", domconv::SyntheticBenchmark},
      {"determinism", domconv::CliDeterminism},
      {"latency", domconv::Latency},
  };
  int failed = 0;
  for (const auto& [name, run] : checks) {
    Check check;
    try {
      check = run();
    } catch (const std::exception& e) {
      check.Fail(std::string("exception: ") + e.what());
    }
    std::cout << (check.ok ? "PASS " : "FAIL ") << name << ": " << check.detail
              << std::endl;
    failed += !check.ok;
  }
  return failed == 0 ? 0 : 1;
}
