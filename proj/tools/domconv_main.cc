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

// Command-line front end: validate, query, bench, sweep, hist, oracle.
//
// Exit codes: 0 on success, 1 on usage errors, 2 on data errors.

#include <charconv>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "domconv/compose.h"
#include "domconv/errors.h"
#include "domconv/evalbench.h"
#include "domconv/fdem.h"
#include "domconv/parallel.h"
#include "domconv/provider.h"
#include "domconv/store.h"
#include "json.hpp"

namespace {

using namespace domconv;

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Flags {
  BundlePaths paths;
  std::string memory_emb;
  std::string method = "freedom";
  std::string k = "20";
  std::string n = "7";
  std::string m = "7";
  std::string metric = "map";
  std::string out;
  // Empty means the subcommand default: CSV for hist, JSON otherwise.
  std::string format;
  int threads = 0;
  std::string recall = "proportional";
  bool renormalize = false;
  std::string provider;
  std::size_t bins = 50;
  std::size_t ell = 5;
  std::string kind = "upper_bound";
  std::string id;
  std::string target;
  std::size_t top = 10;
};

std::vector<std::string> SplitList(const std::string& flag,
                                   const std::string& text) {
  std::vector<std::string> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    if (item.empty()) throw UsageError(flag + ": empty list entry");
    out.push_back(item);
  }
  if (out.empty()) throw UsageError(flag + ": expected a value");
  return out;
}

std::vector<std::size_t> ParseSizes(const std::string& flag,
                                    const std::string& text) {
  std::vector<std::size_t> out;
  for (const auto& item : SplitList(flag, text)) {
    std::size_t v = 0;
    const auto [end, ec] =
        std::from_chars(item.data(), item.data() + item.size(), v);
    if (ec != std::errc() || end != item.data() + item.size() || v == 0) {
      throw UsageError(flag + ": expected a positive integer, got '" + item +
                       "'");
    }
    out.push_back(v);
  }
  return out;
}

std::size_t ParseSize(const std::string& flag, const std::string& text) {
  const auto values = ParseSizes(flag, text);
  if (values.size() != 1) {
    throw UsageError(flag + ": lists are only accepted by sweep");
  }
  return values.front();
}

Method ParseMethodFlag(const std::string& text) {
  const auto method = ParseMethod(text);
  if (!method) throw UsageError("--method: unknown method '" + text + "'");
  return *method;
}

InversionParams ParamsFrom(const Flags& f) {
  return {ParseSize("--k", f.k), ParseSize("--n", f.n),
          ParseSize("--m", f.m)};
}

MetricSpec MetricsFrom(const Flags& f) {
  MetricSpec spec;
  try {
    spec = MetricSpec::Parse(f.metric);
  } catch (const InvalidArgumentError& e) {
    throw UsageError(std::string("--metric: ") + e.what());
  }
  spec.recall_mode =
      f.recall == "hit" ? RecallMode::kHit : RecallMode::kProportional;
  return spec;
}

// Needs the string tier only for early fusion over several labels.
bool WantsProvider(Method method) {
  return method == Method::kEarly || method == Method::kEarlyExpanded;
}

struct Session {
  Bundle bundle;
  std::unique_ptr<BundleProvider> provider;
};

std::unique_ptr<Session> Open(const Flags& f, bool spawn_provider) {
  BundlePaths paths = f.paths;
  if (!f.memory_emb.empty()) paths.memory_emb = f.memory_emb;
  auto session = std::unique_ptr<Session>(
      new Session{LoadBundle(paths, LoadOptions{f.renormalize}), nullptr});
  std::shared_ptr<StringEncoder> encoder;
  if (spawn_provider && !f.provider.empty()) {
    encoder = std::make_shared<SubprocessEncoder>(f.provider,
                                                  session->bundle.dim());
  }
  session->provider =
      std::make_unique<BundleProvider>(session->bundle, std::move(encoder));
  return session;
}

void Emit(const Flags& f, const std::string& text) {
  if (f.out.empty()) {
    std::cout << text;
    if (!text.empty() && text.back() != '\n') std::cout << '\n';
    return;
  }
  std::ofstream out(f.out, std::ios::binary);
  out << text;
  if (!text.empty() && text.back() != '\n') out << '\n';
  if (!out) throw Error("cannot write " + f.out);
}

DomainId DomainFlag(const Bundle& bundle, const std::string& name) {
  const auto domain = bundle.manifest.FindDomain(name);
  if (!domain) throw MismatchError("unknown target domain '" + name + "'");
  return *domain;
}

EvalQuery FindEvalQuery(const Bundle& bundle, const std::string& id,
                        DomainId target) {
  for (auto& q : EnumerateQueries(bundle)) {
    if (q.query.query_id == id && q.query.target_domain == target) return q;
  }
  if (!bundle.manifest.FindQueryRow(id)) {
    throw MismatchError("unknown query id '" + id + "'");
  }
  throw MismatchError("query '" + id + "' is already in domain '" +
                      bundle.manifest.domain_names()[target] + "'");
}

int RunValidate(const Flags& f) {
  auto s = Open(f, false);
  const Bundle& b = s->bundle;
  nlohmann::ordered_json j;
  j["status"] = "ok";
  j["dim"] = b.dim();
  j["queries"] = b.queries->rows();
  j["database"] = b.database->rows();
  j["vocabulary"] = b.text_memory.size();
  j["visual_memory"] = b.visual_memory.size();
  j["domains"] = b.manifest.domain_names();
  j["classes"] = b.manifest.class_names().size();
  j["file_hashes"] = b.file_hashes;
  Emit(f, j.dump(2));
  return 0;
}

int RunQueryCommand(const Flags& f) {
  const Method method = ParseMethodFlag(f.method);
  const InversionParams params = ParamsFrom(f);
  if (f.id.empty()) throw UsageError("--id: required");
  if (f.target.empty()) throw UsageError("--target: required");
  auto s = Open(f, WantsProvider(method));
  const Bundle& b = s->bundle;
  const EvalQuery q = FindEvalQuery(b, f.id, DomainFlag(b, f.target));
  std::vector<std::string> warnings;
  const QueryStores stores = StoresFor(b, *s->provider);
  const auto scores =
      RunQuery(q.query, method, params, stores, nullptr, &warnings);
  auto ranking = RankDatabase(scores, q.excluded_row);
  if (ranking.size() > f.top) ranking.resize(f.top);
  const auto& items = b.manifest.items();
  const auto& db_items = b.manifest.database_items();
  if (f.format == "csv") {
    std::string text = "rank,id,score\n";
    char buf[64];
    for (std::size_t r = 0; r < ranking.size(); ++r) {
      std::snprintf(buf, sizeof(buf), ",%.9g\n", scores[ranking[r]]);
      text += std::to_string(r + 1) + "," + items[db_items[ranking[r]]].id +
              buf;
    }
    Emit(f, text);
  } else {
    nlohmann::ordered_json j;
    j["query"] = f.id;
    j["target"] = f.target;
    j["method"] = MethodName(method);
    j["results"] = nlohmann::ordered_json::array();
    for (std::size_t row : ranking) {
      j["results"].push_back(
          {{"id", items[db_items[row]].id}, {"score", scores[row]}});
    }
    j["notices"] = warnings;
    Emit(f, j.dump(2));
  }
  for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';
  return 0;
}

int RunBench(const Flags& f) {
  BenchmarkOptions options;
  options.method = ParseMethodFlag(f.method);
  options.params = ParamsFrom(f);
  options.metrics = MetricsFrom(f);
  auto s = Open(f, WantsProvider(options.method));
  const EvalReport report = Benchmark(s->bundle, *s->provider, options);
  Emit(f, f.format == "csv" ? ReportCsv(report) : ReportJson(report));
  return 0;
}

int RunSweep(const Flags& f) {
  SweepGrid grid;
  bool any_early = false;
  for (const auto& name : SplitList("--method", f.method)) {
    grid.methods.push_back(ParseMethodFlag(name));
    any_early = any_early || WantsProvider(grid.methods.back());
  }
  grid.ks = ParseSizes("--k", f.k);
  grid.ns = ParseSizes("--n", f.n);
  grid.ms = ParseSizes("--m", f.m);
  const MetricSpec metrics = MetricsFrom(f);
  auto s = Open(f, any_early);
  const auto cells = Sweep(s->bundle, *s->provider, grid, metrics);
  Emit(f, f.format == "csv" ? SweepCsv(cells) : SweepJson(cells));
  return 0;
}

int RunHist(const Flags& f) {
  const Method method = ParseMethodFlag(f.method);
  const InversionParams params = ParamsFrom(f);
  if (f.id.empty()) throw UsageError("--id: required");
  if (f.target.empty()) throw UsageError("--target: required");
  if (f.bins < 2) throw UsageError("--bins: needs at least 2 bins");
  auto s = Open(f, WantsProvider(method));
  const Bundle& b = s->bundle;
  const EvalQuery q = FindEvalQuery(b, f.id, DomainFlag(b, f.target));
  const auto result =
      Histogram(b, *s->provider, q, method, params, f.bins);
  if (f.format == "json") {
    nlohmann::ordered_json j;
    j["query"] = f.id;
    j["target"] = f.target;
    j["method"] = MethodName(method);
    if (result.average_precision) {
      j["ap"] = *result.average_precision;
    } else {
      j["ap"] = nullptr;
    }
    j["totals"] = result.totals;
    j["bins"] = nlohmann::ordered_json::array();
    for (const auto& bin : result.bins) {
      j["bins"].push_back(
          {{"left", bin.left}, {"right", bin.right}, {"counts", bin.counts}});
    }
    Emit(f, j.dump(2));
  } else {
    Emit(f, HistogramCsv(result));
  }
  return 0;
}

int RunOracle(const Flags& f) {
  OracleOptions options;
  const auto kind = ParseOracle(f.kind);
  if (!kind) throw UsageError("--kind: unknown oracle '" + f.kind + "'");
  options.kind = *kind;
  options.ell = f.ell;
  options.bench.method = ParseMethodFlag(f.method);
  if (!UsesLabels(options.bench.method)) {
    throw UsageError("--method: oracle runs need a label-based method");
  }
  options.bench.params = ParamsFrom(f);
  options.bench.metrics = MetricsFrom(f);
  auto s = Open(f, WantsProvider(options.bench.method));
  const OracleReport report = OracleRun(s->bundle, *s->provider, options);
  Emit(f, f.format == "csv" ? OracleCsv(report) : OracleJson(report));
  return 0;
}

void AddBundleFlags(CLI::App* cmd, Flags& f) {
  cmd->add_option("--manifest", f.paths.manifest, "Dataset manifest JSON")
      ->required();
  cmd->add_option("--db-emb", f.paths.db_emb, "Database embeddings (FDEM)")
      ->required();
  cmd->add_option("--query-emb", f.paths.query_emb, "Query embeddings (FDEM)")
      ->required();
  cmd->add_option("--vocab", f.paths.vocab, "Vocabulary, one word per line")
      ->required();
  cmd->add_option("--vocab-emb", f.paths.vocab_emb,
                  "Vocabulary embeddings (FDEM)")
      ->required();
  cmd->add_option("--composed", f.paths.composed, "Composed index JSON")
      ->required();
  cmd->add_option("--memory-emb", f.memory_emb,
                  "Visual memory embeddings (FDEM); defaults to the database");
  cmd->add_flag("--renormalize", f.renormalize,
                "Divide rows by their norm instead of rejecting them");
  cmd->add_option("--threads", f.threads, "Worker threads (0 = auto)")
      ->check(CLI::NonNegativeNumber);
  cmd->add_option("--out", f.out, "Output file (default stdout)");
}

void AddMethodFlags(CLI::App* cmd, Flags& f, bool lists) {
  const char* suffix = lists ? " (comma list)" : "";
  cmd->add_option("--method", f.method, std::string("Method") + suffix);
  cmd->add_option("--k", f.k, std::string("Proxy count") + suffix);
  cmd->add_option("--n", f.n, std::string("Words per proxy") + suffix);
  cmd->add_option("--m", f.m, std::string("Labels kept") + suffix);
  cmd->add_option("--provider", f.provider,
                  "String-tier embedding provider command");
}

void AddMetricFlags(CLI::App* cmd, Flags& f) {
  cmd->add_option("--metric", f.metric, "Comma list: map,recall@10,...");
  cmd->add_option("--recall", f.recall, "Recall definition")
      ->check(CLI::IsMember({"proportional", "hit"}));
}

void AddFormatFlag(CLI::App* cmd, Flags& f) {
  cmd->add_option("--format", f.format, "Output format")
      ->check(CLI::IsMember({"json", "csv"}));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Training-free composed image retrieval for domain conversion"};
  app.require_subcommand(1);
  Flags f;

  auto* validate =
      app.add_subcommand("validate", "Load and cross-check a bundle");
  AddBundleFlags(validate, f);

  auto* query = app.add_subcommand("query", "Rank the database for one query");
  AddBundleFlags(query, f);
  AddMethodFlags(query, f, false);
  AddFormatFlag(query, f);
  query->add_option("--id", f.id, "Query image id");
  query->add_option("--target", f.target, "Target domain name");
  query->add_option("--top", f.top, "Results to print")
      ->check(CLI::PositiveNumber);

  auto* bench = app.add_subcommand("bench", "Evaluate one method");
  AddBundleFlags(bench, f);
  AddMethodFlags(bench, f, false);
  AddMetricFlags(bench, f);
  AddFormatFlag(bench, f);

  auto* sweep = app.add_subcommand("sweep", "Grand mAP over a parameter grid");
  AddBundleFlags(sweep, f);
  AddMethodFlags(sweep, f, true);
  AddMetricFlags(sweep, f);
  AddFormatFlag(sweep, f);

  auto* hist = app.add_subcommand("hist", "Score histogram for one query");
  AddBundleFlags(hist, f);
  AddMethodFlags(hist, f, false);
  AddFormatFlag(hist, f);
  hist->add_option("--id", f.id, "Query image id");
  hist->add_option("--target", f.target, "Target domain name");
  hist->add_option("--bins", f.bins, "Histogram bins");

  auto* oracle = app.add_subcommand("oracle", "Label oracle experiments");
  AddBundleFlags(oracle, f);
  AddMethodFlags(oracle, f, false);
  AddMetricFlags(oracle, f);
  AddFormatFlag(oracle, f);
  oracle->add_option("--kind", f.kind,
                     "inject_inlier, inject_outlier, upper_bound or "
                     "remove_words");
  oracle->add_option("--ell", f.ell, "Nearest words removed by remove_words");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }
  if (f.format.empty()) f.format = hist->parsed() ? "csv" : "json";

  try {
    SetThreadCount(f.threads);
    if (validate->parsed()) return RunValidate(f);
    if (query->parsed()) return RunQueryCommand(f);
    if (bench->parsed()) return RunBench(f);
    if (sweep->parsed()) return RunSweep(f);
    if (hist->parsed()) return RunHist(f);
    if (oracle->parsed()) return RunOracle(f);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitData;
  }
  return kExitUsage;
}
