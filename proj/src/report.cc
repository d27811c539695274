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

#include <algorithm>
#include <iomanip>
#include <sstream>

#include "domconv/evalbench.h"
#include "json.hpp"

namespace domconv {

namespace {

using nlohmann::ordered_json;

ordered_json Value(const std::optional<double>& v) {
  return v ? ordered_json(*v) : ordered_json(nullptr);
}

std::string Cell(const std::optional<double>& v) {
  if (!v) return "";
  std::ostringstream out;
  out << std::fixed << std::setprecision(6) << *v;
  return out.str();
}

ordered_json Metrics(const std::vector<std::string>& names,
                     const std::vector<std::optional<double>>& values) {
  ordered_json out = ordered_json::object();
  for (std::size_t i = 0; i < names.size(); ++i) out[names[i]] = Value(values[i]);
  return out;
}

ordered_json ReportBody(const EvalReport& report) {
  ordered_json doc;
  ordered_json config;
  config["method"] = report.method;
  config["k"] = report.params.k;
  config["n"] = report.params.n;
  config["m"] = report.params.m;
  config["metrics"] = report.metric_names;
  config["recall"] = report.recall_mode == RecallMode::kProportional
                         ? "proportional"
                         : "hit";
  config["seed"] = report.seed ? ordered_json(*report.seed)
                               : ordered_json(nullptr);
  config["file_hashes"] = report.file_hashes;
  doc["config"] = std::move(config);

  ordered_json pairs = ordered_json::array();
  for (const auto& pair : report.pairs) {
    ordered_json entry;
    entry["source"] = report.domain_names[pair.source];
    entry["target"] = report.domain_names[pair.target];
    entry["metrics"] = Metrics(report.metric_names, pair.values);
    entry["n_queries"] = pair.n_queries;
    entry["skipped"] = pair.skipped;
    pairs.push_back(std::move(entry));
  }
  doc["per_pair"] = std::move(pairs);

  ordered_json sources = ordered_json::array();
  for (std::size_t s = 0; s < report.per_source.size(); ++s) {
    ordered_json entry;
    entry["source"] = report.domain_names[s];
    entry["metrics"] = Metrics(report.metric_names, report.per_source[s]);
    sources.push_back(std::move(entry));
  }
  doc["per_source_avg"] = std::move(sources);
  doc["grand_avg"] = Metrics(report.metric_names, report.grand);
  doc["queries"] = {{"total", report.total_queries},
                    {"evaluated", report.total_queries - report.skipped_queries},
                    {"skipped", report.skipped_queries}};
  doc["notices"] = report.notices;
  return doc;
}

ordered_json Timing(const LatencyStats& latency) {
  return {{"mean_ms", latency.mean_ms},
          {"p50_ms", latency.p50_ms},
          {"p95_ms", latency.p95_ms},
          {"queries", latency.samples}};
}

}  // namespace

std::string ReportJson(const EvalReport& report, bool include_timing) {
  auto doc = ReportBody(report);
  if (include_timing) doc["timing"] = Timing(report.latency);
  return doc.dump(2) + "\n";
}

std::string ReportCsv(const EvalReport& report) {
  // Rows are target domains, columns source domains; the AVG row holds the
  // per-source means and the grand mean.
  std::ostringstream out;
  out << "metric,target";
  for (const auto& name : report.domain_names) out << ',' << name;
  out << ",AVG\n";
  for (std::size_t m = 0; m < report.metric_names.size(); ++m) {
    for (DomainId t = 0; t < report.domain_names.size(); ++t) {
      out << report.metric_names[m] << ',' << report.domain_names[t];
      for (DomainId s = 0; s < report.domain_names.size(); ++s) {
        out << ',';
        if (s != t) out << Cell(report.Pair(s, t, report.metric_names[m]));
      }
      out << ",\n";
    }
    out << report.metric_names[m] << ",AVG";
    for (std::size_t s = 0; s < report.per_source.size(); ++s) {
      out << ',' << Cell(report.per_source[s][m]);
    }
    out << ',' << Cell(report.grand[m]) << '\n';
  }
  return out.str();
}

std::string SweepJson(const std::vector<SweepCell>& cells) {
  ordered_json doc = ordered_json::array();
  for (const auto& cell : cells) {
    doc.push_back({{"method", std::string(MethodName(cell.method))},
                   {"k", cell.params.k},
                   {"n", cell.params.n},
                   {"m", cell.params.m},
                   {"map", Value(cell.grand_map)}});
  }
  return doc.dump(2) + "\n";
}

std::string SweepCsv(const std::vector<SweepCell>& cells) {
  std::vector<std::size_t> ks, ns, ms;
  std::vector<Method> methods;
  auto add = [](auto& xs, auto x) {
    if (std::find(xs.begin(), xs.end(), x) == xs.end()) xs.push_back(x);
  };
  for (const auto& c : cells) {
    add(methods, c.method);
    add(ks, c.params.k);
    add(ns, c.params.n);
    add(ms, c.params.m);
  }
  auto find = [&](Method method, std::size_t k, std::size_t n,
                  std::size_t m) -> std::optional<double> {
    for (const auto& c : cells) {
      if (c.method == method && c.params.k == k && c.params.n == n &&
          c.params.m == m) {
        return c.grand_map;
      }
    }
    return std::nullopt;
  };

  std::ostringstream out;
  if (ks.size() * ns.size() > 1) {
    // k x n matrix per (method, m).
    out << "method,m,k";
    for (std::size_t n : ns) out << ",n=" << n;
    out << '\n';
    for (Method method : methods) {
      for (std::size_t m : ms) {
        for (std::size_t k : ks) {
          out << MethodName(method) << ',' << m << ',' << k;
          for (std::size_t n : ns) out << ',' << Cell(find(method, k, n, m));
          out << '\n';
        }
      }
    }
  } else {
    // method x m matrix.
    out << "method";
    for (std::size_t m : ms) out << ",m=" << m;
    out << '\n';
    for (Method method : methods) {
      out << MethodName(method);
      for (std::size_t m : ms) {
        out << ',' << Cell(find(method, ks.front(), ns.front(), m));
      }
      out << '\n';
    }
  }
  return out.str();
}

std::string HistogramCsv(const HistogramResult& result) {
  std::ostringstream out;
  out << "bin_left,bin_right,neg,pos_object,pos_domain,pos\n";
  out << std::setprecision(9);
  for (const auto& bin : result.bins) {
    out << bin.left << ',' << bin.right;
    for (std::size_t c : bin.counts) out << ',' << c;
    out << '\n';
  }
  return out.str();
}

std::string OracleJson(const OracleReport& report, bool include_timing) {
  ordered_json doc;
  doc["oracle"] = std::string(OracleName(report.kind));
  if (report.kind == OracleKind::kRemoveWords) doc["ell"] = report.ell;
  ordered_json deltas = ordered_json::object();
  for (const auto& name : report.baseline.metric_names) {
    deltas[name] = Value(report.GrandDelta(name));
  }
  doc["grand_delta"] = std::move(deltas);
  ordered_json pairs = ordered_json::array();
  for (std::size_t i = 0; i < report.baseline.pairs.size(); ++i) {
    const auto& b = report.baseline.pairs[i];
    const auto& o = report.oracle.pairs[i];
    ordered_json entry;
    entry["source"] = report.baseline.domain_names[b.source];
    entry["target"] = report.baseline.domain_names[b.target];
    for (std::size_t m = 0; m < report.baseline.metric_names.size(); ++m) {
      std::optional<double> delta;
      if (b.values[m] && o.values[m]) delta = *o.values[m] - *b.values[m];
      entry[report.baseline.metric_names[m]] = Value(delta);
    }
    pairs.push_back(std::move(entry));
  }
  doc["per_pair_delta"] = std::move(pairs);
  doc["baseline"] = ReportBody(report.baseline);
  doc["oracle_run"] = ReportBody(report.oracle);
  if (include_timing) {
    doc["timing"] = {{"baseline", Timing(report.baseline.latency)},
                     {"oracle", Timing(report.oracle.latency)}};
  }
  return doc.dump(2) + "\n";
}

std::string OracleCsv(const OracleReport& report) {
  std::ostringstream out;
  out << "metric,source,target,baseline,oracle,delta\n";
  const auto& names = report.baseline.metric_names;
  auto row = [&](const std::string& metric, const std::string& source,
                 const std::string& target, std::optional<double> b,
                 std::optional<double> o) {
    std::optional<double> d;
    if (b && o) d = *o - *b;
    out << metric << ',' << source << ',' << target << ',' << Cell(b) << ','
        << Cell(o) << ',' << Cell(d) << '\n';
  };
  for (std::size_t m = 0; m < names.size(); ++m) {
    for (std::size_t i = 0; i < report.baseline.pairs.size(); ++i) {
      const auto& b = report.baseline.pairs[i];
      const auto& o = report.oracle.pairs[i];
      row(names[m], report.baseline.domain_names[b.source],
          report.baseline.domain_names[b.target], b.values[m], o.values[m]);
    }
    row(names[m], "AVG", "AVG", report.baseline.grand[m],
        report.oracle.grand[m]);
  }
  return out.str();
}

}  // namespace domconv
