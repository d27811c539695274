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

#include "domconv/synthetic.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <random>

#include "domconv/errors.h"
#include "domconv/fdem.h"
#include "json.hpp"

namespace domconv {

namespace {

std::uint64_t Fnv1a(std::string_view text) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

// Random unit vector supported on coordinates [first, dim).
std::vector<double> RandomUnit(std::mt19937_64& rng, std::size_t dim,
                               std::size_t first = 0) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> v(dim, 0.0);
  double sum = 0.0;
  for (std::size_t i = first; i < dim; ++i) {
    v[i] = normal(rng);
    sum += v[i] * v[i];
  }
  const double norm = std::sqrt(sum);
  for (auto& x : v) x /= norm;
  return v;
}

std::size_t ContentAxes(const SyntheticConfig& config) {
  return config.layout == SyntheticLayout::kCluster
             ? config.classes * config.domains
             : config.classes + config.domains;
}

// Unrelated words live off the image-content axes when there is room.
std::size_t FreeAxis(const SyntheticConfig& config) {
  const std::size_t axes = ContentAxes(config);
  return axes < config.dim ? axes : 0;
}

std::vector<float> ToUnitFloat(const std::vector<double>& v) {
  double sum = 0.0;
  for (double x : v) sum += x * x;
  const double norm = std::sqrt(sum);
  std::vector<float> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    out[i] = static_cast<float>(v[i] / norm);
  }
  return out;
}

std::vector<double> Basis(std::size_t dim, std::size_t axis) {
  std::vector<double> v(dim, 0.0);
  v[axis] = 1.0;
  return v;
}

EmbeddingMatrix Stack(const std::vector<std::vector<float>>& rows) {
  const std::size_t dim = rows.front().size();
  std::vector<float> data;
  data.reserve(rows.size() * dim);
  for (const auto& r : rows) data.insert(data.end(), r.begin(), r.end());
  return EmbeddingMatrix(rows.size(), dim, std::move(data));
}

void CheckConfig(const SyntheticConfig& config) {
  if (config.classes == 0 || config.domains == 0) {
    throw InvalidArgumentError("synthetic bundle needs classes and domains");
  }
  const std::size_t axes = ContentAxes(config);
  if (config.dim < axes) {
    throw InvalidArgumentError("synthetic dim " + std::to_string(config.dim) +
                               " is below the " + std::to_string(axes) +
                               " orthogonal directions needed");
  }
  if (config.images_per_cluster == 0 || config.queries_per_cluster == 0) {
    throw InvalidArgumentError("synthetic clusters need images and queries");
  }
  if (config.synonym_alignment < 0.0 || config.synonym_alignment > 1.0) {
    throw InvalidArgumentError("synonym alignment must lie in [0, 1]");
  }
}

void Normalize(std::vector<double>& v) {
  double sum = 0.0;
  for (double x : v) sum += x * x;
  const double norm = std::sqrt(sum);
  for (auto& x : v) x /= norm;
}

}  // namespace

std::string SyntheticClassName(std::size_t c) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "object_%02zu", c);
  return buf;
}

std::string SyntheticDomainName(std::size_t t) {
  return "style_" + std::to_string(t);
}

SyntheticTextEncoder::SyntheticTextEncoder(const SyntheticConfig& config)
    : config_(config), dim_(config.dim) {
  CheckConfig(config);
  std::mt19937_64 rng(config.seed ^ 0x7e57ab1eull);
  auto add = [&](std::string token, TokenInfo info, bool in_vocab) {
    lexicon_[token] = std::move(info);
    if (in_vocab) vocabulary_.push_back(std::move(token));
  };
  for (std::size_t c = 0; c < config.classes; ++c) {
    add(SyntheticClassName(c), {Kind::kClass, c, {}},
        config.class_words_in_vocab);
  }
  for (std::size_t t = 0; t < config.domains; ++t) {
    add(SyntheticDomainName(t), {Kind::kDomain, t, {}},
        config.domain_words_in_vocab);
  }
  for (std::size_t c = 0; c < config.classes; ++c) {
    for (std::size_t s = 0; s < config.synonyms_per_class; ++s) {
      add(SyntheticClassName(c) + "_syn" + std::to_string(s),
          {Kind::kSynonym, c, RandomUnit(rng, dim_)}, true);
    }
  }
  for (std::size_t w = 0; w < config.distractor_words; ++w) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "word_%04zu", w);
    add(buf, {Kind::kOther, 0, RandomUnit(rng, dim_, FreeAxis(config))},
        true);
  }
}

std::vector<double> SyntheticTextEncoder::ClusterDirection(
    std::size_t cls, std::size_t domain) const {
  std::vector<double> v(dim_, 0.0);
  if (config_.layout == SyntheticLayout::kCluster) {
    v[cls * config_.domains + domain] = 1.0;
  } else {
    v[cls] = 1.0;
    v[config_.classes + domain] = config_.domain_weight;
    Normalize(v);
  }
  return v;
}

SyntheticTextEncoder::TokenInfo SyntheticTextEncoder::Lookup(
    std::string_view token) const {
  auto it = lexicon_.find(std::string(token));
  if (it != lexicon_.end()) return it->second;
  return {Kind::kOther, 0, {}};
}

std::vector<double> SyntheticTextEncoder::ClassVector(
    std::size_t cls, std::span<const std::size_t> domains) const {
  if (config_.layout == SyntheticLayout::kFactored) {
    return Basis(dim_, cls);
  }
  std::vector<double> v(dim_, 0.0);
  if (domains.empty()) {
    for (std::size_t t = 0; t < config_.domains; ++t) {
      v[cls * config_.domains + t] = 1.0;
    }
  } else {
    for (std::size_t t : domains) v[cls * config_.domains + t] = 1.0;
  }
  Normalize(v);
  return v;
}

std::vector<double> SyntheticTextEncoder::DomainVector(
    std::size_t domain) const {
  if (config_.layout == SyntheticLayout::kFactored) {
    return Basis(dim_, config_.classes + domain);
  }
  std::vector<double> v(dim_, 0.0);
  for (std::size_t c = 0; c < config_.classes; ++c) {
    v[c * config_.domains + domain] = 1.0;
  }
  Normalize(v);
  return v;
}

std::vector<double> SyntheticTextEncoder::TokenVector(
    const TokenInfo& info, std::string_view token,
    std::span<const std::size_t> domains) const {
  switch (info.kind) {
    case Kind::kClass:
      return ClassVector(info.index, domains);
    case Kind::kDomain:
      return DomainVector(info.index);
    case Kind::kSynonym: {
      const auto u = ClassVector(info.index, domains);
      auto r = info.residual;
      double proj = 0.0;
      for (std::size_t i = 0; i < dim_; ++i) proj += r[i] * u[i];
      for (std::size_t i = 0; i < dim_; ++i) r[i] -= proj * u[i];
      Normalize(r);
      const double a = config_.synonym_alignment;
      const double b = std::sqrt(1.0 - a * a);
      std::vector<double> v(dim_);
      for (std::size_t i = 0; i < dim_; ++i) v[i] = a * u[i] + b * r[i];
      return v;
    }
    case Kind::kOther:
      break;
  }
  if (domains.empty() && !info.residual.empty()) return info.residual;
  std::string key(token);
  for (std::size_t t : domains) key += "|" + SyntheticDomainName(t);
  std::mt19937_64 rng(Fnv1a(key));
  return RandomUnit(rng, dim_, FreeAxis(config_));
}

std::vector<float> SyntheticTextEncoder::Embed(std::string_view text) const {
  std::vector<std::string_view> tokens;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find(' ', start);
    if (end == std::string_view::npos) end = text.size();
    if (end > start) tokens.push_back(text.substr(start, end - start));
    start = end + 1;
  }
  if (tokens.empty()) throw InvalidArgumentError("empty text");

  std::vector<TokenInfo> infos;
  for (auto token : tokens) infos.push_back(Lookup(token));
  // In the cluster layout the last domain token modifies the others. Any
  // other domain named in the string conditions them as well, which is how
  // conflicting domains show up.
  std::optional<std::size_t> modifier;
  std::vector<std::size_t> domains;
  if (config_.layout == SyntheticLayout::kCluster && tokens.size() > 1) {
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      if (infos[i].kind != Kind::kDomain) continue;
      modifier = i;
      if (std::find(domains.begin(), domains.end(), infos[i].index) ==
          domains.end()) {
        domains.push_back(infos[i].index);
      }
    }
    std::sort(domains.begin(), domains.end());
  }
  std::vector<double> sum(dim_, 0.0);
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (modifier && i == *modifier) continue;
    const auto v = TokenVector(infos[i], tokens[i], domains);
    for (std::size_t d = 0; d < dim_; ++d) sum[d] += v[d];
  }
  return ToUnitFloat(sum);
}

std::vector<float> SyntheticTextEncoder::Encode(std::string_view text) {
  return Embed(text);
}

Bundle MakeSyntheticBundle(const SyntheticConfig& config) {
  CheckConfig(config);
  SyntheticTextEncoder encoder(config);
  std::mt19937_64 rng(config.seed);
  std::normal_distribution<double> noise(0.0, config.noise);

  std::vector<std::string> class_names;
  for (std::size_t c = 0; c < config.classes; ++c) {
    class_names.push_back(SyntheticClassName(c));
  }
  std::vector<std::string> domain_names;
  for (std::size_t t = 0; t < config.domains; ++t) {
    domain_names.push_back(SyntheticDomainName(t));
  }

  std::vector<ManifestItem> items;
  std::vector<std::vector<float>> db_rows;
  std::vector<std::vector<float>> query_rows;
  auto image = [&](std::size_t c, std::size_t t) {
    auto v = encoder.ClusterDirection(c, t);
    for (auto& x : v) x += noise(rng);
    return ToUnitFloat(v);
  };
  for (std::size_t c = 0; c < config.classes; ++c) {
    for (std::size_t t = 0; t < config.domains; ++t) {
      for (std::size_t i = 0; i < config.queries_per_cluster; ++i) {
        items.push_back({"q_" + class_names[c] + "_" + domain_names[t] + "_" +
                             std::to_string(i),
                         static_cast<ClassId>(c), static_cast<DomainId>(t),
                         Split::kQuery});
        query_rows.push_back(image(c, t));
      }
      for (std::size_t i = 0; i < config.images_per_cluster; ++i) {
        items.push_back({"db_" + class_names[c] + "_" + domain_names[t] +
                             "_" + std::to_string(i),
                         static_cast<ClassId>(c), static_cast<DomainId>(t),
                         Split::kDatabase});
        db_rows.push_back(image(c, t));
      }
    }
  }

  const auto& vocab = encoder.vocabulary();
  std::vector<std::vector<float>> vocab_rows;
  for (const auto& w : vocab) vocab_rows.push_back(encoder.Embed(w));

  std::vector<ComposedTable> composed;
  std::vector<std::shared_ptr<const EmbeddingMatrix>> class_tables;
  std::vector<std::vector<float>> domain_rows;
  for (const auto& domain : domain_names) {
    std::vector<std::vector<float>> rows;
    for (const auto& w : vocab) rows.push_back(encoder.Embed(w + " " + domain));
    composed.push_back(
        {domain, std::make_shared<const EmbeddingMatrix>(Stack(rows))});
    std::vector<std::vector<float>> class_rows;
    for (const auto& c : class_names) {
      class_rows.push_back(encoder.Embed(c + " " + domain));
    }
    class_tables.push_back(
        std::make_shared<const EmbeddingMatrix>(Stack(class_rows)));
    domain_rows.push_back(encoder.Embed(domain));
  }
  std::vector<std::vector<float>> class_text_rows;
  for (const auto& c : class_names) class_text_rows.push_back(encoder.Embed(c));

  DatasetManifest manifest(class_names, domain_names, std::move(items),
                           static_cast<std::int64_t>(config.seed));
  auto database = std::make_shared<const EmbeddingMatrix>(Stack(db_rows));
  std::vector<std::string> db_ids;
  for (std::size_t i : manifest.database_items()) {
    db_ids.push_back(manifest.items()[i].id);
  }
  Bundle bundle{
      .manifest = std::move(manifest),
      .database = database,
      .queries = std::make_shared<const EmbeddingMatrix>(Stack(query_rows)),
      .text_memory = TextMemory(
          vocab, std::make_shared<const EmbeddingMatrix>(Stack(vocab_rows))),
      .visual_memory = VisualMemory(std::move(db_ids), database),
      .composed = std::move(composed),
      .domain_text = std::make_shared<const EmbeddingMatrix>(Stack(domain_rows)),
      .class_text =
          std::make_shared<const EmbeddingMatrix>(Stack(class_text_rows)),
      .class_tables = config.class_words_in_vocab
                          ? std::vector<std::shared_ptr<const EmbeddingMatrix>>{}
                          : std::move(class_tables),
      .file_hashes = {},
  };
  ValidateBundle(bundle);
  return bundle;
}

BundlePaths WriteSyntheticBundle(const SyntheticConfig& config,
                                 const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  const Bundle bundle = MakeSyntheticBundle(config);

  BundlePaths paths;
  paths.manifest = dir / "manifest.json";
  paths.db_emb = dir / "db.fdem";
  paths.query_emb = dir / "query.fdem";
  paths.vocab = dir / "vocab.txt";
  paths.vocab_emb = dir / "vocab.fdem";
  paths.composed = dir / "composed.json";

  {
    std::ofstream out(paths.manifest, std::ios::binary);
    out << bundle.manifest.ToJson() << '\n';
  }
  {
    std::ofstream out(paths.vocab, std::ios::binary);
    for (const auto& w : bundle.text_memory.words()) out << w << '\n';
  }
  WriteMatrix(paths.db_emb, *bundle.database);
  WriteMatrix(paths.query_emb, *bundle.queries);
  WriteMatrix(paths.vocab_emb, bundle.text_memory.embeddings());

  nlohmann::ordered_json index;
  index["vocab_rows"] = bundle.text_memory.size();
  nlohmann::ordered_json tables = nlohmann::ordered_json::object();
  for (const auto& table : bundle.composed) {
    const std::string file = "composed_" + table.domain + ".fdem";
    WriteMatrix(dir / file, *table.embeddings);
    tables[table.domain] = file;
  }
  index["tables"] = std::move(tables);
  WriteMatrix(dir / "domain_text.fdem", *bundle.domain_text);
  index["domain_text"] = "domain_text.fdem";
  WriteMatrix(dir / "class_text.fdem", *bundle.class_text);
  index["class_text"] = "class_text.fdem";
  if (!bundle.class_tables.empty()) {
    nlohmann::ordered_json class_tables = nlohmann::ordered_json::object();
    const auto& names = bundle.manifest.domain_names();
    for (std::size_t d = 0; d < names.size(); ++d) {
      const std::string file = "class_" + names[d] + ".fdem";
      WriteMatrix(dir / file, *bundle.class_tables[d]);
      class_tables[names[d]] = file;
    }
    index["class_tables"] = std::move(class_tables);
  }
  std::ofstream out(paths.composed, std::ios::binary);
  out << index.dump(2) << '\n';
  return paths;
}

void ServeSyntheticProvider(const SyntheticConfig& config, std::istream& in,
                            std::ostream& out) {
  SyntheticTextEncoder encoder(config);
  std::string line;
  char buf[32];
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::vector<float> v;
    try {
      v = encoder.Embed(line);
    } catch (const Error& e) {
      out << "error: " << e.what() << '\n' << std::flush;
      continue;
    }
    for (std::size_t i = 0; i < v.size(); ++i) {
      std::snprintf(buf, sizeof(buf), "%.9g", static_cast<double>(v[i]));
      if (i > 0) out << ' ';
      out << buf;
    }
    out << '\n' << std::flush;
  }
}

}  // namespace domconv
