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

#include "domconv/store.h"

#include <fstream>
#include <set>
#include <sstream>
#include <unordered_set>

#include "domconv/errors.h"
#include "domconv/file_hash.h"
#include "json.hpp"

namespace domconv {

using nlohmann::json;

TextMemory::TextMemory(std::vector<std::string> words,
                       std::shared_ptr<const EmbeddingMatrix> embeddings) {
  if (!embeddings) throw InvalidArgumentError("text memory without embeddings");
  if (words.empty()) throw InvalidArgumentError("empty vocabulary");
  if (words.size() != embeddings->rows()) {
    std::ostringstream msg;
    msg << "vocabulary has " << words.size() << " words but its embedding "
        << "matrix has " << embeddings->rows() << " rows";
    throw MismatchError(msg.str());
  }
  auto index = std::make_shared<std::unordered_map<std::string, WordId>>();
  index->reserve(words.size());
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (!index->emplace(words[i], static_cast<WordId>(i)).second) {
      throw FormatError("duplicate vocabulary word '" + words[i] +
                        "' at line " + std::to_string(i));
    }
  }
  words_ = std::make_shared<const std::vector<std::string>>(std::move(words));
  index_ = std::move(index);
  embeddings_ = std::move(embeddings);
}

std::optional<WordId> TextMemory::Find(std::string_view word) const {
  auto it = index_->find(std::string(word));
  if (it == index_->end()) return std::nullopt;
  return it->second;
}

TextMemory TextMemory::WithRemoved(std::span<const WordId> ids) const {
  TextMemory out = *this;
  if (out.removed_mask_.empty()) out.removed_mask_.assign(size(), false);
  for (WordId id : ids) {
    if (id >= size()) {
      throw InvalidArgumentError("word id " + std::to_string(id) +
                                 " out of range");
    }
    if (!out.removed_mask_[id]) {
      out.removed_mask_[id] = true;
      out.removed_.push_back(id);
    }
  }
  return out;
}

VisualMemory::VisualMemory(std::vector<std::string> image_ids,
                           std::shared_ptr<const EmbeddingMatrix> embeddings) {
  if (!embeddings) throw InvalidArgumentError("visual memory without data");
  if (image_ids.size() != embeddings->rows()) {
    std::ostringstream msg;
    msg << "visual memory has " << image_ids.size() << " ids but "
        << embeddings->rows() << " embedding rows";
    throw MismatchError(msg.str());
  }
  std::unordered_set<std::string> seen;
  for (const auto& id : image_ids) {
    if (!seen.insert(id).second) {
      throw FormatError("duplicate visual memory id '" + id + "'");
    }
  }
  image_ids_ =
      std::make_shared<const std::vector<std::string>>(std::move(image_ids));
  embeddings_ = std::move(embeddings);
}

DatasetManifest::DatasetManifest(std::vector<std::string> class_names,
                                 std::vector<std::string> domain_names,
                                 std::vector<ManifestItem> items,
                                 std::optional<std::int64_t> seed)
    : class_names_(std::move(class_names)),
      domain_names_(std::move(domain_names)),
      items_(std::move(items)),
      seed_(seed) {
  if (class_names_.empty()) throw FormatError("manifest has no classes");
  if (domain_names_.empty()) throw FormatError("manifest has no domains");
  std::set<std::string_view> names(domain_names_.begin(), domain_names_.end());
  if (names.size() != domain_names_.size()) {
    throw FormatError("manifest domain names are not unique");
  }
  for (std::size_t i = 0; i < items_.size(); ++i) {
    const auto& item = items_[i];
    if (item.class_id >= class_names_.size()) {
      throw FormatError("item '" + item.id + "' has class index " +
                        std::to_string(item.class_id) + " out of range");
    }
    if (item.domain_id >= domain_names_.size()) {
      throw FormatError("item '" + item.id + "' has domain index " +
                        std::to_string(item.domain_id) + " out of range");
    }
    auto& rows = item.split == Split::kQuery ? query_rows_ : database_rows_;
    auto& order = item.split == Split::kQuery ? query_items_ : database_items_;
    if (!rows.emplace(item.id, order.size()).second) {
      throw FormatError("duplicate item id '" + item.id + "' in " +
                        (item.split == Split::kQuery ? "query" : "database") +
                        " split");
    }
    order.push_back(i);
  }
  if (query_items_.empty()) throw FormatError("manifest has no query items");
  if (database_items_.empty()) {
    throw FormatError("manifest has no database items");
  }
}

DatasetManifest DatasetManifest::FromJson(std::string_view text) {
  try {
    const json doc = json::parse(text);
    std::vector<ManifestItem> items;
    for (const auto& entry : doc.at("items")) {
      ManifestItem item;
      item.id = entry.at("id").get<std::string>();
      const auto cls = entry.at("class").get<std::int64_t>();
      const auto dom = entry.at("domain").get<std::int64_t>();
      if (cls < 0 || dom < 0) {
        throw FormatError("item '" + item.id + "' has a negative index");
      }
      item.class_id = static_cast<ClassId>(cls);
      item.domain_id = static_cast<DomainId>(dom);
      const auto split = entry.at("split").get<std::string>();
      if (split == "query") {
        item.split = Split::kQuery;
      } else if (split == "database") {
        item.split = Split::kDatabase;
      } else {
        throw FormatError("item '" + item.id + "' has unknown split '" +
                          split + "'");
      }
      items.push_back(std::move(item));
    }
    std::optional<std::int64_t> seed;
    if (doc.contains("seed") && !doc["seed"].is_null()) {
      seed = doc["seed"].get<std::int64_t>();
    }
    return DatasetManifest(doc.at("class_names").get<std::vector<std::string>>(),
                           doc.at("domain_names").get<std::vector<std::string>>(),
                           std::move(items), seed);
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed manifest: ") + e.what());
  }
}

DatasetManifest DatasetManifest::Load(const std::filesystem::path& path) {
  const auto bytes = ReadFileBytes(path);
  return FromJson({reinterpret_cast<const char*>(bytes.data()), bytes.size()});
}

std::string DatasetManifest::ToJson() const {
  json doc;
  doc["class_names"] = class_names_;
  doc["domain_names"] = domain_names_;
  json items = json::array();
  for (const auto& item : items_) {
    items.push_back({{"id", item.id},
                     {"class", item.class_id},
                     {"domain", item.domain_id},
                     {"split", item.split == Split::kQuery ? "query"
                                                           : "database"}});
  }
  doc["items"] = std::move(items);
  if (seed_) doc["seed"] = *seed_;
  return doc.dump(1);
}

std::optional<DomainId> DatasetManifest::FindDomain(
    std::string_view name) const {
  for (std::size_t i = 0; i < domain_names_.size(); ++i) {
    if (domain_names_[i] == name) return static_cast<DomainId>(i);
  }
  return std::nullopt;
}

std::optional<std::size_t> DatasetManifest::FindDatabaseRow(
    std::string_view id) const {
  auto it = database_rows_.find(std::string(id));
  if (it == database_rows_.end()) return std::nullopt;
  return it->second;
}

std::optional<std::size_t> DatasetManifest::FindQueryRow(
    std::string_view id) const {
  auto it = query_rows_.find(std::string(id));
  if (it == query_rows_.end()) return std::nullopt;
  return it->second;
}

std::vector<std::string> ParseVocabulary(std::string_view text) {
  std::vector<std::string> words;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') {
      throw FormatError("vocabulary line " + std::to_string(words.size()) +
                        " has a CR line ending; expected LF");
    }
    if (line.empty()) {
      throw FormatError("vocabulary line " + std::to_string(words.size()) +
                        " is empty");
    }
    words.emplace_back(line);
    start = end + 1;
  }
  return words;
}

std::vector<std::string> LoadVocabulary(const std::filesystem::path& path) {
  const auto bytes = ReadFileBytes(path);
  return ParseVocabulary(
      {reinterpret_cast<const char*>(bytes.data()), bytes.size()});
}

ComposedIndex ComposedIndex::FromJson(std::string_view text,
                                      const std::filesystem::path& base_dir) {
  auto resolve = [&](const std::string& p) {
    std::filesystem::path path(p);
    return path.is_absolute() ? path : base_dir / path;
  };
  try {
    const json doc = json::parse(text);
    ComposedIndex index;
    const auto rows = doc.at("vocab_rows").get<std::int64_t>();
    if (rows <= 0) throw FormatError("composed index vocab_rows must be > 0");
    index.vocab_rows = static_cast<std::size_t>(rows);
    for (const auto& [domain, path] : doc.at("tables").items()) {
      index.tables[domain] = resolve(path.get<std::string>());
    }
    if (doc.contains("domain_text")) {
      index.domain_text = resolve(doc["domain_text"].get<std::string>());
    }
    if (doc.contains("class_text")) {
      index.class_text = resolve(doc["class_text"].get<std::string>());
    }
    if (doc.contains("class_tables")) {
      for (const auto& [domain, path] : doc["class_tables"].items()) {
        index.class_tables[domain] = resolve(path.get<std::string>());
      }
    }
    return index;
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed composed index: ") + e.what());
  }
}

ComposedIndex ComposedIndex::Load(const std::filesystem::path& path) {
  const auto bytes = ReadFileBytes(path);
  return FromJson({reinterpret_cast<const char*>(bytes.data()), bytes.size()},
                  path.parent_path());
}

namespace {

void CheckDim(const EmbeddingMatrix& m, std::size_t dim,
              const std::string& what) {
  if (m.dim() != dim) {
    std::ostringstream msg;
    msg << what << " has dim " << m.dim() << ", expected " << dim;
    throw MismatchError(msg.str());
  }
}

void CheckRows(const EmbeddingMatrix& m, std::size_t rows,
               const std::string& what) {
  if (m.rows() != rows) {
    std::ostringstream msg;
    msg << what << " has " << m.rows() << " rows, expected " << rows;
    throw MismatchError(msg.str());
  }
}

// Loads an FDEM file and records its hash under `role`.
std::shared_ptr<const EmbeddingMatrix> LoadHashed(
    const std::filesystem::path& path, const std::string& role,
    const LoadOptions& options, std::map<std::string, std::string>& hashes) {
  const auto bytes = ReadFileBytes(path);
  hashes[role] = Sha256Hex(bytes);
  try {
    return std::make_shared<const EmbeddingMatrix>(ParseFdem(bytes, options));
  } catch (const NormalizationError& e) {
    throw NormalizationError(e.row(), e.norm(), path.string());
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  } catch (const CorruptionError& e) {
    throw CorruptionError(path.string() + ": " + e.what());
  }
}

std::vector<std::string> DatabaseIds(const DatasetManifest& manifest) {
  std::vector<std::string> ids;
  ids.reserve(manifest.database_items().size());
  for (std::size_t i : manifest.database_items()) {
    ids.push_back(manifest.items()[i].id);
  }
  return ids;
}

}  // namespace

void ValidateBundle(const Bundle& bundle) {
  const auto& manifest = bundle.manifest;
  const std::size_t dim = bundle.database->dim();
  CheckRows(*bundle.database, manifest.database_items().size(),
            "database embeddings");
  CheckRows(*bundle.queries, manifest.query_items().size(),
            "query embeddings");
  CheckDim(*bundle.queries, dim, "query embeddings");
  CheckDim(bundle.text_memory.embeddings(), dim, "vocabulary embeddings");
  CheckDim(bundle.visual_memory.embeddings(), dim, "visual memory");
  if (bundle.composed.size() != manifest.domain_names().size()) {
    throw MismatchError("expected one composed table per manifest domain");
  }
  for (std::size_t d = 0; d < bundle.composed.size(); ++d) {
    const auto& table = bundle.composed[d];
    if (!table.embeddings) {
      throw MismatchError("missing composed table for domain '" +
                          manifest.domain_names()[d] + "'");
    }
    CheckRows(*table.embeddings, bundle.text_memory.size(),
              "composed table '" + table.domain + "'");
    CheckDim(*table.embeddings, dim, "composed table '" + table.domain + "'");
  }
  if (bundle.domain_text) {
    CheckRows(*bundle.domain_text, manifest.domain_names().size(),
              "domain text embeddings");
    CheckDim(*bundle.domain_text, dim, "domain text embeddings");
  }
  if (bundle.class_text) {
    CheckRows(*bundle.class_text, manifest.class_names().size(),
              "class text embeddings");
    CheckDim(*bundle.class_text, dim, "class text embeddings");
  }
  if (!bundle.class_tables.empty()) {
    if (bundle.class_tables.size() != manifest.domain_names().size()) {
      throw MismatchError("class tables must cover every manifest domain");
    }
    for (std::size_t d = 0; d < bundle.class_tables.size(); ++d) {
      const std::string what =
          "class table '" + manifest.domain_names()[d] + "'";
      if (!bundle.class_tables[d]) {
        throw MismatchError("missing " + what);
      }
      CheckRows(*bundle.class_tables[d], manifest.class_names().size(), what);
      CheckDim(*bundle.class_tables[d], dim, what);
    }
  }
}

Bundle LoadBundle(const BundlePaths& paths, const LoadOptions& options) {
  std::map<std::string, std::string> hashes;

  const auto manifest_bytes = ReadFileBytes(paths.manifest);
  hashes["manifest"] = Sha256Hex(manifest_bytes);
  DatasetManifest manifest = DatasetManifest::FromJson(
      {reinterpret_cast<const char*>(manifest_bytes.data()),
       manifest_bytes.size()});

  const auto vocab_bytes = ReadFileBytes(paths.vocab);
  hashes["vocab"] = Sha256Hex(vocab_bytes);
  auto words = ParseVocabulary(
      {reinterpret_cast<const char*>(vocab_bytes.data()), vocab_bytes.size()});

  auto database = LoadHashed(paths.db_emb, "db_emb", options, hashes);
  auto queries = LoadHashed(paths.query_emb, "query_emb", options, hashes);
  auto vocab_emb = LoadHashed(paths.vocab_emb, "vocab_emb", options, hashes);

  const auto index_bytes = ReadFileBytes(paths.composed);
  hashes["composed"] = Sha256Hex(index_bytes);
  const ComposedIndex index = ComposedIndex::FromJson(
      {reinterpret_cast<const char*>(index_bytes.data()), index_bytes.size()},
      paths.composed.parent_path());

  if (index.vocab_rows != words.size()) {
    std::ostringstream msg;
    msg << "composed index declares " << index.vocab_rows
        << " vocabulary rows but the vocabulary has " << words.size()
        << " words";
    throw MismatchError(msg.str());
  }

  for (const auto& [name, path] : index.tables) {
    if (!manifest.FindDomain(name)) {
      throw MismatchError("composed table for unknown domain '" + name + "'");
    }
  }
  for (const auto& [name, path] : index.class_tables) {
    if (!manifest.FindDomain(name)) {
      throw MismatchError("class table for unknown domain '" + name + "'");
    }
  }

  std::vector<ComposedTable> composed;
  for (const auto& domain : manifest.domain_names()) {
    auto it = index.tables.find(domain);
    if (it == index.tables.end()) {
      throw MismatchError("missing composed table for domain '" + domain +
                          "'");
    }
    composed.push_back(
        {domain, LoadHashed(it->second, "composed/" + domain, options, hashes)});
  }

  std::shared_ptr<const EmbeddingMatrix> domain_text;
  if (index.domain_text) {
    domain_text = LoadHashed(*index.domain_text, "domain_text", options, hashes);
  }
  std::shared_ptr<const EmbeddingMatrix> class_text;
  if (index.class_text) {
    class_text = LoadHashed(*index.class_text, "class_text", options, hashes);
  }
  std::vector<std::shared_ptr<const EmbeddingMatrix>> class_tables;
  if (!index.class_tables.empty()) {
    for (const auto& domain : manifest.domain_names()) {
      auto it = index.class_tables.find(domain);
      if (it == index.class_tables.end()) {
        throw MismatchError("missing class table for domain '" + domain + "'");
      }
      class_tables.push_back(LoadHashed(it->second, "class_tables/" + domain,
                                        options, hashes));
    }
  }

  std::optional<VisualMemory> visual;
  if (paths.memory_emb) {
    auto memory = LoadHashed(*paths.memory_emb, "memory_emb", options, hashes);
    std::vector<std::string> ids;
    ids.reserve(memory->rows());
    for (std::size_t i = 0; i < memory->rows(); ++i) {
      ids.push_back("memory:" + std::to_string(i));
    }
    visual.emplace(std::move(ids), std::move(memory));
  } else {
    visual.emplace(DatabaseIds(manifest), database);
  }

  Bundle bundle{
      .manifest = std::move(manifest),
      .database = std::move(database),
      .queries = std::move(queries),
      .text_memory = TextMemory(std::move(words), std::move(vocab_emb)),
      .visual_memory = std::move(*visual),
      .composed = std::move(composed),
      .domain_text = std::move(domain_text),
      .class_text = std::move(class_text),
      .class_tables = std::move(class_tables),
      .file_hashes = std::move(hashes),
  };
  ValidateBundle(bundle);
  return bundle;
}

}  // namespace domconv
