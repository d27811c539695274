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

#ifndef DOMCONV_STORE_H_
#define DOMCONV_STORE_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "domconv/embedding_matrix.h"
#include "domconv/fdem.h"

namespace domconv {

// Vocabulary word id: 0-based line number in the vocabulary file.
using WordId = std::uint32_t;
using ClassId = std::uint32_t;
using DomainId = std::uint32_t;

// Vocabulary words paired with their text embeddings. Copies are cheap and
// share the underlying word list and matrix. A derived memory produced by
// WithRemoved() keeps the original word ids and hides the removed words
// from search.
class TextMemory {
 public:
  TextMemory(std::vector<std::string> words,
             std::shared_ptr<const EmbeddingMatrix> embeddings);

  // Number of word ids, including removed ones.
  std::size_t size() const { return words_->size(); }
  std::size_t active_size() const { return size() - removed_.size(); }
  std::size_t dim() const { return embeddings_->dim(); }

  const std::string& word(WordId id) const { return (*words_)[id]; }
  const std::vector<std::string>& words() const { return *words_; }
  std::span<const float> embedding(WordId id) const {
    return embeddings_->row(id);
  }
  const EmbeddingMatrix& embeddings() const { return *embeddings_; }

  std::optional<WordId> Find(std::string_view word) const;

  bool is_removed(WordId id) const {
    return !removed_mask_.empty() && removed_mask_[id];
  }
  // Removed ids in the order they were removed.
  const std::vector<WordId>& removed() const { return removed_; }
  // Per-id removal flags; empty when nothing is removed.
  const std::vector<bool>& removed_mask() const { return removed_mask_; }

  TextMemory WithRemoved(std::span<const WordId> ids) const;

 private:
  TextMemory() = default;

  std::shared_ptr<const std::vector<std::string>> words_;
  std::shared_ptr<const std::unordered_map<std::string, WordId>> index_;
  std::shared_ptr<const EmbeddingMatrix> embeddings_;
  std::vector<bool> removed_mask_;
  std::vector<WordId> removed_;
};

class VisualMemory {
 public:
  VisualMemory(std::vector<std::string> image_ids,
               std::shared_ptr<const EmbeddingMatrix> embeddings);

  std::size_t size() const { return image_ids_->size(); }
  const std::string& image_id(std::size_t row) const {
    return (*image_ids_)[row];
  }
  const EmbeddingMatrix& embeddings() const { return *embeddings_; }

 private:
  std::shared_ptr<const std::vector<std::string>> image_ids_;
  std::shared_ptr<const EmbeddingMatrix> embeddings_;
};

// Row i is the embedding of the string "<word i> <domain>".
struct ComposedTable {
  std::string domain;
  std::shared_ptr<const EmbeddingMatrix> embeddings;
};

enum class Split { kQuery, kDatabase };

struct ManifestItem {
  std::string id;
  ClassId class_id = 0;
  DomainId domain_id = 0;
  Split split = Split::kDatabase;
};

// Image ids are unique within a split. The same id may appear once in each
// split; evaluation then keeps the query out of its own ranking.
class DatasetManifest {
 public:
  DatasetManifest(std::vector<std::string> class_names,
                  std::vector<std::string> domain_names,
                  std::vector<ManifestItem> items,
                  std::optional<std::int64_t> seed = std::nullopt);

  static DatasetManifest FromJson(std::string_view text);
  static DatasetManifest Load(const std::filesystem::path& path);
  std::string ToJson() const;

  const std::vector<std::string>& class_names() const { return class_names_; }
  const std::vector<std::string>& domain_names() const {
    return domain_names_;
  }
  const std::vector<ManifestItem>& items() const { return items_; }
  std::optional<std::int64_t> seed() const { return seed_; }

  // Manifest item indices of each split, in manifest order. Row r of the
  // query (database) matrix belongs to query_items()[r] (database_items()[r]).
  const std::vector<std::size_t>& query_items() const { return query_items_; }
  const std::vector<std::size_t>& database_items() const {
    return database_items_;
  }

  std::optional<DomainId> FindDomain(std::string_view name) const;
  // Database row holding `id`, if any.
  std::optional<std::size_t> FindDatabaseRow(std::string_view id) const;
  std::optional<std::size_t> FindQueryRow(std::string_view id) const;

 private:
  std::vector<std::string> class_names_;
  std::vector<std::string> domain_names_;
  std::vector<ManifestItem> items_;
  std::optional<std::int64_t> seed_;
  std::vector<std::size_t> query_items_;
  std::vector<std::size_t> database_items_;
  std::unordered_map<std::string, std::size_t> query_rows_;
  std::unordered_map<std::string, std::size_t> database_rows_;
};

// Reads a vocabulary file: UTF-8, one word per LF-terminated line.
std::vector<std::string> LoadVocabulary(const std::filesystem::path& path);
std::vector<std::string> ParseVocabulary(std::string_view text);

// Parsed composed index. Relative paths are resolved against the index
// file's directory.
struct ComposedIndex {
  std::size_t vocab_rows = 0;
  std::map<std::string, std::filesystem::path> tables;
  // Optional extras: bare domain-name embeddings (one row per manifest
  // domain), bare class-name embeddings (one row per class) and per-domain
  // "<class name> <domain>" tables (one row per class).
  std::optional<std::filesystem::path> domain_text;
  std::optional<std::filesystem::path> class_text;
  std::map<std::string, std::filesystem::path> class_tables;

  static ComposedIndex Load(const std::filesystem::path& path);
  static ComposedIndex FromJson(std::string_view text,
                                const std::filesystem::path& base_dir);
};

struct BundlePaths {
  std::filesystem::path manifest;
  std::filesystem::path db_emb;
  std::filesystem::path query_emb;
  std::filesystem::path vocab;
  std::filesystem::path vocab_emb;
  std::filesystem::path composed;
  // External visual memory; the database doubles as visual memory when unset.
  std::optional<std::filesystem::path> memory_emb;
};

// Every store the engine needs, validated against each other. Immutable
// after LoadBundle returns.
struct Bundle {
  DatasetManifest manifest;
  std::shared_ptr<const EmbeddingMatrix> database;
  std::shared_ptr<const EmbeddingMatrix> queries;
  TextMemory text_memory;
  VisualMemory visual_memory;
  // Indexed by DomainId.
  std::vector<ComposedTable> composed;
  std::shared_ptr<const EmbeddingMatrix> domain_text;
  std::shared_ptr<const EmbeddingMatrix> class_text;
  // Indexed by DomainId; empty when the index has no class tables.
  std::vector<std::shared_ptr<const EmbeddingMatrix>> class_tables;
  // Role ("manifest", "db_emb", ...) -> SHA-256 of the file contents.
  std::map<std::string, std::string> file_hashes;

  std::size_t dim() const { return database->dim(); }
};

Bundle LoadBundle(const BundlePaths& paths, const LoadOptions& options = {});

// Cross-checks already-loaded stores; used by LoadBundle and by in-memory
// construction in tests.
void ValidateBundle(const Bundle& bundle);

}  // namespace domconv

#endif  // DOMCONV_STORE_H_
