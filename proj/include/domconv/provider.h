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

#ifndef DOMCONV_PROVIDER_H_
#define DOMCONV_PROVIDER_H_

// Resolution of composed text ("<term> <domain>") to embeddings. The table
// tier is a pure lookup into precomputed tables; the string tier embeds
// arbitrary strings through an external encoder and is only needed for
// early fusion.

#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "domconv/store.h"

namespace domconv {

// Encodes arbitrary strings into unit vectors. Implementations must be safe
// to call from several threads.
class StringEncoder {
 public:
  virtual ~StringEncoder() = default;
  virtual std::size_t dim() const = 0;
  virtual std::vector<float> Encode(std::string_view text) = 0;
};

// Talks to a long-running process over its stdin/stdout: one UTF-8 line in,
// one line of `dim` space-separated floats out. Calls are serialized.
class SubprocessEncoder final : public StringEncoder {
 public:
  // Starts `command` through /bin/sh.
  SubprocessEncoder(const std::string& command, std::size_t dim);
  ~SubprocessEncoder() override;

  SubprocessEncoder(const SubprocessEncoder&) = delete;
  SubprocessEncoder& operator=(const SubprocessEncoder&) = delete;

  std::size_t dim() const override { return dim_; }
  std::vector<float> Encode(std::string_view text) override;

 private:
  std::string ReadLine();

  std::mutex mu_;
  std::string command_;
  std::size_t dim_;
  int pid_ = -1;
  int fd_ = -1;
  std::string buffer_;
};

// Parses one provider reply line into `dim` floats and checks it is a unit
// vector. Throws FormatError on anything else.
std::vector<float> ParseProviderReply(std::string_view line, std::size_t dim);

class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;

  virtual std::size_t dim() const = 0;
  // Valid term ids are [0, term_count()).
  virtual std::size_t term_count() const = 0;
  virtual std::string_view TermText(WordId term) const = 0;
  virtual std::string_view DomainName(DomainId domain) const = 0;

  // Table tier: embedding of "<term> <domain>". Throws MismatchError when
  // no table covers the pair.
  virtual std::span<const float> Composed(WordId term,
                                          DomainId domain) const = 0;

  virtual bool has_string_tier() const = 0;
  // String tier; throws CapabilityError when unavailable.
  virtual std::vector<float> EmbedString(std::string_view text) const = 0;

  // Embedding of the bare domain name, as used by the text baselines.
  virtual std::vector<float> DomainText(DomainId domain) const = 0;
};

// Provider over a loaded bundle. Term ids below the vocabulary size are
// vocabulary words; when the bundle has class tables, id
// vocabulary_size + c names class c.
class BundleProvider final : public EmbeddingProvider {
 public:
  explicit BundleProvider(const Bundle& bundle,
                          std::shared_ptr<StringEncoder> encoder = nullptr);

  std::size_t dim() const override { return bundle_.dim(); }
  std::size_t term_count() const override;
  std::string_view TermText(WordId term) const override;
  std::string_view DomainName(DomainId domain) const override;
  std::span<const float> Composed(WordId term, DomainId domain) const override;
  bool has_string_tier() const override { return encoder_ != nullptr; }
  std::vector<float> EmbedString(std::string_view text) const override;
  std::vector<float> DomainText(DomainId domain) const override;

  // Term for the class name: the vocabulary word with that exact spelling,
  // else the class-table term, else nothing.
  std::optional<WordId> ClassTerm(ClassId cls) const;
  // Term for a domain name used as a label (vocabulary words only).
  std::optional<WordId> DomainTerm(DomainId domain) const;
  // Embedding of the bare class name, if any source provides it.
  std::optional<std::vector<float>> ClassText(ClassId cls) const;

  const Bundle& bundle() const { return bundle_; }

 private:
  const Bundle& bundle_;
  std::shared_ptr<StringEncoder> encoder_;
  mutable std::mutex cache_mu_;
  mutable std::unordered_map<std::string, std::vector<float>> cache_;
};

}  // namespace domconv

#endif  // DOMCONV_PROVIDER_H_
