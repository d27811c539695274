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

#include <cmath>
#include <memory>
#include <string>
#include <vector>

#include "domconv/errors.h"
#include "domconv/provider.h"
#include "domconv/synthetic.h"
#include "test_util.h"

namespace domconv {
namespace {

using testing::HashSphereEncoder;

TEST(ParseProviderReply, AcceptsUnitVector) {
  const auto v = ParseProviderReply("0.6 0.8 0", 3);
  EXPECT_EQ(v, (std::vector<float>{0.6f, 0.8f, 0.0f}));
  EXPECT_EQ(ParseProviderReply("  1\t0 \r", 2), (std::vector<float>{1, 0}));
}

TEST(ParseProviderReply, RejectsMalformedLines) {
  EXPECT_THROW(ParseProviderReply("1 0", 3), FormatError);
  EXPECT_THROW(ParseProviderReply("1 0 0 0", 3), FormatError);
  EXPECT_THROW(ParseProviderReply("", 3), FormatError);
  EXPECT_THROW(ParseProviderReply("1 x 0", 3), FormatError);
  EXPECT_THROW(ParseProviderReply("error: no such word", 3), FormatError);
  EXPECT_THROW(ParseProviderReply("nan 0 0", 3), FormatError);
  EXPECT_THROW(ParseProviderReply("1 1 0", 3), NormalizationError);
}

SyntheticConfig SmallConfig() {
  SyntheticConfig c;
  c.classes = 3;
  c.domains = 2;
  c.dim = 16;
  c.distractor_words = 4;
  return c;
}

std::string ServeCommand() {
  return std::string(DOMCONV_SYNTH_PATH) +
         " serve --classes 3 --domains 2 --dim 16 --distractors 4";
}

TEST(SubprocessEncoder, MatchesInProcessEncoder) {
  SubprocessEncoder remote(ServeCommand(), 16);
  const SyntheticTextEncoder local(SmallConfig());
  for (const std::string text :
       {"object_01 style_1", "object_00", "style_0", "unseen words style_1",
        "object_02 style_0 style_1"}) {
    const auto got = remote.Encode(text);
    const auto want = local.Embed(text);
    ASSERT_EQ(got.size(), want.size());
    for (std::size_t i = 0; i < got.size(); ++i) {
      EXPECT_EQ(got[i], want[i]) << text << " [" << i << "]";
    }
  }
}

TEST(SubprocessEncoder, ErrorReplyIsFormatError) {
  SubprocessEncoder remote(ServeCommand(), 16);
  EXPECT_THROW(remote.Encode(""), FormatError);
  // The process keeps serving after an error line.
  EXPECT_EQ(remote.Encode("object_00").size(), 16u);
}

TEST(SubprocessEncoder, DimMismatchIsFormatError) {
  SubprocessEncoder remote(ServeCommand(), 8);
  EXPECT_THROW(remote.Encode("object_00"), FormatError);
}

TEST(SubprocessEncoder, DeadProcessFails) {
  SubprocessEncoder remote("exit 0", 4);
  EXPECT_THROW(remote.Encode("x"), Error);
}

TEST(SubprocessEncoder, RejectsNewlines) {
  SubprocessEncoder remote(ServeCommand(), 16);
  EXPECT_THROW(remote.Encode("a\nb"), InvalidArgumentError);
}

class BundleProviderTest : public ::testing::Test {
 protected:
  BundleProviderTest() : bundle_(MakeSyntheticBundle(Config())) {}

  static SyntheticConfig Config() {
    SyntheticConfig c = SmallConfig();
    c.class_words_in_vocab = false;
    c.synonyms_per_class = 1;
    return c;
  }

  Bundle bundle_;
};

TEST_F(BundleProviderTest, ClassTermsComeFromClassTables) {
  const BundleProvider provider(bundle_);
  const std::size_t vocab = bundle_.text_memory.size();
  EXPECT_EQ(provider.term_count(), vocab + 3);
  const auto term = provider.ClassTerm(2);
  ASSERT_TRUE(term);
  EXPECT_EQ(*term, vocab + 2);
  EXPECT_EQ(provider.TermText(*term), "object_02");
  const auto row = provider.Composed(*term, 1);
  const auto table = bundle_.class_tables[1]->row(2);
  EXPECT_TRUE(std::equal(row.begin(), row.end(), table.begin()));
  EXPECT_THROW(provider.Composed(vocab + 3, 0), MismatchError);
  EXPECT_THROW(provider.TermText(vocab + 3), InvalidArgumentError);
  EXPECT_THROW(provider.Composed(0, 2), MismatchError);
}

TEST_F(BundleProviderTest, ClassTermPrefersVocabulary) {
  Bundle b = MakeSyntheticBundle(SmallConfig());
  const BundleProvider provider(b);
  const auto term = provider.ClassTerm(1);
  ASSERT_TRUE(term);
  EXPECT_EQ(b.text_memory.word(*term), "object_01");
  b.class_tables.clear();
  SyntheticConfig c = SmallConfig();
  c.class_words_in_vocab = false;
  Bundle bare = MakeSyntheticBundle(c);
  bare.class_tables.clear();
  bare.class_text = nullptr;
  const BundleProvider bare_provider(bare);
  EXPECT_FALSE(bare_provider.ClassTerm(0));
  EXPECT_FALSE(bare_provider.ClassText(0));
}

TEST_F(BundleProviderTest, DomainTermsAndText) {
  const BundleProvider provider(bundle_);
  const auto term = provider.DomainTerm(1);
  ASSERT_TRUE(term);
  EXPECT_EQ(bundle_.text_memory.word(*term), "style_1");
  const auto text = provider.DomainText(1);
  const auto row = bundle_.domain_text->row(1);
  EXPECT_TRUE(std::equal(text.begin(), text.end(), row.begin()));
  const auto cls = provider.ClassText(0);
  ASSERT_TRUE(cls);
  const auto class_row = bundle_.class_text->row(0);
  EXPECT_TRUE(std::equal(cls->begin(), cls->end(), class_row.begin()));
  EXPECT_THROW(provider.DomainName(2), InvalidArgumentError);
}

TEST_F(BundleProviderTest, DomainTextFallsBackToEncoder) {
  Bundle b = MakeSyntheticBundle(Config());
  b.domain_text = nullptr;
  b.text_memory = TextMemory({"a", "b"}, std::make_shared<const EmbeddingMatrix>(
                                             testing::RandomUnitMatrix(2, 16, 1)));
  for (auto& table : b.composed) {
    table.embeddings = std::make_shared<const EmbeddingMatrix>(
        testing::RandomUnitMatrix(2, 16, 2));
  }
  const BundleProvider without(b);
  EXPECT_THROW(without.DomainText(0), CapabilityError);
  auto encoder = std::make_shared<HashSphereEncoder>(16);
  const BundleProvider with(b, encoder);
  const auto v = with.DomainText(0);
  const auto want = HashSphereEncoder::Vector("style_0", 16);
  EXPECT_EQ(v, want);
}

TEST_F(BundleProviderTest, StringTierIsCached) {
  auto encoder = std::make_shared<HashSphereEncoder>(16);
  const BundleProvider provider(bundle_, encoder);
  EXPECT_TRUE(provider.has_string_tier());
  const auto a = provider.EmbedString("object_00 style_1");
  const auto b = provider.EmbedString("object_00 style_1");
  EXPECT_EQ(a, b);
  EXPECT_EQ(encoder->calls(), 1);
  provider.EmbedString("object_01 style_1");
  EXPECT_EQ(encoder->calls(), 2);
}

TEST_F(BundleProviderTest, StringTierRequiresEncoder) {
  const BundleProvider provider(bundle_);
  EXPECT_FALSE(provider.has_string_tier());
  EXPECT_THROW(provider.EmbedString("x"), CapabilityError);
  EXPECT_THROW(BundleProvider(bundle_, std::make_shared<HashSphereEncoder>(8)),
               MismatchError);
}

}  // namespace
}  // namespace domconv
