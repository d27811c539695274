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

// Synthetic bundle generator and matching line-protocol provider.
//
//   domconv_synth generate --out DIR [config flags]
//   domconv_synth serve [config flags]

#include <iostream>
#include <map>
#include <string>

#include "CLI11.hpp"
#include "domconv/errors.h"
#include "domconv/synthetic.h"

namespace {

void AddConfigFlags(CLI::App* cmd, domconv::SyntheticConfig& c,
                    bool& no_class_words) {
  cmd->add_option("--layout", c.layout, "cluster or factored")
      ->transform(CLI::CheckedTransformer(
          std::map<std::string, domconv::SyntheticLayout>{
              {"cluster", domconv::SyntheticLayout::kCluster},
              {"factored", domconv::SyntheticLayout::kFactored}}));
  cmd->add_option("--classes", c.classes, "Number of classes");
  cmd->add_option("--domains", c.domains, "Number of domains");
  cmd->add_option("--dim", c.dim, "Embedding dimension");
  cmd->add_option("--images", c.images_per_cluster,
                  "Database images per (class, domain)");
  cmd->add_option("--queries", c.queries_per_cluster,
                  "Query images per (class, domain)");
  cmd->add_option("--distractors", c.distractor_words,
                  "Unrelated vocabulary words");
  cmd->add_option("--synonyms", c.synonyms_per_class, "Synonyms per class");
  cmd->add_option("--alignment", c.synonym_alignment,
                  "Cosine between a synonym and its class");
  cmd->add_option("--noise", c.noise, "Per-coordinate image noise");
  cmd->add_option("--domain-weight", c.domain_weight,
                  "Weight of the domain direction in images");
  cmd->add_flag("--no-class-words", no_class_words,
                "Leave bare class names out of the vocabulary");
  cmd->add_option("--seed", c.seed, "Random seed");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Synthetic domain-conversion bundles"};
  app.require_subcommand(1);
  domconv::SyntheticConfig config;
  bool no_class_words = false;
  std::string out_dir;

  auto* generate = app.add_subcommand("generate", "Write a bundle");
  AddConfigFlags(generate, config, no_class_words);
  generate->add_option("--out", out_dir, "Output directory")->required();

  auto* serve = app.add_subcommand("serve", "Embed stdin lines to stdout");
  AddConfigFlags(serve, config, no_class_words);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }
  config.class_words_in_vocab = !no_class_words;

  try {
    if (generate->parsed()) {
      domconv::WriteSyntheticBundle(config, out_dir);
    } else {
      std::ios::sync_with_stdio(false);
      domconv::ServeSyntheticProvider(config, std::cin, std::cout);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
