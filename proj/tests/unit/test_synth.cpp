// Copyright 2026 The walign Authors. All Rights Reserved.
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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "walign/synth/synth.hpp"
#include "walign/util/config_values.hpp"
#include "walign/util/error.hpp"
#include "walign/util/text.hpp"

using namespace walign;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

SynthConfig small(int64_t n = 300) {
  SynthConfig c;
  c.sentences = n;
  c.vocab_size = 30;
  return c;
}

}  // namespace

TEST_CASE("identity settings give a diagonal alignment") {
  SynthConfig c = small(50);
  c.reorder_window = 0;
  c.null_rate = 0;
  c.fertility_rate = 0;
  const SynthCorpus corpus = generate(c);
  for (size_t k = 0; k < corpus.src.size(); ++k) {
    const auto src = split_whitespace(corpus.src[k]);
    const auto tgt = split_whitespace(corpus.tgt[k]);
    REQUIRE(src.size() == tgt.size());
    AlignmentSet diag;
    for (size_t j = 0; j < src.size(); ++j) {
      diag.insert({static_cast<int32_t>(j), static_cast<int32_t>(j)});
      // The lexicon is applied word by word.
      const auto at = std::find(corpus.lexicon.source.begin(), corpus.lexicon.source.end(), src[j]);
      REQUIRE(at != corpus.lexicon.source.end());
      CHECK(corpus.lexicon.target[static_cast<size_t>(at - corpus.lexicon.source.begin())] == tgt[j]);
    }
    CHECK(corpus.gold[k].sure == diag);
  }
}

TEST_CASE("every short source gets exactly one inserted word at full null rate") {
  SynthConfig c = small(100);
  c.min_len = c.max_len = 1;
  c.null_rate = 1;
  c.fertility_rate = 0;
  const SynthCorpus corpus = generate(c);
  const std::set<std::string> nulls(corpus.lexicon.nulls.begin(), corpus.lexicon.nulls.end());
  for (size_t k = 0; k < corpus.src.size(); ++k) {
    const auto tgt = split_whitespace(corpus.tgt[k]);
    REQUIRE(tgt.size() == 2);
    const auto unaligned = unaligned_targets(corpus.gold[k], 2);
    REQUIRE(unaligned.size() == 1);
    CHECK(nulls.count(tgt[static_cast<size_t>(unaligned[0])]) == 1);
  }
}

TEST_CASE("generation is deterministic") {
  const auto dir = std::filesystem::temp_directory_path() / "walign_synth_test";
  std::filesystem::create_directories(dir);
  SynthConfig c = small();
  c.end_punct_rate = 0.5;
  write_synth(generate(c), (dir / "a").string());
  write_synth(generate(c), (dir / "b").string());
  for (const char* ext : {".src", ".tgt", ".gold"}) {
    CHECK(slurp((dir / "a").string() + ext) == slurp((dir / "b").string() + ext));
  }
  c.seed = 2;
  write_synth(generate(c), (dir / "c").string());
  CHECK(slurp((dir / "a.src").string()) != slurp((dir / "c.src").string()));
  std::filesystem::remove_all(dir);
}

TEST_CASE("gold links follow the construction") {
  SynthConfig c = small(400);
  c.end_punct_rate = 0.5;
  const SynthCorpus corpus = generate(c);
  const std::set<std::string> nulls(corpus.lexicon.nulls.begin(), corpus.lexicon.nulls.end());
  int64_t inserted = 0, fertile = 0, punct = 0;
  for (size_t k = 0; k < corpus.src.size(); ++k) {
    const auto src = split_whitespace(corpus.src[k]);
    const auto tgt = split_whitespace(corpus.tgt[k]);
    const GoldAlignment& g = corpus.gold[k];
    CHECK(g.possible == g.sure);
    const bool has_punct = src.back() == ".";
    punct += has_punct;
    const int64_t content = static_cast<int64_t>(src.size()) - (has_punct ? 1 : 0);
    CHECK(content >= c.min_len);
    CHECK(content <= c.max_len);
    std::vector<int> links_per_target(tgt.size(), 0), links_per_source(src.size(), 0);
    for (const Link& l : g.sure) {
      ++links_per_target[static_cast<size_t>(l.tgt)];
      ++links_per_source[static_cast<size_t>(l.src)];
    }
    for (size_t i = 0; i < tgt.size(); ++i) {
      CHECK(links_per_target[i] == (nulls.count(tgt[i]) ? 0 : 1));
      inserted += nulls.count(tgt[i]);
    }
    for (size_t j = 0; j < src.size(); ++j) {
      if (src[j] == ".") {
        CHECK(links_per_source[j] == 0);
      } else {
        CHECK(links_per_source[j] >= 1);
        CHECK(links_per_source[j] <= 2);
        fertile += links_per_source[j] == 2;
      }
    }
  }
  CHECK(inserted > 0);
  CHECK(fertile > 0);
  CHECK(punct > 100);
  CHECK(punct < 300);
}

TEST_CASE("reordering stays inside the window") {
  SynthConfig c = small(300);
  c.null_rate = 0;
  c.fertility_rate = 0;
  for (int window : {0, 1, 2, 3}) {
    c.reorder_window = window;
    bool moved = false;
    for (const GoldAlignment& g : generate(c).gold) {
      for (const Link& l : g.sure) {
        CHECK(std::abs(l.src - l.tgt) <= window);
        moved = moved || l.src != l.tgt;
      }
    }
    CHECK(moved == (window > 0));
  }
}

TEST_CASE("synth config round trip and validation") {
  SynthConfig c;
  c.null_rate = 0.25;
  c.seed = 99;
  SynthConfig d;
  for (const auto& [k, v] : parse_key_values(c.to_text())) d.set(k, v);
  CHECK(d == c);
  CHECK_THROWS_AS(d.set("language", "x"), ConfigError);
  SynthConfig bad;
  bad.fertility_rate = 1.5;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = SynthConfig{};
  bad.min_len = 6;
  bad.max_len = 5;
  CHECK_THROWS_AS(generate(bad), ConfigError);
  const SynthLexicon lex = make_lexicon(SynthConfig{});
  std::set<std::string> all;
  for (const auto* words : {&lex.source, &lex.target, &lex.companion, &lex.nulls}) all.insert(words->begin(), words->end());
  CHECK(all.size() == lex.source.size() * 3 + lex.nulls.size());
}
