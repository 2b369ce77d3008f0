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

#include <cmath>
#include <random>

#include "walign/eval/diagnostics.hpp"
#include "walign/eval/metrics.hpp"
#include "walign/util/error.hpp"

using namespace walign;

namespace {

GoldAlignment gold(AlignmentSet sure, AlignmentSet possible_only = {}) {
  GoldAlignment g;
  g.sure = sure;
  g.possible = sure;
  g.possible.insert(possible_only.begin(), possible_only.end());
  return g;
}

// Independent AER from explicit set operations.
double aer_oracle(const AlignmentSet& a, const GoldAlignment& g) {
  double as = 0, ap = 0;
  for (const Link& l : a) {
    as += g.sure.count(l);
    ap += g.possible.count(l);
  }
  const double denom = static_cast<double>(a.size() + g.sure.size());
  return denom == 0 ? 0.0 : 1.0 - (as + ap) / denom;
}

ModelConfig tiny(int vocab, bool leaky) {
  ModelConfig c;
  c.encoder_layers = 1;
  c.decoder_layers = 2;
  c.d_model = 16;
  c.d_ffn = 32;
  c.heads = 2;
  c.vocab_size = vocab;
  c.dropout = 0.0;
  c.leaky = leaky;
  return c;
}

SentencePair pair_of(std::vector<int32_t> src, std::vector<int32_t> tgt) {
  SentencePair p;
  p.src = std::move(src);
  p.tgt = std::move(tgt);
  for (size_t j = 0; j < p.src.size(); ++j) p.src_sub_to_word.push_back(static_cast<int32_t>(j));
  for (size_t i = 0; i < p.tgt.size(); ++i) p.tgt_sub_to_word.push_back(static_cast<int32_t>(i));
  return p;
}

}  // namespace

TEST_CASE("AER fixtures") {
  const AlignmentSet s{{0, 0}, {1, 1}, {2, 1}};
  const AlignmentScore perfect = score(s, gold(s));
  CHECK(perfect.aer == 0.0);
  CHECK(perfect.precision == 1.0);
  CHECK(perfect.recall == 1.0);

  const AlignmentScore empty = score({}, gold(s));
  CHECK(empty.aer == 1.0);
  CHECK(empty.precision == 1.0);
  CHECK(empty.recall == 0.0);

  // 1 - (1 + 2) / (2 + 1) = 0.
  const AlignmentScore fixture = score({{0, 0}, {1, 1}}, gold({{0, 0}}, {{1, 1}}));
  CHECK(fixture.aer == 0.0);
  CHECK(fixture.hyp_sure == 1);
  CHECK(fixture.hyp_possible == 2);
  CHECK(fixture.recall == 1.0);

  const AlignmentScore no_sure = score({{0, 0}}, gold({}, {{0, 0}}));
  CHECK(no_sure.recall == 1.0);
  CHECK(no_sure.empty_sure == 1);
  CHECK(score({}, GoldAlignment{}).aer == 0.0);
}

TEST_CASE("corpus AER is micro averaged") {
  const std::vector<AlignmentSet> hyps{{{0, 0}, {1, 1}}, {{0, 1}}};
  const std::vector<GoldAlignment> golds{gold({{0, 0}, {1, 1}}), gold({{0, 0}})};
  CHECK(score(hyps[0], golds[0]).aer == 0.0);
  CHECK(score(hyps[1], golds[1]).aer == 1.0);
  // |A| = 3, |S| = 3, |A&S| = |A&P| = 2: 1 - 4/6.
  CHECK(corpus_score(hyps, golds).aer == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  CHECK(macro_aer(hyps, golds) == doctest::Approx(0.5));

  CHECK(corpus_score({hyps[1]}, {golds[1]}).aer == score(hyps[1], golds[1]).aer);
  std::vector<AlignmentSet> h2 = hyps;
  std::vector<GoldAlignment> g2 = golds;
  h2.insert(h2.end(), hyps.begin(), hyps.end());
  g2.insert(g2.end(), golds.begin(), golds.end());
  CHECK(corpus_score(h2, g2).aer == doctest::Approx(corpus_score(hyps, golds).aer).epsilon(1e-15));
  CHECK_THROWS_AS(corpus_score(hyps, {golds[0]}), ContractError);
}

TEST_CASE("AER properties on random sets") {
  std::mt19937_64 rng(1);
  std::bernoulli_distribution coin(0.3);
  for (int trial = 0; trial < 200; ++trial) {
    AlignmentSet a, sure, possible;
    for (int32_t j = 0; j < 4; ++j) {
      for (int32_t i = 0; i < 4; ++i) {
        if (coin(rng)) a.insert({j, i});
        if (coin(rng)) sure.insert({j, i});
        else if (coin(rng)) possible.insert({j, i});
      }
    }
    const GoldAlignment g = gold(sure, possible);
    const AlignmentScore s = score(a, g);
    CHECK(s.aer == doctest::Approx(aer_oracle(a, g)).epsilon(1e-12));
    bool a_in_p = true, s_in_a = true;
    for (const Link& l : a) a_in_p = a_in_p && g.possible.count(l);
    for (const Link& l : sure) s_in_a = s_in_a && a.count(l);
    CHECK((s.aer == 0.0) == (a_in_p && s_in_a));
    // Adding a correct link never lowers precision or recall.
    for (const Link& l : sure) {
      if (a.count(l)) continue;
      AlignmentSet more = a;
      more.insert(l);
      const AlignmentScore t = score(more, g);
      CHECK(t.precision >= s.precision - 1e-15);
      CHECK(t.recall >= s.recall - 1e-15);
      break;
    }
  }
}

TEST_CASE("prediction and alignment breakdown") {
  const GoldAlignment g = gold({{0, 0}, {1, 1}, {2, 2}}, {{3, 3}});
  CHECK(breakdown({true, true, true, true}, {{0, 0}, {1, 1}, {2, 2}, {3, 3}}, g).cpca == 4);

  // Word 0: right word, right link. Word 1: right word, link outside P.
  // Word 2: wrong word, right link. Word 3: wrong word, no link.
  // Word 4 has no gold link and is not counted.
  const Breakdown b = breakdown({true, true, false, false, true}, {{0, 0}, {0, 1}, {2, 2}, {1, 4}}, g);
  CHECK(b.cpca == 1);
  CHECK(b.cpwa == 1);
  CHECK(b.wpca == 1);
  CHECK(b.wpwa == 1);
  CHECK(b.total() == 4);
  Breakdown sum = b;
  sum += b;
  CHECK(sum.cpwa == 2);

  const AlignmentScore s = score({{0, 0}}, g);
  const auto j = score_json(s, &b);
  CHECK(j["breakdown"]["wPcA"] == 1);
  CHECK(j["hyp_links"] == 1);
  const std::string text = score_text(s, &b);
  CHECK(text.find("AER") != std::string::npos);
  CHECK(text.find("cPwA 1") != std::string::npos);
  CHECK(out_of_range_links({{0, 0}, {3, 1}, {1, 5}}, 3, 5) == 2);
}

TEST_CASE("matrix dumps round trip") {
  ScoreMatrix m(2, 3);
  m.values = {0.125, 0.5, 0.375, 1.0 / 3.0, 0.0, 2.0 / 3.0};
  const std::string text = matrix_tsv(m, {"ra", "li"}, {"NULL", "ka", "."});
  std::vector<std::string> rows, cols;
  const ScoreMatrix back = parse_matrix_tsv(text, &rows, &cols);
  CHECK(back.rows == 2);
  CHECK(back.cols == 3);
  CHECK(back.values == m.values);
  CHECK(rows == std::vector<std::string>{"ra", "li"});
  CHECK(cols == std::vector<std::string>{"NULL", "ka", "."});
  CHECK_THROWS_AS(parse_matrix_tsv("a\tb\nx\t1\t2\n"), ParseError);
  CHECK_THROWS_AS(matrix_tsv(m, {"ra"}, {"a", "b", "c"}), ContractError);

  const std::vector<double> mass = column_mass(m, {0, 1});
  CHECK(mass[0] == doctest::Approx((0.125 + 1.0 / 3.0) / 2));
  CHECK(mass[1] == doctest::Approx(0.25));
}

TEST_CASE("value norm report") {
  const int vocab = 16;
  const SentencePair p = pair_of({5, 6, 7, 8}, {9, 10, 11});
  for (bool leaky : {false, true}) {
    Model<float> model(tiny(vocab, leaky), 3);
    const auto rows = value_norm_report(model, p);
    CHECK(rows.size() == p.src.size() + (leaky ? 1 : 0));
    double mass = 0;
    bool has_null = false;
    for (size_t k = 0; k < rows.size(); ++k) {
      CHECK(rows[k].norm >= 0);
      if (k > 0) CHECK(rows[k - 1].norm >= rows[k].norm);
      has_null = has_null || rows[k].position < 0;
      mass += rows[k].mass;
    }
    CHECK(has_null == leaky);
    CHECK(mass == doctest::Approx(static_cast<double>(p.tgt.size())).epsilon(1e-5));
    const std::string tsv = value_norms_tsv(rows);
    CHECK(tsv.rfind("position\ttoken\tvalue_norm\tattention_mass\n", 0) == 0);
    CHECK((tsv.find("NULL\t<null>") != std::string::npos) == leaky);
  }
}

TEST_CASE("word predictions follow the subword map") {
  const int vocab = 16;
  Model<float> model(tiny(vocab, true), 3);
  SentencePair p = pair_of({5, 6, 7}, {9, 10, 11});
  p.tgt_sub_to_word = {0, 0, 1};
  SentencePair shorty = pair_of({5}, {9});
  const auto verdicts = word_predictions(model, {p, shorty});
  REQUIRE(verdicts.size() == 2);
  CHECK(verdicts[0].size() == 2);
  CHECK(verdicts[1] == std::vector<bool>{false});
}
