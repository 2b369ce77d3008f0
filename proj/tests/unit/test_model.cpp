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
#include <filesystem>
#include <random>

#include "naive_model.hpp"
#include "walign/model/checkpoint.hpp"
#include "walign/model/model.hpp"
#include "walign/numerics/ops.hpp"
#include "walign/util/error.hpp"

using namespace walign;

namespace {

ModelConfig tiny(int vocab = 20) {
  ModelConfig c;
  c.encoder_layers = 2;
  c.decoder_layers = 2;
  c.d_model = 16;
  c.d_ffn = 24;
  c.heads = 2;
  c.vocab_size = vocab;
  c.dropout = 0.0;
  return c;
}

SentencePair random_pair(std::mt19937_64& rng, int vocab, int max_len = 8, int min_len = 2) {
  std::uniform_int_distribution<int> len(min_len, max_len);
  std::uniform_int_distribution<int32_t> tok(Vocabulary::kNumReserved, vocab - 1);
  SentencePair p;
  const int J = len(rng), I = len(rng);
  for (int j = 0; j < J; ++j) p.src.push_back(tok(rng));
  for (int i = 0; i < I; ++i) p.tgt.push_back(tok(rng));
  return p;
}

Batch batch_of(const std::vector<SentencePair>& pairs) {
  std::vector<int64_t> idx;
  for (size_t i = 0; i < pairs.size(); ++i) idx.push_back(static_cast<int64_t>(i));
  return make_batch(pairs, idx);
}

template <typename T>
std::vector<T> row(const Tensor<T>& t, int64_t b, int64_t i) {
  const int64_t L = t.dim(1), V = t.dim(2);
  const T* p = t.data() + (b * L + i) * V;
  return std::vector<T>(p, p + V);
}

template <typename T>
void check_rows_sum_to_one(const Tensor<T>& w, double tol) {
  const int64_t n = w.dim(-1);
  for (int64_t r = 0; r < w.size() / n; ++r) {
    double s = 0;
    for (int64_t k = 0; k < n; ++k) s += w[r * n + k];
    CHECK(std::abs(s - 1.0) < tol);
  }
}

}  // namespace

TEST_CASE("forward shapes") {
  Model<float> model(tiny(), 1);
  std::mt19937_64 rng(1);
  std::vector<SentencePair> pairs{random_pair(rng, 20), random_pair(rng, 20)};
  Batch b = batch_of(pairs);
  Tape<float> tape;
  auto r = model.forward(tape, b);
  CHECK(r.logits.shape() == Shape{2, b.tgt_len, 20});
  CHECK(r.encoder_out.shape() == Shape{2, b.src_len, 16});
  REQUIRE(r.cross.size() == 2);
  CHECK(!r.cross[0].valid());
  CHECK(r.cross[1].shape() == Shape{2, 2, b.tgt_len, b.src_len + 1});
  CHECK(source_attention(r).shape() == Shape{2, b.tgt_len, b.src_len});
  CHECK(r.value_norms.shape() == Shape{2, b.src_len + 1});

  SentencePair one;
  one.src = {5};
  one.tgt = {6, 7};
  Tape<float> t2;
  CHECK(model.forward(t2, batch_of({one})).encoder_out.shape() == Shape{1, 1, 16});
}

TEST_CASE("config validation and text round trip") {
  ModelConfig c = tiny();
  c.heads = 3;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  ModelConfig d = ModelConfig::desk();
  d.vocab_size = 77;
  d.cross_layers = CrossLayers::kAll;
  d.variant = Variant::kVanillaNmt;
  d.dropout = 0.3;
  CHECK(ModelConfig::from_text(d.to_text()) == d);
  CHECK_THROWS_AS(ModelConfig::from_text("colour = blue\n"), ConfigError);
}

TEST_CASE("forward is deterministic without dropout") {
  Model<float> model(tiny(), 3);
  std::mt19937_64 rng(2);
  Batch b = batch_of({random_pair(rng, 20), random_pair(rng, 20), random_pair(rng, 20)});
  Tape<float> t1, t2;
  CHECK(model.forward(t1, b).logits.value() == model.forward(t2, b).logits.value());
}

TEST_CASE("short target rows are rejected") {
  Model<float> model(tiny(), 3);
  SentencePair p;
  p.src = {5, 6};
  p.tgt = {7};
  Tape<float> tape;
  CHECK_THROWS_AS(model.forward(tape, batch_of({p})), ContractError);
}

TEST_CASE("two-token target attends fully to the other token") {
  Model<double> model(tiny(), 4);
  SentencePair p;
  p.src = {5, 6, 7};
  p.tgt = {8, 9};
  Tape<double> tape;
  auto r = model.forward(tape, batch_of({p}));
  for (const auto& w : r.decoder_self) {
    for (int64_t h = 0; h < 2; ++h) {
      CHECK(w.value()[((0 * 2 + h) * 2 + 0) * 2 + 1] == 1.0);
      CHECK(w.value()[((0 * 2 + h) * 2 + 1) * 2 + 0] == 1.0);
    }
  }
}

TEST_CASE("mask invariance and perturbation") {
  Model<float> model(tiny(), 5);
  std::mt19937_64 rng(6);
  std::uniform_int_distribution<int32_t> tok(Vocabulary::kNumReserved, 19);
  int changed_elsewhere = 0;
  for (int trial = 0; trial < 30; ++trial) {
    SentencePair p = random_pair(rng, 20, 8, 3);
    const size_t i = std::uniform_int_distribution<size_t>(0, p.tgt.size() - 1)(rng);
    SentencePair q = p;
    do {
      q.tgt[i] = tok(rng);
    } while (q.tgt[i] == p.tgt[i]);
    Tape<float> t1, t2;
    auto a = model.forward(t1, batch_of({p})).logits.value();
    auto b = model.forward(t2, batch_of({q})).logits.value();
    CHECK(row(a, 0, static_cast<int64_t>(i)) == row(b, 0, static_cast<int64_t>(i)));
    bool other = false;
    for (size_t k = 0; k < p.tgt.size(); ++k) {
      if (k != i && row(a, 0, static_cast<int64_t>(k)) != row(b, 0, static_cast<int64_t>(k))) other = true;
    }
    changed_elsewhere += other;
  }
  CHECK(changed_elsewhere == 30);
}

TEST_CASE("parallel pass matches per-position reference passes") {
  for (bool leaky : {true, false}) {
    for (CrossLayers cl : {CrossLayers::kLast, CrossLayers::kAll}) {
      ModelConfig c = tiny();
      c.leaky = leaky;
      c.cross_layers = cl;
      Model<double> model(c, 7);
      testing::NaiveMaskAlign<double> naive(model);
      std::mt19937_64 rng(8);
      std::vector<SentencePair> pairs{random_pair(rng, 20), random_pair(rng, 20)};
      Tape<double> tape;
      auto r = model.forward(tape, batch_of(pairs));
      double worst = 0;
      for (size_t b = 0; b < pairs.size(); ++b) {
        for (size_t i = 0; i < pairs[b].tgt.size(); ++i) {
          auto expect = naive.logits_at(pairs[b].src, pairs[b].tgt, i);
          auto got = row(r.logits.value(), static_cast<int64_t>(b), static_cast<int64_t>(i));
          for (size_t v = 0; v < got.size(); ++v) worst = std::max(worst, std::abs(got[v] - expect[v]));
        }
      }
      CHECK(worst < 1e-10);
    }
  }
}

TEST_CASE("padding content does not leak into real positions") {
  Model<float> model(tiny(), 9);
  std::mt19937_64 rng(10);
  std::vector<SentencePair> pairs{random_pair(rng, 20, 4), random_pair(rng, 20, 10, 8)};
  Batch clean = batch_of(pairs);
  Batch noisy = clean;
  for (size_t k = 0; k < noisy.src.size(); ++k) {
    if (noisy.src_pad[k]) noisy.src[k] = 11;
  }
  for (size_t k = 0; k < noisy.tgt.size(); ++k) {
    if (noisy.tgt_pad[k]) noisy.tgt[k] = 12;
  }
  Tape<float> t1, t2;
  auto a = model.forward(t1, clean);
  auto b = model.forward(t2, noisy);
  for (int64_t r = 0; r < clean.size; ++r) {
    for (int64_t i = 0; i < clean.tgt_len; ++i) {
      if (!clean.tgt_pad[static_cast<size_t>(r * clean.tgt_len + i)]) {
        CHECK(row(a.logits.value(), r, i) == row(b.logits.value(), r, i));
      }
    }
  }

  // A batched row agrees with the same pair run alone.
  Tape<float> t3;
  auto alone = model.forward(t3, batch_of({pairs[0]}));
  for (size_t i = 0; i < pairs[0].tgt.size(); ++i) {
    auto x = row(a.logits.value(), 0, static_cast<int64_t>(i));
    auto y = row(alone.logits.value(), 0, static_cast<int64_t>(i));
    for (size_t v = 0; v < x.size(); ++v) CHECK(std::abs(x[v] - y[v]) < 1e-4);
  }
}

TEST_CASE("attention rows are normalised and padded columns get no mass") {
  for (Variant variant : {Variant::kMaskAlign, Variant::kVanillaNmt}) {
    ModelConfig c = tiny();
    c.variant = variant;
    c.cross_layers = CrossLayers::kAll;
    Model<float> model(c, 11);
    std::mt19937_64 rng(12);
    Batch b = batch_of({random_pair(rng, 20, 9), random_pair(rng, 20, 3), random_pair(rng, 20, 6)});
    Tape<float> tape;
    auto r = model.forward(tape, b);
    for (const auto& w : r.encoder_self) check_rows_sum_to_one(w.value(), 1e-5);
    for (const auto& w : r.decoder_self) check_rows_sum_to_one(w.value(), 1e-5);
    for (const auto& w : r.cross) {
      check_rows_sum_to_one(w.value(), 1e-5);
      const int64_t H = w.dim(1), Lq = w.dim(2), Lk = w.dim(3);
      for (int64_t bb = 0; bb < r.batch; ++bb) {
        for (int64_t k = 0; k < r.src_len; ++k) {
          if (!r.source_pad[static_cast<size_t>(bb * r.src_len + k)]) continue;
          for (int64_t h = 0; h < H; ++h) {
            for (int64_t q = 0; q < Lq; ++q) CHECK(w.value()[((bb * H + h) * Lq + q) * Lk + k + 1] == 0.0f);
          }
        }
      }
    }
  }
}

TEST_CASE("leaky column splits mass with a single source token") {
  Model<float> model(tiny(), 13);
  SentencePair p;
  p.src = {5};
  p.tgt = {6, 7, 8};
  Tape<float> tape;
  auto r = model.forward(tape, batch_of({p}));
  const auto& w = r.cross.back().value();
  for (int64_t k = 0; k < w.size(); ++k) {
    CHECK(w[k] > 0.0f);
    CHECK(w[k] < 1.0f);
  }
}

TEST_CASE("masking the leaky column reduces to plain cross-attention") {
  ModelConfig c = tiny();
  Model<double> leaky(c, 14);
  c.leaky = false;
  Model<double> plain(c, 99);
  for (Parameter<double>* p : plain.parameters()) p->value = leaky.param(p->name).value;
  std::mt19937_64 rng(15);
  Batch b = batch_of({random_pair(rng, 20), random_pair(rng, 20)});
  ForwardOptions hook;
  hook.mask_leaky = true;
  Tape<double> t1, t2;
  auto a = leaky.forward(t1, b, hook);
  auto z = plain.forward(t2, b);
  const auto& wa = a.cross.back().value();
  const auto& wz = z.cross.back().value();
  const int64_t Lk = wa.dim(-1);
  for (int64_t r = 0; r < wa.size() / Lk; ++r) {
    CHECK(wa[r * Lk] == 0.0);
    for (int64_t k = 1; k < Lk; ++k) CHECK(std::abs(wa[r * Lk + k] - wz[r * (Lk - 1) + k - 1]) < 1e-5);
  }
  for (int64_t k = 0; k < a.logits.value().size(); ++k) {
    CHECK(std::abs(a.logits.value()[k] - z.logits.value()[k]) < 1e-5);
  }
}

TEST_CASE("source reaches the decoder only through the last layer") {
  Model<float> model(tiny(), 16);
  std::mt19937_64 rng(17);
  Batch b = batch_of({random_pair(rng, 20), random_pair(rng, 20)});
  ForwardOptions zero;
  zero.zero_encoder = true;
  Tape<float> t1, t2;
  auto a = model.forward(t1, b);
  auto z = model.forward(t2, b, zero);
  CHECK(a.pre_cross.value() == z.pre_cross.value());
  CHECK(!(a.logits.value() == z.logits.value()));
}

TEST_CASE("vanilla decoder is causal") {
  ModelConfig c = tiny();
  c.variant = Variant::kVanillaNmt;
  c.leaky = false;
  Model<float> model(c, 18);
  std::mt19937_64 rng(19);
  std::uniform_int_distribution<int32_t> tok(Vocabulary::kNumReserved, 19);
  for (int trial = 0; trial < 10; ++trial) {
    SentencePair p = random_pair(rng, 20, 8, 3);
    const size_t i = std::uniform_int_distribution<size_t>(0, p.tgt.size() - 1)(rng);
    SentencePair q = p;
    for (size_t k = i; k < q.tgt.size(); ++k) q.tgt[k] = tok(rng);
    Tape<float> t1, t2;
    auto a = model.forward(t1, batch_of({p}));
    auto b = model.forward(t2, batch_of({q}));
    CHECK(a.logits.shape() == Shape{1, static_cast<int64_t>(p.tgt.size()) + 1, 20});
    CHECK(a.cross.back().shape() == Shape{1, 2, static_cast<int64_t>(p.tgt.size()) + 1,
                                          static_cast<int64_t>(p.src.size()) + 1});
    for (size_t k = 0; k <= i; ++k) {
      CHECK(row(a.logits.value(), 0, static_cast<int64_t>(k)) == row(b.logits.value(), 0, static_cast<int64_t>(k)));
    }
    CHECK(a.targets.back() == Vocabulary::kEos);
  }
}

TEST_CASE("untrained accuracy is near chance") {
  Model<float> model(tiny(50), 20);
  std::mt19937_64 rng(21);
  std::vector<SentencePair> pairs;
  for (int k = 0; k < 40; ++k) pairs.push_back(random_pair(rng, 50, 10));
  Tape<float> tape;
  auto r = model.forward(tape, batch_of(pairs));
  const auto& logits = r.logits.value();
  int64_t hits = 0, total = 0;
  for (int64_t pos = 0; pos < r.batch * r.tgt_len; ++pos) {
    if (r.target_pad[static_cast<size_t>(pos)]) continue;
    const float* l = logits.data() + pos * 50;
    hits += std::max_element(l, l + 50) - l == r.targets[static_cast<size_t>(pos)];
    ++total;
  }
  CHECK(static_cast<double>(hits) / total <= 5.0 / 46.0);
}

TEST_CASE("checkpoint round trip is bit exact") {
  ModelConfig c = tiny();
  c.share_decoder_embeddings = false;
  Model<float> model(c, 22);
  const std::string path = (std::filesystem::temp_directory_path() / "walign_test_model.ckpt").string();
  save_model(path, model, "note = hello\n");
  CHECK(read_model_config(path) == c);
  Model<float> other(c, 23);
  CheckpointReader reader(path);
  load_model_params(reader, other);
  for (Parameter<float>* p : model.parameters()) CHECK(other.param(p->name).value == p->value);
  CHECK(reader.header().find("note = hello") != std::string::npos);

  ModelConfig bigger = c;
  bigger.d_model = 32;
  Model<float> wrong(bigger, 1);
  CHECK_THROWS_AS(load_model_params(reader, wrong), ParseError);
  std::filesystem::remove(path);
}
