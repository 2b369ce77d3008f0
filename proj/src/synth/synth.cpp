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

#include "walign/synth/synth.hpp"

#include <algorithm>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "walign/util/config_values.hpp"
#include "walign/util/error.hpp"
#include "walign/util/text.hpp"

namespace walign {

namespace {

constexpr uint64_t kLexiconStream = 0x6c6578;

uint64_t mix(uint64_t seed, uint64_t stream) {
  // splitmix64 finaliser over the combined key.
  uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Unique words of 1-3 consonant-vowel syllables over the given consonants.
std::vector<std::string> make_words(std::mt19937_64& rng, const std::string& consonants, size_t count,
                                    std::set<std::string>& taken) {
  static const std::string kVowels = "aeiou";
  std::uniform_int_distribution<size_t> c(0, consonants.size() - 1), v(0, kVowels.size() - 1);
  std::uniform_int_distribution<int> syllables(1, 3);
  std::vector<std::string> out;
  while (out.size() < count) {
    std::string w;
    for (int s = syllables(rng); s > 0; --s) {
      w += consonants[c(rng)];
      w += kVowels[v(rng)];
    }
    if (taken.insert(w).second) out.push_back(w);
  }
  return out;
}

}  // namespace

void SynthConfig::validate() const {
  if (vocab_size < 1) throw ConfigError("synth vocab_size must be positive");
  if (sentences < 0) throw ConfigError("synth sentences must be non-negative");
  if (min_len < 1 || max_len < min_len) throw ConfigError("synth lengths need 1 <= min_len <= max_len");
  if (reorder_window < 0) throw ConfigError("synth reorder_window must be non-negative");
  for (double p : {null_rate, fertility_rate, end_punct_rate}) {
    if (!(p >= 0 && p <= 1)) throw ConfigError("synth rates must lie in [0, 1]");
  }
  if (null_types < 1) throw ConfigError("synth null_types must be positive");
}

std::string SynthConfig::to_text() const {
  std::ostringstream os;
  os << "vocab_size = " << vocab_size << "\n"
     << "sentences = " << sentences << "\n"
     << "min_len = " << min_len << "\n"
     << "max_len = " << max_len << "\n"
     << "reorder_window = " << reorder_window << "\n"
     << "null_rate = " << format_double(null_rate) << "\n"
     << "fertility_rate = " << format_double(fertility_rate) << "\n"
     << "end_punct_rate = " << format_double(end_punct_rate) << "\n"
     << "null_types = " << null_types << "\n"
     << "seed = " << seed << "\n";
  return os.str();
}

void SynthConfig::set(const std::string& key, const std::string& value) {
  if (key == "vocab_size") vocab_size = parse_int(key, value);
  else if (key == "sentences") sentences = parse_int64(key, value);
  else if (key == "min_len") min_len = parse_int(key, value);
  else if (key == "max_len") max_len = parse_int(key, value);
  else if (key == "reorder_window") reorder_window = parse_int(key, value);
  else if (key == "null_rate") null_rate = parse_double(key, value);
  else if (key == "fertility_rate") fertility_rate = parse_double(key, value);
  else if (key == "end_punct_rate") end_punct_rate = parse_double(key, value);
  else if (key == "null_types") null_types = parse_int(key, value);
  else if (key == "seed") seed = static_cast<uint64_t>(parse_int64(key, value));
  else throw ConfigError("unknown synth setting '" + key + "'");
}

SynthLexicon make_lexicon(const SynthConfig& config) {
  config.validate();
  std::mt19937_64 rng(mix(config.seed, kLexiconStream));
  std::set<std::string> taken;
  SynthLexicon lex;
  const size_t n = static_cast<size_t>(config.vocab_size);
  // Disjoint consonant sets keep the two languages' word types apart.
  lex.source = make_words(rng, "bdgkmnpt", n, taken);
  lex.target = make_words(rng, "fhlrsvz", n, taken);
  lex.companion = make_words(rng, "fhlrsvz", n, taken);
  lex.nulls = make_words(rng, "wy", static_cast<size_t>(config.null_types), taken);
  return lex;
}

SynthCorpus generate(const SynthConfig& config) {
  SynthCorpus corpus;
  corpus.lexicon = make_lexicon(config);
  const SynthLexicon& lex = corpus.lexicon;
  for (int64_t k = 0; k < config.sentences; ++k) {
    std::mt19937_64 rng(mix(config.seed, static_cast<uint64_t>(k)));
    std::uniform_int_distribution<int> len(config.min_len, config.max_len);
    std::uniform_int_distribution<int> word(0, config.vocab_size - 1);
    std::uniform_real_distribution<double> jitter(0.0, config.reorder_window + 1.0);
    std::uniform_int_distribution<int> null_word(0, config.null_types - 1);
    std::bernoulli_distribution fertile(config.fertility_rate), insert(config.null_rate),
        punct(config.end_punct_rate);

    const int J = len(rng);
    std::vector<int> src(static_cast<size_t>(J));
    for (int& w : src) w = word(rng);
    std::vector<std::pair<double, int>> keys;  // (j + jitter, j)
    for (int j = 0; j < J; ++j) keys.emplace_back(j + jitter(rng), j);
    std::stable_sort(keys.begin(), keys.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });

    // Target tokens with their source index, -1 for inserted words.
    std::vector<std::pair<std::string, int>> tgt;
    for (const auto& [key, j] : keys) {
      const int w = src[static_cast<size_t>(j)];
      tgt.emplace_back(lex.target[static_cast<size_t>(w)], j);
      if (fertile(rng)) tgt.emplace_back(lex.companion[static_cast<size_t>(w)], j);
    }
    for (int j = 0; j < J; ++j) {
      if (!insert(rng)) continue;
      std::uniform_int_distribution<size_t> where(0, tgt.size());
      const std::string& null = lex.nulls[static_cast<size_t>(null_word(rng))];
      tgt.insert(tgt.begin() + static_cast<std::ptrdiff_t>(where(rng)), {null, -1});
    }

    std::vector<std::string> src_words;
    for (int w : src) src_words.push_back(lex.source[static_cast<size_t>(w)]);
    if (punct(rng)) src_words.push_back(".");
    std::vector<std::string> tgt_words;
    GoldAlignment gold;
    for (size_t i = 0; i < tgt.size(); ++i) {
      tgt_words.push_back(tgt[i].first);
      if (tgt[i].second >= 0) gold.sure.insert({tgt[i].second, static_cast<int32_t>(i)});
    }
    gold.possible = gold.sure;
    corpus.src.push_back(join(src_words, " "));
    corpus.tgt.push_back(join(tgt_words, " "));
    corpus.gold.push_back(std::move(gold));
  }
  return corpus;
}

void write_synth(const SynthCorpus& corpus, const std::string& prefix) {
  std::string src, tgt, gold;
  for (size_t k = 0; k < corpus.src.size(); ++k) {
    src += corpus.src[k] + "\n";
    tgt += corpus.tgt[k] + "\n";
    gold += serialize_gold(corpus.gold[k], 0) + "\n";
  }
  write_file_atomic(prefix + ".src", src);
  write_file_atomic(prefix + ".tgt", tgt);
  write_file_atomic(prefix + ".gold", gold);
}

std::vector<int32_t> unaligned_targets(const GoldAlignment& gold, int64_t tgt_words) {
  std::vector<uint8_t> linked(static_cast<size_t>(tgt_words), 0);
  for (const AlignmentSet* s : {&gold.sure, &gold.possible}) {
    for (const Link& l : *s) {
      if (l.tgt >= 0 && l.tgt < tgt_words) linked[static_cast<size_t>(l.tgt)] = 1;
    }
  }
  std::vector<int32_t> out;
  for (int64_t i = 0; i < tgt_words; ++i) {
    if (!linked[static_cast<size_t>(i)]) out.push_back(static_cast<int32_t>(i));
  }
  return out;
}

}  // namespace walign
