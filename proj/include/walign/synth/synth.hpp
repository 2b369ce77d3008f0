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

// Synthetic parallel corpora with gold alignments known by construction.
//
// Each source word has one translation; with probability fertility_rate it
// also emits a fixed companion word. Translation units are reordered by
// sorting on j + U[0, reorder_window + 1), so no unit moves further than
// the window. For every source word, with probability null_rate, a function word
// without any source counterpart is inserted at a random target position.
// With probability end_punct_rate the source gets a final "." that has no
// translation and no gold link.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "walign/data/pharaoh.hpp"

namespace walign {

struct SynthConfig {
  int vocab_size = 50;  // source word types
  int64_t sentences = 10000;
  int min_len = 5;  // source words, end punctuation excluded
  int max_len = 12;
  int reorder_window = 2;
  double null_rate = 0.1;
  double fertility_rate = 0.1;
  double end_punct_rate = 0.0;
  int null_types = 4;
  uint64_t seed = 1;

  void validate() const;
  std::string to_text() const;
  void set(const std::string& key, const std::string& value);
  bool operator==(const SynthConfig& other) const { return to_text() == other.to_text(); }
};

struct SynthLexicon {
  std::vector<std::string> source;
  std::vector<std::string> target;     // translation of source[k]
  std::vector<std::string> companion;  // second word emitted under fertility
  std::vector<std::string> nulls;      // inserted function words
};

struct SynthCorpus {
  SynthLexicon lexicon;
  std::vector<std::string> src;
  std::vector<std::string> tgt;
  std::vector<GoldAlignment> gold;  // sure links only; possible == sure
};

SynthLexicon make_lexicon(const SynthConfig& config);
SynthCorpus generate(const SynthConfig& config);

// Writes <prefix>.src, <prefix>.tgt and <prefix>.gold (0-based Pharaoh).
void write_synth(const SynthCorpus& corpus, const std::string& prefix);

// Target word positions without any gold link.
std::vector<int32_t> unaligned_targets(const GoldAlignment& gold, int64_t tgt_words);

}  // namespace walign
