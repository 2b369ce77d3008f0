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

#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "walign/data/bpe.hpp"
#include "walign/data/vocab.hpp"

namespace walign {

// One sentence pair as subword ids plus subword -> word index maps.
struct SentencePair {
  std::vector<int32_t> src;
  std::vector<int32_t> tgt;
  std::vector<int32_t> src_sub_to_word;
  std::vector<int32_t> tgt_sub_to_word;
  int64_t line = -1;  // 0-based line in the input files

  int64_t src_words() const { return src_sub_to_word.empty() ? 0 : src_sub_to_word.back() + 1; }
  int64_t tgt_words() const { return tgt_sub_to_word.empty() ? 0 : tgt_sub_to_word.back() + 1; }
};

struct CorpusOptions {
  int max_len = 128;
  // Drop pairs where either side has fewer than two subwords or more than
  // max_len. Alignment of a test set keeps every line instead.
  bool filter = true;
};

struct CorpusStats {
  int64_t lines = 0;
  int64_t kept = 0;
  int64_t dropped_short = 0;
  int64_t dropped_long = 0;
};

SentencePair encode_pair(const std::string& src_line, const std::string& tgt_line, const BpeModel& bpe,
                         const Vocabulary& vocab);

// Reads line-aligned source/target files. Throws IngestionError when the
// files differ in line count.
std::vector<SentencePair> load_parallel_corpus(const std::string& src_path, const std::string& tgt_path,
                                               const BpeModel& bpe, const Vocabulary& vocab,
                                               const CorpusOptions& options = {},
                                               CorpusStats* stats = nullptr);

// Same as load_parallel_corpus but from lines already in memory.
std::vector<SentencePair> encode_corpus(const std::vector<std::string>& src_lines,
                                        const std::vector<std::string>& tgt_lines, const BpeModel& bpe,
                                        const Vocabulary& vocab, const CorpusOptions& options = {},
                                        CorpusStats* stats = nullptr);

// The last `count` pairs become validation, keeping at least one training
// pair. Order is preserved. Throws ContractError for fewer than two pairs.
std::pair<std::vector<SentencePair>, std::vector<SentencePair>> split_validation(
    const std::vector<SentencePair>& pairs, int64_t count = 1000);

// Padded batch; rows are row-major [size, len]. Pad positions hold
// Vocabulary::kPad and have their mask byte set.
struct Batch {
  int64_t size = 0;
  int64_t src_len = 0;
  int64_t tgt_len = 0;
  std::vector<int32_t> src;
  std::vector<int32_t> tgt;
  std::vector<uint8_t> src_pad;
  std::vector<uint8_t> tgt_pad;
  std::vector<int64_t> index;  // position of each row in the input list
};

Batch make_batch(const std::vector<SentencePair>& pairs, const std::vector<int64_t>& index);

// The same rows with source and target swapped.
Batch reversed(const Batch& batch);
SentencePair reversed(const SentencePair& pair);

// Groups pairs of similar length so that, per batch, rows * padded length
// stays within max_tokens on both sides. Throws ConfigError if a single pair
// is longer than max_tokens.
std::vector<Batch> make_batches(const std::vector<SentencePair>& pairs, int64_t max_tokens);

}  // namespace walign
