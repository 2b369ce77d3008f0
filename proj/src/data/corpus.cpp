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

#include "walign/data/corpus.hpp"

#include <algorithm>
#include <numeric>

#include "walign/util/error.hpp"
#include "walign/util/text.hpp"

namespace walign {

SentencePair encode_pair(const std::string& src_line, const std::string& tgt_line, const BpeModel& bpe,
                         const Vocabulary& vocab) {
  SentencePair pair;
  pair.src = vocab.encode(bpe.encode(split_whitespace(src_line), &pair.src_sub_to_word));
  pair.tgt = vocab.encode(bpe.encode(split_whitespace(tgt_line), &pair.tgt_sub_to_word));
  return pair;
}

std::vector<SentencePair> encode_corpus(const std::vector<std::string>& src_lines,
                                        const std::vector<std::string>& tgt_lines, const BpeModel& bpe,
                                        const Vocabulary& vocab, const CorpusOptions& options,
                                        CorpusStats* stats) {
  if (src_lines.size() != tgt_lines.size()) {
    throw IngestionError("source has " + std::to_string(src_lines.size()) + " lines but target has " +
                         std::to_string(tgt_lines.size()) + "; no counterpart for line " +
                         std::to_string(std::min(src_lines.size(), tgt_lines.size()) + 1));
  }
  CorpusStats local;
  std::vector<SentencePair> out;
  for (size_t n = 0; n < src_lines.size(); ++n) {
    ++local.lines;
    SentencePair pair = encode_pair(src_lines[n], tgt_lines[n], bpe, vocab);
    pair.line = static_cast<int64_t>(n);
    if (options.filter) {
      if (pair.src.size() < 2 || pair.tgt.size() < 2) {
        ++local.dropped_short;
        continue;
      }
      if (static_cast<int64_t>(pair.src.size()) > options.max_len ||
          static_cast<int64_t>(pair.tgt.size()) > options.max_len) {
        ++local.dropped_long;
        continue;
      }
    }
    out.push_back(std::move(pair));
  }
  local.kept = static_cast<int64_t>(out.size());
  if (stats) *stats = local;
  return out;
}

std::vector<SentencePair> load_parallel_corpus(const std::string& src_path, const std::string& tgt_path,
                                               const BpeModel& bpe, const Vocabulary& vocab,
                                               const CorpusOptions& options, CorpusStats* stats) {
  auto src = read_lines(src_path);
  auto tgt = read_lines(tgt_path);
  if (src.size() != tgt.size()) {
    throw IngestionError("'" + src_path + "' has " + std::to_string(src.size()) + " lines but '" +
                         tgt_path + "' has " + std::to_string(tgt.size()) + "; no counterpart for line " +
                         std::to_string(std::min(src.size(), tgt.size()) + 1));
  }
  return encode_corpus(src, tgt, bpe, vocab, options, stats);
}

std::pair<std::vector<SentencePair>, std::vector<SentencePair>> split_validation(
    const std::vector<SentencePair>& pairs, int64_t count) {
  const auto n = static_cast<int64_t>(pairs.size());
  if (n < 2) throw ContractError("need at least two pairs to split off validation data");
  const int64_t n_val = std::clamp<int64_t>(count, 0, n - 1);
  std::vector<SentencePair> train(pairs.begin(), pairs.end() - n_val);
  std::vector<SentencePair> valid(pairs.end() - n_val, pairs.end());
  return {std::move(train), std::move(valid)};
}

Batch make_batch(const std::vector<SentencePair>& pairs, const std::vector<int64_t>& index) {
  Batch b;
  b.size = static_cast<int64_t>(index.size());
  b.index = index;
  for (int64_t i : index) {
    const auto& p = pairs.at(static_cast<size_t>(i));
    b.src_len = std::max<int64_t>(b.src_len, static_cast<int64_t>(p.src.size()));
    b.tgt_len = std::max<int64_t>(b.tgt_len, static_cast<int64_t>(p.tgt.size()));
  }
  b.src.assign(static_cast<size_t>(b.size * b.src_len), Vocabulary::kPad);
  b.tgt.assign(static_cast<size_t>(b.size * b.tgt_len), Vocabulary::kPad);
  b.src_pad.assign(b.src.size(), 1);
  b.tgt_pad.assign(b.tgt.size(), 1);
  for (int64_t r = 0; r < b.size; ++r) {
    const auto& p = pairs[static_cast<size_t>(index[static_cast<size_t>(r)])];
    for (size_t j = 0; j < p.src.size(); ++j) {
      b.src[r * b.src_len + j] = p.src[j];
      b.src_pad[r * b.src_len + j] = 0;
    }
    for (size_t i = 0; i < p.tgt.size(); ++i) {
      b.tgt[r * b.tgt_len + i] = p.tgt[i];
      b.tgt_pad[r * b.tgt_len + i] = 0;
    }
  }
  return b;
}

Batch reversed(const Batch& batch) {
  Batch r = batch;
  std::swap(r.src_len, r.tgt_len);
  std::swap(r.src, r.tgt);
  std::swap(r.src_pad, r.tgt_pad);
  return r;
}

SentencePair reversed(const SentencePair& pair) {
  SentencePair r = pair;
  std::swap(r.src, r.tgt);
  std::swap(r.src_sub_to_word, r.tgt_sub_to_word);
  return r;
}

std::vector<Batch> make_batches(const std::vector<SentencePair>& pairs, int64_t max_tokens) {
  auto longest = [&](int64_t i) {
    const auto& p = pairs[static_cast<size_t>(i)];
    return static_cast<int64_t>(std::max(p.src.size(), p.tgt.size()));
  };
  std::vector<int64_t> order(pairs.size());
  std::iota(order.begin(), order.end(), 0);
  for (int64_t i : order) {
    if (longest(i) > max_tokens) {
      throw ConfigError("pair " + std::to_string(i) + " has " + std::to_string(longest(i)) +
                        " tokens on one side, more than max_tokens=" + std::to_string(max_tokens));
    }
  }
  std::stable_sort(order.begin(), order.end(), [&](int64_t a, int64_t b) {
    const auto& pa = pairs[static_cast<size_t>(a)];
    const auto& pb = pairs[static_cast<size_t>(b)];
    if (longest(a) != longest(b)) return longest(a) < longest(b);
    return pa.src.size() < pb.src.size();
  });

  std::vector<Batch> batches;
  std::vector<int64_t> current;
  size_t src_max = 0, tgt_max = 0;
  for (int64_t i : order) {
    const auto& p = pairs[static_cast<size_t>(i)];
    const size_t s = std::max(src_max, p.src.size());
    const size_t t = std::max(tgt_max, p.tgt.size());
    const auto rows = static_cast<int64_t>(current.size() + 1);
    if (!current.empty() && (rows * static_cast<int64_t>(s) > max_tokens ||
                             rows * static_cast<int64_t>(t) > max_tokens)) {
      batches.push_back(make_batch(pairs, current));
      current.clear();
      src_max = tgt_max = 0;
    }
    current.push_back(i);
    src_max = std::max(src_max, p.src.size());
    tgt_max = std::max(tgt_max, p.tgt.size());
  }
  if (!current.empty()) batches.push_back(make_batch(pairs, current));
  return batches;
}

}  // namespace walign
