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
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace walign {

// Byte-pair-encoding merge table. Words are split into UTF-8 code points and
// merges are applied in rank order. Every subword except the last one of a
// word carries the continuation suffix "@@".
class BpeModel {
 public:
  using Pair = std::pair<std::string, std::string>;
  static constexpr const char* kContinuation = "@@";

  BpeModel() = default;
  explicit BpeModel(std::vector<Pair> merges, int target_merge_count = -1);

  const std::vector<Pair>& merges() const { return merges_; }
  int target_merge_count() const { return target_merge_count_; }

  // Symbols of one word before continuation markers are added.
  std::vector<std::string> segment(const std::string& word) const;

  // Subwords of a whitespace-tokenized sentence. When `sub_to_word` is set it
  // receives the word index of every subword.
  std::vector<std::string> encode(const std::vector<std::string>& words,
                                  std::vector<int32_t>* sub_to_word = nullptr) const;

  // Joins continuation subwords back into words.
  static std::vector<std::string> decode(const std::vector<std::string>& subwords);

  // Word index of every subword, derived from continuation markers alone.
  static std::vector<int32_t> word_map(const std::vector<std::string>& subwords);

  // One merge "left right" per line; the line number is the rank.
  std::string serialize() const;
  static BpeModel parse(const std::string& text);
  void save(const std::string& path) const;
  static BpeModel load(const std::string& path);

 private:
  std::vector<Pair> merges_;
  std::map<Pair, int> rank_;
  int target_merge_count_ = -1;
};

// Learns up to `merges` rules from whitespace-tokenized sentences of both
// languages. Each step merges the most frequent adjacent pair, ties broken by
// the lexicographically smallest pair. Learning stops early once no pair
// occurs at least twice. Throws IngestionError on an empty corpus.
BpeModel train_bpe(const std::vector<std::vector<std::string>>& corpus, int merges);

}  // namespace walign
