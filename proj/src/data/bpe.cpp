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

#include "walign/data/bpe.hpp"

#include <algorithm>
#include <set>
#include <sstream>
#include <unordered_map>

#include "walign/util/error.hpp"
#include "walign/util/text.hpp"

namespace walign {

namespace {

bool ends_with_marker(const std::string& s) {
  const std::string marker = BpeModel::kContinuation;
  return s.size() > marker.size() && s.compare(s.size() - marker.size(), marker.size(), marker) == 0;
}

// Replaces every non-overlapping occurrence of (left, right), scanning left to right.
std::vector<std::string> merge_pair(const std::vector<std::string>& symbols, const std::string& left,
                                    const std::string& right) {
  std::vector<std::string> out;
  out.reserve(symbols.size());
  for (size_t i = 0; i < symbols.size(); ++i) {
    if (i + 1 < symbols.size() && symbols[i] == left && symbols[i + 1] == right) {
      out.push_back(left + right);
      ++i;
    } else {
      out.push_back(symbols[i]);
    }
  }
  return out;
}

}  // namespace

BpeModel::BpeModel(std::vector<Pair> merges, int target_merge_count)
    : merges_(std::move(merges)), target_merge_count_(target_merge_count) {
  for (size_t i = 0; i < merges_.size(); ++i) rank_.emplace(merges_[i], static_cast<int>(i));
  if (target_merge_count_ < 0) target_merge_count_ = static_cast<int>(merges_.size());
}

std::vector<std::string> BpeModel::segment(const std::string& word) const {
  std::vector<std::string> symbols = split_codepoints(word);
  while (symbols.size() > 1) {
    int best = -1;
    size_t best_pos = 0;
    for (size_t i = 0; i + 1 < symbols.size(); ++i) {
      auto it = rank_.find(Pair(symbols[i], symbols[i + 1]));
      if (it != rank_.end() && (best < 0 || it->second < best)) {
        best = it->second;
        best_pos = i;
      }
    }
    if (best < 0) break;
    symbols = merge_pair(symbols, symbols[best_pos], symbols[best_pos + 1]);
  }
  return symbols;
}

std::vector<std::string> BpeModel::encode(const std::vector<std::string>& words,
                                          std::vector<int32_t>* sub_to_word) const {
  std::vector<std::string> out;
  if (sub_to_word) sub_to_word->clear();
  for (size_t w = 0; w < words.size(); ++w) {
    std::vector<std::string> pieces = segment(words[w]);
    for (size_t k = 0; k < pieces.size(); ++k) {
      out.push_back(k + 1 < pieces.size() ? pieces[k] + kContinuation : pieces[k]);
      if (sub_to_word) sub_to_word->push_back(static_cast<int32_t>(w));
    }
  }
  return out;
}

std::vector<std::string> BpeModel::decode(const std::vector<std::string>& subwords) {
  std::vector<std::string> words;
  std::string current;
  bool open = false;
  for (const auto& s : subwords) {
    if (ends_with_marker(s)) {
      current += s.substr(0, s.size() - 2);
      open = true;
    } else {
      current += s;
      words.push_back(std::move(current));
      current.clear();
      open = false;
    }
  }
  if (open) words.push_back(std::move(current));
  return words;
}

std::vector<int32_t> BpeModel::word_map(const std::vector<std::string>& subwords) {
  std::vector<int32_t> map;
  int32_t word = 0;
  for (const auto& s : subwords) {
    map.push_back(word);
    if (!ends_with_marker(s)) ++word;
  }
  return map;
}

std::string BpeModel::serialize() const {
  std::string out;
  for (const auto& [a, b] : merges_) out += a + " " + b + "\n";
  return out;
}

BpeModel BpeModel::parse(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::vector<Pair> merges;
  int64_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto parts = split_whitespace(line);
    if (parts.empty()) continue;
    if (parts.size() != 2) {
      throw ParseError("merge table line " + std::to_string(line_no) + ": expected two symbols, got " +
                       std::to_string(parts.size()));
    }
    merges.emplace_back(parts[0], parts[1]);
  }
  return BpeModel(std::move(merges));
}

void BpeModel::save(const std::string& path) const { write_file_atomic(path, serialize()); }

BpeModel BpeModel::load(const std::string& path) {
  std::string text;
  for (const auto& line : read_lines(path)) text += line + '\n';
  return parse(text);
}

BpeModel train_bpe(const std::vector<std::vector<std::string>>& corpus, int merges) {
  if (merges < 0) throw ConfigError("merge count must be non-negative");
  std::unordered_map<std::string, int64_t> word_freq;
  for (const auto& sentence : corpus) {
    for (const auto& w : sentence) ++word_freq[w];
  }
  if (word_freq.empty()) throw IngestionError("cannot learn subword merges from an empty corpus");

  // Sorted word list keeps the whole procedure independent of hash order.
  std::vector<std::pair<std::string, int64_t>> types(word_freq.begin(), word_freq.end());
  std::sort(types.begin(), types.end());
  std::vector<std::vector<std::string>> symbols;
  std::vector<int64_t> freq;
  for (const auto& [w, n] : types) {
    symbols.push_back(split_codepoints(w));
    freq.push_back(n);
  }

  using Pair = BpeModel::Pair;
  std::map<Pair, int64_t> pair_count;
  std::map<Pair, std::set<size_t>> where;
  auto account = [&](size_t w, int64_t sign) {
    const auto& s = symbols[w];
    for (size_t i = 0; i + 1 < s.size(); ++i) {
      Pair p(s[i], s[i + 1]);
      auto& c = pair_count[p];
      c += sign * freq[w];
      if (sign > 0) where[p].insert(w);
      if (c == 0) pair_count.erase(p);
    }
  };
  for (size_t w = 0; w < symbols.size(); ++w) account(w, +1);

  std::vector<Pair> rules;
  while (static_cast<int>(rules.size()) < merges && !pair_count.empty()) {
    // std::map iterates in lexicographic order, so the first maximum wins ties.
    auto best = pair_count.begin();
    for (auto it = pair_count.begin(); it != pair_count.end(); ++it) {
      if (it->second > best->second) best = it;
    }
    if (best->second < 2) break;
    const Pair rule = best->first;
    rules.push_back(rule);
    const std::set<size_t> touched = where[rule];
    where.erase(rule);
    for (size_t w : touched) {
      account(w, -1);
      symbols[w] = merge_pair(symbols[w], rule.first, rule.second);
      account(w, +1);
    }
  }
  return BpeModel(std::move(rules), merges);
}

}  // namespace walign
