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

#include "walign/data/vocab.hpp"

#include <algorithm>
#include <sstream>

#include "walign/util/error.hpp"
#include "walign/util/text.hpp"

namespace walign {

namespace {

const char* const kReservedNames[] = {"<pad>", "<unk>", "<s>", "</s>"};

}  // namespace

Vocabulary::Vocabulary() {
  for (const char* name : kReservedNames) add(name);
}

Vocabulary Vocabulary::build(const std::vector<std::vector<std::string>>& streams, int min_count) {
  std::unordered_map<std::string, int64_t> counts;
  for (const auto& stream : streams) {
    for (const auto& tok : stream) ++counts[tok];
  }
  std::vector<std::pair<std::string, int64_t>> ranked(counts.begin(), counts.end());
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });
  Vocabulary vocab;
  for (const auto& [tok, n] : ranked) {
    if (n >= min_count) vocab.add(tok);
  }
  return vocab;
}

int32_t Vocabulary::add(const std::string& token) {
  auto it = index_.find(token);
  if (it != index_.end()) return it->second;
  if (token.empty() || token.find_first_of(" \t\n\r") != std::string::npos) {
    throw ContractError("vocabulary tokens must be non-empty and contain no whitespace");
  }
  const auto id = static_cast<int32_t>(tokens_.size());
  tokens_.push_back(token);
  index_.emplace(token, id);
  return id;
}

int32_t Vocabulary::id(const std::string& token) const {
  auto it = index_.find(token);
  return it == index_.end() ? kUnk : it->second;
}

const std::string& Vocabulary::token(int32_t id) const {
  if (id < 0 || id >= size()) {
    throw IndexError("token id " + std::to_string(id) + " outside vocabulary of size " +
                     std::to_string(size()));
  }
  return tokens_[static_cast<size_t>(id)];
}

std::vector<int32_t> Vocabulary::encode(const std::vector<std::string>& tokens) const {
  std::vector<int32_t> ids;
  ids.reserve(tokens.size());
  for (const auto& t : tokens) ids.push_back(id(t));
  return ids;
}

std::string Vocabulary::serialize() const {
  std::string out;
  for (const auto& t : tokens_) {
    out += t;
    out += '\n';
  }
  return out;
}

Vocabulary Vocabulary::parse(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  Vocabulary vocab;
  int64_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line_no <= kNumReserved) {
      if (line != kReservedNames[line_no - 1]) {
        throw ParseError("vocabulary line " + std::to_string(line_no) + ": expected reserved token '" +
                         kReservedNames[line_no - 1] + "', got '" + line + "'");
      }
      continue;
    }
    if (vocab.contains(line)) {
      throw ParseError("vocabulary line " + std::to_string(line_no) + ": duplicate token '" + line + "'");
    }
    try {
      vocab.add(line);
    } catch (const ContractError& e) {
      throw ParseError("vocabulary line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  if (line_no < kNumReserved) throw ParseError("vocabulary is missing reserved tokens");
  return vocab;
}

void Vocabulary::save(const std::string& path) const { write_file_atomic(path, serialize()); }

Vocabulary Vocabulary::load(const std::string& path) {
  std::string text;
  for (const auto& line : read_lines(path)) text += line + '\n';
  return parse(text);
}

}  // namespace walign
