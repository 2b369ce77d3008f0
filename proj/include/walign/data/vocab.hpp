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
#include <unordered_map>
#include <vector>

namespace walign {

// Token <-> id map shared by both languages. Ids 0..3 are reserved.
class Vocabulary {
 public:
  static constexpr int32_t kPad = 0;
  static constexpr int32_t kUnk = 1;
  static constexpr int32_t kBos = 2;
  static constexpr int32_t kEos = 3;
  static constexpr int32_t kNumReserved = 4;

  Vocabulary();

  // Builds from token streams; tokens are ranked by descending frequency,
  // ties broken lexicographically. Tokens seen fewer than `min_count` times
  // are left out and map to UNK.
  static Vocabulary build(const std::vector<std::vector<std::string>>& streams, int min_count = 1);

  // Returns the id of an existing token or adds it.
  int32_t add(const std::string& token);

  // Unknown tokens map to kUnk.
  int32_t id(const std::string& token) const;
  bool contains(const std::string& token) const { return index_.count(token) > 0; }
  const std::string& token(int32_t id) const;
  int32_t size() const { return static_cast<int32_t>(tokens_.size()); }

  std::vector<int32_t> encode(const std::vector<std::string>& tokens) const;

  // One token per line; the line number is the id.
  std::string serialize() const;
  static Vocabulary parse(const std::string& text);
  void save(const std::string& path) const;
  static Vocabulary load(const std::string& path);

  bool operator==(const Vocabulary& other) const { return tokens_ == other.tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int32_t> index_;
};

}  // namespace walign
