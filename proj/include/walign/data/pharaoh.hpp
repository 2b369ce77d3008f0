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

// Pharaoh-format alignment links: "j-i" pairs a source word j with a target
// word i. Gold files mark possible-only links as "j-ip" or "jpi".

#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <vector>

namespace walign {

struct Link {
  int32_t src = 0;
  int32_t tgt = 0;

  auto operator<=>(const Link&) const = default;
};

using AlignmentSet = std::set<Link>;

// `possible` always contains every sure link.
struct GoldAlignment {
  AlignmentSet sure;
  AlignmentSet possible;

  bool operator==(const GoldAlignment&) const = default;
};

// Parses one line; `line_no` (1-based) is only used in error messages.
GoldAlignment parse_gold_line(const std::string& line, int index_base, int64_t line_no = 1);
std::vector<GoldAlignment> parse_gold(const std::string& path, int index_base);

// Canonical form: links sorted by (src, tgt), possible-only links written as
// "jpi", sure links as "j-i".
std::string serialize_gold(const GoldAlignment& gold, int index_base = 0);

// Space-separated "j-i" tokens sorted by (src, tgt).
std::string format_links(const AlignmentSet& links, int index_base = 0);
AlignmentSet parse_links(const std::string& line, int index_base, int64_t line_no = 1);

}  // namespace walign
