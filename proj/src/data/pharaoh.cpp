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

#include "walign/data/pharaoh.hpp"

#include <cctype>

#include "walign/util/error.hpp"
#include "walign/util/text.hpp"

namespace walign {

namespace {

struct ParsedToken {
  Link link;
  bool possible_only = false;
};

[[noreturn]] void fail(int64_t line_no, size_t column, const std::string& token, const std::string& why) {
  throw ParseError("line " + std::to_string(line_no) + ", column " + std::to_string(column) +
                   ": malformed link '" + token + "' (" + why + ")");
}

// Reads a non-negative decimal number starting at `pos`.
bool read_number(const std::string& s, size_t& pos, int64_t& value) {
  const size_t start = pos;
  value = 0;
  while (pos < s.size() && std::isdigit(static_cast<unsigned char>(s[pos]))) {
    value = value * 10 + (s[pos] - '0');
    if (value > (int64_t{1} << 30)) return false;
    ++pos;
  }
  return pos > start;
}

ParsedToken parse_token(const std::string& tok, int base, int64_t line_no, size_t column) {
  size_t pos = 0;
  int64_t j = 0, i = 0;
  if (!read_number(tok, pos, j)) fail(line_no, column, tok, "expected source index");
  if (pos >= tok.size() || (tok[pos] != '-' && tok[pos] != 'p')) {
    fail(line_no, column, tok, "expected '-' or 'p' separator");
  }
  ParsedToken out;
  out.possible_only = tok[pos] == 'p';
  ++pos;
  if (!read_number(tok, pos, i)) fail(line_no, column, tok, "expected target index");
  if (pos < tok.size()) {
    if (tok[pos] == 'p' && pos + 1 == tok.size() && !out.possible_only) {
      out.possible_only = true;
    } else {
      fail(line_no, column, tok, "unexpected trailing characters");
    }
  }
  if (j < base || i < base) fail(line_no, column, tok, "index below base " + std::to_string(base));
  out.link = Link{static_cast<int32_t>(j - base), static_cast<int32_t>(i - base)};
  return out;
}

void check_base(int base) {
  if (base != 0 && base != 1) throw ConfigError("index base must be 0 or 1");
}

}  // namespace

GoldAlignment parse_gold_line(const std::string& line, int index_base, int64_t line_no) {
  check_base(index_base);
  GoldAlignment gold;
  size_t column = 1;
  size_t pos = 0;
  while (pos < line.size()) {
    while (pos < line.size() && std::isspace(static_cast<unsigned char>(line[pos]))) ++pos;
    if (pos >= line.size()) break;
    size_t end = pos;
    while (end < line.size() && !std::isspace(static_cast<unsigned char>(line[end]))) ++end;
    column = pos + 1;
    ParsedToken t = parse_token(line.substr(pos, end - pos), index_base, line_no, column);
    if (!t.possible_only) gold.sure.insert(t.link);
    gold.possible.insert(t.link);
    pos = end;
  }
  return gold;
}

std::vector<GoldAlignment> parse_gold(const std::string& path, int index_base) {
  std::vector<GoldAlignment> out;
  int64_t line_no = 0;
  for (const auto& line : read_lines(path)) out.push_back(parse_gold_line(line, index_base, ++line_no));
  return out;
}

std::string serialize_gold(const GoldAlignment& gold, int index_base) {
  check_base(index_base);
  std::string out;
  for (const Link& l : gold.possible) {
    if (!out.empty()) out += ' ';
    out += std::to_string(l.src + index_base);
    out += gold.sure.count(l) ? "-" : "p";
    out += std::to_string(l.tgt + index_base);
  }
  return out;
}

std::string format_links(const AlignmentSet& links, int index_base) {
  check_base(index_base);
  std::string out;
  for (const Link& l : links) {
    if (!out.empty()) out += ' ';
    out += std::to_string(l.src + index_base) + "-" + std::to_string(l.tgt + index_base);
  }
  return out;
}

AlignmentSet parse_links(const std::string& line, int index_base, int64_t line_no) {
  return parse_gold_line(line, index_base, line_no).possible;
}

}  // namespace walign
