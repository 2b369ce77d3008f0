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

#include "walign/alignment/extract.hpp"

#include <algorithm>
#include <array>
#include <utility>

#include "walign/util/error.hpp"

namespace walign {

ScoreMatrix ScoreMatrix::transposed() const {
  ScoreMatrix t(cols, rows);
  t.tag = tag;
  for (int64_t i = 0; i < rows; ++i) {
    for (int64_t j = 0; j < cols; ++j) t.at(j, i) = at(i, j);
  }
  return t;
}

ScoreMatrix fuse_bidirectional(const ScoreMatrix& w_xy, const ScoreMatrix& w_yx) {
  if (w_xy.rows != w_yx.cols || w_xy.cols != w_yx.rows) {
    throw ContractError("fuse_bidirectional: " + std::to_string(w_xy.rows) + "x" + std::to_string(w_xy.cols) +
                        " does not transpose onto " + std::to_string(w_yx.rows) + "x" + std::to_string(w_yx.cols));
  }
  ScoreMatrix s(w_xy.rows, w_xy.cols);
  s.tag = "fused";
  for (int64_t i = 0; i < s.rows; ++i) {
    for (int64_t j = 0; j < s.cols; ++j) {
      const double a = w_xy.at(i, j), b = w_yx.at(j, i);
      s.at(i, j) = a + b > 0 ? 2 * a * b / (a + b) : 0.0;
    }
  }
  return s;
}

AlignmentSet threshold_extract(const ScoreMatrix& s, double theta) {
  AlignmentSet out;
  for (int64_t i = 0; i < s.rows; ++i) {
    for (int64_t j = 0; j < s.cols; ++j) {
      if (s.at(i, j) > theta) out.insert({static_cast<int32_t>(j), static_cast<int32_t>(i)});
    }
  }
  return out;
}

AlignmentSet argmax_extract(const ScoreMatrix& s) {
  AlignmentSet out;
  if (s.cols == 0) return out;
  for (int64_t i = 0; i < s.rows; ++i) {
    int64_t best = 0;
    for (int64_t j = 1; j < s.cols; ++j) {
      if (s.at(i, j) > s.at(i, best)) best = j;
    }
    out.insert({static_cast<int32_t>(best), static_cast<int32_t>(i)});
  }
  return out;
}

ScoreMatrix shift_extract(const ScoreMatrix& w) {
  if (w.rows < 1) throw ContractError("shift_extract needs at least the BOS row");
  ScoreMatrix s(w.rows - 1, w.cols);
  s.tag = "shifted";
  std::copy(w.values.begin() + w.cols, w.values.end(), s.values.begin());
  return s;
}

ScoreMatrix output_rows(const ScoreMatrix& w) {
  if (w.rows < 1) throw ContractError("output_rows needs at least the EOS row");
  ScoreMatrix s(w.rows - 1, w.cols);
  s.tag = w.tag;
  std::copy(w.values.begin(), w.values.end() - w.cols, s.values.begin());
  return s;
}

ScoreMatrix drop_last_columns(const ScoreMatrix& w, int64_t count) {
  if (count < 0 || count > w.cols) throw ContractError("drop_last_columns: bad column count");
  ScoreMatrix s(w.rows, w.cols - count);
  s.tag = w.tag;
  for (int64_t i = 0; i < s.rows; ++i) {
    for (int64_t j = 0; j < s.cols; ++j) s.at(i, j) = w.at(i, j);
  }
  return s;
}

AlignmentSet grow_diag_final(const AlignmentSet& forward, const AlignmentSet& backward) {
  AlignmentSet uni = forward;
  uni.insert(backward.begin(), backward.end());
  int32_t I = 0, J = 0;
  for (const Link& l : uni) {
    J = std::max(J, l.src + 1);
    I = std::max(I, l.tgt + 1);
  }
  AlignmentSet out;
  for (const Link& l : forward) {
    if (backward.count(l)) out.insert(l);
  }
  std::vector<uint8_t> src_aligned(static_cast<size_t>(J), 0), tgt_aligned(static_cast<size_t>(I), 0);
  auto add = [&](const Link& l) {
    out.insert(l);
    src_aligned[static_cast<size_t>(l.src)] = 1;
    tgt_aligned[static_cast<size_t>(l.tgt)] = 1;
  };
  for (const Link& l : out) add(l);
  auto touches_unaligned = [&](const Link& l) {
    return !src_aligned[static_cast<size_t>(l.src)] || !tgt_aligned[static_cast<size_t>(l.tgt)];
  };

  // (d_tgt, d_src) offsets.
  static constexpr std::array<std::pair<int, int>, 8> kNeighbours = {
      {{-1, 0}, {0, -1}, {1, 0}, {0, 1}, {-1, -1}, {-1, 1}, {1, -1}, {1, 1}}};
  for (bool grew = true; grew;) {
    grew = false;
    for (int32_t i = 0; i < I; ++i) {
      for (int32_t j = 0; j < J; ++j) {
        if (!out.count({j, i})) continue;
        for (const auto& [di, dj] : kNeighbours) {
          const Link n{j + dj, i + di};
          if (n.src < 0 || n.tgt < 0 || n.src >= J || n.tgt >= I) continue;
          if (touches_unaligned(n) && uni.count(n) && !out.count(n)) {
            add(n);
            grew = true;
          }
        }
      }
    }
  }
  for (const AlignmentSet* side : {&forward, &backward}) {
    for (int32_t i = 0; i < I; ++i) {
      for (int32_t j = 0; j < J; ++j) {
        const Link l{j, i};
        if (side->count(l) && !out.count(l) && touches_unaligned(l)) add(l);
      }
    }
  }
  return out;
}

AlignmentSet project_to_words(const AlignmentSet& subword_links, const std::vector<int32_t>& src_sub_to_word,
                              const std::vector<int32_t>& tgt_sub_to_word) {
  AlignmentSet out;
  for (const Link& l : subword_links) {
    if (l.src < 0 || l.tgt < 0 || static_cast<size_t>(l.src) >= src_sub_to_word.size() ||
        static_cast<size_t>(l.tgt) >= tgt_sub_to_word.size()) {
      throw ContractError("project_to_words: subword link " + std::to_string(l.src) + "-" + std::to_string(l.tgt) +
                          " is outside the word maps (" + std::to_string(src_sub_to_word.size()) + " source, " +
                          std::to_string(tgt_sub_to_word.size()) + " target subwords)");
    }
    out.insert({src_sub_to_word[static_cast<size_t>(l.src)], tgt_sub_to_word[static_cast<size_t>(l.tgt)]});
  }
  return out;
}

bool is_end_punctuation(const std::string& token) {
  return token == "." || token == "!" || token == "?" || token == ";";
}

ScoreMatrix drop_end_punctuation(const ScoreMatrix& w, const std::vector<std::string>& src_tokens) {
  ScoreMatrix out = w;
  if (src_tokens.empty() || !is_end_punctuation(src_tokens.back())) return out;
  if (static_cast<int64_t>(src_tokens.size()) != w.cols) {
    throw ContractError("drop_end_punctuation: " + std::to_string(src_tokens.size()) + " source tokens for " +
                        std::to_string(w.cols) + " columns");
  }
  for (int64_t i = 0; i < out.rows; ++i) out.at(i, out.cols - 1) = 0.0;
  return out;
}

}  // namespace walign
