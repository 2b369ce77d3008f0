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

// Score matrices and the extractors that turn them into links. Rows index
// target positions i, columns source positions j; a link is (src=j, tgt=i).

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "walign/data/pharaoh.hpp"

namespace walign {

struct ScoreMatrix {
  int64_t rows = 0;
  int64_t cols = 0;
  std::vector<double> values;  // row-major
  std::string tag;             // e.g. "fused", "layer-5", "shifted"

  ScoreMatrix() = default;
  ScoreMatrix(int64_t r, int64_t c, double fill = 0.0) : rows(r), cols(c), values(static_cast<size_t>(r * c), fill) {}

  double& at(int64_t i, int64_t j) { return values[static_cast<size_t>(i * cols + j)]; }
  double at(int64_t i, int64_t j) const { return values[static_cast<size_t>(i * cols + j)]; }
  ScoreMatrix transposed() const;
};

// S_ij = 2 a b / (a + b) with a = w_xy(i, j), b = w_yx(j, i); 0 when a + b = 0.
// Throws ContractError unless w_yx is the transpose shape of w_xy.
ScoreMatrix fuse_bidirectional(const ScoreMatrix& w_xy, const ScoreMatrix& w_yx);

// Links whose score strictly exceeds theta.
AlignmentSet threshold_extract(const ScoreMatrix& s, double theta);

// One link per row at its maximum; ties go to the smallest column.
AlignmentSet argmax_extract(const ScoreMatrix& s);

// Input-token reading of a causal decoder's attention: `w` has one row per
// decoder input (BOS, y_0, ..., y_{I-1}) and row i of the result is row i+1
// of `w`, so the last target token uses the row that predicts EOS.
ScoreMatrix shift_extract(const ScoreMatrix& w);

// Output-token reading of the same matrix: drops the final (EOS-predicting)
// row. Counterpart of shift_extract.
ScoreMatrix output_rows(const ScoreMatrix& w);

// Removes the trailing `count` columns (e.g. an appended source EOS).
ScoreMatrix drop_last_columns(const ScoreMatrix& w, int64_t count = 1);

// Symmetrises `forward` and `backward` (both as (src, tgt) links): start
// from the intersection, repeatedly add union links in the 8-neighbourhood
// of current links that touch an unaligned word, then add remaining links
// of `forward`, then of `backward`, that touch an unaligned word. All scans
// go over target index, then source index, in ascending order.
AlignmentSet grow_diag_final(const AlignmentSet& forward, const AlignmentSet& backward);

// Word link (j', i') for every subword link whose endpoints map to j' and i'.
// Throws ContractError when a subword index is outside a map.
AlignmentSet project_to_words(const AlignmentSet& subword_links, const std::vector<int32_t>& src_sub_to_word,
                              const std::vector<int32_t>& tgt_sub_to_word);

bool is_end_punctuation(const std::string& token);

// Zeroes the last column when the final source token is end punctuation.
ScoreMatrix drop_end_punctuation(const ScoreMatrix& w, const std::vector<std::string>& src_tokens);

}  // namespace walign
