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

// Model diagnostics: per-word prediction verdicts, value-vector norms and
// attention-matrix dumps.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "walign/alignment/extract.hpp"
#include "walign/data/corpus.hpp"
#include "walign/data/vocab.hpp"
#include "walign/model/model.hpp"

namespace walign {

// Per pair, per target word: whether any of its subwords is the argmax
// prediction. Pairs the model cannot score get all-false verdicts.
template <typename T>
std::vector<std::vector<bool>> word_predictions(Model<T>& model, const std::vector<SentencePair>& pairs,
                                                int64_t max_tokens = 4000);

struct ValueNormRow {
  int64_t position = 0;  // source position; -1 for the leaky slot
  std::string token;
  double norm = 0;  // value-vector norm, averaged over heads
  double mass = 0;  // attention received, summed over target rows and averaged over heads
};

// Rows sorted by norm, largest first. Uses the last cross-attention layer.
template <typename T>
std::vector<ValueNormRow> value_norm_report(Model<T>& model, const SentencePair& pair,
                                            const Vocabulary* vocab = nullptr);
std::string value_norms_tsv(const std::vector<ValueNormRow>& rows);

// Mean of the selected rows of `w`, one entry per column.
std::vector<double> column_mass(const ScoreMatrix& w, const std::vector<int64_t>& rows);

// Tab-separated matrix with a header row of column labels and a label
// column; parse_matrix_tsv reads it back.
std::string matrix_tsv(const ScoreMatrix& m, const std::vector<std::string>& row_labels,
                       const std::vector<std::string>& col_labels);
ScoreMatrix parse_matrix_tsv(const std::string& text, std::vector<std::string>* row_labels = nullptr,
                             std::vector<std::string>* col_labels = nullptr);

}  // namespace walign
