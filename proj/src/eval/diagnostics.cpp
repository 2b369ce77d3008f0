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

#include "walign/eval/diagnostics.hpp"

#include <algorithm>
#include <sstream>

#include "walign/alignment/aligner.hpp"
#include "walign/util/config_values.hpp"
#include "walign/util/error.hpp"
#include "walign/util/text.hpp"

namespace walign {

template <typename T>
std::vector<std::vector<bool>> word_predictions(Model<T>& model, const std::vector<SentencePair>& pairs,
                                                int64_t max_tokens) {
  std::vector<std::vector<bool>> out(pairs.size());
  std::vector<SentencePair> eligible;
  std::vector<size_t> origin;
  const bool vanilla = model.config().variant == Variant::kVanillaNmt;
  for (size_t k = 0; k < pairs.size(); ++k) {
    out[k].assign(static_cast<size_t>(pairs[k].tgt_words()), false);
    if (pairs[k].src.empty() || pairs[k].tgt.empty() || (!vanilla && pairs[k].tgt.size() < 2)) continue;
    eligible.push_back(pairs[k]);
    origin.push_back(k);
  }
  if (eligible.empty()) return out;
  for (const Batch& batch : make_batches(eligible, max_tokens)) {
    Tape<T> tape;
    const ForwardResult<T> r = model.forward(tape, batch);
    const Tensor<T>& logits = r.logits.value();
    const int64_t V = logits.dim(-1);
    for (int64_t b = 0; b < batch.size; ++b) {
      const size_t e = static_cast<size_t>(batch.index[static_cast<size_t>(b)]);
      const SentencePair& p = eligible[e];
      std::vector<bool>& words = out[origin[e]];
      for (size_t i = 0; i < p.tgt.size(); ++i) {
        const T* row = logits.data() + (b * r.tgt_len + static_cast<int64_t>(i)) * V;
        if ((std::max_element(row, row + V) - row) == p.tgt[i]) {
          words[static_cast<size_t>(p.tgt_sub_to_word[i])] = true;
        }
      }
    }
  }
  return out;
}

template <typename T>
std::vector<ValueNormRow> value_norm_report(Model<T>& model, const SentencePair& pair, const Vocabulary* vocab) {
  std::vector<int64_t> idx{0};
  const Batch batch = make_batch({pair}, idx);
  Tape<T> tape;
  const ForwardResult<T> r = model.forward(tape, batch);
  const ScoreMatrix w = attention_matrices(r, AttentionView{-1, -1, true})[0];
  const int64_t leak = r.leaky ? 1 : 0;
  std::vector<ValueNormRow> rows;
  for (int64_t c = 0; c < w.cols; ++c) {
    ValueNormRow row;
    row.position = c - leak;
    if (c < leak) {
      row.token = "<null>";
    } else if (row.position < static_cast<int64_t>(pair.src.size())) {
      const int32_t id = pair.src[static_cast<size_t>(row.position)];
      row.token = vocab ? vocab->token(id) : std::to_string(id);
    } else {
      row.token = "</s>";
    }
    row.norm = r.value_norms[c];
    for (int64_t i = 0; i < w.rows; ++i) row.mass += w.at(i, c);
    rows.push_back(row);
  }
  std::stable_sort(rows.begin(), rows.end(), [](const ValueNormRow& a, const ValueNormRow& b) { return a.norm > b.norm; });
  return rows;
}

std::string value_norms_tsv(const std::vector<ValueNormRow>& rows) {
  std::ostringstream os;
  os << "position\ttoken\tvalue_norm\tattention_mass\n";
  for (const ValueNormRow& r : rows) {
    os << (r.position < 0 ? std::string("NULL") : std::to_string(r.position)) << "\t" << r.token << "\t"
       << format_double(r.norm) << "\t" << format_double(r.mass) << "\n";
  }
  return os.str();
}

std::vector<double> column_mass(const ScoreMatrix& w, const std::vector<int64_t>& rows) {
  std::vector<double> out(static_cast<size_t>(w.cols), 0.0);
  if (rows.empty()) return out;
  for (int64_t i : rows) {
    if (i < 0 || i >= w.rows) throw ContractError("column_mass: row " + std::to_string(i) + " out of range");
    for (int64_t j = 0; j < w.cols; ++j) out[static_cast<size_t>(j)] += w.at(i, j);
  }
  for (double& v : out) v /= static_cast<double>(rows.size());
  return out;
}

std::string matrix_tsv(const ScoreMatrix& m, const std::vector<std::string>& row_labels,
                       const std::vector<std::string>& col_labels) {
  if (static_cast<int64_t>(row_labels.size()) != m.rows || static_cast<int64_t>(col_labels.size()) != m.cols) {
    throw ContractError("matrix_tsv: label counts do not match the matrix");
  }
  std::ostringstream os;
  os << "target\\source";
  for (const std::string& c : col_labels) os << "\t" << c;
  os << "\n";
  for (int64_t i = 0; i < m.rows; ++i) {
    os << row_labels[static_cast<size_t>(i)];
    for (int64_t j = 0; j < m.cols; ++j) os << "\t" << format_double(m.at(i, j));
    os << "\n";
  }
  return os.str();
}

ScoreMatrix parse_matrix_tsv(const std::string& text, std::vector<std::string>* row_labels,
                             std::vector<std::string>* col_labels) {
  std::istringstream in(text);
  std::string line;
  auto split_tabs = [](const std::string& s) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ls(s);
    while (std::getline(ls, cell, '\t')) cells.push_back(cell);
    return cells;
  };
  if (!std::getline(in, line)) throw ParseError("matrix dump is empty");
  const std::vector<std::string> header = split_tabs(line);
  ScoreMatrix m;
  m.cols = static_cast<int64_t>(header.size()) - 1;
  if (col_labels) col_labels->assign(header.begin() + 1, header.end());
  int64_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::vector<std::string> cells = split_tabs(line);
    if (static_cast<int64_t>(cells.size()) != m.cols + 1) {
      throw ParseError("matrix dump line " + std::to_string(line_no) + " has " + std::to_string(cells.size()) +
                       " cells, expected " + std::to_string(m.cols + 1));
    }
    if (row_labels) row_labels->push_back(cells[0]);
    for (size_t c = 1; c < cells.size(); ++c) m.values.push_back(parse_double("matrix cell", cells[c]));
    ++m.rows;
  }
  return m;
}

template std::vector<std::vector<bool>> word_predictions(Model<float>&, const std::vector<SentencePair>&, int64_t);
template std::vector<std::vector<bool>> word_predictions(Model<double>&, const std::vector<SentencePair>&, int64_t);
template std::vector<ValueNormRow> value_norm_report(Model<float>&, const SentencePair&, const Vocabulary*);
template std::vector<ValueNormRow> value_norm_report(Model<double>&, const SentencePair&, const Vocabulary*);

}  // namespace walign
