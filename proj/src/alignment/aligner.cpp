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

#include "walign/alignment/aligner.hpp"

#include "walign/util/error.hpp"

namespace walign {

template <typename T>
std::vector<ScoreMatrix> attention_matrices(const ForwardResult<T>& result, const AttentionView& view) {
  const int n = static_cast<int>(result.cross.size());
  const int layer = view.layer < 0 ? view.layer + n : view.layer;
  if (layer < 0 || layer >= n || !result.cross[static_cast<size_t>(layer)].valid()) {
    throw ContractError("decoder layer " + std::to_string(view.layer) + " has no cross-attention");
  }
  const Tensor<T>& w = result.cross[static_cast<size_t>(layer)].value();
  const int64_t B = w.dim(0), H = w.dim(1), Lt = w.dim(2), Lk = w.dim(3);
  const int64_t leak = result.leaky ? 1 : 0;
  if (view.head >= H) throw ContractError("head " + std::to_string(view.head) + " out of range");
  std::vector<ScoreMatrix> out;
  for (int64_t b = 0; b < B; ++b) {
    std::vector<int64_t> rows, cols;
    for (int64_t i = 0; i < Lt; ++i) {
      if (!result.target_pad[static_cast<size_t>(b * Lt + i)]) rows.push_back(i);
    }
    if (leak && view.keep_leaky) cols.push_back(0);
    for (int64_t j = 0; j < result.src_len; ++j) {
      if (!result.source_pad[static_cast<size_t>(b * result.src_len + j)]) cols.push_back(j + leak);
    }
    ScoreMatrix m(static_cast<int64_t>(rows.size()), static_cast<int64_t>(cols.size()));
    m.tag = "layer-" + std::to_string(layer);
    const int64_t h0 = view.head < 0 ? 0 : view.head;
    const int64_t h1 = view.head < 0 ? H : view.head + 1;
    for (size_t r = 0; r < rows.size(); ++r) {
      for (size_t c = 0; c < cols.size(); ++c) {
        double s = 0;
        for (int64_t h = h0; h < h1; ++h) s += w[((b * H + h) * Lt + rows[r]) * Lk + cols[c]];
        m.at(static_cast<int64_t>(r), static_cast<int64_t>(c)) = s / static_cast<double>(h1 - h0);
      }
    }
    out.push_back(std::move(m));
  }
  return out;
}

AlignMethod parse_align_method(const std::string& name) {
  if (name == "fused") return AlignMethod::kFused;
  if (name == "argmax") return AlignMethod::kArgmax;
  if (name == "shift") return AlignMethod::kShift;
  throw ConfigError("unknown alignment method '" + name + "' (fused, argmax, shift)");
}

std::string align_method_name(AlignMethod m) {
  switch (m) {
    case AlignMethod::kFused:
      return "fused";
    case AlignMethod::kArgmax:
      return "argmax";
    case AlignMethod::kShift:
      return "shift";
  }
  return "?";
}

Symmetrize parse_symmetrize(const std::string& name) {
  if (name == "none") return Symmetrize::kNone;
  if (name == "gdf" || name == "grow-diag-final") return Symmetrize::kGrowDiagFinal;
  throw ConfigError("unknown symmetrization '" + name + "' (none, gdf)");
}

std::string symmetrize_name(Symmetrize s) { return s == Symmetrize::kNone ? "none" : "gdf"; }

Aligner::Aligner(Model<float>& xy, Model<float>* yx, const AlignOptions& options, const Vocabulary* vocab)
    : xy_(xy), yx_(yx), options_(options), vocab_(vocab) {
  const bool xy_vanilla = xy.config().variant == Variant::kVanillaNmt;
  const bool yx_vanilla = yx && yx->config().variant == Variant::kVanillaNmt;
  switch (options_.method) {
    case AlignMethod::kFused:
      if (!yx) throw ConfigError("fused extraction needs both directional models");
      if (xy_vanilla || yx_vanilla) throw ConfigError("fused extraction needs mask-align models");
      if (!(options_.theta > 0 && options_.theta < 1)) throw ConfigError("theta must lie in (0, 1)");
      if (options_.symmetrize != Symmetrize::kNone) throw ConfigError("fused extraction is already bidirectional");
      break;
    case AlignMethod::kArgmax:
      break;
    case AlignMethod::kShift:
      if (!xy_vanilla || (yx && !yx_vanilla)) throw ConfigError("shift extraction needs vanilla models");
      break;
  }
  if (options_.symmetrize == Symmetrize::kGrowDiagFinal && !yx) {
    throw ConfigError("grow-diag-final needs both directional models");
  }
  if (options_.drop_end_punct && !vocab_) throw ConfigError("end-punctuation removal needs the vocabulary");
}

ScoreMatrix Aligner::directional(const ScoreMatrix& attention, bool vanilla) const {
  if (!vanilla) return attention;
  const ScoreMatrix rows = options_.method == AlignMethod::kShift ? shift_extract(attention) : output_rows(attention);
  return drop_last_columns(rows);  // source EOS
}

AlignmentSet Aligner::extract_pair(const SentencePair& pair, const ScoreMatrix& w_xy_in,
                                   const ScoreMatrix* w_yx_in) const {
  ScoreMatrix w_xy = w_xy_in;
  ScoreMatrix w_yx = w_yx_in ? *w_yx_in : ScoreMatrix();
  int32_t punct = -1;
  if (options_.drop_end_punct && !pair.src.empty() && is_end_punctuation(vocab_->token(pair.src.back()))) {
    punct = static_cast<int32_t>(pair.src.size()) - 1;
    std::vector<std::string> tokens;
    for (int32_t id : pair.src) tokens.push_back(vocab_->token(id));
    w_xy = drop_end_punctuation(w_xy, tokens);
    if (w_yx_in) w_yx = drop_end_punctuation(w_yx.transposed(), tokens).transposed();
  }
  AlignmentSet links;
  if (options_.method == AlignMethod::kFused) {
    links = threshold_extract(fuse_bidirectional(w_xy, w_yx), options_.theta);
  } else {
    links = argmax_extract(w_xy);
    if (options_.symmetrize == Symmetrize::kGrowDiagFinal) {
      AlignmentSet backward;
      for (const Link& l : argmax_extract(w_yx)) backward.insert({l.tgt, l.src});
      if (punct >= 0) {
        std::erase_if(links, [&](const Link& l) { return l.src == punct; });
        std::erase_if(backward, [&](const Link& l) { return l.src == punct; });
      }
      links = grow_diag_final(links, backward);
    }
  }
  if (punct >= 0) std::erase_if(links, [&](const Link& l) { return l.src == punct; });
  return links;
}

std::vector<PairAlignment> Aligner::align(const std::vector<SentencePair>& pairs) {
  const bool xy_vanilla = xy_.config().variant == Variant::kVanillaNmt;
  const bool need_yx = options_.method == AlignMethod::kFused || options_.symmetrize == Symmetrize::kGrowDiagFinal;
  const bool yx_vanilla = need_yx && yx_->config().variant == Variant::kVanillaNmt;
  std::vector<PairAlignment> out(pairs.size());
  std::vector<SentencePair> eligible;
  std::vector<size_t> origin;
  for (size_t k = 0; k < pairs.size(); ++k) {
    const SentencePair& p = pairs[k];
    const bool ok = !p.src.empty() && !p.tgt.empty() && (xy_vanilla || p.tgt.size() >= 2) &&
                    (!need_yx || yx_vanilla || p.src.size() >= 2);
    if (!ok) {
      out[k].skipped = true;
      continue;
    }
    eligible.push_back(p);
    origin.push_back(k);
  }
  if (eligible.empty()) return out;
  for (const Batch& batch : make_batches(eligible, options_.max_tokens)) {
    const AttentionView view{options_.layer, -1, false};
    Tape<float> tape;
    const std::vector<ScoreMatrix> a_xy = attention_matrices(xy_.forward(tape, batch), view);
    std::vector<ScoreMatrix> a_yx;
    if (need_yx) {
      Tape<float> t2;
      a_yx = attention_matrices(yx_->forward(t2, reversed(batch)), view);
    }
    for (int64_t b = 0; b < batch.size; ++b) {
      const size_t e = static_cast<size_t>(batch.index[static_cast<size_t>(b)]);
      const SentencePair& pair = eligible[e];
      const ScoreMatrix w_xy = directional(a_xy[static_cast<size_t>(b)], xy_vanilla);
      ScoreMatrix w_yx;
      if (need_yx) w_yx = directional(a_yx[static_cast<size_t>(b)], yx_vanilla);
      PairAlignment& r = out[origin[e]];
      r.subword = extract_pair(pair, w_xy, need_yx ? &w_yx : nullptr);
      r.word = project_to_words(r.subword, pair.src_sub_to_word, pair.tgt_sub_to_word);
    }
  }
  return out;
}

template std::vector<ScoreMatrix> attention_matrices(const ForwardResult<float>&, const AttentionView&);
template std::vector<ScoreMatrix> attention_matrices(const ForwardResult<double>&, const AttentionView&);

}  // namespace walign
