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
#include <vector>

#include "walign/alignment/extract.hpp"
#include "walign/data/corpus.hpp"
#include "walign/data/vocab.hpp"
#include "walign/model/model.hpp"

namespace walign {

struct AttentionView {
  int layer = -1;           // decoder layer; negative counts from the end
  int head = -1;            // -1: mean over heads
  bool keep_leaky = false;  // keep the leaky column as column 0
};

// Per-sentence cross-attention from a batched forward, cropped to unpadded
// rows and columns. Vanilla results keep the EOS column and one row per
// decoder input (I + 1 rows).
template <typename T>
std::vector<ScoreMatrix> attention_matrices(const ForwardResult<T>& result, const AttentionView& view = {});

enum class AlignMethod { kFused, kArgmax, kShift };
enum class Symmetrize { kNone, kGrowDiagFinal };

AlignMethod parse_align_method(const std::string& name);
std::string align_method_name(AlignMethod m);
Symmetrize parse_symmetrize(const std::string& name);
std::string symmetrize_name(Symmetrize s);

struct AlignOptions {
  AlignMethod method = AlignMethod::kFused;
  double theta = 0.2;
  int layer = -1;
  Symmetrize symmetrize = Symmetrize::kNone;
  bool drop_end_punct = false;
  int64_t max_tokens = 4000;
};

struct PairAlignment {
  AlignmentSet subword;
  AlignmentSet word;
  bool skipped = false;  // too short for the model; no links
};

// Runs one or both directional models over a corpus and extracts links.
// kFused needs both models (mask-align); kArgmax with kGrowDiagFinal needs
// both; kShift needs vanilla models. `vocab` is only needed for
// drop_end_punct.
class Aligner {
 public:
  Aligner(Model<float>& xy, Model<float>* yx, const AlignOptions& options, const Vocabulary* vocab = nullptr);

  std::vector<PairAlignment> align(const std::vector<SentencePair>& pairs);

 private:
  ScoreMatrix directional(const ScoreMatrix& attention, bool vanilla) const;
  AlignmentSet extract_pair(const SentencePair& pair, const ScoreMatrix& w_xy, const ScoreMatrix* w_yx) const;

  Model<float>& xy_;
  Model<float>* yx_;
  AlignOptions options_;
  const Vocabulary* vocab_;
};

}  // namespace walign
