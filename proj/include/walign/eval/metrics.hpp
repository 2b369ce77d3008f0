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

#include "json.hpp"
#include "walign/data/pharaoh.hpp"

namespace walign {

struct AlignmentScore {
  int64_t hyp = 0;           // |A|
  int64_t sure = 0;          // |S|
  int64_t hyp_sure = 0;      // |A ∩ S|
  int64_t hyp_possible = 0;  // |A ∩ P|
  int64_t sentences = 0;
  int64_t empty_sure = 0;    // sentences scored without sure links
  double aer = 0;
  double precision = 1;
  double recall = 1;

  // Recomputes the ratios from the counts. AER is 0 when |A| + |S| = 0.
  void finalize();
};

AlignmentScore score(const AlignmentSet& hyp, const GoldAlignment& gold);
// Micro average: counts are summed before the ratios. Throws ContractError
// on a length mismatch.
AlignmentScore corpus_score(const std::vector<AlignmentSet>& hyps, const std::vector<GoldAlignment>& golds);
// Mean of per-sentence AER.
double macro_aer(const std::vector<AlignmentSet>& hyps, const std::vector<GoldAlignment>& golds);

// Target words split by prediction and alignment correctness. A word is
// predicted correctly if any of its subwords is, and aligned correctly if
// one of its hypothesis links is a possible gold link. Only target words
// with a gold link are counted.
struct Breakdown {
  int64_t cpca = 0;
  int64_t cpwa = 0;
  int64_t wpca = 0;
  int64_t wpwa = 0;

  int64_t total() const { return cpca + cpwa + wpca + wpwa; }
  Breakdown& operator+=(const Breakdown& other);
};

// `word_correct[i]` is the prediction verdict for target word i.
Breakdown breakdown(const std::vector<bool>& word_correct, const AlignmentSet& word_links, const GoldAlignment& gold);

// Links pointing at or beyond the given word counts; used to catch index
// base mismatches.
int64_t out_of_range_links(const AlignmentSet& links, int64_t src_words, int64_t tgt_words);

nlohmann::json score_json(const AlignmentScore& s, const Breakdown* b = nullptr);
std::string score_text(const AlignmentScore& s, const Breakdown* b = nullptr);

}  // namespace walign
