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

#include "walign/eval/metrics.hpp"

#include <cstdio>
#include <sstream>

#include "walign/util/error.hpp"

namespace walign {

void AlignmentScore::finalize() {
  precision = hyp == 0 ? 1.0 : static_cast<double>(hyp_possible) / static_cast<double>(hyp);
  recall = sure == 0 ? 1.0 : static_cast<double>(hyp_sure) / static_cast<double>(sure);
  aer = hyp + sure == 0 ? 0.0 : 1.0 - static_cast<double>(hyp_sure + hyp_possible) / static_cast<double>(hyp + sure);
}

AlignmentScore score(const AlignmentSet& hyp, const GoldAlignment& gold) {
  AlignmentScore s;
  s.sentences = 1;
  s.hyp = static_cast<int64_t>(hyp.size());
  s.sure = static_cast<int64_t>(gold.sure.size());
  s.empty_sure = gold.sure.empty() ? 1 : 0;
  for (const Link& l : hyp) {
    s.hyp_sure += gold.sure.count(l) ? 1 : 0;
    s.hyp_possible += (gold.possible.count(l) || gold.sure.count(l)) ? 1 : 0;
  }
  s.finalize();
  return s;
}

AlignmentScore corpus_score(const std::vector<AlignmentSet>& hyps, const std::vector<GoldAlignment>& golds) {
  if (hyps.size() != golds.size()) {
    throw ContractError("corpus_score: " + std::to_string(hyps.size()) + " hypotheses for " +
                        std::to_string(golds.size()) + " gold sentences");
  }
  AlignmentScore total;
  for (size_t k = 0; k < hyps.size(); ++k) {
    const AlignmentScore s = score(hyps[k], golds[k]);
    total.hyp += s.hyp;
    total.sure += s.sure;
    total.hyp_sure += s.hyp_sure;
    total.hyp_possible += s.hyp_possible;
    total.empty_sure += s.empty_sure;
    ++total.sentences;
  }
  total.finalize();
  return total;
}

double macro_aer(const std::vector<AlignmentSet>& hyps, const std::vector<GoldAlignment>& golds) {
  if (hyps.size() != golds.size()) throw ContractError("macro_aer: hypothesis and gold counts differ");
  if (hyps.empty()) return 0.0;
  double sum = 0;
  for (size_t k = 0; k < hyps.size(); ++k) sum += score(hyps[k], golds[k]).aer;
  return sum / static_cast<double>(hyps.size());
}

Breakdown& Breakdown::operator+=(const Breakdown& other) {
  cpca += other.cpca;
  cpwa += other.cpwa;
  wpca += other.wpca;
  wpwa += other.wpwa;
  return *this;
}

Breakdown breakdown(const std::vector<bool>& word_correct, const AlignmentSet& word_links, const GoldAlignment& gold) {
  std::vector<uint8_t> covered(word_correct.size(), 0), aligned(word_correct.size(), 0);
  auto in_range = [&](int32_t i) { return i >= 0 && static_cast<size_t>(i) < word_correct.size(); };
  for (const AlignmentSet* g : {&gold.sure, &gold.possible}) {
    for (const Link& l : *g) {
      if (in_range(l.tgt)) covered[static_cast<size_t>(l.tgt)] = 1;
    }
  }
  for (const Link& l : word_links) {
    if (in_range(l.tgt) && (gold.possible.count(l) || gold.sure.count(l))) aligned[static_cast<size_t>(l.tgt)] = 1;
  }
  Breakdown b;
  for (size_t i = 0; i < word_correct.size(); ++i) {
    if (!covered[i]) continue;
    if (word_correct[i]) {
      ++(aligned[i] ? b.cpca : b.cpwa);
    } else {
      ++(aligned[i] ? b.wpca : b.wpwa);
    }
  }
  return b;
}

int64_t out_of_range_links(const AlignmentSet& links, int64_t src_words, int64_t tgt_words) {
  int64_t n = 0;
  for (const Link& l : links) n += (l.src < 0 || l.tgt < 0 || l.src >= src_words || l.tgt >= tgt_words) ? 1 : 0;
  return n;
}

nlohmann::json score_json(const AlignmentScore& s, const Breakdown* b) {
  nlohmann::json j = {{"aer", s.aer},
                      {"precision", s.precision},
                      {"recall", s.recall},
                      {"sentences", s.sentences},
                      {"hyp_links", s.hyp},
                      {"sure_links", s.sure},
                      {"hyp_and_sure", s.hyp_sure},
                      {"hyp_and_possible", s.hyp_possible},
                      {"sentences_without_sure_links", s.empty_sure}};
  if (b) j["breakdown"] = {{"cPcA", b->cpca}, {"cPwA", b->cpwa}, {"wPcA", b->wpca}, {"wPwA", b->wpwa}};
  return j;
}

std::string score_text(const AlignmentScore& s, const Breakdown* b) {
  std::ostringstream os;
  char line[128];
  std::snprintf(line, sizeof(line), "AER        %.4f\nprecision  %.4f\nrecall     %.4f\n", s.aer, s.precision,
                s.recall);
  os << line << "sentences  " << s.sentences << "\n"
     << "|A| " << s.hyp << "  |S| " << s.sure << "  |A&S| " << s.hyp_sure << "  |A&P| " << s.hyp_possible << "\n";
  if (s.empty_sure > 0) os << "warning: " << s.empty_sure << " sentence(s) have no sure links; recall treats them as 1\n";
  if (b) {
    const double n = b->total() > 0 ? static_cast<double>(b->total()) : 1.0;
    auto pct = [&](int64_t v) {
      char buf[32];
      std::snprintf(buf, sizeof(buf), "%6.2f%%", 100.0 * static_cast<double>(v) / n);
      return std::string(buf);
    };
    os << "\n            correct-align  wrong-align\n"
       << "correct-pred  " << pct(b->cpca) << "     " << pct(b->cpwa) << "\n"
       << "wrong-pred    " << pct(b->wpca) << "     " << pct(b->wpwa) << "\n"
       << "words " << b->total() << " (cPcA " << b->cpca << ", cPwA " << b->cpwa << ", wPcA " << b->wpca
       << ", wPwA " << b->wpwa << ")\n";
  }
  return os.str();
}

}  // namespace walign
