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
#include <span>
#include <string>

#include "walign/data/corpus.hpp"
#include "walign/model/model.hpp"
#include "walign/numerics/tape.hpp"

namespace walign {

// Squared difference between w_xy [B, I, J] and the transpose of
// w_yx [B, J, I], averaged over unpadded cells of each sentence, then over
// sentences. Per-head tensors [B, H, I, J] / [B, H, J, I] are accepted too.
// tgt_pad has B*I entries, src_pad B*J.
template <typename T>
Var<T> agreement_loss(const Var<T>& w_xy, const Var<T>& w_yx, std::span<const uint8_t> tgt_pad,
                      std::span<const uint8_t> src_pad);

// Mean row entropy of attention rows after smoothing: each unpadded row of
// w [B, I, J] becomes (w_ij + lambda) / sum_j (w_ij + lambda) over unpadded
// columns. Rows are averaged per sentence, then sentences are averaged.
template <typename T>
Var<T> entropy_loss(const Var<T>& w, double lambda, std::span<const uint8_t> tgt_pad,
                    std::span<const uint8_t> src_pad);

struct LossWeights {
  double alpha = 5.0;   // agreement
  double beta = 1.0;    // entropy
  double lambda = 0.05;
  bool per_head = false;  // agreement on every head instead of the head average
};

struct LossBreakdown {
  double total = 0;
  double nll_xy = 0;
  double nll_yx = 0;
  double agreement = 0;
  double entropy_xy = 0;
  double entropy_yx = 0;

  std::string str() const;
};

template <typename T>
struct JointLoss {
  Var<T> total;
  LossBreakdown parts;
  ForwardResult<T> xy;
  ForwardResult<T> yx;
};

// L = nll_xy + nll_yx + alpha * agreement + beta * (entropy_xy + entropy_yx).
// `yx` runs on the reversed batch. Attention terms are skipped (and reported
// as 0) when their weight is 0; vanilla models only support alpha = beta = 0.
template <typename T>
JointLoss<T> joint_loss(Tape<T>& tape, Model<T>& xy, Model<T>& yx, const Batch& batch, const LossWeights& weights,
                        std::mt19937_64* dropout_rng = nullptr);

}  // namespace walign
