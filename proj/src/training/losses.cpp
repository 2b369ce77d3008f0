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

#include "walign/training/losses.hpp"

#include <cmath>
#include <sstream>

#include "walign/numerics/ops.hpp"
#include "walign/util/error.hpp"

namespace walign {

template <typename T>
Var<T> agreement_loss(const Var<T>& w_xy, const Var<T>& w_yx, std::span<const uint8_t> tgt_pad,
                      std::span<const uint8_t> src_pad) {
  const Shape& a = w_xy.shape();
  const Shape& b = w_yx.shape();
  const bool ok = (a.size() == 3 || a.size() == 4) && a.size() == b.size() && a[0] == b[0] &&
                  (a.size() == 3 || a[1] == b[1]) && a[a.size() - 2] == b[b.size() - 1] &&
                  a[a.size() - 1] == b[b.size() - 2];
  if (!ok) {
    throw ContractError("agreement_loss: " + shape_str(a) + " does not transpose onto " + shape_str(b));
  }
  const int64_t B = a[0], H = a.size() == 4 ? a[1] : 1, I = a[a.size() - 2], J = a.back();
  if (static_cast<int64_t>(tgt_pad.size()) != B * I || static_cast<int64_t>(src_pad.size()) != B * J) {
    throw ContractError("agreement_loss: padding masks do not match " + shape_str(a));
  }
  Mask mask(a);
  for (int64_t s = 0; s < B; ++s) {
    for (int64_t h = 0; h < H; ++h) {
      for (int64_t i = 0; i < I; ++i) {
        for (int64_t j = 0; j < J; ++j) {
          mask[((s * H + h) * I + i) * J + j] =
              tgt_pad[static_cast<size_t>(s * I + i)] | src_pad[static_cast<size_t>(s * J + j)];
        }
      }
    }
  }
  return ops::masked_mse(w_xy, ops::transpose_last2(w_yx), mask);
}

template <typename T>
Var<T> entropy_loss(const Var<T>& w, double lambda, std::span<const uint8_t> tgt_pad,
                    std::span<const uint8_t> src_pad) {
  if (w.shape().size() != 3) throw ContractError("entropy_loss expects [B, I, J], got " + shape_str(w.shape()));
  if (!(lambda > 0)) throw ContractError("entropy_loss needs lambda > 0");
  const int64_t B = w.dim(0), I = w.dim(1), J = w.dim(2);
  if (static_cast<int64_t>(tgt_pad.size()) != B * I || static_cast<int64_t>(src_pad.size()) != B * J) {
    throw ContractError("entropy_loss: padding masks do not match " + shape_str(w.shape()));
  }
  const T* W = w.value().data();
  // Per-row smoothed distribution p, its entropy, and normaliser, kept for backward.
  Tensor<T> p({B, I, J});
  std::vector<T> entropy(static_cast<size_t>(B * I), T(0));
  std::vector<T> norm(static_cast<size_t>(B * I), T(0));
  std::vector<T> row_weight(static_cast<size_t>(B * I), T(0));  // d loss / d H_row
  std::vector<int64_t> live_rows(static_cast<size_t>(B), 0);
  int64_t live_sentences = 0;
  for (int64_t s = 0; s < B; ++s) {
    for (int64_t i = 0; i < I; ++i) live_rows[static_cast<size_t>(s)] += !tgt_pad[static_cast<size_t>(s * I + i)];
    live_sentences += live_rows[static_cast<size_t>(s)] > 0;
  }
  double loss = 0;
  for (int64_t s = 0; s < B; ++s) {
    const int64_t rows = live_rows[static_cast<size_t>(s)];
    if (rows == 0) continue;
    double sentence = 0;
    for (int64_t i = 0; i < I; ++i) {
      const size_t r = static_cast<size_t>(s * I + i);
      if (tgt_pad[r]) continue;
      double z = 0;
      for (int64_t j = 0; j < J; ++j) {
        if (!src_pad[static_cast<size_t>(s * J + j)]) z += static_cast<double>(W[r * J + j]) + lambda;
      }
      double h = 0;
      for (int64_t j = 0; j < J; ++j) {
        if (src_pad[static_cast<size_t>(s * J + j)]) continue;
        const double pj = (static_cast<double>(W[r * J + j]) + lambda) / z;
        p[static_cast<int64_t>(r) * J + j] = T(pj);
        h -= pj * std::log(pj);
      }
      entropy[r] = T(h);
      norm[r] = T(z);
      row_weight[r] = T(1.0 / (static_cast<double>(rows) * live_sentences));
      sentence += h;
    }
    loss += sentence / rows;
  }
  if (live_sentences > 0) loss /= live_sentences;

  Tape<T>* tape = w.tape();
  return tape->record(
      Tensor<T>::scalar(T(loss)), {w},
      [tape, id = w.id(), B, I, J, p = std::move(p), entropy = std::move(entropy), norm = std::move(norm),
       row_weight = std::move(row_weight),
       src = std::vector<uint8_t>(src_pad.begin(), src_pad.end())](const Tensor<T>& g, const Tensor<T>&) {
        Tensor<T>* gw = tape->grad_sink(id);
        if (!gw) return;
        const T upstream = g.item();
        // dH/dw_j = (-log p_j - H) / Z for unpadded columns.
        for (int64_t r = 0; r < B * I; ++r) {
          const T c = upstream * row_weight[static_cast<size_t>(r)];
          if (c == T(0)) continue;
          const int64_t s = r / I;
          for (int64_t j = 0; j < J; ++j) {
            if (src[static_cast<size_t>(s * J + j)]) continue;
            (*gw)[r * J + j] += c * (-std::log(p[r * J + j]) - entropy[static_cast<size_t>(r)]) / norm[static_cast<size_t>(r)];
          }
        }
      });
}

std::string LossBreakdown::str() const {
  std::ostringstream os;
  os << "total=" << total << " nll_xy=" << nll_xy << " nll_yx=" << nll_yx << " agreement=" << agreement
     << " entropy_xy=" << entropy_xy << " entropy_yx=" << entropy_yx;
  return os.str();
}

template <typename T>
JointLoss<T> joint_loss(Tape<T>& tape, Model<T>& xy, Model<T>& yx, const Batch& batch, const LossWeights& weights,
                        std::mt19937_64* dropout_rng) {
  const bool attention_terms = weights.alpha != 0 || weights.beta != 0;
  if (attention_terms &&
      (xy.config().variant == Variant::kVanillaNmt || yx.config().variant == Variant::kVanillaNmt)) {
    throw ConfigError("agreement and entropy terms need mask-align models; set alpha = beta = 0");
  }
  ForwardOptions opts;
  opts.dropout_rng = dropout_rng;
  JointLoss<T> out;
  const Batch rev = reversed(batch);
  out.xy = xy.forward(tape, batch, opts);
  out.yx = yx.forward(tape, rev, opts);

  Var<T> nll_xy = ops::cross_entropy(out.xy.logits, std::span<const int32_t>(out.xy.targets),
                                     std::span<const uint8_t>(out.xy.target_pad));
  Var<T> nll_yx = ops::cross_entropy(out.yx.logits, std::span<const int32_t>(out.yx.targets),
                                     std::span<const uint8_t>(out.yx.target_pad));
  Var<T> total = ops::add(nll_xy, nll_yx);
  out.parts.nll_xy = nll_xy.value().item();
  out.parts.nll_yx = nll_yx.value().item();

  if (attention_terms) {
    Var<T> w_xy = source_attention(out.xy);
    Var<T> w_yx = source_attention(out.yx);
    if (weights.alpha != 0) {
      Var<T> agree;
      if (weights.per_head) {
        const Var<T>& c_xy = out.xy.cross.back();
        const Var<T>& c_yx = out.yx.cross.back();
        const int64_t leak = out.xy.leaky ? 1 : 0;
        agree = agreement_loss(ops::slice_last(c_xy, leak, c_xy.dim(-1)),
                               ops::slice_last(c_yx, out.yx.leaky ? 1 : 0, c_yx.dim(-1)),
                               std::span<const uint8_t>(batch.tgt_pad), std::span<const uint8_t>(batch.src_pad));
      } else {
        agree = agreement_loss(w_xy, w_yx, std::span<const uint8_t>(batch.tgt_pad),
                               std::span<const uint8_t>(batch.src_pad));
      }
      out.parts.agreement = agree.value().item();
      total = ops::add(total, ops::scale(agree, T(weights.alpha)));
    }
    if (weights.beta != 0) {
      Var<T> e_xy = entropy_loss(w_xy, weights.lambda, std::span<const uint8_t>(batch.tgt_pad),
                                 std::span<const uint8_t>(batch.src_pad));
      Var<T> e_yx = entropy_loss(w_yx, weights.lambda, std::span<const uint8_t>(rev.tgt_pad),
                                 std::span<const uint8_t>(rev.src_pad));
      out.parts.entropy_xy = e_xy.value().item();
      out.parts.entropy_yx = e_yx.value().item();
      total = ops::add(total, ops::scale(ops::add(e_xy, e_yx), T(weights.beta)));
    }
  }
  out.total = total;
  out.parts.total = total.value().item();
  return out;
}

template Var<float> agreement_loss(const Var<float>&, const Var<float>&, std::span<const uint8_t>,
                                   std::span<const uint8_t>);
template Var<double> agreement_loss(const Var<double>&, const Var<double>&, std::span<const uint8_t>,
                                    std::span<const uint8_t>);
template Var<float> entropy_loss(const Var<float>&, double, std::span<const uint8_t>, std::span<const uint8_t>);
template Var<double> entropy_loss(const Var<double>&, double, std::span<const uint8_t>, std::span<const uint8_t>);
template JointLoss<float> joint_loss(Tape<float>&, Model<float>&, Model<float>&, const Batch&, const LossWeights&,
                                     std::mt19937_64*);
template JointLoss<double> joint_loss(Tape<double>&, Model<double>&, Model<double>&, const Batch&,
                                      const LossWeights&, std::mt19937_64*);

}  // namespace walign
