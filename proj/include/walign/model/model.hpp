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

// One directional alignment network. The mask-align variant predicts every
// target token from the source and all other target tokens in a single
// parallel pass; the vanilla variant is an ordinary causal translation model
// used as the attention baseline.

#pragma once

#include <cstdint>
#include <deque>
#include <random>
#include <string>
#include <vector>

#include "walign/data/corpus.hpp"
#include "walign/model/config.hpp"
#include "walign/numerics/tape.hpp"

namespace walign {

struct ForwardOptions {
  std::mt19937_64* dropout_rng = nullptr;  // null disables dropout
  // Test hooks.
  bool mask_leaky = false;    // exclude the leaky column from the cross-attention softmax
  bool zero_encoder = false;  // replace encoder outputs by zeros
};

template <typename T>
struct ForwardResult {
  Var<T> logits;        // [B, Lt, V]
  Var<T> encoder_out;   // [B, Ls, d]
  std::vector<Var<T>> encoder_self;  // per encoder layer, [B, H, Ls, Ls]
  std::vector<Var<T>> decoder_self;  // per decoder layer, [B, H, Lt, Lt]
  std::vector<Var<T>> cross;         // per decoder layer, [B, H, Lt, Lk]; invalid without cross-attention
  Var<T> pre_cross;     // query stream entering the last layer's cross-attention
  Tensor<T> value_norms;  // [B, Lk], last cross layer, per-head norms averaged over heads

  // Targets for the NLL, B*Lt entries. For the vanilla variant these are the
  // reference tokens followed by EOS; the decoder input is BOS + reference.
  std::vector<int32_t> targets;
  std::vector<uint8_t> target_pad;
  std::vector<uint8_t> source_pad;  // B*Ls; includes the appended EOS for the vanilla variant
  int64_t batch = 0;
  int64_t src_len = 0;  // Ls
  int64_t tgt_len = 0;  // Lt
  bool leaky = false;   // column 0 of every cross tensor is the leaky position
};

// Head-averaged cross-attention of `layer` (default: last decoder layer) with
// the leaky column removed, not renormalised: [B, Lt, Ls].
template <typename T>
Var<T> source_attention(const ForwardResult<T>& result, int layer = -1);

// Sinusoidal position table [len, d].
template <typename T>
Tensor<T> sinusoid_positions(int64_t len, int64_t d);

template <typename T>
class Model {
 public:
  Model(const ModelConfig& config, uint64_t seed);
  Model(const Model&) = delete;
  Model& operator=(const Model&) = delete;

  const ModelConfig& config() const { return config_; }

  std::vector<Parameter<T>*> parameters();
  // Throws ContractError for unknown names.
  Parameter<T>& param(const std::string& name);
  Parameter<T>* find(const std::string& name);
  int64_t parameter_count() const;

  // Runs the network on `batch` (source -> target). Mask-align rows need at
  // least two target tokens; shorter rows raise ContractError.
  ForwardResult<T> forward(Tape<T>& tape, const Batch& batch, const ForwardOptions& options = {});

 private:
  struct Norm {
    Parameter<T>* gain = nullptr;
    Parameter<T>* bias = nullptr;
  };
  struct Attention {
    Parameter<T>*wq = nullptr, *bq = nullptr, *wk = nullptr, *bk = nullptr;
    Parameter<T>*wv = nullptr, *bv = nullptr, *wo = nullptr, *bo = nullptr;
  };
  struct Ffn {
    Parameter<T>*w1 = nullptr, *b1 = nullptr, *w2 = nullptr, *b2 = nullptr;
  };
  struct EncoderLayer {
    Norm ln_attn, ln_ffn;
    Attention attn;
    Ffn ffn;
  };
  struct DecoderLayer {
    Norm ln_self, ln_kv, ln_cross, ln_ffn;
    Attention self, cross;
    Ffn ffn;
    bool has_cross = false;
  };
  struct AttentionOut {
    Var<T> out;
    Var<T> weights;
    Tensor<T> values;  // projected values incl. the leaky row, [B, Lk, d]
  };

  Parameter<T>* add(const std::string& name, Tensor<T> value);
  Parameter<T>* add_matrix(const std::string& name, int64_t rows, int64_t cols);
  Parameter<T>* add_normal(const std::string& name, Shape shape, double stddev);
  Norm add_norm(const std::string& prefix);
  Attention add_attention(const std::string& prefix);
  Ffn add_ffn(const std::string& prefix);

  Var<T> linear(Tape<T>& tape, const Var<T>& x, Parameter<T>* w, Parameter<T>* b);
  Var<T> norm(Tape<T>& tape, const Var<T>& x, const Norm& n);
  Var<T> ffn(Tape<T>& tape, const Var<T>& x, const Ffn& f, std::mt19937_64* rng);
  AttentionOut attend(Tape<T>& tape, const Attention& a, const Var<T>& q_in, const Var<T>& kv_in,
                      const Mask& mask, bool leaky);
  Var<T> embed(Tape<T>& tape, Parameter<T>* table, const std::vector<int32_t>& ids, int64_t batch,
               int64_t len);

  ModelConfig config_;
  std::mt19937_64 init_rng_;
  std::deque<Parameter<T>> params_;

  Parameter<T>* src_embed_ = nullptr;
  Parameter<T>* tgt_embed_ = nullptr;
  Parameter<T>* out_proj_ = nullptr;  // equals tgt_embed_ when shared
  Parameter<T>* k_null_ = nullptr;
  Parameter<T>* v_null_ = nullptr;
  std::vector<EncoderLayer> encoder_;
  std::vector<DecoderLayer> decoder_;
  Norm enc_final_, dec_final_;
};

}  // namespace walign
