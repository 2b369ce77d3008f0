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

#include "walign/model/model.hpp"

#include <cmath>

#include "walign/data/vocab.hpp"
#include "walign/numerics/ops.hpp"
#include "walign/util/error.hpp"

namespace walign {

namespace {

// masked[b, q, k] = pad[b, k]
Mask key_pad_mask(const std::vector<uint8_t>& pad, int64_t batch, int64_t lq, int64_t lk) {
  Mask m({batch, lq, lk});
  for (int64_t b = 0; b < batch; ++b) {
    for (int64_t q = 0; q < lq; ++q) {
      for (int64_t k = 0; k < lk; ++k) m[(b * lq + q) * lk + k] = pad[static_cast<size_t>(b * lk + k)];
    }
  }
  return m;
}

}  // namespace

template <typename T>
Tensor<T> sinusoid_positions(int64_t len, int64_t d) {
  Tensor<T> pe({len, d});
  for (int64_t pos = 0; pos < len; ++pos) {
    for (int64_t i = 0; i < d; i += 2) {
      const double angle = static_cast<double>(pos) / std::pow(10000.0, static_cast<double>(i) / d);
      pe[pos * d + i] = T(std::sin(angle));
      if (i + 1 < d) pe[pos * d + i + 1] = T(std::cos(angle));
    }
  }
  return pe;
}

template <typename T>
Var<T> source_attention(const ForwardResult<T>& result, int layer) {
  const int n = static_cast<int>(result.cross.size());
  if (layer < 0) layer += n;
  if (layer < 0 || layer >= n || !result.cross[static_cast<size_t>(layer)].valid()) {
    throw ContractError("decoder layer " + std::to_string(layer) + " has no cross-attention");
  }
  Var<T> avg = ops::mean_axis(result.cross[static_cast<size_t>(layer)], 1);
  if (!result.leaky) return avg;
  return ops::slice_last(avg, 1, avg.dim(-1));
}

template <typename T>
Model<T>::Model(const ModelConfig& config, uint64_t seed) : config_(config), init_rng_(seed) {
  config_.validate();
  const int64_t d = config_.d_model;
  const double embed_std = 1.0 / std::sqrt(static_cast<double>(d));
  src_embed_ = add_normal("src_embed", {config_.vocab_size, d}, embed_std);
  tgt_embed_ = add_normal("tgt_embed", {config_.vocab_size, d}, embed_std);
  out_proj_ = config_.share_decoder_embeddings ? tgt_embed_
                                               : add_normal("out_proj", {config_.vocab_size, d}, embed_std);
  for (int l = 0; l < config_.encoder_layers; ++l) {
    const std::string p = "enc." + std::to_string(l) + ".";
    EncoderLayer layer;
    layer.ln_attn = add_norm(p + "ln_attn");
    layer.attn = add_attention(p + "attn");
    layer.ln_ffn = add_norm(p + "ln_ffn");
    layer.ffn = add_ffn(p + "ffn");
    encoder_.push_back(layer);
  }
  enc_final_ = add_norm("enc.ln_final");
  for (int l = 0; l < config_.decoder_layers; ++l) {
    const std::string p = "dec." + std::to_string(l) + ".";
    DecoderLayer layer;
    layer.ln_self = add_norm(p + "ln_self");
    if (config_.variant == Variant::kMaskAlign) layer.ln_kv = add_norm(p + "ln_kv");
    layer.self = add_attention(p + "self");
    layer.has_cross = config_.has_cross(l);
    if (layer.has_cross) {
      layer.ln_cross = add_norm(p + "ln_cross");
      layer.cross = add_attention(p + "cross");
    }
    layer.ln_ffn = add_norm(p + "ln_ffn");
    layer.ffn = add_ffn(p + "ffn");
    decoder_.push_back(layer);
  }
  dec_final_ = add_norm("dec.ln_final");
  if (config_.leaky) {
    k_null_ = add_normal("k_null", {d}, embed_std);
    v_null_ = add_normal("v_null", {d}, embed_std);
  }
}

template <typename T>
Parameter<T>* Model<T>::add(const std::string& name, Tensor<T> value) {
  params_.emplace_back(name, std::move(value));
  return &params_.back();
}

template <typename T>
Parameter<T>* Model<T>::add_matrix(const std::string& name, int64_t rows, int64_t cols) {
  const double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
  std::uniform_real_distribution<double> dist(-limit, limit);
  Tensor<T> w({rows, cols});
  for (T& v : w.storage()) v = T(dist(init_rng_));
  return add(name, std::move(w));
}

template <typename T>
Parameter<T>* Model<T>::add_normal(const std::string& name, Shape shape, double stddev) {
  std::normal_distribution<double> dist(0.0, stddev);
  Tensor<T> w(std::move(shape));
  for (T& v : w.storage()) v = T(dist(init_rng_));
  return add(name, std::move(w));
}

template <typename T>
typename Model<T>::Norm Model<T>::add_norm(const std::string& prefix) {
  const int64_t d = config_.d_model;
  return Norm{add(prefix + ".gain", Tensor<T>({d}, T(1))), add(prefix + ".bias", Tensor<T>({d}))};
}

template <typename T>
typename Model<T>::Attention Model<T>::add_attention(const std::string& prefix) {
  const int64_t d = config_.d_model;
  Attention a;
  a.wq = add_matrix(prefix + ".wq", d, d);
  a.bq = add(prefix + ".bq", Tensor<T>({d}));
  a.wk = add_matrix(prefix + ".wk", d, d);
  a.bk = add(prefix + ".bk", Tensor<T>({d}));
  a.wv = add_matrix(prefix + ".wv", d, d);
  a.bv = add(prefix + ".bv", Tensor<T>({d}));
  a.wo = add_matrix(prefix + ".wo", d, d);
  a.bo = add(prefix + ".bo", Tensor<T>({d}));
  return a;
}

template <typename T>
typename Model<T>::Ffn Model<T>::add_ffn(const std::string& prefix) {
  const int64_t d = config_.d_model, f = config_.d_ffn;
  Ffn out;
  out.w1 = add_matrix(prefix + ".w1", d, f);
  out.b1 = add(prefix + ".b1", Tensor<T>({f}));
  out.w2 = add_matrix(prefix + ".w2", f, d);
  out.b2 = add(prefix + ".b2", Tensor<T>({d}));
  return out;
}

template <typename T>
std::vector<Parameter<T>*> Model<T>::parameters() {
  std::vector<Parameter<T>*> out;
  for (auto& p : params_) out.push_back(&p);
  return out;
}

template <typename T>
Parameter<T>* Model<T>::find(const std::string& name) {
  for (auto& p : params_) {
    if (p.name == name) return &p;
  }
  return nullptr;
}

template <typename T>
Parameter<T>& Model<T>::param(const std::string& name) {
  Parameter<T>* p = find(name);
  if (!p) throw ContractError("model has no parameter '" + name + "'");
  return *p;
}

template <typename T>
int64_t Model<T>::parameter_count() const {
  int64_t n = 0;
  for (const auto& p : params_) n += p.value.size();
  return n;
}

template <typename T>
Var<T> Model<T>::linear(Tape<T>& tape, const Var<T>& x, Parameter<T>* w, Parameter<T>* b) {
  return ops::add(ops::matmul(x, tape.leaf(*w)), tape.leaf(*b));
}

template <typename T>
Var<T> Model<T>::norm(Tape<T>& tape, const Var<T>& x, const Norm& n) {
  return ops::layer_norm(x, tape.leaf(*n.gain), tape.leaf(*n.bias));
}

template <typename T>
Var<T> Model<T>::ffn(Tape<T>& tape, const Var<T>& x, const Ffn& f, std::mt19937_64* rng) {
  Var<T> hidden = ops::relu(linear(tape, x, f.w1, f.b1));
  hidden = ops::dropout(hidden, config_.dropout, rng);
  return linear(tape, hidden, f.w2, f.b2);
}

template <typename T>
typename Model<T>::AttentionOut Model<T>::attend(Tape<T>& tape, const Attention& a, const Var<T>& q_in,
                                                 const Var<T>& kv_in, const Mask& mask, bool leaky) {
  Var<T> q = linear(tape, q_in, a.wq, a.bq);
  Var<T> k = linear(tape, kv_in, a.wk, a.bk);
  Var<T> v = linear(tape, kv_in, a.wv, a.bv);
  if (leaky) {
    k = ops::prepend_row(k, tape.leaf(*k_null_));
    v = ops::prepend_row(v, tape.leaf(*v_null_));
  }
  const T scale = T(1.0 / std::sqrt(static_cast<double>(config_.d_model / config_.heads)));
  Var<T> weights = ops::softmax_rows(ops::head_scores(q, k, config_.heads, scale), &mask);
  Var<T> ctx = ops::head_mix(weights, v);
  return AttentionOut{linear(tape, ctx, a.wo, a.bo), weights, v.value()};
}

template <typename T>
Var<T> Model<T>::embed(Tape<T>& tape, Parameter<T>* table, const std::vector<int32_t>& ids, int64_t batch,
                       int64_t len) {
  const int64_t d = config_.d_model;
  Var<T> e = ops::embedding(tape.leaf(*table), std::span<const int32_t>(ids), Shape{batch, len});
  e = ops::scale(e, T(std::sqrt(static_cast<double>(d))));
  return ops::add(e, tape.constant(sinusoid_positions<T>(len, d)));
}

template <typename T>
ForwardResult<T> Model<T>::forward(Tape<T>& tape, const Batch& batch, const ForwardOptions& options) {
  const int64_t B = batch.size;
  const int64_t d = config_.d_model;
  const bool vanilla = config_.variant == Variant::kVanillaNmt;
  std::mt19937_64* rng = options.dropout_rng;
  const double p_drop = config_.dropout;

  ForwardResult<T> r;
  r.batch = B;
  r.leaky = config_.leaky;

  // Source ids; the vanilla variant appends EOS right after the last real token.
  std::vector<int32_t> src_ids;
  int64_t Ls = batch.src_len;
  if (vanilla) {
    Ls = batch.src_len + 1;
    src_ids.assign(static_cast<size_t>(B * Ls), Vocabulary::kPad);
    r.source_pad.assign(static_cast<size_t>(B * Ls), 1);
    for (int64_t b = 0; b < B; ++b) {
      int64_t j = 0;
      for (; j < batch.src_len && !batch.src_pad[static_cast<size_t>(b * batch.src_len + j)]; ++j) {
        src_ids[static_cast<size_t>(b * Ls + j)] = batch.src[static_cast<size_t>(b * batch.src_len + j)];
        r.source_pad[static_cast<size_t>(b * Ls + j)] = 0;
      }
      src_ids[static_cast<size_t>(b * Ls + j)] = Vocabulary::kEos;
      r.source_pad[static_cast<size_t>(b * Ls + j)] = 0;
    }
  } else {
    src_ids = batch.src;
    r.source_pad = batch.src_pad;
  }
  r.src_len = Ls;

  // Encoder.
  Var<T> x = ops::dropout(embed(tape, src_embed_, src_ids, B, Ls), p_drop, rng);
  const Mask enc_mask = key_pad_mask(r.source_pad, B, Ls, Ls);
  for (const auto& layer : encoder_) {
    Var<T> n = norm(tape, x, layer.ln_attn);
    AttentionOut a = attend(tape, layer.attn, n, n, enc_mask, false);
    r.encoder_self.push_back(a.weights);
    x = ops::add(x, ops::dropout(a.out, p_drop, rng));
    x = ops::add(x, ops::dropout(ffn(tape, norm(tape, x, layer.ln_ffn), layer.ffn, rng), p_drop, rng));
  }
  Var<T> enc = norm(tape, x, enc_final_);
  if (options.zero_encoder) enc = tape.constant(Tensor<T>(enc.shape()));
  r.encoder_out = enc;

  // Decoder inputs and prediction targets.
  int64_t Lt = batch.tgt_len;
  std::vector<int32_t> dec_ids;
  std::vector<uint8_t> dec_pad;
  if (vanilla) {
    Lt = batch.tgt_len + 1;
    dec_ids.assign(static_cast<size_t>(B * Lt), Vocabulary::kPad);
    dec_pad.assign(static_cast<size_t>(B * Lt), 1);
    r.targets.assign(static_cast<size_t>(B * Lt), Vocabulary::kPad);
    r.target_pad.assign(static_cast<size_t>(B * Lt), 1);
    for (int64_t b = 0; b < B; ++b) {
      dec_ids[static_cast<size_t>(b * Lt)] = Vocabulary::kBos;
      dec_pad[static_cast<size_t>(b * Lt)] = 0;
      int64_t i = 0;
      for (; i < batch.tgt_len && !batch.tgt_pad[static_cast<size_t>(b * batch.tgt_len + i)]; ++i) {
        const int32_t tok = batch.tgt[static_cast<size_t>(b * batch.tgt_len + i)];
        dec_ids[static_cast<size_t>(b * Lt + i + 1)] = tok;
        dec_pad[static_cast<size_t>(b * Lt + i + 1)] = 0;
        r.targets[static_cast<size_t>(b * Lt + i)] = tok;
        r.target_pad[static_cast<size_t>(b * Lt + i)] = 0;
      }
      r.targets[static_cast<size_t>(b * Lt + i)] = Vocabulary::kEos;
      r.target_pad[static_cast<size_t>(b * Lt + i)] = 0;
    }
  } else {
    for (int64_t b = 0; b < B; ++b) {
      int64_t len = 0;
      for (int64_t i = 0; i < Lt; ++i) len += !batch.tgt_pad[static_cast<size_t>(b * Lt + i)];
      if (len < 2) {
        throw ContractError("masked prediction needs at least two target tokens; batch row " +
                            std::to_string(b) + " has " + std::to_string(len));
      }
    }
    dec_ids = batch.tgt;
    dec_pad = batch.tgt_pad;
    r.targets = batch.tgt;
    r.target_pad = batch.tgt_pad;
  }
  r.tgt_len = Lt;

  Mask self_mask = key_pad_mask(dec_pad, B, Lt, Lt);
  for (int64_t b = 0; b < B; ++b) {
    for (int64_t q = 0; q < Lt; ++q) {
      for (int64_t k = 0; k < Lt; ++k) {
        // Static-KV: a position never sees its own token. Vanilla: causal.
        const bool hide = vanilla ? k > q : k == q;
        if (hide) self_mask[(b * Lt + q) * Lt + k] = 1;
      }
    }
  }
  const int64_t leak = config_.leaky ? 1 : 0;
  const int64_t Lk = Ls + leak;
  Mask cross_mask({B, Lt, Lk});
  for (int64_t b = 0; b < B; ++b) {
    for (int64_t q = 0; q < Lt; ++q) {
      uint8_t* row = &cross_mask.masked[static_cast<size_t>((b * Lt + q) * Lk)];
      if (leak) row[0] = options.mask_leaky ? 1 : 0;
      for (int64_t k = 0; k < Ls; ++k) row[k + leak] = r.source_pad[static_cast<size_t>(b * Ls + k)];
    }
  }

  Var<T> h;  // query stream
  Var<T> kv;  // static key/value stream (mask-align only)
  if (vanilla) {
    h = ops::dropout(embed(tape, tgt_embed_, dec_ids, B, Lt), p_drop, rng);
  } else {
    kv = ops::dropout(embed(tape, tgt_embed_, dec_ids, B, Lt), p_drop, rng);
    const Tensor<T> pos = sinusoid_positions<T>(Lt, d);
    Tensor<T> h0({B, Lt, d});
    for (int64_t b = 0; b < B; ++b) std::copy(pos.data(), pos.data() + pos.size(), h0.data() + b * Lt * d);
    h = tape.constant(std::move(h0));
  }

  r.cross.assign(decoder_.size(), Var<T>());
  for (size_t l = 0; l < decoder_.size(); ++l) {
    const DecoderLayer& layer = decoder_[l];
    Var<T> q = norm(tape, h, layer.ln_self);
    Var<T> keys = vanilla ? q : norm(tape, kv, layer.ln_kv);
    AttentionOut s = attend(tape, layer.self, q, keys, self_mask, false);
    r.decoder_self.push_back(s.weights);
    h = ops::add(h, ops::dropout(s.out, p_drop, rng));
    if (layer.has_cross) {
      if (l + 1 == decoder_.size()) r.pre_cross = h;
      AttentionOut c = attend(tape, layer.cross, norm(tape, h, layer.ln_cross), enc, cross_mask, config_.leaky);
      r.cross[l] = c.weights;
      h = ops::add(h, ops::dropout(c.out, p_drop, rng));
      // Value norms, per head then averaged: [B, Lk].
      const int64_t heads = config_.heads, dh = d / heads;
      r.value_norms = Tensor<T>({B, Lk});
      for (int64_t b = 0; b < B; ++b) {
        for (int64_t k = 0; k < Lk; ++k) {
          const T* v = c.values.data() + (b * Lk + k) * d;
          double total = 0;
          for (int64_t hh = 0; hh < heads; ++hh) {
            double sq = 0;
            for (int64_t e = 0; e < dh; ++e) sq += static_cast<double>(v[hh * dh + e]) * v[hh * dh + e];
            total += std::sqrt(sq);
          }
          r.value_norms[b * Lk + k] = T(total / heads);
        }
      }
    }
    h = ops::add(h, ops::dropout(ffn(tape, norm(tape, h, layer.ln_ffn), layer.ffn, rng), p_drop, rng));
  }
  h = norm(tape, h, dec_final_);
  r.logits = ops::matmul(h, tape.leaf(*out_proj_), true);
  return r;
}

template Tensor<float> sinusoid_positions<float>(int64_t, int64_t);
template Tensor<double> sinusoid_positions<double>(int64_t, int64_t);
template Var<float> source_attention(const ForwardResult<float>&, int);
template Var<double> source_attention(const ForwardResult<double>&, int);
template class Model<float>;
template class Model<double>;

}  // namespace walign
