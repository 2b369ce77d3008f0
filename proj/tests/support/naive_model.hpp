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

// Loop-level reference for the mask-align network on one sentence pair. It
// reads parameter values by name and recomputes everything in double with
// plain loops: no tape, no ops, no BLAS. Target position i is predicted by a
// separate pass whose self-attention memory simply does not contain
// position i.

#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "walign/model/model.hpp"

namespace walign::testing {

template <typename T>
class NaiveMaskAlign {
 public:
  using Vec = std::vector<double>;

  explicit NaiveMaskAlign(Model<T>& model) : model_(model), cfg_(model.config()) {}

  // Logits for target position i, computed without position i in the memory.
  Vec logits_at(const std::vector<int32_t>& src, const std::vector<int32_t>& tgt, size_t i) {
    const int d = cfg_.d_model;
    const std::vector<Vec> enc = encode(src);
    std::vector<Vec> emb;
    for (size_t m = 0; m < tgt.size(); ++m) emb.push_back(embed("tgt_embed", tgt[m], m));

    Vec h = position(i);
    for (int l = 0; l < cfg_.decoder_layers; ++l) {
      const std::string p = "dec." + std::to_string(l) + ".";
      std::vector<Vec> memory;
      for (size_t m = 0; m < tgt.size(); ++m) {
        if (m != i) memory.push_back(norm(p + "ln_kv", emb[m]));
      }
      add_to(h, attention(p + "self", norm(p + "ln_self", h), memory, false));
      if (cfg_.has_cross(l)) add_to(h, attention(p + "cross", norm(p + "ln_cross", h), enc, cfg_.leaky));
      add_to(h, ffn(p + "ffn", norm(p + "ln_ffn", h)));
    }
    h = norm("dec.ln_final", h);
    const std::string out = cfg_.share_decoder_embeddings ? "tgt_embed" : "out_proj";
    const auto& table = value(out);
    Vec logits(static_cast<size_t>(cfg_.vocab_size));
    for (int v = 0; v < cfg_.vocab_size; ++v) {
      double s = 0;
      for (int c = 0; c < d; ++c) s += h[c] * table[v * d + c];
      logits[v] = s;
    }
    return logits;
  }

 private:
  const Tensor<T>& value(const std::string& name) { return model_.param(name).value; }

  Vec position(size_t pos) const {
    const int d = cfg_.d_model;
    Vec p(d);
    for (int k = 0; k < d; ++k) {
      const int pair = k / 2 * 2;
      const double angle = static_cast<double>(pos) / std::pow(10000.0, static_cast<double>(pair) / d);
      p[k] = (k % 2 == 0) ? std::sin(angle) : std::cos(angle);
    }
    return p;
  }

  Vec embed(const std::string& table_name, int32_t id, size_t pos) {
    const int d = cfg_.d_model;
    const auto& table = value(table_name);
    Vec e = position(pos);
    for (int k = 0; k < d; ++k) e[k] += std::sqrt(static_cast<double>(d)) * table[id * d + k];
    return e;
  }

  Vec norm(const std::string& prefix, const Vec& x) {
    const auto& g = value(prefix + ".gain");
    const auto& b = value(prefix + ".bias");
    double mean = 0, var = 0;
    for (double v : x) mean += v;
    mean /= x.size();
    for (double v : x) var += (v - mean) * (v - mean);
    var /= x.size();
    Vec y(x.size());
    for (size_t k = 0; k < x.size(); ++k) y[k] = (x[k] - mean) / std::sqrt(var + 1e-5) * g[k] + b[k];
    return y;
  }

  Vec affine(const std::string& w_name, const std::string& b_name, const Vec& x) {
    const auto& w = value(w_name);
    const auto& b = value(b_name);
    const int64_t in = w.dim(0), out = w.dim(1);
    Vec y(out);
    for (int64_t c = 0; c < out; ++c) {
      double s = b[c];
      for (int64_t r = 0; r < in; ++r) s += x[r] * w[r * out + c];
      y[c] = s;
    }
    return y;
  }

  Vec attention(const std::string& prefix, const Vec& x, const std::vector<Vec>& memory, bool leaky) {
    const int d = cfg_.d_model, heads = cfg_.heads, dh = d / heads;
    const Vec q = affine(prefix + ".wq", prefix + ".bq", x);
    std::vector<Vec> keys, values;
    if (leaky) {
      keys.push_back(as_vec(value("k_null")));
      values.push_back(as_vec(value("v_null")));
    }
    for (const Vec& m : memory) {
      keys.push_back(affine(prefix + ".wk", prefix + ".bk", m));
      values.push_back(affine(prefix + ".wv", prefix + ".bv", m));
    }
    Vec ctx(d, 0.0);
    for (int hh = 0; hh < heads; ++hh) {
      Vec s(keys.size());
      double top = -1e300;
      for (size_t m = 0; m < keys.size(); ++m) {
        double dot = 0;
        for (int c = hh * dh; c < (hh + 1) * dh; ++c) dot += q[c] * keys[m][c];
        s[m] = dot / std::sqrt(static_cast<double>(dh));
        top = std::max(top, s[m]);
      }
      double z = 0;
      for (double& v : s) z += (v = std::exp(v - top));
      for (size_t m = 0; m < keys.size(); ++m) {
        for (int c = hh * dh; c < (hh + 1) * dh; ++c) ctx[c] += s[m] / z * values[m][c];
      }
    }
    return affine(prefix + ".wo", prefix + ".bo", ctx);
  }

  Vec ffn(const std::string& prefix, const Vec& x) {
    Vec hidden = affine(prefix + ".w1", prefix + ".b1", x);
    for (double& v : hidden) v = std::max(v, 0.0);
    return affine(prefix + ".w2", prefix + ".b2", hidden);
  }

  std::vector<Vec> encode(const std::vector<int32_t>& src) {
    std::vector<Vec> x;
    for (size_t j = 0; j < src.size(); ++j) x.push_back(embed("src_embed", src[j], j));
    for (int l = 0; l < cfg_.encoder_layers; ++l) {
      const std::string p = "enc." + std::to_string(l) + ".";
      std::vector<Vec> normed;
      for (const Vec& v : x) normed.push_back(norm(p + "ln_attn", v));
      for (size_t j = 0; j < x.size(); ++j) add_to(x[j], attention(p + "attn", normed[j], normed, false));
      for (Vec& v : x) add_to(v, ffn(p + "ffn", norm(p + "ln_ffn", v)));
    }
    for (Vec& v : x) v = norm("enc.ln_final", v);
    return x;
  }

  static Vec as_vec(const Tensor<T>& t) { return Vec(t.storage().begin(), t.storage().end()); }

  static void add_to(Vec& a, const Vec& b) {
    for (size_t k = 0; k < a.size(); ++k) a[k] += b[k];
  }

  Model<T>& model_;
  ModelConfig cfg_;
};

}  // namespace walign::testing
