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

#include "walign/numerics/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "blas.hpp"

namespace walign::ops {
namespace {

std::string pair_str(const char* op, const Shape& a, const Shape& b) {
  return std::string(op) + ": incompatible shapes " + shape_str(a) + " and " + shape_str(b);
}

bool is_suffix(const Shape& full, const Shape& suffix) {
  if (suffix.size() > full.size()) return false;
  return std::equal(suffix.rbegin(), suffix.rend(), full.rbegin());
}

// Maps a row of an attention-shaped tensor onto the matching mask row.
struct MaskIndexer {
  const Mask* mask = nullptr;
  bool broadcast_heads = false;
  int64_t heads = 1;
  int64_t inner_rows = 1;

  int64_t row(int64_t r) const {
    if (!broadcast_heads) return r;
    return (r / (heads * inner_rows)) * inner_rows + r % inner_rows;
  }
};

MaskIndexer make_indexer(const Shape& x, const Mask* mask) {
  MaskIndexer ix;
  ix.mask = mask;
  if (mask == nullptr) return ix;
  if (mask->shape == x) return ix;
  bool ok = x.size() >= 3 && mask->shape.size() + 1 == x.size() && mask->shape[0] == x[0] &&
            std::equal(mask->shape.begin() + 1, mask->shape.end(), x.begin() + 2);
  if (!ok) throw DimensionError(pair_str("softmax_rows mask", x, mask->shape));
  ix.broadcast_heads = true;
  ix.heads = x[1];
  ix.inner_rows = 1;
  for (size_t i = 2; i + 1 < x.size(); ++i) ix.inner_rows *= x[i];
  return ix;
}

}  // namespace

template <typename T>
Var<T> matmul(const Var<T>& a, const Var<T>& b, bool transpose_b) {
  const Tensor<T>& A = a.value();
  const Tensor<T>& B = b.value();
  Tape<T>* tape = a.tape();
  if (A.rank() < 2 || B.rank() < 2) throw DimensionError(pair_str("matmul", A.shape(), B.shape()));
  const bool tb = transpose_b;

  if (B.rank() == 2) {
    const int64_t k = A.dim(-1);
    const int64_t rows = A.size() / std::max<int64_t>(k, 1);
    const int64_t bk = tb ? B.dim(1) : B.dim(0);
    const int64_t n = tb ? B.dim(0) : B.dim(1);
    if (bk != k) throw DimensionError(pair_str("matmul", A.shape(), B.shape()));
    Shape out_shape = A.shape();
    out_shape.back() = n;
    Tensor<T> C(out_shape);
    const int64_t ldb = tb ? k : n;
    blas::gemm(false, tb, rows, n, k, T(1), A.data(), k, B.data(), ldb, T(0), C.data(), n);
    return tape->record(std::move(C), {a, b},
                        [tape, ia = a.id(), ib = b.id(), rows, n, k, tb, ldb](const Tensor<T>& g, const Tensor<T>&) {
                          const Tensor<T>& A = tape->value(ia);
                          const Tensor<T>& B = tape->value(ib);
                          if (Tensor<T>* ga = tape->grad_sink(ia)) {
                            blas::gemm(false, !tb, rows, k, n, T(1), g.data(), n, B.data(), ldb,
                                       T(1), ga->data(), k);
                          }
                          if (Tensor<T>* gb = tape->grad_sink(ib)) {
                            if (!tb) {
                              blas::gemm(true, false, k, n, rows, T(1), A.data(), k, g.data(), n,
                                         T(1), gb->data(), n);
                            } else {
                              blas::gemm(true, false, n, k, rows, T(1), g.data(), n, A.data(), k,
                                         T(1), gb->data(), k);
                            }
                          }
                        });
  }

  if (A.rank() != 3 || B.rank() != 3 || A.dim(0) != B.dim(0)) {
    throw DimensionError(pair_str("matmul", A.shape(), B.shape()));
  }
  const int64_t batch = A.dim(0), m = A.dim(1), k = A.dim(2);
  const int64_t bk = tb ? B.dim(2) : B.dim(1);
  const int64_t n = tb ? B.dim(1) : B.dim(2);
  if (bk != k) throw DimensionError(pair_str("matmul", A.shape(), B.shape()));
  Tensor<T> C(Shape{batch, m, n});
  const int64_t ldb = tb ? k : n;
  for (int64_t i = 0; i < batch; ++i) {
    blas::gemm(false, tb, m, n, k, T(1), A.data() + i * m * k, k, B.data() + i * k * n, ldb, T(0),
               C.data() + i * m * n, n);
  }
  return tape->record(
      std::move(C), {a, b},
      [tape, ia = a.id(), ib = b.id(), batch, m, n, k, tb, ldb](const Tensor<T>& g, const Tensor<T>&) {
        const Tensor<T>& A = tape->value(ia);
        const Tensor<T>& B = tape->value(ib);
        Tensor<T>* ga = tape->grad_sink(ia);
        Tensor<T>* gb = tape->grad_sink(ib);
        for (int64_t i = 0; i < batch; ++i) {
          const T* gi = g.data() + i * m * n;
          if (ga) {
            blas::gemm(false, !tb, m, k, n, T(1), gi, n, B.data() + i * k * n, ldb, T(1),
                       ga->data() + i * m * k, k);
          }
          if (gb) {
            if (!tb) {
              blas::gemm(true, false, k, n, m, T(1), A.data() + i * m * k, k, gi, n, T(1),
                         gb->data() + i * k * n, n);
            } else {
              blas::gemm(true, false, n, k, m, T(1), gi, n, A.data() + i * m * k, k, T(1),
                         gb->data() + i * k * n, k);
            }
          }
        }
      });
}

template <typename T>
Var<T> add(const Var<T>& a, const Var<T>& b) {
  const Tensor<T>& A = a.value();
  const Tensor<T>& B = b.value();
  Tape<T>* tape = a.tape();
  if (!is_suffix(A.shape(), B.shape())) throw DimensionError(pair_str("add", A.shape(), B.shape()));
  const int64_t inner = std::max<int64_t>(B.size(), 1);
  const int64_t outer = A.size() / inner;
  Tensor<T> C = A;
  T* c = C.data();
  const T* bp = B.data();
  for (int64_t o = 0; o < outer; ++o) {
    T* row = c + o * inner;
    for (int64_t i = 0; i < inner; ++i) row[i] += bp[i];
  }
  return tape->record(std::move(C), {a, b},
                      [tape, ia = a.id(), ib = b.id(), outer, inner](const Tensor<T>& g, const Tensor<T>&) {
                        if (Tensor<T>* ga = tape->grad_sink(ia)) {
                          T* d = ga->data();
                          const T* s = g.data();
                          for (int64_t i = 0; i < g.size(); ++i) d[i] += s[i];
                        }
                        if (Tensor<T>* gb = tape->grad_sink(ib)) {
                          T* d = gb->data();
                          for (int64_t o = 0; o < outer; ++o) {
                            const T* s = g.data() + o * inner;
                            for (int64_t i = 0; i < inner; ++i) d[i] += s[i];
                          }
                        }
                      });
}

template <typename T>
Var<T> scale(const Var<T>& x, T factor) {
  Tape<T>* tape = x.tape();
  Tensor<T> out = x.value();
  for (T& v : out.storage()) v *= factor;
  return tape->record(std::move(out), {x}, [tape, ix = x.id(), factor](const Tensor<T>& g, const Tensor<T>&) {
    if (Tensor<T>* gx = tape->grad_sink(ix)) {
      T* d = gx->data();
      const T* s = g.data();
      for (int64_t i = 0; i < g.size(); ++i) d[i] += factor * s[i];
    }
  });
}

template <typename T>
Var<T> relu(const Var<T>& x) {
  Tape<T>* tape = x.tape();
  Tensor<T> out = x.value();
  for (T& v : out.storage()) v = v > T(0) ? v : T(0);
  return tape->record(std::move(out), {x}, [tape, ix = x.id()](const Tensor<T>& g, const Tensor<T>&) {
    if (Tensor<T>* gx = tape->grad_sink(ix)) {
      const T* xv = tape->value(ix).data();
      T* d = gx->data();
      const T* s = g.data();
      for (int64_t i = 0; i < g.size(); ++i) d[i] += xv[i] > T(0) ? s[i] : T(0);
    }
  });
}

template <typename T>
Var<T> dropout(const Var<T>& x, double rate, std::mt19937_64* rng) {
  if (rate <= 0.0 || rng == nullptr) return x;
  if (rate >= 1.0) throw ContractError("dropout rate must be below 1");
  Tape<T>* tape = x.tape();
  const T keep_scale = T(1.0 / (1.0 - rate));
  std::bernoulli_distribution drop(rate);
  Tensor<T> factors(x.shape());
  for (T& f : factors.storage()) f = drop(*rng) ? T(0) : keep_scale;
  Tensor<T> out = x.value();
  for (int64_t i = 0; i < out.size(); ++i) out[i] *= factors[i];
  return tape->record(std::move(out), {x},
                      [tape, ix = x.id(), factors = std::move(factors)](const Tensor<T>& g, const Tensor<T>&) {
                        if (Tensor<T>* gx = tape->grad_sink(ix)) {
                          for (int64_t i = 0; i < g.size(); ++i) (*gx)[i] += factors[i] * g[i];
                        }
                      });
}

template <typename T>
Var<T> softmax_rows(const Var<T>& x, const Mask* mask) {
  Tape<T>* tape = x.tape();
  const Tensor<T>& X = x.value();
  if (X.rank() < 1) throw DimensionError("softmax_rows: scalar input");
  const MaskIndexer ix = make_indexer(X.shape(), mask);
  const int64_t n = X.dim(-1);
  const int64_t rows = n == 0 ? 0 : X.size() / n;
  Tensor<T> Y(X.shape());
  for (int64_t r = 0; r < rows; ++r) {
    const T* xr = X.data() + r * n;
    T* yr = Y.data() + r * n;
    const uint8_t* mr = mask ? mask->masked.data() + ix.row(r) * n : nullptr;
    T mx = -std::numeric_limits<T>::infinity();
    bool any = false;
    for (int64_t j = 0; j < n; ++j) {
      if (mr && mr[j]) continue;
      any = true;
      mx = std::max(mx, xr[j]);
    }
    if (!any) {
      throw DegenerateRowError("softmax_rows: row " + std::to_string(r) + " is fully masked");
    }
    T total = 0;
    for (int64_t j = 0; j < n; ++j) {
      if (mr && mr[j]) {
        yr[j] = T(0);
        continue;
      }
      yr[j] = std::exp(xr[j] - mx);
      total += yr[j];
    }
    const T inv = T(1) / total;
    for (int64_t j = 0; j < n; ++j) yr[j] *= inv;
  }
  return tape->record(std::move(Y), {x},
                      [tape, id = x.id(), rows, n](const Tensor<T>& g, const Tensor<T>& y) {
                        Tensor<T>* gx = tape->grad_sink(id);
                        if (!gx) return;
                        for (int64_t r = 0; r < rows; ++r) {
                          const T* yr = y.data() + r * n;
                          const T* gr = g.data() + r * n;
                          T* dr = gx->data() + r * n;
                          T dot = 0;
                          for (int64_t j = 0; j < n; ++j) dot += yr[j] * gr[j];
                          for (int64_t j = 0; j < n; ++j) dr[j] += yr[j] * (gr[j] - dot);
                        }
                      });
}

template <typename T>
Var<T> layer_norm(const Var<T>& x, const Var<T>& gain, const Var<T>& bias) {
  Tape<T>* tape = x.tape();
  const Tensor<T>& X = x.value();
  const int64_t n = X.dim(-1);
  if (gain.value().shape() != Shape{n} || bias.value().shape() != Shape{n}) {
    throw DimensionError(pair_str("layer_norm", X.shape(), gain.value().shape()));
  }
  const int64_t rows = n == 0 ? 0 : X.size() / n;
  const T* gp = gain.value().data();
  const T* bp = bias.value().data();
  Tensor<T> Y(X.shape());
  Tensor<T> xhat(X.shape());
  std::vector<T> rstd(static_cast<size_t>(rows));
  for (int64_t r = 0; r < rows; ++r) {
    const T* xr = X.data() + r * n;
    T mean = 0;
    for (int64_t j = 0; j < n; ++j) mean += xr[j];
    mean /= T(n);
    T var = 0;
    for (int64_t j = 0; j < n; ++j) var += (xr[j] - mean) * (xr[j] - mean);
    var /= T(n);
    const T rs = T(1) / std::sqrt(var + T(kLayerNormEps));
    rstd[static_cast<size_t>(r)] = rs;
    T* hr = xhat.data() + r * n;
    T* yr = Y.data() + r * n;
    for (int64_t j = 0; j < n; ++j) {
      hr[j] = (xr[j] - mean) * rs;
      yr[j] = hr[j] * gp[j] + bp[j];
    }
  }
  return tape->record(
      std::move(Y), {x, gain, bias},
      [tape, ix = x.id(), ig = gain.id(), ib = bias.id(), rows, n, xhat = std::move(xhat),
       rstd = std::move(rstd)](const Tensor<T>& g, const Tensor<T>&) {
        Tensor<T>* gx = tape->grad_sink(ix);
        Tensor<T>* gg = tape->grad_sink(ig);
        Tensor<T>* gb = tape->grad_sink(ib);
        const T* gain_v = tape->value(ig).data();
        std::vector<T> dxhat(static_cast<size_t>(n));
        for (int64_t r = 0; r < rows; ++r) {
          const T* gr = g.data() + r * n;
          const T* hr = xhat.data() + r * n;
          if (gg) {
            T* d = gg->data();
            for (int64_t j = 0; j < n; ++j) d[j] += gr[j] * hr[j];
          }
          if (gb) {
            T* d = gb->data();
            for (int64_t j = 0; j < n; ++j) d[j] += gr[j];
          }
          if (gx) {
            T mean_d = 0, mean_dh = 0;
            for (int64_t j = 0; j < n; ++j) {
              dxhat[static_cast<size_t>(j)] = gr[j] * gain_v[j];
              mean_d += dxhat[static_cast<size_t>(j)];
              mean_dh += dxhat[static_cast<size_t>(j)] * hr[j];
            }
            mean_d /= T(n);
            mean_dh /= T(n);
            const T rs = rstd[static_cast<size_t>(r)];
            T* d = gx->data() + r * n;
            for (int64_t j = 0; j < n; ++j) {
              d[j] += rs * (dxhat[static_cast<size_t>(j)] - mean_d - hr[j] * mean_dh);
            }
          }
        }
      });
}

template <typename T>
Var<T> embedding(const Var<T>& table, std::span<const int32_t> ids, const Shape& index_shape) {
  Tape<T>* tape = table.tape();
  const Tensor<T>& E = table.value();
  if (E.rank() != 2) throw DimensionError("embedding: table must be 2-D, got " + shape_str(E.shape()));
  if (shape_size(index_shape) != static_cast<int64_t>(ids.size())) {
    throw DimensionError("embedding: index shape " + shape_str(index_shape) + " does not hold " +
                         std::to_string(ids.size()) + " ids");
  }
  const int64_t vocab = E.dim(0), d = E.dim(1);
  Shape out_shape = index_shape;
  out_shape.push_back(d);
  Tensor<T> out(out_shape);
  std::vector<int32_t> idv(ids.begin(), ids.end());
  for (size_t i = 0; i < idv.size(); ++i) {
    const int32_t id = idv[i];
    if (id < 0 || id >= vocab) {
      throw IndexError("embedding: id " + std::to_string(id) + " outside vocabulary of size " +
                       std::to_string(vocab));
    }
    std::copy_n(E.data() + id * d, d, out.data() + static_cast<int64_t>(i) * d);
  }
  return tape->record(std::move(out), {table},
                      [tape, it = table.id(), d, idv = std::move(idv)](const Tensor<T>& g,
                                                                       const Tensor<T>&) {
                        Tensor<T>* gt = tape->grad_sink(it);
                        if (!gt) return;
                        for (size_t i = 0; i < idv.size(); ++i) {
                          T* dst = gt->data() + idv[i] * d;
                          const T* src = g.data() + static_cast<int64_t>(i) * d;
                          for (int64_t j = 0; j < d; ++j) dst[j] += src[j];
                        }
                      });
}

template <typename T>
Var<T> cross_entropy(const Var<T>& logits, std::span<const int32_t> targets,
                     std::span<const uint8_t> pad_mask) {
  Tape<T>* tape = logits.tape();
  const Tensor<T>& X = logits.value();
  if (X.rank() != 2 && X.rank() != 3) {
    throw DimensionError("cross_entropy: logits must be [L, V] or [B, L, V], got " +
                         shape_str(X.shape()));
  }
  const int64_t vocab = X.dim(-1);
  const int64_t batch = X.rank() == 3 ? X.dim(0) : 1;
  const int64_t len = X.rank() == 3 ? X.dim(1) : X.dim(0);
  const int64_t positions = batch * len;
  if (static_cast<int64_t>(targets.size()) != positions ||
      static_cast<int64_t>(pad_mask.size()) != positions) {
    throw DimensionError("cross_entropy: " + std::to_string(targets.size()) + " targets and " +
                         std::to_string(pad_mask.size()) + " mask entries for logits " +
                         shape_str(X.shape()));
  }
  std::vector<T> weight(static_cast<size_t>(positions), T(0));
  int64_t live_sentences = 0;
  for (int64_t b = 0; b < batch; ++b) {
    int64_t count = 0;
    for (int64_t t = 0; t < len; ++t) count += pad_mask[static_cast<size_t>(b * len + t)] ? 0 : 1;
    if (count == 0) continue;
    ++live_sentences;
    for (int64_t t = 0; t < len; ++t) {
      if (!pad_mask[static_cast<size_t>(b * len + t)]) {
        weight[static_cast<size_t>(b * len + t)] = T(1) / T(count);
      }
    }
  }
  std::vector<int32_t> tgt(targets.begin(), targets.end());
  std::vector<T> lse(static_cast<size_t>(positions), T(0));
  T loss = 0;
  for (int64_t p = 0; p < positions; ++p) {
    if (weight[static_cast<size_t>(p)] == T(0)) continue;
    const int32_t y = tgt[static_cast<size_t>(p)];
    if (y < 0 || y >= vocab) {
      throw IndexError("cross_entropy: target id " + std::to_string(y) +
                       " outside vocabulary of size " + std::to_string(vocab));
    }
    const T* row = X.data() + p * vocab;
    T mx = *std::max_element(row, row + vocab);
    T total = 0;
    for (int64_t v = 0; v < vocab; ++v) total += std::exp(row[v] - mx);
    const T l = mx + std::log(total);
    lse[static_cast<size_t>(p)] = l;
    weight[static_cast<size_t>(p)] /= T(live_sentences);
    loss += weight[static_cast<size_t>(p)] * (l - row[y]);
  }
  return tape->record(
      Tensor<T>::scalar(loss), {logits},
      [tape, il = logits.id(), vocab, positions, weight = std::move(weight), lse = std::move(lse),
       tgt = std::move(tgt)](const Tensor<T>& g, const Tensor<T>&) {
        Tensor<T>* gl = tape->grad_sink(il);
        if (!gl) return;
        const Tensor<T>& X = tape->value(il);
        const T go = g[0];
        for (int64_t p = 0; p < positions; ++p) {
          const T w = weight[static_cast<size_t>(p)];
          if (w == T(0)) continue;
          const T* row = X.data() + p * vocab;
          T* d = gl->data() + p * vocab;
          const T l = lse[static_cast<size_t>(p)];
          for (int64_t v = 0; v < vocab; ++v) d[v] += go * w * std::exp(row[v] - l);
          d[tgt[static_cast<size_t>(p)]] -= go * w;
        }
      });
}

template <typename T>
Var<T> mse(const Var<T>& a, const Var<T>& b) {
  Tape<T>* tape = a.tape();
  const Tensor<T>& A = a.value();
  const Tensor<T>& B = b.value();
  if (A.shape() != B.shape()) throw DimensionError(pair_str("mse", A.shape(), B.shape()));
  const int64_t n = A.size();
  if (n == 0) throw ContractError("mse: empty tensors");
  T total = 0;
  for (int64_t i = 0; i < n; ++i) total += (A[i] - B[i]) * (A[i] - B[i]);
  return tape->record(Tensor<T>::scalar(total / T(n)), {a, b},
                      [tape, ia = a.id(), ib = b.id(), n](const Tensor<T>& g, const Tensor<T>&) {
                        const Tensor<T>& A = tape->value(ia);
                        const Tensor<T>& B = tape->value(ib);
                        const T c = T(2) * g[0] / T(n);
                        Tensor<T>* ga = tape->grad_sink(ia);
                        Tensor<T>* gb = tape->grad_sink(ib);
                        for (int64_t i = 0; i < n; ++i) {
                          const T diff = c * (A[i] - B[i]);
                          if (ga) (*ga)[i] += diff;
                          if (gb) (*gb)[i] -= diff;
                        }
                      });
}

template <typename T>
Var<T> masked_mse(const Var<T>& a, const Var<T>& b, const Mask& mask) {
  Tape<T>* tape = a.tape();
  const Tensor<T>& A = a.value();
  const Tensor<T>& B = b.value();
  if (A.shape() != B.shape()) throw DimensionError(pair_str("masked_mse", A.shape(), B.shape()));
  if (mask.shape != A.shape()) throw DimensionError(pair_str("masked_mse mask", A.shape(), mask.shape));
  if (A.rank() < 1) throw DimensionError("masked_mse: scalar input");
  const int64_t slices = A.dim(0);
  const int64_t cells = slices == 0 ? 0 : A.size() / slices;
  std::vector<T> weight(static_cast<size_t>(slices), T(0));
  int64_t live = 0;
  for (int64_t s = 0; s < slices; ++s) {
    int64_t count = 0;
    for (int64_t c = 0; c < cells; ++c) count += mask[s * cells + c] ? 0 : 1;
    if (count > 0) {
      weight[static_cast<size_t>(s)] = T(1) / T(count);
      ++live;
    }
  }
  T total = 0;
  for (int64_t s = 0; s < slices; ++s) {
    if (live == 0) break;
    weight[static_cast<size_t>(s)] /= T(live);
    T part = 0;
    for (int64_t c = 0; c < cells; ++c) {
      const int64_t i = s * cells + c;
      if (mask[i]) continue;
      part += (A[i] - B[i]) * (A[i] - B[i]);
    }
    total += weight[static_cast<size_t>(s)] * part;
  }
  return tape->record(
      Tensor<T>::scalar(total), {a, b},
      [tape, ia = a.id(), ib = b.id(), cells, slices, weight = std::move(weight),
       keep = mask.masked](const Tensor<T>& g, const Tensor<T>&) {
        const Tensor<T>& A = tape->value(ia);
        const Tensor<T>& B = tape->value(ib);
        Tensor<T>* ga = tape->grad_sink(ia);
        Tensor<T>* gb = tape->grad_sink(ib);
        for (int64_t s = 0; s < slices; ++s) {
          const T c = T(2) * g[0] * weight[static_cast<size_t>(s)];
          for (int64_t k = 0; k < cells; ++k) {
            const int64_t i = s * cells + k;
            if (keep[static_cast<size_t>(i)]) continue;
            const T diff = c * (A[i] - B[i]);
            if (ga) (*ga)[i] += diff;
            if (gb) (*gb)[i] -= diff;
          }
        }
      });
}

template <typename T>
Var<T> sum(const Var<T>& x) {
  Tape<T>* tape = x.tape();
  T total = 0;
  for (T v : x.value().storage()) total += v;
  return tape->record(Tensor<T>::scalar(total), {x},
                      [tape, ix = x.id()](const Tensor<T>& g, const Tensor<T>&) {
                        if (Tensor<T>* gx = tape->grad_sink(ix)) {
                          for (T& v : gx->storage()) v += g[0];
                        }
                      });
}

template <typename T>
Var<T> mean_axis(const Var<T>& x, int axis) {
  Tape<T>* tape = x.tape();
  const Tensor<T>& X = x.value();
  const int r = X.rank();
  const int ax = axis < 0 ? axis + r : axis;
  const int64_t extent = X.dim(ax);
  if (extent == 0) throw DimensionError("mean_axis: empty axis in " + shape_str(X.shape()));
  int64_t outer = 1, inner = 1;
  for (int i = 0; i < ax; ++i) outer *= X.shape()[static_cast<size_t>(i)];
  for (int i = ax + 1; i < r; ++i) inner *= X.shape()[static_cast<size_t>(i)];
  Shape out_shape = X.shape();
  out_shape.erase(out_shape.begin() + ax);
  Tensor<T> out(out_shape);
  const T inv = T(1) / T(extent);
  for (int64_t o = 0; o < outer; ++o) {
    T* dst = out.data() + o * inner;
    for (int64_t e = 0; e < extent; ++e) {
      const T* src = X.data() + (o * extent + e) * inner;
      for (int64_t i = 0; i < inner; ++i) dst[i] += src[i];
    }
    for (int64_t i = 0; i < inner; ++i) dst[i] *= inv;
  }
  return tape->record(std::move(out), {x},
                      [tape, ix = x.id(), outer, extent, inner, inv](const Tensor<T>& g,
                                                                     const Tensor<T>&) {
                        Tensor<T>* gx = tape->grad_sink(ix);
                        if (!gx) return;
                        for (int64_t o = 0; o < outer; ++o) {
                          const T* src = g.data() + o * inner;
                          for (int64_t e = 0; e < extent; ++e) {
                            T* dst = gx->data() + (o * extent + e) * inner;
                            for (int64_t i = 0; i < inner; ++i) dst[i] += inv * src[i];
                          }
                        }
                      });
}

template <typename T>
Var<T> slice_last(const Var<T>& x, int64_t begin, int64_t end) {
  Tape<T>* tape = x.tape();
  const Tensor<T>& X = x.value();
  const int64_t n = X.dim(-1);
  if (begin < 0 || end > n || begin > end) {
    throw DimensionError("slice_last: range [" + std::to_string(begin) + ", " +
                         std::to_string(end) + ") invalid for " + shape_str(X.shape()));
  }
  const int64_t w = end - begin;
  const int64_t rows = n == 0 ? 0 : X.size() / n;
  Shape out_shape = X.shape();
  out_shape.back() = w;
  Tensor<T> out(out_shape);
  for (int64_t r = 0; r < rows; ++r) std::copy_n(X.data() + r * n + begin, w, out.data() + r * w);
  return tape->record(std::move(out), {x},
                      [tape, ix = x.id(), rows, n, w, begin](const Tensor<T>& g, const Tensor<T>&) {
                        Tensor<T>* gx = tape->grad_sink(ix);
                        if (!gx) return;
                        for (int64_t r = 0; r < rows; ++r) {
                          T* dst = gx->data() + r * n + begin;
                          const T* src = g.data() + r * w;
                          for (int64_t j = 0; j < w; ++j) dst[j] += src[j];
                        }
                      });
}

template <typename T>
Var<T> transpose_last2(const Var<T>& x) {
  Tape<T>* tape = x.tape();
  const Tensor<T>& X = x.value();
  if (X.rank() < 2) throw DimensionError("transpose_last2: rank below 2 " + shape_str(X.shape()));
  const int64_t rows = X.dim(-2), cols = X.dim(-1);
  const int64_t mats = rows * cols == 0 ? 0 : X.size() / (rows * cols);
  Shape out_shape = X.shape();
  std::swap(out_shape[out_shape.size() - 1], out_shape[out_shape.size() - 2]);
  Tensor<T> out(out_shape);
  for (int64_t m = 0; m < mats; ++m) {
    const T* src = X.data() + m * rows * cols;
    T* dst = out.data() + m * rows * cols;
    for (int64_t i = 0; i < rows; ++i)
      for (int64_t j = 0; j < cols; ++j) dst[j * rows + i] = src[i * cols + j];
  }
  return tape->record(std::move(out), {x},
                      [tape, ix = x.id(), mats, rows, cols](const Tensor<T>& g, const Tensor<T>&) {
                        Tensor<T>* gx = tape->grad_sink(ix);
                        if (!gx) return;
                        for (int64_t m = 0; m < mats; ++m) {
                          const T* src = g.data() + m * rows * cols;
                          T* dst = gx->data() + m * rows * cols;
                          for (int64_t i = 0; i < rows; ++i)
                            for (int64_t j = 0; j < cols; ++j) dst[i * cols + j] += src[j * rows + i];
                        }
                      });
}

template <typename T>
Var<T> head_scores(const Var<T>& q, const Var<T>& k, int heads, T scale_factor) {
  Tape<T>* tape = q.tape();
  const Tensor<T>& Q = q.value();
  const Tensor<T>& K = k.value();
  if (Q.rank() != 3 || K.rank() != 3 || Q.dim(0) != K.dim(0) || Q.dim(2) != K.dim(2)) {
    throw DimensionError(pair_str("head_scores", Q.shape(), K.shape()));
  }
  const int64_t batch = Q.dim(0), lq = Q.dim(1), lk = K.dim(1), d = Q.dim(2);
  if (heads <= 0 || d % heads != 0) {
    throw DimensionError("head_scores: width " + std::to_string(d) + " not divisible into " +
                         std::to_string(heads) + " heads");
  }
  const int64_t h_count = heads, dh = d / heads;
  Tensor<T> S(Shape{batch, h_count, lq, lk});
  for (int64_t b = 0; b < batch; ++b) {
    for (int64_t h = 0; h < h_count; ++h) {
      for (int64_t i = 0; i < lq; ++i) {
        const T* qr = Q.data() + (b * lq + i) * d + h * dh;
        T* sr = S.data() + ((b * h_count + h) * lq + i) * lk;
        for (int64_t m = 0; m < lk; ++m) {
          const T* kr = K.data() + (b * lk + m) * d + h * dh;
          T acc = 0;
          for (int64_t c = 0; c < dh; ++c) acc += qr[c] * kr[c];
          sr[m] = acc * scale_factor;
        }
      }
    }
  }
  return tape->record(
      std::move(S), {q, k},
      [tape, iq = q.id(), ik = k.id(), batch, h_count, lq, lk, d, dh,
       scale_factor](const Tensor<T>& g, const Tensor<T>&) {
        const Tensor<T>& Q = tape->value(iq);
        const Tensor<T>& K = tape->value(ik);
        Tensor<T>* gq = tape->grad_sink(iq);
        Tensor<T>* gk = tape->grad_sink(ik);
        for (int64_t b = 0; b < batch; ++b) {
          for (int64_t h = 0; h < h_count; ++h) {
            for (int64_t i = 0; i < lq; ++i) {
              const T* gr = g.data() + ((b * h_count + h) * lq + i) * lk;
              const T* qr = Q.data() + (b * lq + i) * d + h * dh;
              T* dq = gq ? gq->data() + (b * lq + i) * d + h * dh : nullptr;
              for (int64_t m = 0; m < lk; ++m) {
                const T w = gr[m] * scale_factor;
                if (w == T(0)) continue;
                const T* kr = K.data() + (b * lk + m) * d + h * dh;
                if (dq) {
                  for (int64_t c = 0; c < dh; ++c) dq[c] += w * kr[c];
                }
                if (gk) {
                  T* dk = gk->data() + (b * lk + m) * d + h * dh;
                  for (int64_t c = 0; c < dh; ++c) dk[c] += w * qr[c];
                }
              }
            }
          }
        }
      });
}

template <typename T>
Var<T> head_mix(const Var<T>& p, const Var<T>& v) {
  Tape<T>* tape = p.tape();
  const Tensor<T>& P = p.value();
  const Tensor<T>& V = v.value();
  if (P.rank() != 4 || V.rank() != 3 || P.dim(0) != V.dim(0) || P.dim(3) != V.dim(1) ||
      V.dim(2) % P.dim(1) != 0) {
    throw DimensionError(pair_str("head_mix", P.shape(), V.shape()));
  }
  const int64_t batch = P.dim(0), h_count = P.dim(1), lq = P.dim(2), lk = P.dim(3), d = V.dim(2);
  const int64_t dh = d / h_count;
  Tensor<T> out(Shape{batch, lq, d});
  for (int64_t b = 0; b < batch; ++b) {
    for (int64_t h = 0; h < h_count; ++h) {
      for (int64_t i = 0; i < lq; ++i) {
        const T* pr = P.data() + ((b * h_count + h) * lq + i) * lk;
        T* orow = out.data() + (b * lq + i) * d + h * dh;
        for (int64_t m = 0; m < lk; ++m) {
          const T w = pr[m];
          if (w == T(0)) continue;
          const T* vr = V.data() + (b * lk + m) * d + h * dh;
          for (int64_t c = 0; c < dh; ++c) orow[c] += w * vr[c];
        }
      }
    }
  }
  return tape->record(
      std::move(out), {p, v},
      [tape, ip = p.id(), iv = v.id(), batch, h_count, lq, lk, d, dh](const Tensor<T>& g,
                                                                      const Tensor<T>&) {
        const Tensor<T>& P = tape->value(ip);
        const Tensor<T>& V = tape->value(iv);
        Tensor<T>* gp = tape->grad_sink(ip);
        Tensor<T>* gv = tape->grad_sink(iv);
        for (int64_t b = 0; b < batch; ++b) {
          for (int64_t h = 0; h < h_count; ++h) {
            for (int64_t i = 0; i < lq; ++i) {
              const T* pr = P.data() + ((b * h_count + h) * lq + i) * lk;
              const T* gr = g.data() + (b * lq + i) * d + h * dh;
              T* dpr = gp ? gp->data() + ((b * h_count + h) * lq + i) * lk : nullptr;
              for (int64_t m = 0; m < lk; ++m) {
                const T* vr = V.data() + (b * lk + m) * d + h * dh;
                if (dpr) {
                  T acc = 0;
                  for (int64_t c = 0; c < dh; ++c) acc += gr[c] * vr[c];
                  dpr[m] += acc;
                }
                if (gv && pr[m] != T(0)) {
                  T* dv = gv->data() + (b * lk + m) * d + h * dh;
                  const T w = pr[m];
                  for (int64_t c = 0; c < dh; ++c) dv[c] += w * gr[c];
                }
              }
            }
          }
        }
      });
}

template <typename T>
Var<T> prepend_row(const Var<T>& x, const Var<T>& row) {
  Tape<T>* tape = x.tape();
  const Tensor<T>& X = x.value();
  const Tensor<T>& R = row.value();
  if (X.rank() != 3 || R.shape() != Shape{X.dim(2)}) {
    throw DimensionError(pair_str("prepend_row", X.shape(), R.shape()));
  }
  const int64_t batch = X.dim(0), len = X.dim(1), d = X.dim(2);
  Tensor<T> out(Shape{batch, len + 1, d});
  for (int64_t b = 0; b < batch; ++b) {
    T* dst = out.data() + b * (len + 1) * d;
    std::copy_n(R.data(), d, dst);
    std::copy_n(X.data() + b * len * d, len * d, dst + d);
  }
  return tape->record(std::move(out), {x, row},
                      [tape, ix = x.id(), ir = row.id(), batch, len, d](const Tensor<T>& g,
                                                                        const Tensor<T>&) {
                        Tensor<T>* gx = tape->grad_sink(ix);
                        Tensor<T>* gr = tape->grad_sink(ir);
                        for (int64_t b = 0; b < batch; ++b) {
                          const T* src = g.data() + b * (len + 1) * d;
                          if (gr) {
                            for (int64_t c = 0; c < d; ++c) (*gr)[c] += src[c];
                          }
                          if (gx) {
                            T* dst = gx->data() + b * len * d;
                            for (int64_t c = 0; c < len * d; ++c) dst[c] += src[d + c];
                          }
                        }
                      });
}

#define WALIGN_INSTANTIATE_OPS(T)                                                             \
  template Var<T> matmul(const Var<T>&, const Var<T>&, bool);                                 \
  template Var<T> add(const Var<T>&, const Var<T>&);                                          \
  template Var<T> scale(const Var<T>&, T);                                                    \
  template Var<T> relu(const Var<T>&);                                                        \
  template Var<T> dropout(const Var<T>&, double, std::mt19937_64*);                           \
  template Var<T> softmax_rows(const Var<T>&, const Mask*);                                   \
  template Var<T> layer_norm(const Var<T>&, const Var<T>&, const Var<T>&);                    \
  template Var<T> embedding(const Var<T>&, std::span<const int32_t>, const Shape&);           \
  template Var<T> cross_entropy(const Var<T>&, std::span<const int32_t>,                      \
                                std::span<const uint8_t>);                                    \
  template Var<T> mse(const Var<T>&, const Var<T>&);                                          \
  template Var<T> masked_mse(const Var<T>&, const Var<T>&, const Mask&);                      \
  template Var<T> sum(const Var<T>&);                                                         \
  template Var<T> mean_axis(const Var<T>&, int);                                              \
  template Var<T> slice_last(const Var<T>&, int64_t, int64_t);                                \
  template Var<T> transpose_last2(const Var<T>&);                                             \
  template Var<T> head_scores(const Var<T>&, const Var<T>&, int, T);                          \
  template Var<T> head_mix(const Var<T>&, const Var<T>&);                                     \
  template Var<T> prepend_row(const Var<T>&, const Var<T>&);

WALIGN_INSTANTIATE_OPS(float)
WALIGN_INSTANTIATE_OPS(double)

#undef WALIGN_INSTANTIATE_OPS

}  // namespace walign::ops
