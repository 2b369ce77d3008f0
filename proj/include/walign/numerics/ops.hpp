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

// Differentiable operations over Tape variables. All functions are
// instantiated for float and double.

#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <span>

#include "walign/numerics/tape.hpp"

namespace walign::ops {

inline constexpr double kLayerNormEps = 1e-5;

/// Matrix product over the last two axes.
///   a [..., m, k] x b [k, n]        -> [..., m, n]   (shared right operand)
///   a [B, m, k]   x b [B, k, n]     -> [B, m, n]     (batched)
/// With transpose_b the right operand is read as [n, k] (or [B, n, k]).
template <typename T>
Var<T> matmul(const Var<T>& a, const Var<T>& b, bool transpose_b = false);

/// Elementwise sum. `b` may have a shape equal to a suffix of `a`'s shape,
/// in which case it is broadcast over the leading axes (biases, position
/// tables).
template <typename T>
Var<T> add(const Var<T>& a, const Var<T>& b);

template <typename T>
Var<T> scale(const Var<T>& x, T factor);

template <typename T>
Var<T> relu(const Var<T>& x);

/// Inverted dropout. Returns `x` unchanged when rate == 0 or rng is null.
template <typename T>
Var<T> dropout(const Var<T>& x, double rate, std::mt19937_64* rng);

/// Softmax over the last axis. A set mask byte removes the position from the
/// row; removed positions come out as exactly 0. The mask has x's shape, or
/// x's shape without axis 1 (broadcast over attention heads).
template <typename T>
Var<T> softmax_rows(const Var<T>& x, const Mask* mask = nullptr);

/// Row normalisation over the last axis followed by an affine transform.
template <typename T>
Var<T> layer_norm(const Var<T>& x, const Var<T>& gain, const Var<T>& bias);

/// Gathers rows of `table` [V, d]. Output shape is `index_shape` + [d].
template <typename T>
Var<T> embedding(const Var<T>& table, std::span<const int32_t> ids, const Shape& index_shape);

/// Mean token negative log-likelihood. logits [B, L, V] (or [L, V]);
/// targets and pad_mask hold B*L entries; a set pad byte skips the position.
/// Each sentence is averaged over its unpadded positions, then sentences are
/// averaged.
template <typename T>
Var<T> cross_entropy(const Var<T>& logits, std::span<const int32_t> targets,
                     std::span<const uint8_t> pad_mask);

/// Mean over all elements of (a - b)^2.
template <typename T>
Var<T> mse(const Var<T>& a, const Var<T>& b);

/// Squared error averaged over unmasked cells of each leading-axis slice,
/// then averaged over slices that have at least one unmasked cell.
template <typename T>
Var<T> masked_mse(const Var<T>& a, const Var<T>& b, const Mask& mask);

template <typename T>
Var<T> sum(const Var<T>& x);

/// Mean over one axis; the axis is removed from the shape.
template <typename T>
Var<T> mean_axis(const Var<T>& x, int axis);

/// Keeps columns [begin, end) of the last axis.
template <typename T>
Var<T> slice_last(const Var<T>& x, int64_t begin, int64_t end);

/// Swaps the last two axes.
template <typename T>
Var<T> transpose_last2(const Var<T>& x);

/// Per-head scaled dot products: q [B, Lq, d], k [B, Lk, d] -> [B, H, Lq, Lk]
/// where head h uses feature columns [h*d/H, (h+1)*d/H).
template <typename T>
Var<T> head_scores(const Var<T>& q, const Var<T>& k, int heads, T scale);

/// Per-head weighted sum: p [B, H, Lq, Lk], v [B, Lk, d] -> [B, Lq, d].
template <typename T>
Var<T> head_mix(const Var<T>& p, const Var<T>& v);

/// Prepends one shared row to every batch item: x [B, L, d], row [d] ->
/// [B, L+1, d] with `row` at position 0.
template <typename T>
Var<T> prepend_row(const Var<T>& x, const Var<T>& row);

}  // namespace walign::ops
