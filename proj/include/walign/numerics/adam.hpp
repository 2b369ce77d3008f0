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
#include <vector>

#include "walign/numerics/tape.hpp"

namespace walign {

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.98;
  double eps = 1e-9;
};

/// First and second moment estimates, one pair per parameter, in the order
/// the parameters were passed to adam_step.
template <typename T>
struct AdamState {
  std::vector<Tensor<T>> m;
  std::vector<Tensor<T>> v;
  int64_t step = 0;
};

/// One bias-corrected Adam update of every parameter that requires a
/// gradient. Gradients are read, not cleared.
template <typename T>
void adam_step(std::span<Parameter<T>* const> params, AdamState<T>& state, double lr,
               const AdamConfig& config = {});

/// Learning-rate schedules. Inverse square root: linear warmup to `base` at
/// `warmup` steps, then base * sqrt(warmup / step). Constant: linear warmup
/// then flat.
enum class LrSchedule { kInverseSqrt, kConstant };

double learning_rate(LrSchedule schedule, double base, int64_t warmup, int64_t step);
LrSchedule parse_lr_schedule(const std::string& name);
std::string lr_schedule_name(LrSchedule schedule);

/// Scales all gradients so their global L2 norm is at most max_norm. Returns
/// the norm before clipping.
template <typename T>
double clip_grad_norm(std::span<Parameter<T>* const> params, double max_norm);

}  // namespace walign
