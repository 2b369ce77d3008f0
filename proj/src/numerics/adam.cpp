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

#include "walign/numerics/adam.hpp"

#include <algorithm>
#include <cmath>

namespace walign {

template <typename T>
void adam_step(std::span<Parameter<T>* const> params, AdamState<T>& state, double lr,
               const AdamConfig& config) {
  if (state.m.empty()) {
    for (const Parameter<T>* p : params) {
      state.m.emplace_back(p->value.shape());
      state.v.emplace_back(p->value.shape());
    }
  }
  if (state.m.size() != params.size()) {
    throw ContractError("adam_step: optimizer state holds " + std::to_string(state.m.size()) +
                        " parameters, got " + std::to_string(params.size()));
  }
  ++state.step;
  const double bc1 = 1.0 - std::pow(config.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(config.beta2, static_cast<double>(state.step));
  const T b1 = T(config.beta1), b2 = T(config.beta2);
  const T step_size = T(lr / bc1);
  const T inv_sqrt_bc2 = T(1.0 / std::sqrt(bc2));
  const T eps = T(config.eps);
  for (size_t i = 0; i < params.size(); ++i) {
    Parameter<T>& p = *params[i];
    if (!p.requires_grad || p.grad.empty()) continue;
    T* w = p.value.data();
    const T* g = p.grad.data();
    T* m = state.m[i].data();
    T* v = state.v[i].data();
    for (int64_t j = 0; j < p.value.size(); ++j) {
      m[j] = b1 * m[j] + (T(1) - b1) * g[j];
      v[j] = b2 * v[j] + (T(1) - b2) * g[j] * g[j];
      w[j] -= step_size * m[j] / (std::sqrt(v[j]) * inv_sqrt_bc2 + eps);
    }
  }
}

double learning_rate(LrSchedule schedule, double base, int64_t warmup, int64_t step) {
  const double s = static_cast<double>(std::max<int64_t>(step, 1));
  const double w = static_cast<double>(std::max<int64_t>(warmup, 0));
  if (w > 0 && s < w) return base * s / w;
  if (schedule == LrSchedule::kConstant || w == 0) return base;
  return base * std::sqrt(w / s);
}

LrSchedule parse_lr_schedule(const std::string& name) {
  if (name == "inverse_sqrt") return LrSchedule::kInverseSqrt;
  if (name == "constant") return LrSchedule::kConstant;
  throw ConfigError("unknown learning-rate schedule '" + name + "'");
}

std::string lr_schedule_name(LrSchedule schedule) {
  return schedule == LrSchedule::kInverseSqrt ? "inverse_sqrt" : "constant";
}

template <typename T>
double clip_grad_norm(std::span<Parameter<T>* const> params, double max_norm) {
  double total = 0;
  for (const Parameter<T>* p : params) {
    for (T g : p->grad.storage()) total += static_cast<double>(g) * static_cast<double>(g);
  }
  const double norm = std::sqrt(total);
  if (max_norm > 0 && norm > max_norm) {
    const T factor = T(max_norm / norm);
    for (Parameter<T>* p : params) {
      for (T& g : p->grad.storage()) g *= factor;
    }
  }
  return norm;
}

template void adam_step(std::span<Parameter<float>* const>, AdamState<float>&, double,
                        const AdamConfig&);
template void adam_step(std::span<Parameter<double>* const>, AdamState<double>&, double,
                        const AdamConfig&);
template double clip_grad_norm(std::span<Parameter<float>* const>, double);
template double clip_grad_norm(std::span<Parameter<double>* const>, double);

}  // namespace walign
