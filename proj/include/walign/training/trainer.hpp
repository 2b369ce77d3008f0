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
#include <functional>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include "walign/data/corpus.hpp"
#include "walign/model/model.hpp"
#include "walign/numerics/adam.hpp"
#include "walign/training/losses.hpp"

namespace walign {

struct TrainConfig {
  LossWeights loss;
  double theta = 0.2;  // read by alignment extraction
  int64_t max_tokens = 36000;
  int patience = 5;
  int64_t eval_interval = 1000;
  uint64_t seed = 1;
  double lr = 5e-4;
  int64_t warmup = 4000;
  LrSchedule schedule = LrSchedule::kInverseSqrt;
  int64_t max_steps = 0;  // 0: no limit
  int max_epochs = 0;     // 0: no limit
  double clip_norm = 0;   // 0: no clipping
  int64_t validation_count = 1000;
  // Agreement and entropy terms are left out before this step.
  int64_t attention_loss_start = 0;

  void validate() const;
  std::string to_text() const;
  void set(const std::string& key, const std::string& value);
  bool operator==(const TrainConfig& other) const { return to_text() == other.to_text(); }
};

struct TrainState {
  int64_t step = 0;
  int64_t epoch = 0;
  int64_t cursor = 0;  // next batch within the current epoch
  double best_accuracy = -1;
  int evals_since_improvement = 0;
  AdamState<float> adam_xy;
  AdamState<float> adam_yx;
  std::mt19937_64 dropout_rng;
};

struct StepReport {
  int64_t step = 0;
  LossBreakdown loss;
  LossWeights weights;  // as applied at this step
  double lr = 0;
  int64_t tokens = 0;
  double tokens_per_s = 0;
};

struct EvalReport {
  int64_t step = 0;
  double accuracy = 0;
  bool improved = false;
};

// One update of both directions from a single backward over the joint loss.
// Throws NumericalError (message carries the loss breakdown) when the loss
// is not finite; parameters are left untouched in that case.
template <typename T>
LossBreakdown joint_train_step(Model<T>& xy, Model<T>& yx, const Batch& batch, AdamState<T>& adam_xy,
                               AdamState<T>& adam_yx, double lr_xy, double lr_yx, const LossWeights& weights,
                               std::mt19937_64* dropout_rng = nullptr, double clip_norm = 0);

// Fraction of unpadded target positions whose argmax equals the reference,
// computed per direction over all positions and averaged over the two
// directions. Throws ConfigError on an empty set.
template <typename T>
double validation_accuracy(Model<T>& xy, Model<T>& yx, const std::vector<SentencePair>& pairs,
                           int64_t max_tokens = 4000);

class Trainer {
 public:
  struct Hooks {
    std::function<void(const StepReport&)> on_step;
    std::function<void(const EvalReport&)> on_eval;
    std::function<void()> on_improve;     // best validation accuracy so far
    std::function<void()> on_checkpoint;  // after every evaluation
    std::ostream* log = nullptr;           // one JSON record per line
  };

  Trainer(Model<float>& xy, Model<float>& yx, const TrainConfig& config, std::vector<SentencePair> train,
          std::vector<SentencePair> valid);

  StepReport step();
  EvalReport evaluate();
  // Trains until a step/epoch limit or early stopping.
  void run(const Hooks& hooks);
  void run() { run(Hooks{}); }

  bool should_stop() const;
  // Continues from a state produced by load_training_checkpoint.
  void restore(TrainState state);
  const TrainState& state() const { return state_; }
  const TrainConfig& config() const { return config_; }

 private:
  void start_epoch();

  Model<float>& xy_;
  Model<float>& yx_;
  TrainConfig config_;
  std::vector<SentencePair> train_;
  std::vector<SentencePair> valid_;
  std::vector<Batch> batches_;
  std::vector<size_t> order_;
  TrainState state_;
};

// Checkpoint set: <prefix>.xy.ckpt, <prefix>.yx.ckpt and <prefix>.state.ckpt
// (optimizer moments, counters, RNG state, training config).
void save_training_checkpoint(const std::string& prefix, Model<float>& xy, Model<float>& yx,
                              const TrainState& state, const TrainConfig& config);
void load_training_checkpoint(const std::string& prefix, Model<float>& xy, Model<float>& yx, TrainState& state);
// The two directional models only.
void save_model_pair(const std::string& prefix, Model<float>& xy, Model<float>& yx);

}  // namespace walign
