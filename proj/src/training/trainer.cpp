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

#include "walign/training/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <sstream>

#include "json.hpp"
#include "walign/model/checkpoint.hpp"
#include "walign/util/config_values.hpp"
#include "walign/util/error.hpp"

namespace walign {

void TrainConfig::validate() const {
  if (loss.alpha < 0 || loss.beta < 0) throw ConfigError("alpha and beta must be non-negative");
  if (!(loss.lambda > 0)) throw ConfigError("lambda must be positive");
  if (!(theta > 0 && theta < 1)) throw ConfigError("theta must lie in (0, 1)");
  if (max_tokens < 1) throw ConfigError("max_tokens must be positive");
  if (patience < 1) throw ConfigError("patience must be at least 1");
  if (eval_interval < 1) throw ConfigError("eval_interval must be at least 1");
  if (!(lr >= 0)) throw ConfigError("lr must be non-negative");
  if (warmup < 0 || max_steps < 0 || max_epochs < 0 || clip_norm < 0 || validation_count < 0 ||
      attention_loss_start < 0) {
    throw ConfigError(
        "warmup, max_steps, max_epochs, clip_norm, validation_count and attention_loss_start must be "
        "non-negative");
  }
}

std::string TrainConfig::to_text() const {
  std::ostringstream os;
  os << "alpha = " << format_double(loss.alpha) << "\n"
     << "beta = " << format_double(loss.beta) << "\n"
     << "lambda = " << format_double(loss.lambda) << "\n"
     << "per_head_agreement = " << (loss.per_head ? "true" : "false") << "\n"
     << "theta = " << format_double(theta) << "\n"
     << "max_tokens = " << max_tokens << "\n"
     << "patience = " << patience << "\n"
     << "eval_interval = " << eval_interval << "\n"
     << "seed = " << seed << "\n"
     << "lr = " << format_double(lr) << "\n"
     << "warmup = " << warmup << "\n"
     << "schedule = " << lr_schedule_name(schedule) << "\n"
     << "max_steps = " << max_steps << "\n"
     << "max_epochs = " << max_epochs << "\n"
     << "clip_norm = " << format_double(clip_norm) << "\n"
     << "validation_count = " << validation_count << "\n"
     << "attention_loss_start = " << attention_loss_start << "\n";
  return os.str();
}

void TrainConfig::set(const std::string& key, const std::string& value) {
  if (key == "alpha") {
    loss.alpha = parse_double(key, value);
  } else if (key == "beta") {
    loss.beta = parse_double(key, value);
  } else if (key == "lambda") {
    loss.lambda = parse_double(key, value);
  } else if (key == "per_head_agreement") {
    loss.per_head = parse_bool(key, value);
  } else if (key == "theta") {
    theta = parse_double(key, value);
  } else if (key == "max_tokens") {
    max_tokens = parse_int64(key, value);
  } else if (key == "patience") {
    patience = parse_int(key, value);
  } else if (key == "eval_interval") {
    eval_interval = parse_int64(key, value);
  } else if (key == "seed") {
    seed = static_cast<uint64_t>(parse_int64(key, value));
  } else if (key == "lr") {
    lr = parse_double(key, value);
  } else if (key == "warmup") {
    warmup = parse_int64(key, value);
  } else if (key == "schedule") {
    schedule = parse_lr_schedule(value);
  } else if (key == "max_steps") {
    max_steps = parse_int64(key, value);
  } else if (key == "max_epochs") {
    max_epochs = parse_int(key, value);
  } else if (key == "clip_norm") {
    clip_norm = parse_double(key, value);
  } else if (key == "validation_count") {
    validation_count = parse_int64(key, value);
  } else if (key == "attention_loss_start") {
    attention_loss_start = parse_int64(key, value);
  } else {
    throw ConfigError("unknown training setting '" + key + "'");
  }
}

template <typename T>
LossBreakdown joint_train_step(Model<T>& xy, Model<T>& yx, const Batch& batch, AdamState<T>& adam_xy,
                               AdamState<T>& adam_yx, double lr_xy, double lr_yx, const LossWeights& weights,
                               std::mt19937_64* dropout_rng, double clip_norm) {
  std::vector<Parameter<T>*> pxy = xy.parameters();
  std::vector<Parameter<T>*> pyx = yx.parameters();
  for (auto* p : pxy) p->zero_grad();
  for (auto* p : pyx) p->zero_grad();
  LossBreakdown parts;
  {
    Tape<T> tape;
    JointLoss<T> loss = joint_loss(tape, xy, yx, batch, weights, dropout_rng);
    parts = loss.parts;
    if (!std::isfinite(parts.total)) throw NumericalError("non-finite training loss: " + parts.str());
    tape.backward(loss.total);
  }
  if (clip_norm > 0) {
    std::vector<Parameter<T>*> all = pxy;
    all.insert(all.end(), pyx.begin(), pyx.end());
    clip_grad_norm<T>(all, clip_norm);
  }
  adam_step<T>(pxy, adam_xy, lr_xy);
  adam_step<T>(pyx, adam_yx, lr_yx);
  return parts;
}

namespace {

template <typename T>
void count_hits(Model<T>& model, const Batch& batch, int64_t& hits, int64_t& total) {
  Tape<T> tape;
  ForwardResult<T> r = model.forward(tape, batch);
  const Tensor<T>& logits = r.logits.value();
  const int64_t V = logits.dim(-1);
  for (int64_t pos = 0; pos < r.batch * r.tgt_len; ++pos) {
    if (r.target_pad[static_cast<size_t>(pos)]) continue;
    const T* row = logits.data() + pos * V;
    hits += (std::max_element(row, row + V) - row) == r.targets[static_cast<size_t>(pos)];
    ++total;
  }
}

}  // namespace

template <typename T>
double validation_accuracy(Model<T>& xy, Model<T>& yx, const std::vector<SentencePair>& pairs, int64_t max_tokens) {
  if (pairs.empty()) throw ConfigError("validation set is empty");
  int64_t hits_xy = 0, total_xy = 0, hits_yx = 0, total_yx = 0;
  for (const Batch& b : make_batches(pairs, max_tokens)) {
    count_hits(xy, b, hits_xy, total_xy);
    count_hits(yx, reversed(b), hits_yx, total_yx);
  }
  return 0.5 * (static_cast<double>(hits_xy) / total_xy + static_cast<double>(hits_yx) / total_yx);
}

Trainer::Trainer(Model<float>& xy, Model<float>& yx, const TrainConfig& config, std::vector<SentencePair> train,
                 std::vector<SentencePair> valid)
    : xy_(xy), yx_(yx), config_(config), train_(std::move(train)), valid_(std::move(valid)) {
  config_.validate();
  if (train_.empty()) throw ConfigError("training set is empty");
  batches_ = make_batches(train_, config_.max_tokens);
  state_.dropout_rng.seed(config_.seed);
  start_epoch();
}

void Trainer::start_epoch() {
  order_.resize(batches_.size());
  std::iota(order_.begin(), order_.end(), size_t{0});
  std::mt19937_64 rng(config_.seed * 1000003ULL + static_cast<uint64_t>(state_.epoch));
  std::shuffle(order_.begin(), order_.end(), rng);
}

void Trainer::restore(TrainState state) {
  state_ = std::move(state);
  start_epoch();
}

StepReport Trainer::step() {
  if (state_.cursor >= static_cast<int64_t>(batches_.size())) {
    ++state_.epoch;
    state_.cursor = 0;
    start_epoch();
  }
  const Batch& batch = batches_[order_[static_cast<size_t>(state_.cursor)]];
  const auto t0 = std::chrono::steady_clock::now();
  StepReport report;
  report.lr = learning_rate(config_.schedule, config_.lr, config_.warmup, state_.step + 1);
  LossWeights weights = config_.loss;
  if (state_.step < config_.attention_loss_start) weights.alpha = weights.beta = 0;
  report.weights = weights;
  report.loss = joint_train_step(xy_, yx_, batch, state_.adam_xy, state_.adam_yx, report.lr, report.lr, weights,
                                 &state_.dropout_rng, config_.clip_norm);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  ++state_.step;
  ++state_.cursor;
  report.step = state_.step;
  for (uint8_t pad : batch.src_pad) report.tokens += !pad;
  for (uint8_t pad : batch.tgt_pad) report.tokens += !pad;
  report.tokens_per_s = secs > 0 ? static_cast<double>(report.tokens) / secs : 0;
  return report;
}

EvalReport Trainer::evaluate() {
  EvalReport report;
  report.step = state_.step;
  report.accuracy = valid_.empty() ? 0.0 : validation_accuracy(xy_, yx_, valid_);
  if (report.accuracy > state_.best_accuracy) {
    state_.best_accuracy = report.accuracy;
    state_.evals_since_improvement = 0;
    report.improved = true;
  } else {
    ++state_.evals_since_improvement;
  }
  return report;
}

bool Trainer::should_stop() const {
  if (config_.max_steps > 0 && state_.step >= config_.max_steps) return true;
  if (config_.max_epochs > 0) {
    const bool epoch_done = state_.cursor >= static_cast<int64_t>(batches_.size());
    if (state_.epoch + (epoch_done ? 1 : 0) >= config_.max_epochs) return true;
  }
  return !valid_.empty() && state_.evals_since_improvement >= config_.patience;
}

void Trainer::run(const Hooks& hooks) {
  using nlohmann::json;
  if (valid_.empty()) throw ConfigError("validation set is empty");
  int64_t last_eval = -1;
  auto do_eval = [&] {
    EvalReport e = evaluate();
    last_eval = state_.step;
    if (hooks.log) {
      json rec = {{"type", "eval"}, {"step", e.step}, {"valid_accuracy", e.accuracy},
                  {"best_accuracy", state_.best_accuracy}, {"improved", e.improved}};
      *hooks.log << rec.dump() << "\n" << std::flush;
    }
    if (hooks.on_eval) hooks.on_eval(e);
    if (e.improved && hooks.on_improve) hooks.on_improve();
    if (hooks.on_checkpoint) hooks.on_checkpoint();
  };
  while (!should_stop()) {
    StepReport s = step();
    if (hooks.log) {
      json rec = {{"type", "step"},
                  {"step", s.step},
                  {"loss", s.loss.total},
                  {"nll_xy", s.loss.nll_xy},
                  {"nll_yx", s.loss.nll_yx},
                  {"agreement", s.loss.agreement},
                  {"entropy_xy", s.loss.entropy_xy},
                  {"entropy_yx", s.loss.entropy_yx},
                  {"alpha", s.weights.alpha},
                  {"beta", s.weights.beta},
                  {"lr", s.lr},
                  {"tokens_per_s", s.tokens_per_s}};
      *hooks.log << rec.dump() << "\n";
    }
    if (hooks.on_step) hooks.on_step(s);
    if (state_.step % config_.eval_interval == 0) do_eval();
  }
  if (last_eval != state_.step) do_eval();
}

void save_model_pair(const std::string& prefix, Model<float>& xy, Model<float>& yx) {
  save_model(prefix + ".xy.ckpt", xy, "direction = xy\n");
  save_model(prefix + ".yx.ckpt", yx, "direction = yx\n");
}

void save_training_checkpoint(const std::string& prefix, Model<float>& xy, Model<float>& yx,
                              const TrainState& state, const TrainConfig& config) {
  save_model_pair(prefix, xy, yx);
  std::ostringstream header;
  for (const auto& [key, value] : parse_key_values(config.to_text())) header << "train." << key << " = " << value << "\n";
  header << "state.step = " << state.step << "\n"
         << "state.epoch = " << state.epoch << "\n"
         << "state.cursor = " << state.cursor << "\n"
         << "state.best_accuracy = " << format_double(state.best_accuracy) << "\n"
         << "state.evals_since_improvement = " << state.evals_since_improvement << "\n"
         << "state.adam_xy_step = " << state.adam_xy.step << "\n"
         << "state.adam_yx_step = " << state.adam_yx.step << "\n"
         << "state.rng = " << state.dropout_rng << "\n";
  CheckpointWriter w(header.str());
  for (size_t i = 0; i < state.adam_xy.m.size(); ++i) {
    w.add("adam_xy.m." + std::to_string(i), state.adam_xy.m[i]);
    w.add("adam_xy.v." + std::to_string(i), state.adam_xy.v[i]);
  }
  for (size_t i = 0; i < state.adam_yx.m.size(); ++i) {
    w.add("adam_yx.m." + std::to_string(i), state.adam_yx.m[i]);
    w.add("adam_yx.v." + std::to_string(i), state.adam_yx.v[i]);
  }
  w.write(prefix + ".state.ckpt");
}

void load_training_checkpoint(const std::string& prefix, Model<float>& xy, Model<float>& yx, TrainState& state) {
  load_model_params(CheckpointReader(prefix + ".xy.ckpt"), xy);
  load_model_params(CheckpointReader(prefix + ".yx.ckpt"), yx);
  CheckpointReader reader(prefix + ".state.ckpt");
  TrainState s;
  for (const auto& [key, value] : parse_key_values(reader.header())) {
    if (key == "state.step") s.step = parse_int64(key, value);
    else if (key == "state.epoch") s.epoch = parse_int64(key, value);
    else if (key == "state.cursor") s.cursor = parse_int64(key, value);
    else if (key == "state.best_accuracy") s.best_accuracy = parse_double(key, value);
    else if (key == "state.evals_since_improvement") s.evals_since_improvement = parse_int(key, value);
    else if (key == "state.adam_xy_step") s.adam_xy.step = parse_int64(key, value);
    else if (key == "state.adam_yx_step") s.adam_yx.step = parse_int64(key, value);
    else if (key == "state.rng") {
      std::istringstream in(value);
      in >> s.dropout_rng;
      if (!in) throw ParseError("training state has a malformed RNG state");
    }
  }
  auto load_moments = [&](const std::string& tag, AdamState<float>& adam, size_t count) {
    if (!reader.contains(tag + ".m.0")) return;
    for (size_t i = 0; i < count; ++i) {
      adam.m.push_back(reader.get<float>(tag + ".m." + std::to_string(i)));
      adam.v.push_back(reader.get<float>(tag + ".v." + std::to_string(i)));
    }
  };
  load_moments("adam_xy", s.adam_xy, xy.parameters().size());
  load_moments("adam_yx", s.adam_yx, yx.parameters().size());
  state = std::move(s);
}

template LossBreakdown joint_train_step(Model<float>&, Model<float>&, const Batch&, AdamState<float>&,
                                        AdamState<float>&, double, double, const LossWeights&, std::mt19937_64*,
                                        double);
template LossBreakdown joint_train_step(Model<double>&, Model<double>&, const Batch&, AdamState<double>&,
                                        AdamState<double>&, double, double, const LossWeights&, std::mt19937_64*,
                                        double);
template double validation_accuracy(Model<float>&, Model<float>&, const std::vector<SentencePair>&, int64_t);
template double validation_accuracy(Model<double>&, Model<double>&, const std::vector<SentencePair>&, int64_t);

}  // namespace walign
