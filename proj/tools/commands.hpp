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

// Pipeline stages behind the `walign` subcommands.

#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "walign/model/config.hpp"
#include "walign/synth/synth.hpp"
#include "walign/training/trainer.hpp"

namespace walign::cli {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitNumerical = 3;

// Merged settings from a config file with flat dotted keys (model.*,
// train.*, synth.*) and command-line overrides. camelCase keys are accepted
// and mapped to snake_case, so model.dModel and model.d_model are the same.
struct RunConfig {
  ModelConfig model = ModelConfig::desk();
  TrainConfig train;
  SynthConfig synth;

  void set(const std::string& dotted_key, const std::string& value);
  void load_file(const std::string& path);
  // "key=value" overrides from --set.
  void apply_overrides(const std::vector<std::string>& assignments);
  std::string to_text() const;
};

std::string snake_case(const std::string& key);

// Seed for a named random stream derived from the run seed.
uint64_t substream(uint64_t seed, const std::string& name);

struct SynthArgs {
  std::string out;  // file prefix
};
int cmd_synth(const RunConfig& config, const SynthArgs& args);

struct PreprocessArgs {
  std::string src;
  std::string tgt;
  std::string out;  // directory
  int merges = 32000;
  int max_len = 128;
  int min_count = 1;
};
int cmd_preprocess(const RunConfig& config, const PreprocessArgs& args);

struct TrainArgs {
  std::string data;  // preprocess output directory
  std::string out;   // run directory
  bool resume = false;
  int64_t log_every = 100;
};
int cmd_train(const RunConfig& config, const TrainArgs& args);

struct AlignArgs {
  std::string model;  // checkpoint prefix, e.g. run/best
  std::string data;
  std::string src;
  std::string tgt;
  std::string out;  // empty: stdout
  std::string method = "fused";
  std::string symmetrize = "none";
  std::string granularity = "word";
  std::string gold;  // optional; checked against the output granularity and line count
  double theta = -1;  // negative: train.theta
  int layer = -1;
  bool drop_end_punct = false;
  bool one_direction = false;
  int index_base = 0;
};
int cmd_align(const RunConfig& config, const AlignArgs& args);

struct EvaluateArgs {
  std::string hyp;
  std::string gold;
  int hyp_index_base = 0;
  int gold_index_base = 0;
  std::string src;  // optional, word counts for the range check
  std::string tgt;
  bool json = false;
  bool macro = false;
  bool breakdown = false;
  std::string model;  // needed by --breakdown
  std::string data;
};
int cmd_evaluate(const EvaluateArgs& args);

struct InspectArgs {
  std::string model;
  std::string data;
  std::string src;
  std::string tgt;
  int64_t index = 0;
  std::string out;  // directory
  bool reverse = false;  // inspect the target-to-source model
  int layer = -1;
};
int cmd_inspect(const InspectArgs& args);

}  // namespace walign::cli
