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

// walign: synth | preprocess | train | align | evaluate | inspect
//
// Exit codes: 0 success, 2 usage or input error, 3 numerical failure.

#include <filesystem>
#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "commands.hpp"
#include "walign/util/config_values.hpp"
#include "walign/util/error.hpp"

namespace {

using walign::cli::RunConfig;

// Options shared by the commands that read a RunConfig.
struct ConfigFlags {
  std::string file;
  std::vector<std::string> overrides;
  std::optional<uint64_t> seed;

  void add_to(CLI::App* cmd) {
    cmd->add_option("--config", file, "Config file with dotted keys (model.*, train.*, synth.*)")
        ->check(CLI::ExistingFile);
    cmd->add_option("--set", overrides, "Override one setting, e.g. --set model.d_model=64");
    cmd->add_option("--seed", seed, "Run seed");
  }

  void apply(RunConfig& config) const {
    if (!file.empty()) config.load_file(file);
    config.apply_overrides(overrides);
    if (seed) {
      config.train.seed = *seed;
      config.synth.seed = *seed;
    }
  }
};

}  // namespace

int main(int argc, char** argv) {
  namespace cli = walign::cli;
  CLI::App app{"Neural word alignment with masked, leaky attention"};
  app.require_subcommand(1);

  ConfigFlags synth_flags, pre_flags, train_flags, align_flags;

  cli::SynthArgs synth_args;
  std::optional<int64_t> synth_sentences;
  std::optional<int> synth_vocab, synth_window;
  std::optional<double> synth_null, synth_fertility, synth_punct;
  CLI::App* synth = app.add_subcommand("synth", "Generate a synthetic parallel corpus with gold alignments");
  synth_flags.add_to(synth);
  synth->add_option("--out", synth_args.out, "Output prefix for .src, .tgt, .gold")->required();
  synth->add_option("--sentences", synth_sentences, "Number of sentence pairs");
  synth->add_option("--vocab-size", synth_vocab, "Source word types");
  synth->add_option("--reorder-window", synth_window, "Maximum displacement of a word");
  synth->add_option("--null-rate", synth_null, "Inserted target-only word rate");
  synth->add_option("--fertility-rate", synth_fertility, "One-to-two translation rate");
  synth->add_option("--end-punct-rate", synth_punct, "Rate of a final unlinked '.' on the source");

  cli::PreprocessArgs pre_args;
  CLI::App* pre = app.add_subcommand("preprocess", "Learn subwords and vocabulary, encode and split a corpus");
  pre_flags.add_to(pre);
  pre->add_option("--src", pre_args.src, "Source text, one sentence per line")->required();
  pre->add_option("--tgt", pre_args.tgt, "Target text, one sentence per line")->required();
  pre->add_option("--out", pre_args.out, "Output directory")->required();
  pre->add_option("--merges", pre_args.merges, "Number of subword merges")->capture_default_str();
  pre->add_option("--max-len", pre_args.max_len, "Drop pairs with a longer side (subwords)")->capture_default_str();
  pre->add_option("--min-count", pre_args.min_count, "Minimum subword count for the vocabulary")
      ->capture_default_str();
  std::optional<int64_t> valid_count;
  pre->add_option("--valid-count", valid_count, "Pairs held out for validation (default 1000)");

  cli::TrainArgs train_args;
  std::string preset = "desk";
  std::optional<std::string> variant, cross;
  std::optional<bool> leaky;
  std::optional<double> alpha, beta, lr;
  std::optional<int64_t> max_steps, max_tokens;
  CLI::App* train = app.add_subcommand("train", "Train the two directional models jointly");
  train_flags.add_to(train);
  train->add_option("--data", train_args.data, "Preprocess output directory")->required();
  train->add_option("--out", train_args.out, "Run directory")->required();
  train->add_flag("--resume", train_args.resume, "Continue from <out>/last");
  train->add_option("--log-every", train_args.log_every, "Print every N steps")->capture_default_str();
  train->add_option("--preset", preset, "Model size preset: desk or base")
      ->check(CLI::IsMember({"desk", "base"}))
      ->capture_default_str();
  train->add_option("--variant", variant, "mask-align or vanilla-nmt");
  train->add_option("--cross-layers", cross, "Decoder layers with cross-attention: last or all");
  train->add_option("--leaky", leaky, "Leaky attention: true or false");
  train->add_option("--alpha", alpha, "Agreement loss weight");
  train->add_option("--beta", beta, "Entropy loss weight");
  train->add_option("--lr", lr, "Peak learning rate");
  train->add_option("--max-steps", max_steps, "Stop after this many updates");
  train->add_option("--max-tokens", max_tokens, "Tokens per batch and side");

  cli::AlignArgs align_args;
  CLI::App* align = app.add_subcommand("align", "Extract word alignments with trained models");
  align_flags.add_to(align);
  align->add_option("--model", align_args.model, "Checkpoint prefix, e.g. run/best")->required();
  align->add_option("--data", align_args.data, "Preprocess output directory")->required();
  align->add_option("--src", align_args.src, "Source text")->required();
  align->add_option("--tgt", align_args.tgt, "Target text")->required();
  align->add_option("--out", align_args.out, "Pharaoh output file (default stdout)");
  align->add_option("--method", align_args.method, "fused, argmax or shift")->capture_default_str();
  align->add_option("--theta", align_args.theta, "Threshold for the fused method (default train.theta)");
  align->add_option("--symmetrize", align_args.symmetrize, "none or gdf")->capture_default_str();
  align->add_option("--layer", align_args.layer, "Decoder layer, negative counts from the end")
      ->capture_default_str();
  align->add_flag("--drop-end-punct", align_args.drop_end_punct, "Ignore sentence-final punctuation");
  align->add_flag("--one-direction", align_args.one_direction, "Use the source-to-target model only");
  align->add_option("--granularity", align_args.granularity, "word or subword")->capture_default_str();
  align->add_option("--gold", align_args.gold, "Gold alignments to report AER against");
  align->add_option("--index-base", align_args.index_base, "0 or 1")->capture_default_str();

  cli::EvaluateArgs eval_args;
  CLI::App* evaluate = app.add_subcommand("evaluate", "Score alignments against gold sure/possible links");
  evaluate->add_option("--hyp", eval_args.hyp, "Hypothesis alignments")->required();
  evaluate->add_option("--gold", eval_args.gold, "Gold alignments")->required();
  evaluate->add_option("--hyp-index-base", eval_args.hyp_index_base, "0 or 1")->capture_default_str();
  evaluate->add_option("--gold-index-base", eval_args.gold_index_base, "0 or 1")->capture_default_str();
  evaluate->add_option("--src", eval_args.src, "Source text, enables the range check");
  evaluate->add_option("--tgt", eval_args.tgt, "Target text, enables the range check");
  evaluate->add_flag("--json", eval_args.json, "Machine-readable report");
  evaluate->add_flag("--macro", eval_args.macro, "Also report the per-sentence average");
  evaluate->add_flag("--breakdown", eval_args.breakdown, "Prediction/alignment breakdown (needs --model)");
  evaluate->add_option("--model", eval_args.model, "Checkpoint prefix for --breakdown");
  evaluate->add_option("--data", eval_args.data, "Preprocess output directory for --breakdown");

  cli::InspectArgs inspect_args;
  CLI::App* inspect = app.add_subcommand("inspect", "Dump attention matrices and value norms for one pair");
  inspect->add_option("--model", inspect_args.model, "Checkpoint prefix")->required();
  inspect->add_option("--data", inspect_args.data, "Preprocess output directory")->required();
  inspect->add_option("--src", inspect_args.src, "Source text")->required();
  inspect->add_option("--tgt", inspect_args.tgt, "Target text")->required();
  inspect->add_option("--index", inspect_args.index, "0-based sentence index")->capture_default_str();
  inspect->add_option("--out", inspect_args.out, "Output directory")->required();
  inspect->add_flag("--reverse", inspect_args.reverse, "Inspect the target-to-source model");
  inspect->add_option("--layer", inspect_args.layer, "Decoder layer")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? cli::kExitOk : cli::kExitUsage;
  }

  try {
    RunConfig config;
    if (*synth) {
      synth_flags.apply(config);
      if (synth_sentences) config.synth.sentences = *synth_sentences;
      if (synth_vocab) config.synth.vocab_size = *synth_vocab;
      if (synth_window) config.synth.reorder_window = *synth_window;
      if (synth_null) config.synth.null_rate = *synth_null;
      if (synth_fertility) config.synth.fertility_rate = *synth_fertility;
      if (synth_punct) config.synth.end_punct_rate = *synth_punct;
      return cli::cmd_synth(config, synth_args);
    }
    if (*pre) {
      pre_flags.apply(config);
      if (valid_count) config.train.validation_count = *valid_count;
      return cli::cmd_preprocess(config, pre_args);
    }
    if (*train) {
      if (preset == "base") config.model = walign::ModelConfig{};
      const auto saved = std::filesystem::path(train_args.out) / "config.txt";
      if (train_args.resume && std::filesystem::exists(saved)) config.load_file(saved.string());
      train_flags.apply(config);
      if (variant) {
        config.model.set("variant", *variant);
        // The vanilla baseline uses plain attention unless asked otherwise.
        if (config.model.variant == walign::Variant::kVanillaNmt) config.model.leaky = false;
      }
      if (cross) config.model.set("cross_layers", *cross);
      if (leaky) config.model.leaky = *leaky;
      if (alpha) config.train.loss.alpha = *alpha;
      if (beta) config.train.loss.beta = *beta;
      if (lr) config.train.lr = *lr;
      if (max_steps) config.train.max_steps = *max_steps;
      if (max_tokens) config.train.max_tokens = *max_tokens;
      return cli::cmd_train(config, train_args);
    }
    if (*align) {
      align_flags.apply(config);
      return cli::cmd_align(config, align_args);
    }
    if (*evaluate) return cli::cmd_evaluate(eval_args);
    if (*inspect) return cli::cmd_inspect(inspect_args);
  } catch (const walign::NumericalError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return cli::kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return cli::kExitUsage;
  }
  return cli::kExitUsage;
}
