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

#include "commands.hpp"

#include <cctype>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>

#include "walign/alignment/aligner.hpp"
#include "walign/data/bpe.hpp"
#include "walign/data/corpus.hpp"
#include "walign/data/pharaoh.hpp"
#include "walign/data/vocab.hpp"
#include "walign/eval/diagnostics.hpp"
#include "walign/eval/metrics.hpp"
#include "walign/model/checkpoint.hpp"
#include "walign/util/config_values.hpp"
#include "walign/util/error.hpp"
#include "walign/util/text.hpp"

namespace walign::cli {

namespace fs = std::filesystem;

namespace {

constexpr const char* kBpeFile = "bpe.codes";
constexpr const char* kVocabFile = "vocab.txt";

std::string prefixed(const std::string& prefix, const std::string& text) {
  std::string out;
  for (const auto& [k, v] : parse_key_values(text)) out += prefix + k + " = " + v + "\n";
  return out;
}

std::vector<SentencePair> load_encoded(const std::string& src_path, const std::string& tgt_path,
                                       const Vocabulary& vocab) {
  const std::vector<std::string> src = read_lines(src_path);
  const std::vector<std::string> tgt = read_lines(tgt_path);
  if (src.size() != tgt.size()) {
    throw IngestionError(src_path + " and " + tgt_path + " differ in line count");
  }
  std::vector<SentencePair> pairs;
  pairs.reserve(src.size());
  for (size_t k = 0; k < src.size(); ++k) {
    SentencePair p;
    const auto s = split_whitespace(src[k]);
    const auto t = split_whitespace(tgt[k]);
    p.src = vocab.encode(s);
    p.tgt = vocab.encode(t);
    p.src_sub_to_word = BpeModel::word_map(s);
    p.tgt_sub_to_word = BpeModel::word_map(t);
    p.line = static_cast<int64_t>(k);
    pairs.push_back(std::move(p));
  }
  return pairs;
}

std::string encoded_side(const std::vector<SentencePair>& pairs, const Vocabulary& vocab, bool source) {
  std::string out;
  for (const SentencePair& p : pairs) {
    const std::vector<int32_t>& ids = source ? p.src : p.tgt;
    for (size_t k = 0; k < ids.size(); ++k) {
      if (k) out += ' ';
      out += vocab.token(ids[k]);
    }
    out += '\n';
  }
  return out;
}

std::unique_ptr<Model<float>> load_model(const std::string& path, const Vocabulary& vocab) {
  const ModelConfig config = read_model_config(path);
  if (config.vocab_size != vocab.size()) {
    throw ConfigError(path + " was trained with " + std::to_string(config.vocab_size) +
                      " vocabulary entries, the data directory has " + std::to_string(vocab.size()));
  }
  auto model = std::make_unique<Model<float>>(config, 0);
  load_model_params(CheckpointReader(path), *model);
  return model;
}

std::vector<SentencePair> encode_raw(const std::string& src_path, const std::string& tgt_path,
                                     const std::string& data_dir, const Vocabulary& vocab) {
  const BpeModel bpe = BpeModel::load((fs::path(data_dir) / kBpeFile).string());
  CorpusOptions options;
  options.filter = false;
  return load_parallel_corpus(src_path, tgt_path, bpe, vocab, options);
}

std::vector<int64_t> word_counts(const std::string& path) {
  std::vector<int64_t> counts;
  for (const std::string& line : read_lines(path)) counts.push_back(static_cast<int64_t>(split_whitespace(line).size()));
  return counts;
}

void write_output(const std::string& path, const std::string& content) {
  if (path.empty()) {
    std::cout << content;
  } else {
    write_file_atomic(path, content);
  }
}

}  // namespace

std::string snake_case(const std::string& key) {
  std::string out;
  for (char c : key) {
    if (std::isupper(static_cast<unsigned char>(c))) {
      out += '_';
      out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    } else {
      out += c;
    }
  }
  return out;
}

uint64_t substream(uint64_t seed, const std::string& name) {
  uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
  for (unsigned char c : name) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  uint64_t z = seed ^ h;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

void RunConfig::set(const std::string& dotted_key, const std::string& value) {
  const size_t dot = dotted_key.find('.');
  if (dot == std::string::npos) throw ConfigError("setting '" + dotted_key + "' needs a model., train. or synth. prefix");
  const std::string section = dotted_key.substr(0, dot);
  const std::string key = snake_case(dotted_key.substr(dot + 1));
  if (section == "model") {
    model.set(key, value);
  } else if (section == "train") {
    train.set(key, value);
  } else if (section == "synth") {
    synth.set(key, value);
  } else {
    throw ConfigError("unknown config section '" + section + "' in '" + dotted_key + "'");
  }
}

void RunConfig::load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IngestionError("cannot open config file " + path);
  std::ostringstream os;
  os << in.rdbuf();
  for (const auto& [k, v] : parse_key_values(os.str())) set(k, v);
}

void RunConfig::apply_overrides(const std::vector<std::string>& assignments) {
  for (const std::string& a : assignments) {
    const size_t eq = a.find('=');
    if (eq == std::string::npos) throw ConfigError("override '" + a + "' is not of the form key=value");
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t");
      const auto e = s.find_last_not_of(" \t");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    set(trim(a.substr(0, eq)), trim(a.substr(eq + 1)));
  }
}

std::string RunConfig::to_text() const {
  return prefixed("model.", model.to_text()) + prefixed("train.", train.to_text()) +
         prefixed("synth.", synth.to_text());
}

int cmd_synth(const RunConfig& config, const SynthArgs& args) {
  const SynthCorpus corpus = generate(config.synth);
  const fs::path parent = fs::path(args.out).parent_path();
  if (!parent.empty()) fs::create_directories(parent);
  write_synth(corpus, args.out);
  write_file_atomic(args.out + ".cfg", prefixed("synth.", config.synth.to_text()));
  std::cout << "wrote " << corpus.src.size() << " pairs to " << args.out << ".{src,tgt,gold}\n";
  return kExitOk;
}

int cmd_preprocess(const RunConfig& config, const PreprocessArgs& args) {
  const std::vector<std::string> src = read_lines(args.src);
  const std::vector<std::string> tgt = read_lines(args.tgt);
  if (src.size() != tgt.size()) {
    throw IngestionError(args.src + " has " + std::to_string(src.size()) + " lines but " + args.tgt + " has " +
                         std::to_string(tgt.size()));
  }
  std::vector<std::vector<std::string>> words;
  words.reserve(2 * src.size());
  for (size_t k = 0; k < src.size(); ++k) {
    words.push_back(split_whitespace(src[k]));
    words.push_back(split_whitespace(tgt[k]));
  }
  const BpeModel bpe = train_bpe(words, args.merges);
  std::vector<std::vector<std::string>> subwords;
  subwords.reserve(words.size());
  for (const auto& w : words) subwords.push_back(bpe.encode(w));
  const Vocabulary vocab = Vocabulary::build(subwords, args.min_count);

  CorpusOptions options;
  options.max_len = args.max_len;
  CorpusStats stats;
  const auto pairs = encode_corpus(src, tgt, bpe, vocab, options, &stats);
  if (pairs.empty()) throw IngestionError("no sentence pair survived length filtering");
  auto [train, valid] = split_validation(pairs, config.train.validation_count);

  const fs::path dir(args.out);
  fs::create_directories(dir);
  bpe.save((dir / kBpeFile).string());
  vocab.save((dir / kVocabFile).string());
  write_file_atomic((dir / "train.src").string(), encoded_side(train, vocab, true));
  write_file_atomic((dir / "train.tgt").string(), encoded_side(train, vocab, false));
  write_file_atomic((dir / "valid.src").string(), encoded_side(valid, vocab, true));
  write_file_atomic((dir / "valid.tgt").string(), encoded_side(valid, vocab, false));
  std::ostringstream cfg;
  cfg << "preprocess.src = " << args.src << "\n"
      << "preprocess.tgt = " << args.tgt << "\n"
      << "preprocess.merges = " << args.merges << "\n"
      << "preprocess.max_len = " << args.max_len << "\n"
      << "preprocess.min_count = " << args.min_count << "\n"
      << "train.validation_count = " << config.train.validation_count << "\n";
  write_file_atomic((dir / "preprocess.cfg").string(), cfg.str());

  std::cout << "lines " << stats.lines << "\n"
            << "kept " << stats.kept << " (short " << stats.dropped_short << ", long " << stats.dropped_long << ")\n"
            << "train " << train.size() << "\n"
            << "valid " << valid.size() << "\n"
            << "merges " << bpe.merges().size() << "\n"
            << "vocab " << vocab.size() << "\n";
  return kExitOk;
}

int cmd_train(const RunConfig& config, const TrainArgs& args) {
  const fs::path data(args.data);
  const fs::path run(args.out);
  const Vocabulary vocab = Vocabulary::load((data / kVocabFile).string());
  auto train = load_encoded((data / "train.src").string(), (data / "train.tgt").string(), vocab);
  auto valid = load_encoded((data / "valid.src").string(), (data / "valid.tgt").string(), vocab);

  RunConfig effective = config;
  effective.model.vocab_size = vocab.size();
  effective.model.validate();
  effective.train.validate();
  fs::create_directories(run);
  write_file_atomic((run / "config.txt").string(), effective.to_text());

  Model<float> xy(effective.model, substream(effective.train.seed, "init.xy"));
  Model<float> yx(effective.model, substream(effective.train.seed, "init.yx"));
  Trainer trainer(xy, yx, effective.train, std::move(train), std::move(valid));
  const std::string last = (run / "last").string();
  const std::string best = (run / "best").string();
  if (args.resume) {
    TrainState state;
    load_training_checkpoint(last, xy, yx, state);
    trainer.restore(std::move(state));
    std::cout << "resumed at step " << trainer.state().step << "\n";
  }

  std::ofstream log((run / "train.jsonl").string(), args.resume ? std::ios::app : std::ios::trunc);
  Trainer::Hooks hooks;
  hooks.log = &log;
  hooks.on_step = [&](const StepReport& r) {
    if (args.log_every > 0 && r.step % args.log_every == 0) {
      std::cout << "step " << r.step << " " << r.loss.str() << " lr " << r.lr << " tok/s "
                << static_cast<int64_t>(r.tokens_per_s) << std::endl;
    }
  };
  hooks.on_eval = [&](const EvalReport& r) {
    std::cout << "eval step " << r.step << " accuracy " << r.accuracy << (r.improved ? " (best)" : "") << std::endl;
  };
  hooks.on_improve = [&] { save_model_pair(best, xy, yx); };
  hooks.on_checkpoint = [&] { save_training_checkpoint(last, xy, yx, trainer.state(), effective.train); };

  try {
    trainer.run(hooks);
  } catch (const NumericalError& e) {
    // Parameters are still those of the last good step.
    save_training_checkpoint((run / "failed").string(), xy, yx, trainer.state(), effective.train);
    std::ostringstream dump;
    dump << "error = " << e.what() << "\n"
         << "step = " << trainer.state().step << "\n"
         << "epoch = " << trainer.state().epoch << "\n"
         << effective.to_text();
    write_file_atomic((run / "failure.txt").string(), dump.str());
    std::cerr << "numerical failure at step " << trainer.state().step << ": " << e.what() << "\n"
              << "diagnostics written to " << (run / "failure.txt").string() << "\n";
    return kExitNumerical;
  }
  save_training_checkpoint(last, xy, yx, trainer.state(), effective.train);
  save_model_pair((run / "final").string(), xy, yx);
  if (!fs::exists(best + ".xy.ckpt")) save_model_pair(best, xy, yx);
  std::cout << "finished at step " << trainer.state().step << ", best validation accuracy "
            << trainer.state().best_accuracy << "\n";
  return kExitOk;
}

int cmd_align(const RunConfig& config, const AlignArgs& args) {
  const bool word_level = args.granularity == "word";
  if (!word_level && args.granularity != "subword") {
    throw ConfigError("granularity must be 'word' or 'subword', got '" + args.granularity + "'");
  }
  if (!args.gold.empty() && !word_level) {
    throw ConfigError("gold alignments are word level; use --granularity word with --gold");
  }
  AlignOptions options;
  options.method = parse_align_method(args.method);
  options.symmetrize = parse_symmetrize(args.symmetrize);
  options.theta = args.theta >= 0 ? args.theta : config.train.theta;
  options.layer = args.layer;
  options.drop_end_punct = args.drop_end_punct;

  const Vocabulary vocab = Vocabulary::load((fs::path(args.data) / kVocabFile).string());
  const auto pairs = encode_raw(args.src, args.tgt, args.data, vocab);
  std::vector<GoldAlignment> gold;
  if (!args.gold.empty()) {
    gold = parse_gold(args.gold, args.index_base);
    if (gold.size() != pairs.size()) {
      throw ConfigError(args.gold + " has " + std::to_string(gold.size()) + " lines for " +
                        std::to_string(pairs.size()) + " sentence pairs");
    }
  }

  auto xy = load_model(args.model + ".xy.ckpt", vocab);
  std::unique_ptr<Model<float>> yx;
  if (!args.one_direction) yx = load_model(args.model + ".yx.ckpt", vocab);
  Aligner aligner(*xy, yx.get(), options, &vocab);
  const auto result = aligner.align(pairs);

  std::string out;
  int64_t skipped = 0;
  std::vector<AlignmentSet> hyps;
  for (const PairAlignment& r : result) {
    const AlignmentSet& links = word_level ? r.word : r.subword;
    out += format_links(links, args.index_base) + "\n";
    skipped += r.skipped;
    hyps.push_back(links);
  }
  write_output(args.out, out);
  std::cerr << "aligned " << result.size() << " pairs";
  if (skipped) std::cerr << ", " << skipped << " too short for the model (left empty)";
  std::cerr << "\n";
  if (!gold.empty()) std::cerr << score_text(corpus_score(hyps, gold));
  return kExitOk;
}

int cmd_evaluate(const EvaluateArgs& args) {
  const std::vector<std::string> hyp_lines = read_lines(args.hyp);
  std::vector<AlignmentSet> hyps;
  for (size_t k = 0; k < hyp_lines.size(); ++k) {
    hyps.push_back(parse_links(hyp_lines[k], args.hyp_index_base, static_cast<int64_t>(k) + 1));
  }
  const std::vector<GoldAlignment> gold = parse_gold(args.gold, args.gold_index_base);
  if (hyps.size() != gold.size()) {
    throw ConfigError(args.hyp + " has " + std::to_string(hyps.size()) + " lines but " + args.gold + " has " +
                      std::to_string(gold.size()));
  }

  if (!args.src.empty() && !args.tgt.empty()) {
    const auto src_words = word_counts(args.src);
    const auto tgt_words = word_counts(args.tgt);
    if (src_words.size() != hyps.size() || tgt_words.size() != hyps.size()) {
      throw ConfigError("sentence files and alignment files differ in line count");
    }
    int64_t bad_hyp = 0, bad_gold = 0;
    for (size_t k = 0; k < hyps.size(); ++k) {
      bad_hyp += out_of_range_links(hyps[k], src_words[k], tgt_words[k]);
      bad_gold += out_of_range_links(gold[k].possible, src_words[k], tgt_words[k]);
    }
    if (bad_hyp || bad_gold) {
      std::cerr << "warning: " << bad_hyp << " hypothesis and " << bad_gold
                << " gold links fall outside their sentences; check --hyp-index-base and --gold-index-base\n";
      return kExitUsage;
    }
  }

  const AlignmentScore s = corpus_score(hyps, gold);
  if (s.empty_sure) std::cerr << "warning: " << s.empty_sure << " sentences have no sure links\n";
  Breakdown b;
  if (args.breakdown) {
    if (args.model.empty() || args.data.empty() || args.src.empty() || args.tgt.empty()) {
      throw ConfigError("--breakdown needs --model, --data, --src and --tgt");
    }
    const Vocabulary vocab = Vocabulary::load((fs::path(args.data) / kVocabFile).string());
    const auto pairs = encode_raw(args.src, args.tgt, args.data, vocab);
    auto xy = load_model(args.model + ".xy.ckpt", vocab);
    const auto verdicts = word_predictions(*xy, pairs);
    for (size_t k = 0; k < pairs.size(); ++k) b += breakdown(verdicts[k], hyps[k], gold[k]);
  }
  const Breakdown* bp = args.breakdown ? &b : nullptr;
  if (args.json) {
    nlohmann::json j = score_json(s, bp);
    if (args.macro) j["macro_aer"] = macro_aer(hyps, gold);
    std::cout << j.dump(2) << "\n";
  } else {
    std::cout << score_text(s, bp);
    if (args.macro) std::cout << "macro AER " << macro_aer(hyps, gold) << "\n";
  }
  return kExitOk;
}

int cmd_inspect(const InspectArgs& args) {
  const Vocabulary vocab = Vocabulary::load((fs::path(args.data) / kVocabFile).string());
  const BpeModel bpe = BpeModel::load((fs::path(args.data) / kBpeFile).string());
  const std::vector<std::string> src = read_lines(args.src);
  const std::vector<std::string> tgt = read_lines(args.tgt);
  if (src.size() != tgt.size()) throw IngestionError(args.src + " and " + args.tgt + " differ in line count");
  if (args.index < 0 || args.index >= static_cast<int64_t>(src.size())) {
    throw IndexError("sentence index " + std::to_string(args.index) + " is outside the corpus (" +
                     std::to_string(src.size()) + " pairs)");
  }
  const size_t k = static_cast<size_t>(args.index);
  SentencePair pair = encode_pair(src[k], tgt[k], bpe, vocab);
  if (args.reverse) pair = reversed(pair);
  auto model = load_model(args.model + (args.reverse ? ".yx.ckpt" : ".xy.ckpt"), vocab);
  const ModelConfig& mc = model->config();
  const bool vanilla = mc.variant == Variant::kVanillaNmt;

  std::vector<std::string> cols, rows;
  if (mc.leaky) cols.push_back("NULL");
  for (int32_t id : pair.src) cols.push_back(vocab.token(id));
  if (vanilla) {
    cols.push_back("</s>");
    rows.push_back("<s>");
  }
  for (int32_t id : pair.tgt) rows.push_back(vocab.token(id));

  Tape<float> tape;
  const Batch batch = make_batch({pair}, {0});
  const ForwardResult<float> result = model->forward(tape, batch);
  const fs::path dir(args.out);
  fs::create_directories(dir);
  write_file_atomic((dir / "attention_mean.tsv").string(),
                    matrix_tsv(attention_matrices(result, AttentionView{args.layer, -1, true})[0], rows, cols));
  for (int h = 0; h < mc.heads; ++h) {
    write_file_atomic((dir / ("attention_head" + std::to_string(h) + ".tsv")).string(),
                      matrix_tsv(attention_matrices(result, AttentionView{args.layer, h, true})[0], rows, cols));
  }
  write_file_atomic((dir / "value_norms.tsv").string(), value_norms_tsv(value_norm_report(*model, pair, &vocab)));
  std::cout << "wrote attention and value-norm tables for pair " << args.index << " to " << args.out << "\n";
  return kExitOk;
}

}  // namespace walign::cli
