// Copyright 2026 The sanlm Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//       http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "sanlm/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>

#include "json.hpp"
#include "sanlm/checkpoint.hpp"
#include "sanlm/corpus.hpp"
#include "sanlm/errors.hpp"
#include "sanlm/evaluation.hpp"
#include "sanlm/nbest.hpp"
#include "sanlm/rescoring.hpp"
#include "sanlm/run_config.hpp"
#include "sanlm/scoring.hpp"
#include "sanlm/synthetic.hpp"
#include "sanlm/training.hpp"
#include "sanlm/vocabulary.hpp"

namespace sanlm {
namespace {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

constexpr std::uint64_t kSplitStream = 0x73706c6974;  // held-out split shuffle

// Flag spellings shared by every subcommand that accepts them.
const std::map<std::string, std::string>& flag_keys() {
  static const std::map<std::string, std::string> m = {
      {"seed", "seed"},
      {"threads", "threads"},
      {"mode", "mode"},
      {"vocab", "vocab"},
      {"lambda", "lambda"},
      {"alpha", "alpha"},
      {"grid", "grid"},
      {"out", "out"},
      {"corpus", "corpus"},
      {"size", "vocab_size"},
      {"heldout", "heldout"},
      {"steps", "max_steps"},
      {"batch-size", "batch_size"},
      {"lr", "learning_rate"},
      {"eval-interval", "eval_interval"},
      {"input", "input"},
      {"nbest", "nbest"},
      {"hyp", "hyp"},
      {"references", "references"},
      {"sentences", "sentences"},
      {"lists", "lists"},
      {"list-size", "list_size"},
      {"early-window", "early_window"},
  };
  return m;
}

struct Invocation {
  std::string config_path;
  std::map<std::string, std::string> flags;  // key -> text
  std::vector<std::string> checkpoints;
  std::vector<std::string> overrides;  // key=value
};

void add_flags(CLI::App* cmd, Invocation& inv, const std::vector<std::string>& names) {
  cmd->add_option("--config", inv.config_path, "JSON configuration file");
  cmd->add_option("--set", inv.overrides, "Override any configuration key (key=value)");
  for (const auto& name : names) {
    if (name == "checkpoint") {
      cmd->add_option("--checkpoint", inv.checkpoints, "Checkpoint file (repeatable)");
      continue;
    }
    const std::string& key = flag_keys().at(name);
    cmd->add_option_function<std::string>(
        "--" + name, [&inv, key](const std::string& v) { inv.flags[key] = v; }, key);
  }
}

RunConfig resolve(const Invocation& inv, const CliEnvironment& env) {
  RunConfig cfg;
  if (!inv.config_path.empty()) cfg.merge_file(inv.config_path);
  cfg.merge_env(env.getenv);
  for (const auto& o : inv.overrides) {
    const auto eq = o.find('=');
    if (eq == std::string::npos) throw UsageError("--set expects key=value, got '" + o + "'");
    cfg.set(o.substr(0, eq), o.substr(eq + 1), "--set");
  }
  for (const auto& [key, text] : inv.flags) cfg.set(key, text, "--" + key);
  if (!inv.checkpoints.empty()) {
    nlohmann::json j;
    j["checkpoint"] = inv.checkpoints;
    cfg.merge_json(j, "--checkpoint");
  }
  return cfg;
}

std::string required(const RunConfig& cfg, const std::string& key) {
  std::string v = cfg.string(key);
  if (v.empty()) throw UsageError("missing required setting '" + key + "'");
  return v;
}

fs::path output_dir(const RunConfig& cfg) {
  const fs::path dir = required(cfg, "out");
  fs::create_directories(dir);
  cfg.write_to(dir);
  return dir;
}

std::ofstream open_output(const fs::path& path) {
  std::ofstream out(path, std::ios::trunc | std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  return out;
}

std::vector<std::vector<std::string>> read_sentences(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open input file " + path.string());
  std::vector<std::vector<std::string>> out;
  std::string line;
  while (std::getline(in, line)) {
    auto words = tokenize(line);
    if (!words.empty()) out.push_back(std::move(words));
  }
  return out;
}

struct LoadedModel {
  std::unique_ptr<Vocabulary> vocab;
  std::unique_ptr<LanguageModel> model;
  std::string path;
};

LoadedModel load_model(const fs::path& checkpoint_path, const std::string& vocab_override) {
  // The vocabulary path recorded in the checkpoint is used unless one is given.
  Checkpoint probe = load_checkpoint(checkpoint_path);
  const std::string vocab_path = vocab_override.empty() ? probe.vocab.path : vocab_override;
  if (vocab_path.empty()) throw UsageError("no vocabulary given for " + checkpoint_path.string());
  LoadedModel m;
  m.vocab = std::make_unique<Vocabulary>(Vocabulary::load(vocab_path));
  if (m.vocab->hash() != probe.vocab.hash) {
    throw CheckpointMismatchError(checkpoint_path.string() + ": vocabulary " + vocab_path +
                                  " has hash " + hex64(m.vocab->hash()) +
                                  ", checkpoint expects " + hex64(probe.vocab.hash));
  }
  m.model = std::make_unique<LanguageModel>(std::move(probe.model));
  m.path = checkpoint_path.string();
  return m;
}

struct ScorerSet {
  std::vector<LoadedModel> models;
  std::optional<LmScorer> uni, bi;
};

ScorerSet load_scorers(const RunConfig& cfg) {
  const auto paths = cfg.strings("checkpoint");
  if (paths.empty()) throw UsageError("at least one --checkpoint is required");
  if (paths.size() > 2) throw UsageError("at most two checkpoints (one bi, one uni) are accepted");
  ScorerSet s;
  for (const auto& p : paths) s.models.push_back(load_model(p, cfg.string("vocab")));
  for (const auto& m : s.models) {
    auto& slot = m.model->mode() == LmMode::kBidirectional ? s.bi : s.uni;
    if (slot) throw UsageError("two checkpoints of the same mode were given");
    slot = LmScorer{m.model.get(), m.vocab.get()};
  }
  return s;
}

// ---- commands ----

int cmd_generate(const RunConfig& cfg, std::ostream& out) {
  const fs::path dir = output_dir(cfg);
  const synthetic::TopicGrammar grammar;
  Rng rng(mix_seed(cfg.seed(), 1));
  {
    auto f = open_output(dir / "corpus.txt");
    for (const auto& s : grammar.sentences(cfg.integer("sentences"), rng)) {
      f << synthetic::join_words(s) << '\n';
    }
  }
  synthetic::NBestOptions opt;
  opt.list_size = cfg.integer("list_size");
  opt.early_window = cfg.integer("early_window");
  Rng list_rng(mix_seed(cfg.seed(), 2));
  write_nbest(dir / "nbest.jsonl",
              synthetic::make_nbest_lists(grammar, cfg.integer("lists"), opt, list_rng));
  out << "wrote " << (dir / "corpus.txt").string() << " and " << (dir / "nbest.jsonl").string()
      << '\n';
  return kExitOk;
}

int cmd_build_vocab(const RunConfig& cfg, std::ostream& out) {
  const fs::path corpus = required(cfg, "corpus");
  std::ifstream in(corpus);
  if (!in) throw DataError("cannot open corpus file " + corpus.string());
  const Vocabulary vocab = Vocabulary::build(in, cfg.integer("vocab_size"));
  const fs::path dir = output_dir(cfg);
  vocab.save(dir / "vocab.txt");
  out << "vocabulary of " << vocab.size() << " entries written to "
      << (dir / "vocab.txt").string() << '\n';
  return kExitOk;
}

int cmd_train(const RunConfig& cfg, std::ostream& out) {
  const std::string vocab_path = required(cfg, "vocab");
  const Vocabulary vocab = Vocabulary::load(vocab_path);
  auto encode_all = [&](const std::vector<std::vector<std::string>>& sentences) {
    std::vector<std::vector<TokenId>> ids;
    ids.reserve(sentences.size());
    for (const auto& s : sentences) ids.push_back(vocab.encode(s));
    return ids;
  };
  TrainingData data;
  data.vocab = {vocab.hash(), vocab_path};
  auto sentences = read_corpus(required(cfg, "corpus"));
  if (!cfg.string("heldout").empty()) {
    data.train = encode_all(sentences);
    data.heldout = encode_all(read_corpus(cfg.string("heldout")));
  } else {
    const double fraction = cfg.number("heldout_fraction");
    if (fraction < 0.0 || fraction >= 1.0) throw ParameterError("heldout_fraction must be in [0, 1)");
    std::vector<std::size_t> order(sentences.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng rng(mix_seed(cfg.seed(), kSplitStream));
    rng.shuffle(std::span<std::size_t>(order));
    const auto held = static_cast<std::size_t>(fraction * static_cast<double>(order.size()));
    std::vector<std::size_t> train_idx(order.begin() + held, order.end());
    std::vector<std::size_t> held_idx(order.begin(), order.begin() + held);
    std::sort(train_idx.begin(), train_idx.end());
    std::sort(held_idx.begin(), held_idx.end());
    for (auto i : train_idx) data.train.push_back(vocab.encode(sentences[i]));
    for (auto i : held_idx) data.heldout.push_back(vocab.encode(sentences[i]));
  }
  TrainConfig tc = cfg.train_config(vocab.size());
  const fs::path dir = output_dir(cfg);
  tc.checkpoint_dir = dir;
  auto metrics = open_output(dir / "metrics.jsonl");
  const TrainResult result = train(tc, std::move(data), [&](const MetricRecord& r) {
    metrics << r.to_json_line() << '\n';
  });
  out << "trained " << result.checkpoint.step << " steps";
  for (auto it = result.log.rbegin(); it != result.log.rend(); ++it) {
    if (it->split == "heldout") {
      out << "; held-out loss " << it->loss << ", accuracy " << it->accuracy;
      break;
    }
  }
  out << "; checkpoint " << (dir / "checkpoint.bin").string() << '\n';
  return kExitOk;
}

int cmd_score(const RunConfig& cfg, std::ostream& out) {
  const auto paths = cfg.strings("checkpoint");
  if (paths.size() != 1) throw UsageError("score takes exactly one --checkpoint");
  const LoadedModel m = load_model(paths.front(), cfg.string("vocab"));
  const auto sentences = read_sentences(required(cfg, "input"));
  ScoreOptions opt;
  opt.instances_per_pass = cfg.integer("instances_per_pass");
  const auto scores = score_sentences(*m.model, *m.vocab, sentences, cfg.threads(), opt);
  const fs::path dir = output_dir(cfg);
  auto f = open_output(dir / "scores.jsonl");
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const auto& s = scores[i];
    ordered_json j;
    j["text"] = synthetic::join_words(sentences[i]);
    j["total"] = s.total;
    j["length"] = s.length;
    j["oov_count"] = s.oov_count;
    j["truncated"] = s.truncated;
    j["per_word"] = ordered_json::array();
    for (const auto& w : s.per_word) {
      ordered_json e;
      e["position"] = w.position;
      e["token"] = w.token;
      e["log_prob"] = w.log_prob;
      j["per_word"].push_back(e);
    }
    f << j.dump() << '\n';
  }
  out << "scored " << scores.size() << " sentences\n";
  return kExitOk;
}

std::vector<std::vector<LmScores>> lm_scores_for(const RunConfig& cfg,
                                                 const std::vector<NBestList>& lists) {
  const ScorerSet scorers = load_scorers(cfg);
  return score_nbest_lists(lists, scorers.uni, scorers.bi, cfg.threads());
}

int cmd_rescore(const RunConfig& cfg, std::ostream& out) {
  const auto lists = read_nbest(fs::path(required(cfg, "nbest")), cfg.integer("max_nbest"));
  const auto lm = lm_scores_for(cfg, lists);
  const double lambda = cfg.number("lambda");
  const double alpha = cfg.number("alpha");
  const fs::path dir = output_dir(cfg);
  auto f = open_output(dir / "rescored.jsonl");
  std::vector<Transcript> top1;
  for (std::size_t u = 0; u < lists.size(); ++u) {
    const auto ranked = rescore_nbest(lists[u], lm[u], lambda, alpha);
    ordered_json j;
    j["utt_id"] = lists[u].utterance_id;
    if (lists[u].reference) j["reference"] = *lists[u].reference;
    j["hypotheses"] = ordered_json::array();
    for (const auto& h : ranked) {
      ordered_json e;
      e["text"] = h.text;
      e["am_rank"] = h.am_rank;
      e["am_score"] = h.am_score;
      e["lm_score"] = h.lm_score;
      e["score"] = h.score;
      j["hypotheses"].push_back(e);
    }
    f << j.dump() << '\n';
    top1.push_back({lists[u].utterance_id, ranked.front().text});
  }
  write_transcripts(dir / "top1.txt", top1);
  out << "rescored " << lists.size() << " lists at lambda " << lambda << '\n';
  return kExitOk;
}

int cmd_sweep(const RunConfig& cfg, std::ostream& out) {
  const auto lists = read_nbest(fs::path(required(cfg, "nbest")), cfg.integer("max_nbest"));
  const auto lm = lm_scores_for(cfg, lists);
  const auto grid = parse_grid(cfg.string("grid"));
  const SweepResult sweep = sweep_lambda(lists, lm, grid, cfg.number("alpha"));
  const fs::path dir = output_dir(cfg);
  auto f = open_output(dir / "sweep.csv");
  f << "lambda,errors,ref_words,wer_percent\n";
  for (const auto& row : sweep.table) {
    ordered_json l = row.lambda;
    f << l.dump() << ',' << row.counts.errors() << ',' << row.counts.ref_words << ','
      << format_percent(row.counts.wer()) << '\n';
  }
  ordered_json summary;
  summary["best_lambda"] = sweep.best_lambda;
  open_output(dir / "sweep.summary.json") << summary.dump() << '\n';
  out << "best lambda " << sweep.best_lambda << '\n';
  return kExitOk;
}

// References come from --references when given, otherwise from the n-best file.
std::map<std::string, std::string> load_references(const RunConfig& cfg,
                                                   const std::vector<NBestList>& lists) {
  std::map<std::string, std::string> refs;
  if (!cfg.string("references").empty()) {
    for (auto& t : read_transcripts(cfg.string("references"))) refs[t.utterance_id] = t.text;
    return refs;
  }
  for (const auto& l : lists) {
    if (!l.reference) throw DataError("utterance '" + l.utterance_id + "' has no reference");
    refs[l.utterance_id] = *l.reference;
  }
  if (refs.empty()) throw UsageError("references need --references or an n-best file with references");
  return refs;
}

const std::string& reference_for(const std::map<std::string, std::string>& refs,
                                 const std::string& id) {
  auto it = refs.find(id);
  if (it == refs.end()) throw DataError("no reference for utterance '" + id + "'");
  return it->second;
}

std::vector<Transcript> hypotheses(const RunConfig& cfg, const std::vector<NBestList>& lists) {
  if (!cfg.string("hyp").empty()) return read_transcripts(cfg.string("hyp"));
  std::vector<Transcript> out;
  for (const auto& l : lists) out.push_back({l.utterance_id, l.entries.front().text});
  return out;
}

int cmd_evaluate(const RunConfig& cfg, std::ostream& out) {
  std::vector<NBestList> lists;
  if (!cfg.string("nbest").empty()) {
    lists = read_nbest(fs::path(cfg.string("nbest")), cfg.integer("max_nbest"));
    if (!cfg.string("references").empty()) {
      for (auto& t : read_transcripts(cfg.string("references"))) {
        for (auto& l : lists) {
          if (l.utterance_id == t.utterance_id) l.reference = t.text;
        }
      }
    }
  }
  if (lists.empty() && cfg.string("hyp").empty()) throw UsageError("evaluate needs --nbest or --hyp");
  const auto refs = load_references(cfg, lists);

  std::vector<MethodRow> rows;
  if (!lists.empty()) {
    for (auto& l : lists) l.reference = reference_for(refs, l.utterance_id);
    std::size_t n = 0;
    for (const auto& l : lists) n = std::max(n, l.entries.size());
    rows.push_back({"1-best (baseline)", top1_report(lists).total});
    rows.push_back({std::to_string(n) + "-best (oracle)", oracle_report(lists).total});
  }
  WerReport primary;
  if (!cfg.string("hyp").empty()) {
    for (const auto& t : read_transcripts(cfg.string("hyp"))) {
      primary.add(t.utterance_id, wer(reference_for(refs, t.utterance_id), t.text).counts);
    }
    rows.push_back({"rescored", primary.total});
  } else {
    primary = top1_report(lists);
  }
  const fs::path dir = output_dir(cfg);
  write_wer_report(dir / "wer.csv", primary);
  write_method_table(dir / "table.csv", rows);
  for (const auto& r : rows) out << r.method << ": " << format_percent(r.counts.wer()) << "%\n";
  return kExitOk;
}

int cmd_analyze_positions(const RunConfig& cfg, std::ostream& out) {
  std::vector<NBestList> lists;
  if (!cfg.string("nbest").empty()) {
    lists = read_nbest(fs::path(cfg.string("nbest")), cfg.integer("max_nbest"));
  }
  if (lists.empty() && cfg.string("hyp").empty()) {
    throw UsageError("analyze-positions needs --nbest or --hyp");
  }
  const auto refs = load_references(cfg, lists);
  PositionHistogram hist;
  for (const auto& t : hypotheses(cfg, lists)) hist.add(wer(reference_for(refs, t.utterance_id), t.text));
  const fs::path dir = output_dir(cfg);
  write_histogram(dir / "positions.csv", hist);
  out << hist.total() << " substitution and insertion errors binned\n";
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, const CliEnvironment& env) {
  std::ostream& out = env.out ? *env.out : std::cout;
  std::ostream& err = env.err ? *env.err : std::cerr;

  CLI::App app{"Self-attention language models for N-best rescoring", "sanlm"};
  app.require_subcommand(1);
  Invocation inv;
  using Handler = int (*)(const RunConfig&, std::ostream&);
  struct Command {
    const char* name;
    const char* help;
    Handler handler;
    std::vector<std::string> flags;
  };
  const std::vector<Command> commands = {
      {"generate", "Write a synthetic corpus and n-best lists", cmd_generate,
       {"seed", "sentences", "lists", "list-size", "early-window", "out"}},
      {"build-vocab", "Build a vocabulary from a corpus", cmd_build_vocab,
       {"corpus", "size", "out"}},
      {"train", "Train a bi or uni language model", cmd_train,
       {"corpus", "vocab", "mode", "heldout", "steps", "batch-size", "lr", "eval-interval", "seed",
        "threads", "out"}},
      {"score", "Score sentences with a checkpoint", cmd_score,
       {"checkpoint", "vocab", "input", "threads", "out"}},
      {"rescore", "Rescore n-best lists", cmd_rescore,
       {"nbest", "checkpoint", "vocab", "lambda", "alpha", "threads", "out"}},
      {"sweep", "Sweep the interpolation weight on a dev set", cmd_sweep,
       {"nbest", "checkpoint", "vocab", "grid", "alpha", "threads", "out"}},
      {"evaluate", "Word error rates for n-best lists or transcripts", cmd_evaluate,
       {"nbest", "hyp", "references", "out"}},
      {"analyze-positions", "Histogram of errors by word position", cmd_analyze_positions,
       {"nbest", "hyp", "references", "out"}},
  };
  std::vector<std::pair<CLI::App*, Handler>> subs;
  for (const auto& c : commands) {
    CLI::App* sub = app.add_subcommand(c.name, c.help);
    add_flags(sub, inv, c.flags);
    subs.emplace_back(sub, c.handler);
  }

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "sanlm: " << e.what() << '\n';
    return kExitUsage;
  }

  try {
    for (const auto& [sub, handler] : subs) {
      if (sub->parsed()) return handler(resolve(inv, env), out);
    }
    return kExitUsage;
  } catch (const UsageError& e) {
    err << "sanlm: " << e.what() << '\n';
    return kExitUsage;
  } catch (const ParameterError& e) {
    err << "sanlm: " << e.what() << '\n';
    return kExitUsage;
  } catch (const DataError& e) {
    err << "sanlm: " << e.what() << '\n';
    return kExitData;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "sanlm: " << e.what() << '\n';
    return kExitData;
  } catch (const std::exception& e) {
    err << "sanlm: internal error: " << e.what() << '\n';
    return kExitInternal;
  }
}

}  // namespace sanlm
