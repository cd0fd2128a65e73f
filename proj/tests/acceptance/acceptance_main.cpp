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

// Acceptance suite. Prints one PASS/FAIL line per criterion and exits
// nonzero if any criterion fails. Criterion numbers given on the command
// line restrict the run to those criteria.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "sanlm/checkpoint.hpp"
#include "sanlm/cli.hpp"
#include "sanlm/corpus.hpp"
#include "sanlm/errors.hpp"
#include "sanlm/evaluation.hpp"
#include "sanlm/model.hpp"
#include "sanlm/nbest.hpp"
#include "sanlm/rescoring.hpp"
#include "sanlm/scoring.hpp"
#include "sanlm/synthetic.hpp"
#include "sanlm/training.hpp"
#include "sanlm/vocabulary.hpp"
#include "testing.hpp"

namespace sanlm {
namespace {

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

const fs::path kFixtures = SANLM_FIXTURE_DIR;

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(const char* format, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, format, a);
  return buf;
}

std::vector<std::vector<std::string>> fixture_sentences() {
  std::vector<std::vector<std::string>> out;
  std::ifstream in(kFixtures / "sentences.txt");
  std::string line;
  while (std::getline(in, line)) out.push_back(tokenize(line));
  return out;
}

Vocabulary fixture_vocab() { return Vocabulary::build(read_corpus(kFixtures / "corpus.txt"), 10000); }

// Every parameter of a freshly initialised biSANLM, one MLM instance of
// nine words, central differences with h = 1e-5.
Outcome gradient_correctness() {
  const auto start = Clock::now();
  ModelConfig c;
  c.num_layers = 2;
  c.model_dim = 32;
  c.num_heads = 4;
  c.ffn_dim = 64;
  c.max_len = 16;
  c.vocab_size = 50;
  c.dropout = 0.0;
  LanguageModel model(c, 17);
  Rng rng(18);
  for (Parameter* p : model.parameters()) {
    for (double& v : p->value.values()) v += 0.1 * rng.normal();
  }
  std::vector<TokenId> sentence(9);
  for (auto& t : sentence) t = static_cast<TokenId>(kNumSpecials + rng.uniform_index(45));
  Rng mask_rng(19);
  const auto inst = make_mlm_instance(sentence, c.max_len, mask_rng);
  const Batch batch = make_batch(std::span<const TrainingInstance>(&*inst, 1));
  const auto reports =
      testing::gradient_check(std::as_const(model).parameters(), [&] {
        return model.mlm_loss(batch, ForwardContext{false, true, nullptr});
      }, 1e-5);
  const double worst = testing::max_error(reports);
  std::string worst_name;
  for (const auto& r : reports) {
    if (r.relative_error == worst) worst_name = r.name;
  }
  const double secs = seconds_since(start);
  return {worst < 1e-3 && secs < 120.0,
          std::to_string(reports.size()) + " tensors, max relative error " + fmt("%.2e", worst) +
              " (" + worst_name + "), " + fmt("%.1f s", secs)};
}

Outcome causality() {
  ModelConfig c;
  c.mode = LmMode::kUnidirectional;
  c.num_layers = 2;
  c.model_dim = 16;
  c.num_heads = 2;
  c.ffn_dim = 32;
  c.max_len = 24;
  c.vocab_size = 30;
  LanguageModel model(c, 23);
  Rng rng(24);
  for (Parameter* p : model.parameters()) {
    for (double& v : p->value.values()) v += 0.3 * rng.normal();
  }
  std::size_t violations = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 2 + rng.uniform_index(c.max_len - 1);
    std::vector<TokenId> ids(n);
    for (auto& t : ids) t = static_cast<TokenId>(rng.uniform_index(c.vocab_size));
    const std::size_t t = rng.uniform_index(n - 1);
    auto perturbed = ids;
    for (std::size_t i = t + 1; i < n; ++i) {
      perturbed[i] = static_cast<TokenId>(rng.uniform_index(c.vocab_size));
    }
    const Tensor a = model.log_probs(ids);
    const Tensor b = model.log_probs(perturbed);
    for (std::size_t r = 0; r <= t; ++r) {
      for (std::size_t v = 0; v < c.vocab_size; ++v) {
        if (a.at(r, v) != b.at(r, v)) ++violations;
      }
    }
  }
  return {violations == 0, "100 trials, " + std::to_string(violations) + " differing values"};
}

Outcome scoring_construction() {
  std::vector<std::string> words;
  for (int i = 0; i < 40; ++i) words.push_back("w" + std::to_string(i));
  const Vocabulary vocab =
      Vocabulary::build(std::vector<std::vector<std::string>>{words}, words.size());
  ModelConfig c;
  c.num_layers = 1;
  c.model_dim = 8;
  c.num_heads = 2;
  c.ffn_dim = 8;
  c.max_len = 128;
  c.vocab_size = vocab.size();
  const LanguageModel bi(c, 31);
  c.mode = LmMode::kUnidirectional;
  const LanguageModel uni(c, 32);
  Rng rng(33);
  std::size_t bad = 0;
  for (std::size_t n = 1; n <= 128; ++n) {
    std::vector<std::string> sentence(n);
    for (auto& w : sentence) w = words[rng.uniform_index(words.size())];
    const auto ids = vocab.encode(sentence);
    const auto instances = expand_masked_instances(ids, c.max_len);
    std::vector<int> covered(n, 0);
    bool ok = instances.size() == n;
    for (const auto& inst : instances) {
      std::size_t masks = 0;
      for (std::size_t i = 0; i < inst.input.size(); ++i) {
        if (inst.input[i] == kMaskId) {
          ++masks;
          if (i != inst.position) ok = false;
        } else if (inst.input[i] != ids[i]) {
          ok = false;
        }
      }
      ok = ok && masks == 1 && inst.input.size() == n && inst.label == ids[inst.position];
      if (inst.position < n) ++covered[inst.position];
    }
    ok = ok && std::all_of(covered.begin(), covered.end(), [](int k) { return k == 1; });
    const SentenceScore sb = score_bidirectional(bi, vocab, sentence);
    const SentenceScore su = score_unidirectional(uni, vocab, sentence);
    ok = ok && sb.per_word.size() == n && su.per_word.size() == n;
    if (!ok) ++bad;
  }
  return {bad == 0, "lengths 1..128, " + std::to_string(bad) + " failing lengths"};
}

Outcome zero_model_oracle() {
  const Vocabulary vocab = fixture_vocab();
  ModelConfig c;
  c.vocab_size = vocab.size();
  c.num_layers = 2;
  c.model_dim = 16;
  c.num_heads = 2;
  c.ffn_dim = 32;
  const LanguageModel bi = LanguageModel::zeros(c);
  c.mode = LmMode::kUnidirectional;
  const LanguageModel uni = LanguageModel::zeros(c);
  const double lv = std::log(static_cast<double>(vocab.size()));
  double worst = 0.0;
  std::size_t count = 0;
  for (const auto& s : fixture_sentences()) {
    const double expected = -static_cast<double>(s.size()) * lv;
    worst = std::max(worst, std::abs(score_bidirectional(bi, vocab, s).total - expected));
    worst = std::max(worst, std::abs(score_unidirectional(uni, vocab, s).total - expected));
    ++count;
  }
  return {count > 0 && worst <= 1e-9,
          std::to_string(count) + " sentences, max deviation " + fmt("%.1e", worst)};
}

Outcome wer_oracle() {
  const auto start = Clock::now();
  const auto seqs = testing::all_sequences(6);
  const auto dist = testing::edit_distance_oracle(6);
  std::size_t pairs = 0, mismatches = 0;
  for (std::size_t i = 0; i < seqs.size(); ++i) {
    for (std::size_t j = 0; j < seqs.size(); ++j) {
      ++pairs;
      if (seqs[i].empty()) {
        // An empty reference has no defined rate and must be rejected.
        try {
          wer(seqs[i], seqs[j]);
          ++mismatches;
        } catch (const DataError&) {
        }
        continue;
      }
      const WerResult r = wer(seqs[i], seqs[j]);
      if (static_cast<int>(r.counts.errors()) != dist[i][j] || r.counts.ref_words != seqs[i].size())
        ++mismatches;
    }
  }
  const auto lists = read_nbest(kFixtures / "nbest.jsonl");
  std::size_t oracle_worse = 0;
  for (const auto& list : lists) {
    const auto top = wer(*list.reference, list.entries.front().text).counts.errors();
    if (oracle_wer(list).result.counts.errors() > top) ++oracle_worse;
  }
  const auto oracle_total = oracle_report(lists).total.errors();
  const auto top_total = top1_report(lists).total.errors();
  const double secs = seconds_since(start);
  return {mismatches == 0 && oracle_worse == 0 && oracle_total < top_total && secs < 60.0,
          std::to_string(pairs) + " pairs, " + std::to_string(mismatches) + " mismatches; " +
              std::to_string(lists.size()) + " lists, oracle errors " +
              std::to_string(oracle_total) + " vs 1-best " + std::to_string(top_total) + ", " +
              fmt("%.1f s", secs)};
}

bool ranks_equal(const std::vector<ScoredHypothesis>& a, const std::vector<ScoredHypothesis>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].am_rank != b[i].am_rank) return false;
  }
  return true;
}

Outcome rescoring_identities() {
  const Vocabulary vocab = fixture_vocab();
  ModelConfig c;
  c.vocab_size = vocab.size();
  c.num_layers = 1;
  c.model_dim = 16;
  c.num_heads = 2;
  c.ffn_dim = 32;
  LanguageModel bi(c, 41);
  c.mode = LmMode::kUnidirectional;
  LanguageModel uni(c, 42);
  Rng rng(43);
  for (LanguageModel* m : {&bi, &uni}) {
    for (Parameter* p : m->parameters()) {
      for (double& v : p->value.values()) v += 0.2 * rng.normal();
    }
  }
  std::vector<NBestList> lists = read_nbest(kFixtures / "nbest.jsonl");
  for (const auto& l : read_nbest(kFixtures / "hand_nbest.jsonl")) lists.push_back(l);
  const auto scores = score_nbest_lists(lists, LmScorer{&uni, &vocab}, LmScorer{&bi, &vocab});
  std::size_t failures = 0;
  for (std::size_t i = 0; i < lists.size(); ++i) {
    const auto& list = lists[i];
    const auto& s = scores[i];
    // lambda = 0: AM order.
    const auto am = rescore_nbest(list, s, 0.0, 0.5);
    for (std::size_t k = 0; k < am.size(); ++k) {
      if (am[k].am_rank != k + 1) ++failures;
    }
    // lambda = 1: order of the combined LM score, AM rank breaking ties.
    const auto lm = rescore_nbest(list, s, 1.0, 0.5);
    std::vector<std::size_t> order(list.entries.size());
    for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return s[a].combined(0.5) > s[b].combined(0.5);
    });
    for (std::size_t k = 0; k < order.size(); ++k) {
      if (lm[k].am_rank != order[k] + 1) ++failures;
    }
    // alpha = 1: identical to bi-only.
    std::vector<double> bi_only;
    for (const auto& h : s) {
      if (h.combined(1.0) != *h.bi) ++failures;
      bi_only.push_back(*h.bi);
    }
    for (double lambda : {0.2, 0.5, 0.8}) {
      const auto both = rescore_nbest(list, s, lambda, 1.0);
      const auto single = rescore_nbest(list, bi_only, lambda);
      for (std::size_t k = 0; k < both.size(); ++k) {
        if (both[k].am_rank != single[k].am_rank || both[k].score != single[k].score) ++failures;
      }
    }
    // A constant added to every LM score of a list does not change its ranking.
    for (double shift : {-17.25, 3.5, 250.0}) {
      std::vector<double> base, shifted;
      for (const auto& h : s) {
        base.push_back(h.combined(0.5));
        shifted.push_back(h.combined(0.5) + shift);
      }
      for (double lambda : default_lambda_grid()) {
        if (!ranks_equal(rescore_nbest(list, base, lambda), rescore_nbest(list, shifted, lambda)))
          ++failures;
      }
    }
  }
  return {failures == 0,
          std::to_string(lists.size()) + " lists, " + std::to_string(failures) + " violations"};
}

struct Trained {
  LanguageModel model;
  HeldoutMetrics heldout;
  double seconds = 0.0;
};

ModelConfig desk_model(LmMode mode, std::size_t vocab_size) {
  ModelConfig c;
  c.mode = mode;
  c.num_layers = 2;
  c.model_dim = 64;
  c.num_heads = 2;
  c.ffn_dim = 256;
  c.max_len = 64;
  c.vocab_size = vocab_size;
  c.dropout = 0.1;
  return c;
}

Trained train_desk(LmMode mode, const Vocabulary& vocab,
                   const std::vector<std::vector<std::string>>& train_sentences,
                   const std::vector<std::vector<std::string>>& heldout_sentences,
                   std::uint64_t steps, std::uint64_t seed, std::size_t batch_size = 32) {
  const auto start = Clock::now();
  TrainConfig tc;
  tc.model = desk_model(mode, vocab.size());
  tc.adam.learning_rate = 1e-3;
  tc.batch_size = batch_size;
  tc.max_steps = steps;
  tc.eval_interval = steps;
  tc.seed = seed;
  TrainingData data;
  data.vocab = {vocab.hash(), ""};
  for (const auto& s : train_sentences) data.train.push_back(vocab.encode(s));
  for (const auto& s : heldout_sentences) data.heldout.push_back(vocab.encode(s));
  Trainer trainer(tc, std::move(data));
  TrainResult result = trainer.run();
  const HeldoutMetrics m = evaluate_heldout(result.checkpoint.model, trainer.heldout_instances());
  return {std::move(result.checkpoint.model), m, seconds_since(start)};
}

Outcome desk_learning() {
  const synthetic::TopicGrammar grammar;
  Rng rng(mix_seed(7, 1));
  const auto corpus = grammar.sentences(20000, rng);
  const std::vector<std::vector<std::string>> train(corpus.begin(), corpus.begin() + 19000);
  const std::vector<std::vector<std::string>> heldout(corpus.begin() + 19000, corpus.end());
  const Vocabulary vocab = Vocabulary::build(train, 10000);
  const Trained t = train_desk(LmMode::kBidirectional, vocab, train, heldout, 4000, 7);
  const double lv = std::log(static_cast<double>(vocab.size()));
  const double chance = 1.0 / static_cast<double>(vocab.size());
  return {t.heldout.loss < lv - 0.5 && t.heldout.accuracy > 10.0 * chance && t.seconds < 1800.0,
          "V=" + std::to_string(vocab.size()) + ", held-out loss " + fmt("%.3f", t.heldout.loss) +
              " (ln V - 0.5 = " + fmt("%.3f", lv - 0.5) + "), accuracy " +
              fmt("%.3f", t.heldout.accuracy) + " (10x chance = " + fmt("%.3f", 10.0 * chance) +
              "), " + fmt("%.0f s", t.seconds)};
}

struct SeedTrend {
  ErrorCounts baseline, uni, bi;
  // uni errors minus bi errors on the early-corruption lists.
  long early_gap_signed = 0, late_gap_signed = 0;
  bool holds() const {
    return uni.errors() < baseline.errors() && bi.errors() < baseline.errors() &&
           bi.errors() <= uni.errors() && early_gap_signed >= late_gap_signed;
  }
};

std::vector<ErrorCounts> per_utterance(std::span<const NBestList> lists,
                                       std::span<const std::string> hyps) {
  std::vector<ErrorCounts> out;
  for (std::size_t i = 0; i < lists.size(); ++i) out.push_back(wer(*lists[i].reference, hyps[i]).counts);
  return out;
}

PositionHistogram histogram(std::span<const NBestList> lists, std::span<const std::string> hyps) {
  PositionHistogram h;
  for (std::size_t i = 0; i < lists.size(); ++i) h.add(wer(*lists[i].reference, hyps[i]));
  return h;
}

SeedTrend trend_for_seed(std::uint64_t seed) {
  const synthetic::TopicGrammar grammar;
  Rng corpus_rng(mix_seed(seed, 1));
  const auto corpus = grammar.sentences(20000, corpus_rng);
  const std::vector<std::vector<std::string>> train(corpus.begin(), corpus.begin() + 19000);
  const std::vector<std::vector<std::string>> heldout(corpus.begin() + 19000, corpus.end());
  const Vocabulary vocab = Vocabulary::build(train, 10000);

  synthetic::NBestOptions opt;
  Rng list_rng(mix_seed(seed, 2));
  const auto dev = synthetic::make_nbest_lists(grammar, 150, opt, list_rng, "dev");
  const auto test = synthetic::make_nbest_lists(grammar, 300, opt, list_rng, "test");
  synthetic::NBestOptions early_opt = opt;
  early_opt.early_window = 5;
  early_opt.min_length = 11;
  const auto early = synthetic::make_nbest_lists(grammar, 300, early_opt, list_rng, "early");

  const Trained bi = train_desk(LmMode::kBidirectional, vocab, train, heldout, 6000, seed, 64);
  const Trained uni = train_desk(LmMode::kUnidirectional, vocab, train, heldout, 3000, seed, 32);
  const LmScorer bi_scorer{&bi.model, &vocab};
  const LmScorer uni_scorer{&uni.model, &vocab};

  const auto grid = default_lambda_grid();
  SeedTrend out;
  out.baseline = top1_report(test).total;
  std::vector<std::string> bi_early, uni_early;
  for (const bool use_bi : {true, false}) {
    const std::optional<LmScorer> u = use_bi ? std::nullopt : std::optional(uni_scorer);
    const std::optional<LmScorer> b = use_bi ? std::optional(bi_scorer) : std::nullopt;
    const auto dev_scores = score_nbest_lists(dev, u, b);
    const double lambda = sweep_lambda(dev, dev_scores, grid).best_lambda;
    const auto test_scores = score_nbest_lists(test, u, b);
    const auto top = rescored_top1(test, test_scores, lambda);
    ErrorCounts total;
    for (const auto& e : per_utterance(test, top)) total += e;
    (use_bi ? out.bi : out.uni) = total;
    const auto early_scores = score_nbest_lists(early, u, b);
    (use_bi ? bi_early : uni_early) = rescored_top1(early, early_scores, lambda);
  }
  const PositionHistogram hb = histogram(early, bi_early);
  const PositionHistogram hu = histogram(early, uni_early);
  out.early_gap_signed = static_cast<long>(hu.range(0, 5)) - static_cast<long>(hb.range(0, 5));
  out.late_gap_signed =
      static_cast<long>(hu.range(10, SIZE_MAX)) - static_cast<long>(hb.range(10, SIZE_MAX));
  return out;
}

Outcome trend_reproduction() {
  const auto start = Clock::now();
  std::size_t holding = 0;
  std::ostringstream detail;
  for (std::uint64_t seed : {1, 2, 3}) {
    const SeedTrend t = trend_for_seed(seed);
    if (t.holds()) ++holding;
    detail << "seed " << seed << ": WER baseline " << format_percent(t.baseline.wer()) << " uni "
           << format_percent(t.uni.wer()) << " bi " << format_percent(t.bi.wer())
           << ", early gap " << t.early_gap_signed << " late gap " << t.late_gap_signed
           << (t.holds() ? " holds" : " fails") << "; ";
  }
  detail << holding << "/3 seeds, " << fmt("%.0f s", seconds_since(start));
  return {holding >= 2, detail.str()};
}

std::string read_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome reproducibility() {
  const fs::path root = testing::scratch_dir("acceptance-repro");
  std::ostringstream sink;
  CliEnvironment env{&sink, &sink, [](const char*) -> const char* { return nullptr; }};
  const std::string corpus = (kFixtures / "corpus.txt").string();
  const std::string nbest = (kFixtures / "nbest.jsonl").string();
  const std::string sentences = (kFixtures / "sentences.txt").string();
  const std::vector<std::string> reports = {"vocab/vocab.txt",     "train/checkpoint.bin",
                                            "train/metrics.jsonl", "score/scores.jsonl",
                                            "rescore/rescored.jsonl", "rescore/top1.txt",
                                            "evaluate/wer.csv",    "evaluate/table.csv"};
  // Checkpoints record the vocabulary path, so both runs use the same
  // directory and the first run's reports are kept aside.
  std::vector<std::string> first;
  for (int run = 0; run < 2; ++run) {
    const fs::path d = root / "run";
    fs::remove_all(d);
    const std::vector<std::vector<std::string>> steps = {
        {"build-vocab", "--corpus", corpus, "--out", (d / "vocab").string()},
        {"train", "--seed", "5", "--corpus", corpus, "--vocab", (d / "vocab/vocab.txt").string(),
         "--steps", "100", "--eval-interval", "50", "--out", (d / "train").string()},
        {"score", "--checkpoint", (d / "train/checkpoint.bin").string(), "--input", sentences,
         "--out", (d / "score").string()},
        {"rescore", "--checkpoint", (d / "train/checkpoint.bin").string(), "--nbest", nbest,
         "--lambda", "0.3", "--out", (d / "rescore").string()},
        {"evaluate", "--nbest", nbest, "--hyp", (d / "rescore/top1.txt").string(), "--out",
         (d / "evaluate").string()}};
    for (const auto& args : steps) {
      if (run_cli(args, env) != kExitOk) return {false, args[0] + " failed: " + sink.str()};
    }
    if (run == 0) {
      for (const auto& r : reports) first.push_back(read_bytes(d / r));
    }
  }
  std::size_t differing = 0;
  std::string names;
  for (std::size_t i = 0; i < reports.size(); ++i) {
    if (first[i].empty() || first[i] != read_bytes(root / "run" / reports[i])) {
      ++differing;
      names += " " + reports[i];
    }
  }
  return {differing == 0, std::to_string(reports.size()) + " report files, " +
                              std::to_string(differing) + " differ" + names};
}

struct Criterion {
  int id;
  const char* name;
  std::function<Outcome()> run;
};

}  // namespace
}  // namespace sanlm

int main(int argc, char** argv) {
  using namespace sanlm;
  const std::vector<Criterion> criteria = {
      {1, "gradient correctness", gradient_correctness},
      {2, "causality", causality},
      {3, "scoring construction", scoring_construction},
      {4, "zero-model oracle", zero_model_oracle},
      {5, "WER oracle equivalence", wer_oracle},
      {6, "rescoring identities", rescoring_identities},
      {7, "desk-scale learning", desk_learning},
      {8, "trend reproduction", trend_reproduction},
      {9, "reproducibility", reproducibility},
  };
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));
  int failed = 0;
  for (const auto& c : criteria) {
    if (!selected.empty() && !selected.count(c.id)) continue;
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failed;
    std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << c.id << " (" << c.name
              << "): " << o.detail << std::endl;
  }
  return failed == 0 ? 0 : 1;
}
