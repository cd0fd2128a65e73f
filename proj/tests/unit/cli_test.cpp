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

#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "json.hpp"
#include "sanlm/checkpoint.hpp"
#include "sanlm/cli.hpp"
#include "sanlm/errors.hpp"
#include "sanlm/evaluation.hpp"
#include "sanlm/nbest.hpp"
#include "sanlm/run_config.hpp"
#include "testing.hpp"

namespace sanlm {
namespace {

namespace fs = std::filesystem;
const fs::path kFixtures = SANLM_FIXTURE_DIR;

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> lines(const fs::path& p) {
  std::ifstream in(p);
  std::vector<std::string> out;
  std::string line;
  while (std::getline(in, line)) out.push_back(line);
  return out;
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir = testing::scratch_dir(std::string("cli-") + info->name());
  }

  int run(std::vector<std::string> args) {
    out.str("");
    err.str("");
    CliEnvironment env{&out, &err, [this](const char* name) -> const char* {
                         auto it = vars.find(name);
                         return it == vars.end() ? nullptr : it->second.c_str();
                       }};
    return run_cli(args, env);
  }

  fs::path path(const std::string& name) const { return dir / name; }

  // build-vocab then train a small model of the given mode.
  fs::path trained(const std::string& mode, const std::string& steps = "10") {
    EXPECT_EQ(run({"build-vocab", "--corpus", (kFixtures / "corpus.txt").string(), "--size",
                   "1000", "--out", path("vocab").string()}),
              0)
        << err.str();
    const fs::path out_dir = path("train-" + mode + "-" + steps);
    EXPECT_EQ(run({"train", "--corpus", (kFixtures / "corpus.txt").string(), "--vocab",
                   path("vocab/vocab.txt").string(), "--mode", mode, "--steps", steps,
                   "--set", "model_dim=16", "--set", "ffn_dim=32", "--set", "num_layers=1",
                   "--batch-size", "8", "--lr", "0.001", "--eval-interval", "5", "--out",
                   out_dir.string()}),
              0)
        << err.str();
    return out_dir / "checkpoint.bin";
  }

  fs::path dir;
  std::ostringstream out, err;
  std::map<std::string, std::string> vars;
};

TEST_F(Cli, BuildVocabTinyCorpus) {
  std::ofstream(path("tiny.txt")) << "a a a b b c d e f g\nf g h\n";
  ASSERT_EQ(run({"build-vocab", "--corpus", path("tiny.txt").string(), "--size", "5", "--out",
                 path("v").string()}),
            0);
  const auto v = lines(path("v/vocab.txt"));
  ASSERT_EQ(v.size(), 10u);
  EXPECT_EQ(v[5], "a");
  EXPECT_TRUE(fs::exists(path("v") / RunConfig::kFileName));
  const std::string first = read_file(path("v/vocab.txt"));
  ASSERT_EQ(run({"build-vocab", "--corpus", path("tiny.txt").string(), "--size", "5", "--out",
                 path("v").string()}),
            0);
  EXPECT_EQ(read_file(path("v/vocab.txt")), first);
}

TEST_F(Cli, MissingInputNamesPath) {
  EXPECT_EQ(run({"build-vocab", "--corpus", path("nowhere.txt").string(), "--out",
                 path("v").string()}),
            kExitData);
  EXPECT_NE(err.str().find("nowhere.txt"), std::string::npos) << err.str();
}

TEST_F(Cli, UsageErrors) {
  EXPECT_EQ(run({}), kExitUsage);
  EXPECT_EQ(run({"frobnicate"}), kExitUsage);
  EXPECT_EQ(run({"build-vocab", "--out", path("v").string()}), kExitUsage);
  EXPECT_NE(err.str().find("corpus"), std::string::npos);
  EXPECT_EQ(run({"score", "--mode", "sideways"}), kExitUsage);
  EXPECT_EQ(run({"--help"}), kExitOk);
}

TEST_F(Cli, ConfigLayering) {
  std::ofstream(path("cfg.json")) << R"({"seed": 11, "vocab_size": 3, "lambda": 0.25})";
  vars["SANLM_SEED"] = "12";
  vars["SANLM_LAMBDA"] = "0.75";
  std::ofstream(path("tiny.txt")) << "a b c d\n";
  ASSERT_EQ(run({"build-vocab", "--config", path("cfg.json").string(), "--corpus",
                 path("tiny.txt").string(), "--out", path("v").string()}),
            0)
      << err.str();
  auto resolved = nlohmann::json::parse(read_file(path("v") / RunConfig::kFileName));
  EXPECT_EQ(resolved["vocab_size"], 3);
  EXPECT_EQ(resolved["seed"], 12);
  EXPECT_EQ(resolved["lambda"], 0.75);
  EXPECT_EQ(lines(path("v/vocab.txt")).size(), 8u);

  ASSERT_EQ(run({"generate", "--config", path("cfg.json").string(), "--seed", "13",
                 "--sentences", "3", "--lists", "1", "--out", path("g").string()}),
            0);
  resolved = nlohmann::json::parse(read_file(path("g") / RunConfig::kFileName));
  EXPECT_EQ(resolved["seed"], 13);
}

TEST_F(Cli, UnknownKeysRejected) {
  std::ofstream(path("cfg.json")) << R"({"seed": 1, "learning_rat": 0.1})";
  EXPECT_EQ(run({"generate", "--config", path("cfg.json").string(), "--out", path("g").string()}),
            kExitUsage);
  EXPECT_NE(err.str().find("learning_rat"), std::string::npos);
  EXPECT_EQ(run({"generate", "--set", "nope=1", "--out", path("g").string()}), kExitUsage);
  std::ofstream(path("bad.json")) << R"({"seed": "one"})";
  EXPECT_EQ(run({"generate", "--config", path("bad.json").string(), "--out", path("g").string()}),
            kExitUsage);
}

TEST_F(Cli, TrainSmokeAndDeterminism) {
  const fs::path a = trained("bi");
  const Checkpoint ckpt = load_checkpoint(a);
  EXPECT_EQ(ckpt.step, 10u);
  const auto metrics = lines(a.parent_path() / "metrics.jsonl");
  EXPECT_FALSE(metrics.empty());
  const std::string first = read_file(a);
  fs::remove_all(a.parent_path());
  trained("bi");
  EXPECT_EQ(read_file(a), first);
}

TEST_F(Cli, UniTrainingReducesLoss) {
  const fs::path ckpt = trained("uni", "60");
  std::vector<double> heldout;
  for (const auto& l : lines(ckpt.parent_path() / "metrics.jsonl")) {
    const auto j = nlohmann::json::parse(l);
    if (j["split"] == "heldout") heldout.push_back(j["loss"]);
  }
  ASSERT_GE(heldout.size(), 2u);
  EXPECT_LT(heldout.back(), heldout.front());
}

TEST_F(Cli, ScoreSevenWords) {
  const fs::path ckpt = trained("bi");
  ASSERT_EQ(run({"score", "--checkpoint", ckpt.string(), "--input",
                 (kFixtures / "sentences.txt").string(), "--out", path("s").string()}),
            0)
      << err.str();
  const auto rows = lines(path("s/scores.jsonl"));
  ASSERT_EQ(rows.size(), 7u);
  const auto j = nlohmann::json::parse(rows[0]);
  EXPECT_EQ(j["text"], "move the vat over the hot fire");
  EXPECT_EQ(j["per_word"].size(), 7u);
  EXPECT_EQ(j["oov_count"], 3);  // "move", "vat" and "fire" are outside the grammar
  const std::string first = read_file(path("s/scores.jsonl"));
  ASSERT_EQ(run({"score", "--checkpoint", ckpt.string(), "--input",
                 (kFixtures / "sentences.txt").string(), "--out", path("s").string()}),
            0);
  EXPECT_EQ(read_file(path("s/scores.jsonl")), first);

  std::ofstream(path("empty.txt")).close();
  ASSERT_EQ(run({"score", "--checkpoint", ckpt.string(), "--input", path("empty.txt").string(),
                 "--out", path("e").string()}),
            0);
  EXPECT_EQ(read_file(path("e/scores.jsonl")), "");
}

TEST_F(Cli, ScoreRejectsWrongVocabulary) {
  const fs::path ckpt = trained("bi");
  std::ofstream(path("other.txt")) << "x y z\n";
  ASSERT_EQ(run({"build-vocab", "--corpus", path("other.txt").string(), "--out",
                 path("ov").string()}),
            0);
  EXPECT_EQ(run({"score", "--checkpoint", ckpt.string(), "--vocab",
                 path("ov/vocab.txt").string(), "--input", (kFixtures / "sentences.txt").string(),
                 "--out", path("s").string()}),
            kExitData);
}

TEST_F(Cli, RescoreLambdaZeroKeepsFirstHypothesis) {
  const fs::path ckpt = trained("bi");
  const fs::path nbest = kFixtures / "nbest.jsonl";
  ASSERT_EQ(run({"rescore", "--nbest", nbest.string(), "--checkpoint", ckpt.string(),
                 "--lambda", "0", "--out", path("r").string()}),
            0)
      << err.str();
  const auto lists = read_nbest(nbest);
  const auto top1 = read_transcripts(path("r/top1.txt"));
  ASSERT_EQ(top1.size(), lists.size());
  for (std::size_t i = 0; i < lists.size(); ++i) EXPECT_EQ(top1[i].text, lists[i].entries[0].text);
}

TEST_F(Cli, BothCheckpointsWithAlphaOneEqualBiOnly) {
  const fs::path bi = trained("bi");
  const fs::path uni = trained("uni");
  const fs::path nbest = kFixtures / "nbest.jsonl";
  ASSERT_EQ(run({"rescore", "--nbest", nbest.string(), "--checkpoint", bi.string(),
                 "--checkpoint", uni.string(), "--lambda", "0.5", "--alpha", "1", "--out",
                 path("both").string()}),
            0)
      << err.str();
  ASSERT_EQ(run({"rescore", "--nbest", nbest.string(), "--checkpoint", bi.string(), "--lambda",
                 "0.5", "--out", path("bi").string()}),
            0);
  EXPECT_EQ(read_file(path("both/rescored.jsonl")), read_file(path("bi/rescored.jsonl")));
  EXPECT_EQ(read_file(path("both/top1.txt")), read_file(path("bi/top1.txt")));
  EXPECT_EQ(run({"rescore", "--nbest", nbest.string(), "--checkpoint", bi.string(),
                 "--checkpoint", bi.string(), "--out", path("x").string()}),
            kExitUsage);
}

TEST_F(Cli, HandComputedRanking) {
  // A zero model scores every n-word hypothesis -n·ln V, so the ranking can
  // be worked out by hand.
  std::istringstream vocab_text("the cow feeds goat a wolf howls near\n");
  const Vocabulary vocab = Vocabulary::build(vocab_text, 100);
  vocab.save(path("vocab.txt"));
  ModelConfig mc;
  mc.model_dim = 8;
  mc.num_heads = 2;
  mc.ffn_dim = 8;
  mc.max_len = 16;
  mc.vocab_size = vocab.size();
  save_checkpoint(path("zero.bin"),
                  Checkpoint{LanguageModel::zeros(mc), {vocab.hash(), path("vocab.txt").string()},
                             std::nullopt, 0, {}});
  ASSERT_EQ(run({"rescore", "--nbest", (kFixtures / "hand_nbest.jsonl").string(), "--checkpoint",
                 path("zero.bin").string(), "--lambda", "0.5", "--out", path("r").string()}),
            0)
      << err.str();
  const double lv = std::log(static_cast<double>(vocab.size()));  // V = 13
  // hand-1: "the cow feeds" 0.5(-3) + 0.5(-3 lv); "the cow" 0.5(-2.5) + 0.5(-2 lv);
  //         "the cow feeds the goat" 0.5(-4) + 0.5(-5 lv).
  // hand-2: "a wolf howls near" 0.5(-1) + 0.5(-4 lv); "a wolf howls" 0.5(-1.2) + 0.5(-3 lv).
  const auto rows = lines(path("r/rescored.jsonl"));
  ASSERT_EQ(rows.size(), 2u);
  const auto h1 = nlohmann::json::parse(rows[0])["hypotheses"];
  EXPECT_EQ(h1[0]["text"], "the cow");
  EXPECT_EQ(h1[1]["text"], "the cow feeds");
  EXPECT_EQ(h1[2]["text"], "the cow feeds the goat");
  EXPECT_NEAR(h1[0]["score"].get<double>(), -1.25 - lv, 1e-9);
  const auto h2 = nlohmann::json::parse(rows[1])["hypotheses"];
  EXPECT_EQ(h2[0]["text"], "a wolf howls");
  EXPECT_NEAR(h2[0]["score"].get<double>(), -0.6 - 1.5 * lv, 1e-9);
  EXPECT_EQ(h2[0]["am_rank"], 2);
}

TEST_F(Cli, EvaluateAndAnalyze) {
  const fs::path nbest = kFixtures / "nbest.jsonl";
  const auto lists = read_nbest(nbest);
  std::vector<Transcript> refs;
  for (const auto& l : lists) refs.push_back({l.utterance_id, *l.reference});
  write_transcripts(path("refs.txt"), refs);

  ASSERT_EQ(run({"evaluate", "--hyp", path("refs.txt").string(), "--references",
                 path("refs.txt").string(), "--out", path("perfect").string()}),
            0)
      << err.str();
  EXPECT_EQ(read_wer_report(path("perfect/wer.csv")).total.errors(), 0u);
  EXPECT_NE(read_file(path("perfect/table.csv")).find("rescored,0,"), std::string::npos);
  EXPECT_NE(out.str().find("0.00%"), std::string::npos);

  ASSERT_EQ(run({"evaluate", "--nbest", nbest.string(), "--out", path("e").string()}), 0)
      << err.str();
  const auto table = lines(path("e/table.csv"));
  ASSERT_EQ(table.size(), 3u);
  EXPECT_EQ(table[1].rfind("1-best (baseline),", 0), 0u);
  EXPECT_EQ(table[2].rfind("5-best (oracle),", 0), 0u);

  ASSERT_EQ(run({"analyze-positions", "--nbest", nbest.string(), "--out", path("a").string()}),
            0);
  const WerReport report = read_wer_report(path("e/wer.csv"));
  EXPECT_EQ(read_histogram(path("a/positions.csv")).total(),
            report.total.substitutions + report.total.insertions);
  EXPECT_TRUE(fs::exists(path("a") / RunConfig::kFileName));
}

TEST_F(Cli, SweepWritesTable) {
  const fs::path ckpt = trained("bi");
  ASSERT_EQ(run({"sweep", "--nbest", (kFixtures / "nbest.jsonl").string(), "--checkpoint",
                 ckpt.string(), "--grid", "0,0.5,1", "--out", path("sw").string()}),
            0)
      << err.str();
  const auto rows = lines(path("sw/sweep.csv"));
  ASSERT_EQ(rows.size(), 4u);
  EXPECT_EQ(rows[0], "lambda,errors,ref_words,wer_percent");
  EXPECT_EQ(rows[2].rfind("0.5,", 0), 0u);
  EXPECT_TRUE(fs::exists(path("sw/sweep.summary.json")));
}

TEST(RunConfig, KeysAndTypes) {
  RunConfig c;
  EXPECT_EQ(c.seed(), 1u);
  EXPECT_EQ(c.threads(), 1u);
  c.set("mode", "uni", "test");
  EXPECT_EQ(c.mode(), LmMode::kUnidirectional);
  c.set("checkpoint", "a.bin,b.bin", "test");
  EXPECT_EQ(c.strings("checkpoint"), (std::vector<std::string>{"a.bin", "b.bin"}));
  EXPECT_THROW(c.set("seed", "-3", "test"), ParameterError);
  EXPECT_THROW(c.set("dropout", "high", "test"), ParameterError);
  EXPECT_THROW(c.merge_json(nlohmann::json::array(), "test"), ParameterError);
  const TrainConfig t = c.train_config(50);
  EXPECT_EQ(t.model.vocab_size, 50u);
  EXPECT_EQ(t.model.mode, LmMode::kUnidirectional);
  EXPECT_EQ(t.adam.learning_rate, 1e-4);
}

}  // namespace
}  // namespace sanlm
