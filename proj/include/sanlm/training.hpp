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

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sanlm/adam.hpp"
#include "sanlm/checkpoint.hpp"
#include "sanlm/corpus.hpp"
#include "sanlm/model.hpp"

namespace sanlm {

struct TrainConfig {
  ModelConfig model;
  AdamConfig adam;
  std::size_t batch_size = 32;
  std::uint64_t max_steps = 1000;
  std::uint64_t eval_interval = 100;
  // 0 writes only the final checkpoint.
  std::uint64_t checkpoint_interval = 0;
  std::uint64_t seed = 1;
  // Empty disables checkpoint files.
  std::filesystem::path checkpoint_dir;

  void validate() const;
};

struct MetricRecord {
  std::uint64_t step = 0;
  std::string split;  // "train" or "heldout"
  double loss = 0.0;
  double accuracy = 0.0;

  // {"step":..,"split":..,"loss":..,"accuracy":..}
  std::string to_json_line() const;
  friend bool operator==(const MetricRecord&, const MetricRecord&) = default;
};

struct HeldoutMetrics {
  double loss = 0.0;
  double accuracy = 0.0;
  std::size_t positions = 0;
};

// Inference-mode mean loss and top-1 accuracy over every labelled position.
// Throws DataError on an empty set.
HeldoutMetrics evaluate_heldout(const LanguageModel& model,
                                std::span<const TrainingInstance> instances,
                                std::size_t batch_size = 64);

struct TrainingData {
  std::vector<std::vector<TokenId>> train;
  std::vector<std::vector<TokenId>> heldout;
  VocabularyRef vocab;
};

struct TrainResult {
  Checkpoint checkpoint;
  std::vector<MetricRecord> log;
  std::size_t skipped_sentences = 0;
};

using MetricSink = std::function<void(const MetricRecord&)>;

// Instance k of the training stream comes from epoch k / N, slot k % N of
// that epoch's shuffled order; masks, shuffles and dropout all draw from
// streams derived from (seed, epoch, index, step), so a run resumed from a
// checkpoint replays exactly what an uninterrupted run would have done.
class Trainer {
 public:
  Trainer(TrainConfig config, TrainingData data);

  // Continue from a checkpoint saved with optimizer state.
  void resume(Checkpoint checkpoint);

  // Runs until config.max_steps; returns the final state.
  TrainResult run(const MetricSink& sink = {});

  const std::vector<TrainingInstance>& heldout_instances() const { return heldout_; }
  std::size_t skipped_sentences() const { return skipped_; }
  std::uint64_t step() const { return step_; }
  const LanguageModel& model() const { return model_; }

  // Instances for global stream positions [first, first + count).
  std::vector<TrainingInstance> stream_instances(std::uint64_t first, std::size_t count);

 private:
  std::optional<TrainingInstance> make_instance(std::span<const TokenId> sentence, Rng& rng) const;
  const std::vector<std::size_t>& epoch_order(std::uint64_t epoch);
  Checkpoint snapshot() const;
  void write_checkpoint(const Checkpoint& ckpt) const;

  TrainConfig config_;
  TrainingData data_;
  LanguageModel model_;
  AdamState adam_;
  std::uint64_t step_ = 0;
  std::vector<std::size_t> usable_;
  std::vector<TrainingInstance> heldout_;
  std::size_t skipped_ = 0;
  std::uint64_t cached_epoch_ = UINT64_MAX;
  std::vector<std::size_t> cached_order_;
};

TrainResult train(const TrainConfig& config, TrainingData data, const MetricSink& sink = {});

}  // namespace sanlm
