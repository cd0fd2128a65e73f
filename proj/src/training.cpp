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

#include "sanlm/training.hpp"

#include <algorithm>
#include <numeric>

#include "json.hpp"
#include "sanlm/errors.hpp"

namespace sanlm {
namespace {

// Stream tags for derived generators.
constexpr std::uint64_t kInitStream = 1;
constexpr std::uint64_t kShuffleStream = 2;
constexpr std::uint64_t kMaskStream = 3;
constexpr std::uint64_t kDropoutStream = 4;
constexpr std::uint64_t kHeldoutStream = 5;

struct LabelStats {
  double loss_sum = 0.0;
  double correct = 0.0;
  std::size_t count = 0;
};

LabelStats label_stats(const Tensor& lp, const Batch& batch) {
  LabelStats s;
  const std::size_t v = lp.cols();
  for (std::size_t k = 0; k < batch.labels.size(); ++k) {
    const double* row = lp.data() + k * v;
    const TokenId target = batch.labels[k].target;
    s.loss_sum -= row[target];
    // A target tied with k-1 other maxima earns 1/k.
    const double best = *std::max_element(row, row + v);
    if (row[target] == best) s.correct += 1.0 / static_cast<double>(std::count(row, row + v, best));
    ++s.count;
  }
  return s;
}

Var batch_loss(const Var& lp, const Batch& batch) {
  std::vector<TokenId> targets;
  targets.reserve(batch.labels.size());
  for (const LabelRef& l : batch.labels) targets.push_back(l.target);
  std::vector<std::uint8_t> mask(targets.size(), 1);
  return cross_entropy(lp, targets, mask);
}

}  // namespace

void TrainConfig::validate() const {
  model.validate();
  if (batch_size == 0) throw ParameterError("batch_size must be at least 1");
  if (eval_interval == 0) throw ParameterError("eval_interval must be at least 1");
  if (!(adam.learning_rate > 0.0)) throw ParameterError("learning_rate must be positive");
  if (!(adam.beta1 >= 0.0 && adam.beta1 < 1.0 && adam.beta2 >= 0.0 && adam.beta2 < 1.0)) {
    throw ParameterError("Adam betas must lie in [0, 1)");
  }
}

std::string MetricRecord::to_json_line() const {
  nlohmann::ordered_json j;
  j["step"] = step;
  j["split"] = split;
  j["loss"] = loss;
  j["accuracy"] = accuracy;
  return j.dump();
}

HeldoutMetrics evaluate_heldout(const LanguageModel& model,
                                std::span<const TrainingInstance> instances,
                                std::size_t batch_size) {
  if (instances.empty()) throw DataError("held-out evaluation needs at least one instance");
  LabelStats total;
  for (const Batch& batch : make_batches(instances, batch_size)) {
    if (batch.labels.empty()) continue;
    const Tensor lp = model.label_log_probs(batch).value();
    const LabelStats s = label_stats(lp, batch);
    total.loss_sum += s.loss_sum;
    total.correct += s.correct;
    total.count += s.count;
  }
  if (total.count == 0) throw DataError("held-out instances carry no labels");
  return {total.loss_sum / static_cast<double>(total.count),
          total.correct / static_cast<double>(total.count), total.count};
}

Trainer::Trainer(TrainConfig config, TrainingData data)
    : config_(std::move(config)),
      data_(std::move(data)),
      model_(config_.model, mix_seed(config_.seed, kInitStream)) {
  config_.validate();
  adam_ = AdamState::for_params(model_.parameters());
  Rng probe(0);
  for (std::size_t i = 0; i < data_.train.size(); ++i) {
    if (make_instance(data_.train[i], probe)) {
      usable_.push_back(i);
    } else {
      ++skipped_;
    }
  }
  if (usable_.empty()) {
    throw DataError("training corpus has no usable sentences (" + std::to_string(skipped_) +
                    " skipped as empty or longer than max_len)");
  }
  const Rng heldout_rng(mix_seed(config_.seed, kHeldoutStream));
  for (std::size_t i = 0; i < data_.heldout.size(); ++i) {
    Rng rng = heldout_rng.fork(i);
    if (auto inst = make_instance(data_.heldout[i], rng)) heldout_.push_back(std::move(*inst));
  }
}

std::optional<TrainingInstance> Trainer::make_instance(std::span<const TokenId> sentence,
                                                       Rng& rng) const {
  if (config_.model.mode == LmMode::kBidirectional) {
    return make_mlm_instance(sentence, config_.model.max_len, rng);
  }
  return make_unilm_instance(sentence, config_.model.max_len);
}

const std::vector<std::size_t>& Trainer::epoch_order(std::uint64_t epoch) {
  if (epoch != cached_epoch_) {
    cached_order_ = usable_;
    Rng rng(mix_seed(mix_seed(config_.seed, kShuffleStream), epoch));
    rng.shuffle(std::span<std::size_t>(cached_order_));
    cached_epoch_ = epoch;
  }
  return cached_order_;
}

std::vector<TrainingInstance> Trainer::stream_instances(std::uint64_t first, std::size_t count) {
  std::vector<TrainingInstance> out;
  out.reserve(count);
  const std::uint64_t n = usable_.size();
  const std::uint64_t mask_base = mix_seed(config_.seed, kMaskStream);
  for (std::uint64_t k = first; k < first + count; ++k) {
    const auto& order = epoch_order(k / n);
    Rng rng(mix_seed(mask_base, k));
    out.push_back(*make_instance(data_.train[order[k % n]], rng));
  }
  return out;
}

void Trainer::resume(Checkpoint checkpoint) {
  if (!(checkpoint.model.config() == config_.model)) {
    throw CheckpointMismatchError("resume: checkpoint model configuration differs");
  }
  if (!checkpoint.optimizer) {
    throw CheckpointError("resume: checkpoint carries no optimizer state");
  }
  if (checkpoint.rng.seed != config_.seed) {
    throw CheckpointMismatchError("resume: checkpoint was trained with seed " +
                                  std::to_string(checkpoint.rng.seed));
  }
  model_ = std::move(checkpoint.model);
  adam_ = std::move(*checkpoint.optimizer);
  step_ = checkpoint.step;
}

Checkpoint Trainer::snapshot() const {
  return Checkpoint{model_, data_.vocab, adam_, step_, RngState{config_.seed, step_}};
}

void Trainer::write_checkpoint(const Checkpoint& ckpt) const {
  if (config_.checkpoint_dir.empty()) return;
  std::filesystem::create_directories(config_.checkpoint_dir);
  save_checkpoint(config_.checkpoint_dir / "checkpoint.bin", ckpt);
  if (config_.checkpoint_interval != 0 && step_ % config_.checkpoint_interval == 0 &&
      step_ != config_.max_steps) {
    save_checkpoint(config_.checkpoint_dir / ("checkpoint-" + std::to_string(step_) + ".bin"),
                    ckpt);
  }
}

TrainResult Trainer::run(const MetricSink& sink) {
  std::vector<MetricRecord> log;
  auto emit = [&](MetricRecord rec) {
    if (sink) sink(rec);
    log.push_back(std::move(rec));
  };
  auto eval_heldout = [&] {
    if (heldout_.empty()) return;
    const HeldoutMetrics m = evaluate_heldout(model_, heldout_, config_.batch_size);
    emit({step_, "heldout", m.loss, m.accuracy});
  };

  if (step_ == 0) eval_heldout();
  const auto params = model_.parameters();
  const std::uint64_t dropout_base = mix_seed(config_.seed, kDropoutStream);
  while (step_ < config_.max_steps) {
    const auto instances = stream_instances(step_ * config_.batch_size, config_.batch_size);
    const Batch batch = make_batch(instances);
    Rng dropout_rng(mix_seed(dropout_base, step_));
    const ForwardContext ctx{true, true, &dropout_rng};
    Var lp = model_.label_log_probs(batch, ctx);
    Var loss = batch_loss(lp, batch);
    const LabelStats stats = label_stats(lp.value(), batch);
    backward(loss);
    adam_step(params, adam_, config_.adam);
    ++step_;
    emit({step_, "train", loss.value().item(),
          stats.correct / static_cast<double>(stats.count)});
    if (step_ % config_.eval_interval == 0 || step_ == config_.max_steps) eval_heldout();
    if (config_.checkpoint_interval != 0 && step_ % config_.checkpoint_interval == 0) {
      write_checkpoint(snapshot());
    }
  }
  Checkpoint final = snapshot();
  write_checkpoint(final);
  return TrainResult{std::move(final), std::move(log), skipped_};
}

TrainResult train(const TrainConfig& config, TrainingData data, const MetricSink& sink) {
  Trainer trainer(config, std::move(data));
  return trainer.run(sink);
}

}  // namespace sanlm
