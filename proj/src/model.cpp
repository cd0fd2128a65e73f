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

#include "sanlm/model.hpp"

#include "sanlm/corpus.hpp"
#include "sanlm/errors.hpp"

namespace sanlm {
namespace {

Tensor init_table(std::size_t rows, std::size_t cols, Rng& rng) {
  Tensor t({rows, cols});
  for (double& v : t.values()) v = rng.truncated_normal(0.02);
  return t;
}

std::vector<std::size_t> labels_per_instance(const Batch& batch) {
  std::vector<std::size_t> counts(batch.size, 0);
  for (const LabelRef& l : batch.labels) ++counts[l.instance];
  return counts;
}

}  // namespace

std::string_view mode_name(LmMode mode) {
  return mode == LmMode::kBidirectional ? "bi" : "uni";
}

LmMode parse_mode(std::string_view name) {
  if (name == "bi") return LmMode::kBidirectional;
  if (name == "uni") return LmMode::kUnidirectional;
  throw ParameterError("mode must be 'bi' or 'uni', got '" + std::string(name) + "'");
}

ModelConfig ModelConfig::paper_scale(LmMode mode, std::size_t vocab_size) {
  ModelConfig c;
  c.mode = mode;
  c.num_layers = 3;
  c.model_dim = 512;
  c.num_heads = 8;
  c.ffn_dim = 2048;
  c.max_len = 128;
  c.vocab_size = vocab_size;
  c.dropout = 0.1;
  return c;
}

void ModelConfig::validate() const {
  attention().validate();
  if (num_layers == 0) throw ParameterError("num_layers must be at least 1");
  if (max_len == 0) throw ParameterError("max_len must be at least 1");
  if (vocab_size <= kMaskId) {
    throw ParameterError("vocab_size " + std::to_string(vocab_size) +
                         " cannot hold the reserved tokens");
  }
}

LanguageModel::LanguageModel(const ModelConfig& config, std::uint64_t seed) : config_(config) {
  config_.validate();
  Rng rng(seed);
  const std::size_t d = config_.model_dim;
  params_.word_embedding = Parameter("embed.word", init_table(config_.vocab_size, d, rng));
  params_.position_embedding =
      Parameter("embed.position", init_table(config_.max_len, d, rng));
  for (std::size_t l = 0; l < config_.num_layers; ++l) {
    params_.layers.push_back(SanLayerParams::initialize(
        config_.attention(), rng, "layer" + std::to_string(l) + "."));
  }
  params_.output_bias = Parameter("output.bias", Tensor({config_.vocab_size}, 0.0));
}

LanguageModel::LanguageModel(const ModelConfig& config, LmParams params)
    : config_(config), params_(std::move(params)) {
  config_.validate();
  const std::size_t d = config_.model_dim;
  if (params_.word_embedding.value.shape() != Shape{config_.vocab_size, d} ||
      params_.position_embedding.value.shape() != Shape{config_.max_len, d} ||
      params_.output_bias.value.shape() != Shape{config_.vocab_size} ||
      params_.layers.size() != config_.num_layers) {
    throw DimensionError("language model parameters do not match the configuration");
  }
}

LanguageModel LanguageModel::zeros(const ModelConfig& config) {
  LanguageModel m(config, 0);
  for (Parameter* p : m.parameters()) {
    p->value.fill(p->name.ends_with(".gain") ? 1.0 : 0.0);
  }
  return m;
}

std::vector<Parameter*> LanguageModel::parameters() {
  std::vector<Parameter*> out{&params_.word_embedding, &params_.position_embedding};
  for (auto& layer : params_.layers) {
    for (Parameter* p : layer.parameters()) out.push_back(p);
  }
  out.push_back(&params_.output_bias);
  return out;
}

std::vector<const Parameter*> LanguageModel::parameters() const {
  auto view = const_cast<LanguageModel*>(this)->parameters();
  return {view.begin(), view.end()};
}

void LanguageModel::check_sequence(std::span<const TokenId> ids) const {
  if (ids.empty()) throw DataError("empty token sequence");
  if (ids.size() > config_.max_len) {
    throw SequenceTooLongError("sequence of " + std::to_string(ids.size()) +
                               " tokens exceeds max_len " + std::to_string(config_.max_len));
  }
  for (TokenId id : ids) {
    if (id >= config_.vocab_size) {
      throw VocabularyError("token id " + std::to_string(id) + " outside vocabulary of size " +
                            std::to_string(config_.vocab_size));
    }
  }
}

Var LanguageModel::embed(std::span<const TokenId> ids, const ForwardContext& ctx) const {
  check_sequence(ids);
  std::vector<TokenId> positions(ids.size());
  for (std::size_t i = 0; i < ids.size(); ++i) positions[i] = static_cast<TokenId>(i);
  return add(gather_rows(leaf(params_.word_embedding, ctx.track), ids),
             gather_rows(leaf(params_.position_embedding, ctx.track), positions));
}

Var LanguageModel::encode(std::span<const std::vector<TokenId>> sequences,
                          const ForwardContext& ctx) const {
  if (sequences.empty()) throw DataError("encode: no sequences");
  std::vector<TokenId> ids, positions;
  std::vector<std::size_t> lengths;
  for (const auto& seq : sequences) {
    check_sequence(seq);
    ids.insert(ids.end(), seq.begin(), seq.end());
    for (std::size_t i = 0; i < seq.size(); ++i) positions.push_back(static_cast<TokenId>(i));
    lengths.push_back(seq.size());
  }
  Var x = add(gather_rows(leaf(params_.word_embedding, ctx.track), ids),
              gather_rows(leaf(params_.position_embedding, ctx.track), positions));
  const bool causal = config_.mode == LmMode::kUnidirectional;
  const AttentionConfig attn = config_.attention();
  for (const auto& layer : params_.layers) {
    x = san_layer_segments(x, lengths, causal, layer, attn, ctx);
  }
  return x;
}

Var LanguageModel::encode(std::span<const TokenId> ids, const ForwardContext& ctx) const {
  std::vector<TokenId> seq(ids.begin(), ids.end());
  return encode(std::span<const std::vector<TokenId>>(&seq, 1), ctx);
}

Var LanguageModel::output_log_probs(const Var& hidden, const ForwardContext& ctx) const {
  Var logits = add_bias(matmul_nt(hidden, leaf(params_.word_embedding, ctx.track)),
                        leaf(params_.output_bias, ctx.track));
  return log_softmax_rows(logits);
}

Var LanguageModel::forward(std::span<const TokenId> ids, const ForwardContext& ctx) const {
  return output_log_probs(encode(ids, ctx), ctx);
}

Tensor LanguageModel::log_probs(std::span<const TokenId> ids) const {
  return forward(ids).value();
}

Var LanguageModel::label_log_probs(const Batch& batch, const ForwardContext& ctx) const {
  if (batch.size == 0) throw DataError("empty batch");
  if (batch.labels.empty()) throw DataError("batch has no labelled positions");
  std::vector<std::vector<TokenId>> seqs;
  std::vector<std::size_t> offsets;
  std::size_t offset = 0;
  for (std::size_t i = 0; i < batch.size; ++i) {
    auto row = batch.row(i);
    seqs.emplace_back(row.begin(), row.end());
    offsets.push_back(offset);
    offset += row.size();
  }
  Var hidden = encode(seqs, ctx);
  std::vector<TokenId> rows;
  rows.reserve(batch.labels.size());
  for (const LabelRef& l : batch.labels) {
    if (l.position >= batch.lengths[l.instance]) {
      throw DataError("label position " + std::to_string(l.position) +
                      " beyond instance length " + std::to_string(batch.lengths[l.instance]));
    }
    rows.push_back(static_cast<TokenId>(offsets[l.instance] + l.position));
  }
  return output_log_probs(gather_rows(hidden, rows), ctx);
}

namespace {

Var labelled_cross_entropy(const Var& lp, const Batch& batch) {
  std::vector<TokenId> targets;
  targets.reserve(batch.labels.size());
  for (const LabelRef& l : batch.labels) targets.push_back(l.target);
  std::vector<std::uint8_t> mask(targets.size(), 1);
  return cross_entropy(lp, targets, mask);
}

}  // namespace

Var LanguageModel::mlm_loss(const Batch& batch, const ForwardContext& ctx) const {
  const auto counts = labels_per_instance(batch);
  for (std::size_t i = 0; i < counts.size(); ++i) {
    if (counts[i] == 0) {
      throw DataError("masked instance " + std::to_string(i) + " has no masked positions");
    }
  }
  return labelled_cross_entropy(label_log_probs(batch, ctx), batch);
}

Var LanguageModel::next_word_loss(const Batch& batch, const ForwardContext& ctx) const {
  const auto counts = labels_per_instance(batch);
  for (std::size_t i = 0; i < counts.size(); ++i) {
    if (counts[i] == 0 || batch.lengths[i] == 0) {
      throw DataError("next-word instance " + std::to_string(i) + " is empty");
    }
  }
  return labelled_cross_entropy(label_log_probs(batch, ctx), batch);
}

Var LanguageModel::loss(const Batch& batch, const ForwardContext& ctx) const {
  return config_.mode == LmMode::kBidirectional ? mlm_loss(batch, ctx)
                                                : next_word_loss(batch, ctx);
}

}  // namespace sanlm
