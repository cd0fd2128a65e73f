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

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sanlm/attention.hpp"
#include "sanlm/autograd.hpp"

namespace sanlm {

struct Batch;

enum class LmMode { kBidirectional, kUnidirectional };

std::string_view mode_name(LmMode mode);  // "bi" / "uni"
LmMode parse_mode(std::string_view name);

struct ModelConfig {
  LmMode mode = LmMode::kBidirectional;
  std::size_t num_layers = 2;
  std::size_t model_dim = 64;
  std::size_t num_heads = 2;
  std::size_t ffn_dim = 256;
  std::size_t max_len = 128;
  std::size_t vocab_size = 0;
  double dropout = 0.1;

  // L=3, d=512, h=8, FFN 2048, 128 positions, dropout 0.1.
  static ModelConfig paper_scale(LmMode mode, std::size_t vocab_size);

  AttentionConfig attention() const { return {model_dim, num_heads, ffn_dim, dropout}; }
  void validate() const;

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

struct LmParams {
  Parameter word_embedding;      // V×d, also the output projection
  Parameter position_embedding;  // max_len×d
  std::vector<SanLayerParams> layers;
  Parameter output_bias;         // V
};

// Self-attention LM: token + position embeddings, a stack of SAN layers and
// a softmax head whose weight matrix is the word embedding table. The mode
// decides whether every layer applies the causal mask.
class LanguageModel {
 public:
  LanguageModel(const ModelConfig& config, std::uint64_t seed);
  LanguageModel(const ModelConfig& config, LmParams params);

  // All weights zero (norm gains one): every prediction is uniform.
  static LanguageModel zeros(const ModelConfig& config);

  const ModelConfig& config() const { return config_; }
  LmMode mode() const { return config_.mode; }
  const LmParams& params() const { return params_; }
  LmParams& params() { return params_; }

  // Stable order; names are unique and used by checkpoints.
  std::vector<Parameter*> parameters();
  std::vector<const Parameter*> parameters() const;

  // Throws SequenceTooLongError / VocabularyError.
  void check_sequence(std::span<const TokenId> ids) const;

  // X = word rows + position rows 0..n-1.
  Var embed(std::span<const TokenId> ids, const ForwardContext& ctx = {}) const;

  // Final-layer states for sequences stacked row-wise in the given order.
  Var encode(std::span<const std::vector<TokenId>> sequences,
             const ForwardContext& ctx = {}) const;
  Var encode(std::span<const TokenId> ids, const ForwardContext& ctx = {}) const;

  // log_softmax(H Eᵀ + b) for each row of H.
  Var output_log_probs(const Var& hidden, const ForwardContext& ctx = {}) const;

  // n×V log-probabilities for one sequence.
  Var forward(std::span<const TokenId> ids, const ForwardContext& ctx = {}) const;
  Tensor log_probs(std::span<const TokenId> ids) const;

  // Mean cross-entropy over the batch's labelled positions. mlm_loss needs
  // at least one mask per instance; next_word_loss at least one target.
  Var mlm_loss(const Batch& batch, const ForwardContext& ctx = {}) const;
  Var next_word_loss(const Batch& batch, const ForwardContext& ctx = {}) const;
  Var loss(const Batch& batch, const ForwardContext& ctx = {}) const;

  // Log-probabilities at the batch's labelled positions (rows in label order).
  Var label_log_probs(const Batch& batch, const ForwardContext& ctx = {}) const;

 private:
  ModelConfig config_;
  LmParams params_;
};

}  // namespace sanlm
