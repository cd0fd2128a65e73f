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
#include <vector>

#include "sanlm/autograd.hpp"
#include "sanlm/rng.hpp"

namespace sanlm {

struct AttentionConfig {
  std::size_t model_dim = 64;
  std::size_t num_heads = 2;
  std::size_t ffn_dim = 256;
  double dropout = 0.1;

  std::size_t head_dim() const { return model_dim / num_heads; }
  // Throws ParameterError unless model_dim is a positive multiple of num_heads.
  void validate() const;
};

// Which key positions each query may attend to, row-major rows×cols.
struct AttentionMask {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::uint8_t> allowed;

  bool allows(std::size_t i, std::size_t j) const { return allowed[i * cols + j] != 0; }
};

// Query i may see keys j <= i.
AttentionMask causal_mask(std::size_t n);

// How a forward pass runs: dropout on/off, whether leaves record gradients,
// and the generator dropout draws from.
struct ForwardContext {
  bool training = false;
  bool track = false;
  Rng* rng = nullptr;
};

struct SanLayerParams {
  std::vector<Parameter> query;  // num_heads of d×d_k
  std::vector<Parameter> key;
  std::vector<Parameter> value;
  Parameter output;  // (h·d_k)×d
  Parameter ffn_in_weight;
  Parameter ffn_in_bias;
  Parameter ffn_out_weight;
  Parameter ffn_out_bias;
  Parameter norm1_gain;
  Parameter norm1_bias;
  Parameter norm2_gain;
  Parameter norm2_bias;

  // Weights ~ truncated normal(0, 0.02), biases 0, norm gains 1.
  static SanLayerParams initialize(const AttentionConfig& config, Rng& rng,
                                   const std::string& prefix);
  // Every tensor zero except norm gains (1).
  static SanLayerParams zeros(const AttentionConfig& config, const std::string& prefix);

  std::vector<Parameter*> parameters();
  std::vector<const Parameter*> parameters() const;
};

// Softmax(q kᵀ / sqrt(d_k)) v for one sequence; a mask turns forbidden
// logits into -inf before the softmax.
Var scaled_dot_attention(const Var& q, const Var& k, const Var& v,
                         const AttentionMask* mask = nullptr);

// Concat(head_1..head_h) W^O over one sequence.
Var multi_head(const Var& x, const SanLayerParams& params, const AttentionMask* mask,
               const ForwardContext& ctx = {});

// Post-norm layer over one sequence:
//   u = LN(x + Dropout(MultiHead(x))), out = LN(u + Dropout(FFN(u))).
Var san_layer(const Var& x, const SanLayerParams& params, const AttentionConfig& config,
              const AttentionMask* mask, const ForwardContext& ctx = {});

// Same layer over several sequences stacked row-wise. Attention never crosses
// segment boundaries; position-wise parts run on all rows at once.
Var san_layer_segments(const Var& x, std::span<const std::size_t> segment_lengths,
                       bool causal, const SanLayerParams& params,
                       const AttentionConfig& config, const ForwardContext& ctx = {});

}  // namespace sanlm
