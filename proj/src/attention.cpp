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

#include "sanlm/attention.hpp"

#include <cmath>

#include "sanlm/errors.hpp"

namespace sanlm {
namespace {

Tensor truncated_normal(Shape shape, Rng& rng) {
  Tensor t(std::move(shape));
  for (double& v : t.values()) v = rng.truncated_normal(0.02);
  return t;
}

Var bind(const Parameter& p, const ForwardContext& ctx) { return leaf(p, ctx.track); }

Var feed_forward(const Var& u, const SanLayerParams& params, const ForwardContext& ctx) {
  Var hidden = gelu(add_bias(matmul(u, bind(params.ffn_in_weight, ctx)),
                             bind(params.ffn_in_bias, ctx)));
  return add_bias(matmul(hidden, bind(params.ffn_out_weight, ctx)),
                  bind(params.ffn_out_bias, ctx));
}

Var add_and_norm(const Var& residual, const Var& sublayer, const Parameter& gain,
                 const Parameter& bias, double p, const ForwardContext& ctx) {
  Var dropped = ctx.training && p > 0.0 ? dropout(sublayer, p, *ctx.rng, true) : sublayer;
  return layer_norm(add(residual, dropped), bind(gain, ctx), bind(bias, ctx));
}

void require_rng(const AttentionConfig& config, const ForwardContext& ctx) {
  if (ctx.training && config.dropout > 0.0 && ctx.rng == nullptr) {
    throw ParameterError("training-mode forward with dropout needs an Rng");
  }
}

// Multi-head attention over stacked segments; make_mask(n) supplies each
// segment's mask (or nullptr for none).
template <typename MaskFn>
Var multi_head_segments(const Var& x, std::span<const std::size_t> lengths,
                        const SanLayerParams& params, const ForwardContext& ctx,
                        MaskFn make_mask) {
  const std::size_t heads = params.query.size();
  std::vector<Var> head_outputs;
  head_outputs.reserve(heads);
  for (std::size_t h = 0; h < heads; ++h) {
    Var q = matmul(x, bind(params.query[h], ctx));
    Var k = matmul(x, bind(params.key[h], ctx));
    Var v = matmul(x, bind(params.value[h], ctx));
    if (lengths.size() == 1) {
      const AttentionMask* mask = make_mask(lengths[0]);
      head_outputs.push_back(scaled_dot_attention(q, k, v, mask));
      continue;
    }
    std::vector<Var> pieces;
    pieces.reserve(lengths.size());
    std::size_t offset = 0;
    for (std::size_t n : lengths) {
      const AttentionMask* mask = make_mask(n);
      pieces.push_back(scaled_dot_attention(slice_rows(q, offset, n),
                                            slice_rows(k, offset, n),
                                            slice_rows(v, offset, n), mask));
      offset += n;
    }
    head_outputs.push_back(concat_rows(pieces));
  }
  Var joined = heads == 1 ? head_outputs[0] : concat_cols(head_outputs);
  return matmul(joined, bind(params.output, ctx));
}

template <typename MaskFn>
Var san_layer_impl(const Var& x, std::span<const std::size_t> lengths,
                   const SanLayerParams& params, const AttentionConfig& config,
                   const ForwardContext& ctx, MaskFn make_mask) {
  require_rng(config, ctx);
  Var attended = multi_head_segments(x, lengths, params, ctx, make_mask);
  Var u = add_and_norm(x, attended, params.norm1_gain, params.norm1_bias,
                       config.dropout, ctx);
  Var f = feed_forward(u, params, ctx);
  return add_and_norm(u, f, params.norm2_gain, params.norm2_bias, config.dropout, ctx);
}

}  // namespace

void AttentionConfig::validate() const {
  if (model_dim == 0 || num_heads == 0 || model_dim % num_heads != 0) {
    throw ParameterError("model_dim " + std::to_string(model_dim) +
                         " must be a positive multiple of num_heads " +
                         std::to_string(num_heads));
  }
  if (ffn_dim == 0) throw ParameterError("ffn_dim must be positive");
  if (!(dropout >= 0.0 && dropout < 1.0)) {
    throw ParameterError("dropout must be in [0, 1)");
  }
}

AttentionMask causal_mask(std::size_t n) {
  if (n == 0) throw ParameterError("causal_mask: length must be at least 1");
  AttentionMask mask{n, n, std::vector<std::uint8_t>(n * n, 0)};
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j <= i; ++j) mask.allowed[i * n + j] = 1;
  }
  return mask;
}

SanLayerParams SanLayerParams::initialize(const AttentionConfig& config, Rng& rng,
                                          const std::string& prefix) {
  config.validate();
  const std::size_t d = config.model_dim, dk = config.head_dim();
  SanLayerParams p;
  for (std::size_t h = 0; h < config.num_heads; ++h) {
    const std::string head = prefix + "head" + std::to_string(h) + ".";
    p.query.emplace_back(head + "query", truncated_normal({d, dk}, rng));
    p.key.emplace_back(head + "key", truncated_normal({d, dk}, rng));
    p.value.emplace_back(head + "value", truncated_normal({d, dk}, rng));
  }
  p.output = Parameter(prefix + "attn_out", truncated_normal({dk * config.num_heads, d}, rng));
  p.ffn_in_weight = Parameter(prefix + "ffn_in.weight", truncated_normal({d, config.ffn_dim}, rng));
  p.ffn_in_bias = Parameter(prefix + "ffn_in.bias", Tensor({config.ffn_dim}, 0.0));
  p.ffn_out_weight = Parameter(prefix + "ffn_out.weight", truncated_normal({config.ffn_dim, d}, rng));
  p.ffn_out_bias = Parameter(prefix + "ffn_out.bias", Tensor({d}, 0.0));
  p.norm1_gain = Parameter(prefix + "norm1.gain", Tensor({d}, 1.0));
  p.norm1_bias = Parameter(prefix + "norm1.bias", Tensor({d}, 0.0));
  p.norm2_gain = Parameter(prefix + "norm2.gain", Tensor({d}, 1.0));
  p.norm2_bias = Parameter(prefix + "norm2.bias", Tensor({d}, 0.0));
  return p;
}

SanLayerParams SanLayerParams::zeros(const AttentionConfig& config, const std::string& prefix) {
  Rng rng(0);
  SanLayerParams p = initialize(config, rng, prefix);
  for (Parameter* param : p.parameters()) {
    const bool is_gain = param->name.ends_with(".gain");
    param->value.fill(is_gain ? 1.0 : 0.0);
  }
  return p;
}

std::vector<Parameter*> SanLayerParams::parameters() {
  std::vector<Parameter*> out;
  for (std::size_t h = 0; h < query.size(); ++h) {
    out.push_back(&query[h]);
    out.push_back(&key[h]);
    out.push_back(&value[h]);
  }
  for (Parameter* p : {&output, &ffn_in_weight, &ffn_in_bias, &ffn_out_weight,
                       &ffn_out_bias, &norm1_gain, &norm1_bias, &norm2_gain, &norm2_bias}) {
    out.push_back(p);
  }
  return out;
}

std::vector<const Parameter*> SanLayerParams::parameters() const {
  auto mutable_view = const_cast<SanLayerParams*>(this)->parameters();
  return {mutable_view.begin(), mutable_view.end()};
}

// Self-attention only: q, k and v all cover the same n positions.
Var scaled_dot_attention(const Var& q, const Var& k, const Var& v, const AttentionMask* mask) {
  const Tensor& qv = q.value();
  const Tensor& kv = k.value();
  const Tensor& vv = v.value();
  require_matrix(qv, "scaled_dot_attention");
  require_matrix(kv, "scaled_dot_attention");
  require_matrix(vv, "scaled_dot_attention");
  if (kv.rows() != vv.rows() || qv.rows() != kv.rows() || qv.cols() != kv.cols()) {
    throw DimensionError("scaled_dot_attention: q " + shape_string(qv.shape()) +
                         ", k " + shape_string(kv.shape()) + ", v " +
                         shape_string(vv.shape()) + " do not line up");
  }
  if (mask && (mask->rows != qv.rows() || mask->cols != kv.rows())) {
    throw DimensionError("scaled_dot_attention: mask " + std::to_string(mask->rows) + "x" +
                         std::to_string(mask->cols) + " for " + std::to_string(qv.rows()) +
                         " queries and " + std::to_string(kv.rows()) + " keys");
  }
  const double factor = 1.0 / std::sqrt(static_cast<double>(qv.cols()));
  Var logits = scale(matmul_nt(q, k), factor);
  Var weights = mask ? masked_softmax_rows(logits, mask->allowed) : softmax_rows(logits);
  return matmul(weights, v);
}

Var multi_head(const Var& x, const SanLayerParams& params, const AttentionMask* mask,
               const ForwardContext& ctx) {
  require_matrix(x.value(), "multi_head");
  const std::size_t n = x.value().rows();
  return multi_head_segments(x, std::span<const std::size_t>(&n, 1), params, ctx,
                             [mask](std::size_t) { return mask; });
}

Var san_layer(const Var& x, const SanLayerParams& params, const AttentionConfig& config,
              const AttentionMask* mask, const ForwardContext& ctx) {
  require_matrix(x.value(), "san_layer");
  const std::size_t n = x.value().rows();
  return san_layer_impl(x, std::span<const std::size_t>(&n, 1), params, config, ctx,
                        [mask](std::size_t) { return mask; });
}

Var san_layer_segments(const Var& x, std::span<const std::size_t> segment_lengths,
                       bool causal, const SanLayerParams& params,
                       const AttentionConfig& config, const ForwardContext& ctx) {
  require_matrix(x.value(), "san_layer_segments");
  std::size_t total = 0;
  for (std::size_t n : segment_lengths) total += n;
  if (total != x.value().rows() || segment_lengths.empty()) {
    throw DimensionError("san_layer_segments: segments cover " + std::to_string(total) +
                         " rows of " + shape_string(x.shape()));
  }
  // Causal masks are shared between segments of equal length.
  std::vector<AttentionMask> cache;
  return san_layer_impl(x, segment_lengths, params, config, ctx,
                        [&cache, causal](std::size_t n) -> const AttentionMask* {
                          if (!causal) return nullptr;
                          if (cache.size() <= n) cache.resize(n + 1);
                          if (cache[n].rows != n) cache[n] = causal_mask(n);
                          return &cache[n];
                        });
}

}  // namespace sanlm
