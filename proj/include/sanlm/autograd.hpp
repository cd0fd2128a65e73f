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
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "sanlm/rng.hpp"
#include "sanlm/tensor.hpp"

namespace sanlm {

// A trainable tensor and its accumulated gradient.
struct Parameter {
  Parameter() = default;
  Parameter(std::string name, Tensor value);

  void zero_grad() const { grad.fill(0.0); }

  std::string name;
  Tensor value;
  // Accumulator written by backward(), also through const handles.
  mutable Tensor grad;
};

namespace detail {

struct Node {
  const Tensor& value() const { return external ? *external : owned; }
  Tensor& grad_buffer();

  Tensor owned;
  const Tensor* external = nullptr;
  Tensor grad;
  bool has_grad = false;
  bool requires_grad = false;
  const Parameter* param = nullptr;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(const Node&)> backward;
};

}  // namespace detail

// Handle to a value in a define-by-run graph. Operations on Vars record how
// to propagate gradients only when one of their inputs requires a gradient,
// so inference-mode forward passes carry no graph.
class Var {
 public:
  Var() = default;

  const Tensor& value() const { return node_->value(); }
  const Shape& shape() const { return node_->value().shape(); }
  bool requires_grad() const { return node_ && node_->requires_grad; }
  bool defined() const { return static_cast<bool>(node_); }

  // Gradient accumulated during the last backward(); zeros if none reached.
  Tensor grad() const;

  const std::shared_ptr<detail::Node>& node() const { return node_; }
  explicit Var(std::shared_ptr<detail::Node> node) : node_(std::move(node)) {}

 private:
  std::shared_ptr<detail::Node> node_;
};

// Untracked value.
Var constant(Tensor value);
// Leaf bound to a parameter without copying it. With track=true, backward()
// adds into param.grad; every leaf made from the same parameter accumulates,
// which is what weight tying relies on. The parameter must outlive the graph.
Var leaf(const Parameter& param, bool track = true);

// Reverse-mode sweep from a scalar. Throws DimensionError for non-scalars.
void backward(const Var& loss);

Var matmul(const Var& a, const Var& b);
// a · bᵀ
Var matmul_nt(const Var& a, const Var& b);
Var add(const Var& a, const Var& b);
// Adds a length-n bias to every row of an m×n matrix.
Var add_bias(const Var& x, const Var& bias);
Var scale(const Var& x, double factor);
Var sum(const Var& x);

Var softmax_rows(const Var& x);
// Softmax over allowed cells only (allowed is row-major, same shape as x);
// forbidden cells act as -inf logits and come out exactly 0.
Var masked_softmax_rows(const Var& x, std::span<const std::uint8_t> allowed);
Var log_softmax_rows(const Var& x);

Var layer_norm(const Var& x, const Var& gain, const Var& bias, double eps = 1e-6);
// x·Φ(x) with the exact erf form of Φ.
Var gelu(const Var& x);
// Inverted dropout; identity when !training or p == 0.
Var dropout(const Var& x, double p, Rng& rng, bool training);

Var gather_rows(const Var& table, std::span<const TokenId> ids);
Var slice_rows(const Var& x, std::size_t begin, std::size_t count);
Var concat_rows(std::span<const Var> parts);
Var concat_cols(std::span<const Var> parts);

// Mean of -log_probs[i, targets[i]] over rows with mask[i] set.
Var cross_entropy(const Var& log_probs, std::span<const TokenId> targets,
                  std::span<const std::uint8_t> mask);

double gelu_value(double x);

}  // namespace sanlm
