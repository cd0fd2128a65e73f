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

#include "sanlm/autograd.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <unordered_set>
#include <utility>

#include "sanlm/errors.hpp"

namespace sanlm {
namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMat>;
using MutMap = Eigen::Map<RowMat>;

ConstMap as_mat(const Tensor& t) {
  return ConstMap(t.data(), static_cast<Eigen::Index>(t.rows()),
                  static_cast<Eigen::Index>(t.cols()));
}

MutMap as_mat(Tensor& t) {
  return MutMap(t.data(), static_cast<Eigen::Index>(t.rows()),
                static_cast<Eigen::Index>(t.cols()));
}

using NodePtr = std::shared_ptr<detail::Node>;

// Builds the result node; drops the backward closure when nothing upstream
// needs a gradient.
Var make_result(Tensor value, std::vector<NodePtr> parents,
                std::function<void(const detail::Node&)> fn) {
  auto node = std::make_shared<detail::Node>();
  node->owned = std::move(value);
  const bool needs = std::any_of(parents.begin(), parents.end(),
                                 [](const NodePtr& p) { return p->requires_grad; });
  if (needs) {
    node->requires_grad = true;
    node->parents = std::move(parents);
    node->backward = std::move(fn);
  }
  return Var(std::move(node));
}

void accumulate(detail::Node& node, const Tensor& g) {
  if (!node.requires_grad) return;
  Tensor& buf = node.grad_buffer();
  double* dst = buf.data();
  const double* src = g.data();
  for (std::size_t i = 0; i < buf.size(); ++i) dst[i] += src[i];
}

const double kInvSqrt2 = 1.0 / std::numbers::sqrt2;
const double kInvSqrt2Pi = 1.0 / std::sqrt(2.0 * std::numbers::pi);

}  // namespace

Parameter::Parameter(std::string name, Tensor value)
    : name(std::move(name)), value(std::move(value)) {
  grad = Tensor(this->value.shape(), 0.0);
}

Tensor& detail::Node::grad_buffer() {
  if (!has_grad) {
    grad = Tensor(value().shape(), 0.0);
    has_grad = true;
  }
  return grad;
}

Tensor Var::grad() const {
  if (node_ && node_->has_grad) return node_->grad;
  return Tensor(value().shape(), 0.0);
}

Var constant(Tensor value) {
  auto node = std::make_shared<detail::Node>();
  node->owned = std::move(value);
  return Var(std::move(node));
}

Var leaf(const Parameter& param, bool track) {
  auto node = std::make_shared<detail::Node>();
  node->external = &param.value;
  if (track) {
    node->requires_grad = true;
    node->param = &param;
  }
  return Var(std::move(node));
}

void backward(const Var& loss) {
  if (!loss.defined() || loss.value().size() != 1) {
    throw DimensionError("backward() needs a scalar loss, got shape " +
                         (loss.defined() ? shape_string(loss.shape()) : "<none>"));
  }
  if (!loss.requires_grad()) return;

  // Iterative post-order DFS gives a topological order.
  std::vector<detail::Node*> order;
  std::unordered_set<detail::Node*> seen;
  std::vector<std::pair<detail::Node*, std::size_t>> stack;
  stack.emplace_back(loss.node().get(), 0);
  seen.insert(loss.node().get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      detail::Node* parent = node->parents[next++].get();
      if (parent->requires_grad && seen.insert(parent).second) {
        stack.emplace_back(parent, 0);
      }
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  loss.node()->grad_buffer().fill(1.0);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    detail::Node* node = *it;
    if (!node->has_grad) continue;
    if (node->backward) node->backward(*node);
    if (node->param) {
      Tensor& pg = node->param->grad;
      if (pg.shape() != node->grad.shape()) pg = Tensor(node->grad.shape(), 0.0);
      for (std::size_t i = 0; i < pg.size(); ++i) pg[i] += node->grad[i];
    }
  }
}

Var matmul(const Var& a, const Var& b) {
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  require_matrix(av, "matmul");
  require_matrix(bv, "matmul");
  if (av.cols() != bv.rows()) {
    throw DimensionError("matmul: inner dimensions differ, " +
                         shape_string(av.shape()) + " x " + shape_string(bv.shape()));
  }
  Tensor out({av.rows(), bv.cols()});
  as_mat(out).noalias() = as_mat(av) * as_mat(bv);
  NodePtr an = a.node(), bn = b.node();
  return make_result(std::move(out), {an, bn}, [an, bn](const detail::Node& self) {
    const auto g = as_mat(self.grad);
    if (an->requires_grad) {
      as_mat(an->grad_buffer()).noalias() += g * as_mat(bn->value()).transpose();
    }
    if (bn->requires_grad) {
      as_mat(bn->grad_buffer()).noalias() += as_mat(an->value()).transpose() * g;
    }
  });
}

Var matmul_nt(const Var& a, const Var& b) {
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  require_matrix(av, "matmul_nt");
  require_matrix(bv, "matmul_nt");
  if (av.cols() != bv.cols()) {
    throw DimensionError("matmul_nt: inner dimensions differ, " +
                         shape_string(av.shape()) + " x " +
                         shape_string(bv.shape()) + "^T");
  }
  Tensor out({av.rows(), bv.rows()});
  as_mat(out).noalias() = as_mat(av) * as_mat(bv).transpose();
  NodePtr an = a.node(), bn = b.node();
  return make_result(std::move(out), {an, bn}, [an, bn](const detail::Node& self) {
    const auto g = as_mat(self.grad);
    if (an->requires_grad) {
      as_mat(an->grad_buffer()).noalias() += g * as_mat(bn->value());
    }
    if (bn->requires_grad) {
      as_mat(bn->grad_buffer()).noalias() += g.transpose() * as_mat(an->value());
    }
  });
}

Var add(const Var& a, const Var& b) {
  require_same_shape(a.value(), b.value(), "add");
  Tensor out = a.value();
  const Tensor& bv = b.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += bv[i];
  NodePtr an = a.node(), bn = b.node();
  return make_result(std::move(out), {an, bn}, [an, bn](const detail::Node& self) {
    accumulate(*an, self.grad);
    accumulate(*bn, self.grad);
  });
}

Var add_bias(const Var& x, const Var& bias) {
  const Tensor& xv = x.value();
  const Tensor& bv = bias.value();
  require_matrix(xv, "add_bias");
  if (bv.size() != xv.cols()) {
    throw DimensionError("add_bias: bias " + shape_string(bv.shape()) +
                         " does not match " + shape_string(xv.shape()));
  }
  Tensor out = xv;
  const std::size_t n = xv.cols();
  for (std::size_t r = 0; r < xv.rows(); ++r) {
    double* row = out.data() + r * n;
    for (std::size_t c = 0; c < n; ++c) row[c] += bv[c];
  }
  NodePtr xn = x.node(), bn = bias.node();
  return make_result(std::move(out), {xn, bn}, [xn, bn, n](const detail::Node& self) {
    accumulate(*xn, self.grad);
    if (bn->requires_grad) {
      Tensor& gb = bn->grad_buffer();
      const std::size_t rows = self.grad.size() / n;
      for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < n; ++c) gb[c] += self.grad[r * n + c];
      }
    }
  });
}

Var scale(const Var& x, double factor) {
  Tensor out = x.value();
  for (double& v : out.values()) v *= factor;
  NodePtr xn = x.node();
  return make_result(std::move(out), {xn}, [xn, factor](const detail::Node& self) {
    if (!xn->requires_grad) return;
    Tensor& g = xn->grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += factor * self.grad[i];
  });
}

Var sum(const Var& x) {
  double total = 0.0;
  for (double v : x.value().values()) total += v;
  NodePtr xn = x.node();
  return make_result(Tensor::scalar(total), {xn}, [xn](const detail::Node& self) {
    if (!xn->requires_grad) return;
    const double g0 = self.grad[0];
    for (double& g : xn->grad_buffer().values()) g += g0;
  });
}

namespace {

Var softmax_impl(const Var& x, const std::uint8_t* allowed) {
  const Tensor& xv = x.value();
  require_matrix(xv, "softmax_rows");
  const std::size_t m = xv.rows(), n = xv.cols();
  Tensor out({m, n}, 0.0);
  for (std::size_t r = 0; r < m; ++r) {
    const double* in = xv.data() + r * n;
    double* o = out.data() + r * n;
    const std::uint8_t* ok = allowed ? allowed + r * n : nullptr;
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < n; ++c) {
      if (!ok || ok[c]) mx = std::max(mx, in[c]);
    }
    if (mx == -std::numeric_limits<double>::infinity()) {
      throw ParameterError("softmax: row " + std::to_string(r) + " has no allowed cells");
    }
    double z = 0.0;
    for (std::size_t c = 0; c < n; ++c) {
      if (ok && !ok[c]) continue;
      o[c] = std::exp(in[c] - mx);
      z += o[c];
    }
    const double inv = 1.0 / z;
    for (std::size_t c = 0; c < n; ++c) o[c] *= inv;
  }
  NodePtr xn = x.node();
  return make_result(std::move(out), {xn}, [xn, m, n](const detail::Node& self) {
    if (!xn->requires_grad) return;
    Tensor& gx = xn->grad_buffer();
    const Tensor& y = self.value();
    for (std::size_t r = 0; r < m; ++r) {
      const double* yr = y.data() + r * n;
      const double* gr = self.grad.data() + r * n;
      double dot = 0.0;
      for (std::size_t c = 0; c < n; ++c) dot += yr[c] * gr[c];
      double* dst = gx.data() + r * n;
      for (std::size_t c = 0; c < n; ++c) dst[c] += yr[c] * (gr[c] - dot);
    }
  });
}

}  // namespace

Var softmax_rows(const Var& x) { return softmax_impl(x, nullptr); }

Var masked_softmax_rows(const Var& x, std::span<const std::uint8_t> allowed) {
  if (allowed.size() != x.value().size()) {
    throw DimensionError("masked_softmax_rows: mask has " +
                         std::to_string(allowed.size()) + " cells for logits " +
                         shape_string(x.shape()));
  }
  return softmax_impl(x, allowed.data());
}

Var log_softmax_rows(const Var& x) {
  const Tensor& xv = x.value();
  require_matrix(xv, "log_softmax_rows");
  const std::size_t m = xv.rows(), n = xv.cols();
  Tensor out({m, n});
  for (std::size_t r = 0; r < m; ++r) {
    const double* in = xv.data() + r * n;
    double* o = out.data() + r * n;
    const double mx = *std::max_element(in, in + n);
    double z = 0.0;
    for (std::size_t c = 0; c < n; ++c) z += std::exp(in[c] - mx);
    const double lse = mx + std::log(z);
    for (std::size_t c = 0; c < n; ++c) o[c] = in[c] - lse;
  }
  NodePtr xn = x.node();
  return make_result(std::move(out), {xn}, [xn, m, n](const detail::Node& self) {
    if (!xn->requires_grad) return;
    Tensor& gx = xn->grad_buffer();
    const Tensor& y = self.value();
    for (std::size_t r = 0; r < m; ++r) {
      const double* yr = y.data() + r * n;
      const double* gr = self.grad.data() + r * n;
      double total = 0.0;
      for (std::size_t c = 0; c < n; ++c) total += gr[c];
      double* dst = gx.data() + r * n;
      for (std::size_t c = 0; c < n; ++c) dst[c] += gr[c] - std::exp(yr[c]) * total;
    }
  });
}

Var layer_norm(const Var& x, const Var& gain, const Var& bias, double eps) {
  const Tensor& xv = x.value();
  require_matrix(xv, "layer_norm");
  const std::size_t m = xv.rows(), d = xv.cols();
  if (d == 0) throw DimensionError("layer_norm: zero-width rows");
  if (gain.value().size() != d || bias.value().size() != d) {
    throw DimensionError("layer_norm: gain/bias " + shape_string(gain.shape()) +
                         "/" + shape_string(bias.shape()) + " vs input " +
                         shape_string(xv.shape()));
  }
  const Tensor& gv = gain.value();
  const Tensor& bv = bias.value();
  Tensor out({m, d});
  Tensor xhat({m, d});
  std::vector<double> inv_std(m);
  for (std::size_t r = 0; r < m; ++r) {
    const double* in = xv.data() + r * d;
    double mean = 0.0;
    for (std::size_t c = 0; c < d; ++c) mean += in[c];
    mean /= static_cast<double>(d);
    double var = 0.0;
    for (std::size_t c = 0; c < d; ++c) var += (in[c] - mean) * (in[c] - mean);
    var /= static_cast<double>(d);
    const double inv = 1.0 / std::sqrt(var + eps);
    inv_std[r] = inv;
    for (std::size_t c = 0; c < d; ++c) {
      const double h = (in[c] - mean) * inv;
      xhat.at(r, c) = h;
      out.at(r, c) = gv[c] * h + bv[c];
    }
  }
  NodePtr xn = x.node(), gn = gain.node(), bn = bias.node();
  return make_result(
      std::move(out), {xn, gn, bn},
      [xn, gn, bn, m, d, xhat = std::move(xhat),
       inv_std = std::move(inv_std)](const detail::Node& self) {
        const Tensor& g = self.grad;
        if (gn->requires_grad || bn->requires_grad) {
          Tensor& gg = gn->grad_buffer();
          Tensor& gb = bn->grad_buffer();
          for (std::size_t r = 0; r < m; ++r) {
            for (std::size_t c = 0; c < d; ++c) {
              gg[c] += g[r * d + c] * xhat[r * d + c];
              gb[c] += g[r * d + c];
            }
          }
        }
        if (!xn->requires_grad) return;
        const Tensor& gain_v = gn->value();
        Tensor& gx = xn->grad_buffer();
        std::vector<double> dxhat(d);
        for (std::size_t r = 0; r < m; ++r) {
          double mean_d = 0.0, mean_dx = 0.0;
          for (std::size_t c = 0; c < d; ++c) {
            dxhat[c] = g[r * d + c] * gain_v[c];
            mean_d += dxhat[c];
            mean_dx += dxhat[c] * xhat[r * d + c];
          }
          mean_d /= static_cast<double>(d);
          mean_dx /= static_cast<double>(d);
          for (std::size_t c = 0; c < d; ++c) {
            gx[r * d + c] +=
                inv_std[r] * (dxhat[c] - mean_d - xhat[r * d + c] * mean_dx);
          }
        }
      });
}

double gelu_value(double x) { return 0.5 * x * (1.0 + std::erf(x * kInvSqrt2)); }

Var gelu(const Var& x) {
  Tensor out = x.value();
  for (double& v : out.values()) v = gelu_value(v);
  NodePtr xn = x.node();
  return make_result(std::move(out), {xn}, [xn](const detail::Node& self) {
    if (!xn->requires_grad) return;
    const Tensor& in = xn->value();
    Tensor& gx = xn->grad_buffer();
    for (std::size_t i = 0; i < in.size(); ++i) {
      const double v = in[i];
      const double cdf = 0.5 * (1.0 + std::erf(v * kInvSqrt2));
      const double pdf = kInvSqrt2Pi * std::exp(-0.5 * v * v);
      gx[i] += self.grad[i] * (cdf + v * pdf);
    }
  });
}

Var dropout(const Var& x, double p, Rng& rng, bool training) {
  if (!(p >= 0.0 && p < 1.0)) {
    throw ParameterError("dropout probability must be in [0, 1), got " + std::to_string(p));
  }
  if (!training || p == 0.0) return x;
  const double keep_scale = 1.0 / (1.0 - p);
  std::vector<double> mask(x.value().size());
  for (double& m : mask) m = rng.uniform() < p ? 0.0 : keep_scale;
  Tensor out = x.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= mask[i];
  NodePtr xn = x.node();
  return make_result(std::move(out), {xn},
                     [xn, mask = std::move(mask)](const detail::Node& self) {
                       if (!xn->requires_grad) return;
                       Tensor& gx = xn->grad_buffer();
                       for (std::size_t i = 0; i < gx.size(); ++i) {
                         gx[i] += self.grad[i] * mask[i];
                       }
                     });
}

Var gather_rows(const Var& table, std::span<const TokenId> ids) {
  const Tensor& tv = table.value();
  require_matrix(tv, "gather_rows");
  const std::size_t d = tv.cols();
  Tensor out({ids.size(), d});
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] >= tv.rows()) {
      throw DimensionError("gather_rows: index " + std::to_string(ids[i]) +
                           " out of range for table " + shape_string(tv.shape()));
    }
    std::copy_n(tv.data() + ids[i] * d, d, out.data() + i * d);
  }
  NodePtr tn = table.node();
  std::vector<TokenId> idx(ids.begin(), ids.end());
  return make_result(std::move(out), {tn},
                     [tn, d, idx = std::move(idx)](const detail::Node& self) {
                       if (!tn->requires_grad) return;
                       Tensor& gt = tn->grad_buffer();
                       for (std::size_t i = 0; i < idx.size(); ++i) {
                         double* dst = gt.data() + idx[i] * d;
                         const double* src = self.grad.data() + i * d;
                         for (std::size_t c = 0; c < d; ++c) dst[c] += src[c];
                       }
                     });
}

Var slice_rows(const Var& x, std::size_t begin, std::size_t count) {
  const Tensor& xv = x.value();
  require_matrix(xv, "slice_rows");
  if (begin + count > xv.rows()) {
    throw DimensionError("slice_rows: [" + std::to_string(begin) + ", " +
                         std::to_string(begin + count) + ") out of range for " +
                         shape_string(xv.shape()));
  }
  const std::size_t d = xv.cols();
  Tensor out({count, d});
  std::copy_n(xv.data() + begin * d, count * d, out.data());
  NodePtr xn = x.node();
  return make_result(std::move(out), {xn}, [xn, begin, d](const detail::Node& self) {
    if (!xn->requires_grad) return;
    double* dst = xn->grad_buffer().data() + begin * d;
    for (std::size_t i = 0; i < self.grad.size(); ++i) dst[i] += self.grad[i];
  });
}

Var concat_rows(std::span<const Var> parts) {
  if (parts.empty()) throw DimensionError("concat_rows: no inputs");
  const std::size_t d = parts[0].value().cols();
  std::size_t total = 0;
  for (const Var& p : parts) {
    require_matrix(p.value(), "concat_rows");
    if (p.value().cols() != d) {
      throw DimensionError("concat_rows: column mismatch " +
                           shape_string(parts[0].shape()) + " vs " +
                           shape_string(p.shape()));
    }
    total += p.value().rows();
  }
  Tensor out({total, d});
  std::vector<NodePtr> parents;
  std::size_t offset = 0;
  for (const Var& p : parts) {
    std::copy_n(p.value().data(), p.value().size(), out.data() + offset);
    offset += p.value().size();
    parents.push_back(p.node());
  }
  return make_result(std::move(out), parents, [parents](const detail::Node& self) {
    std::size_t off = 0;
    for (const NodePtr& p : parents) {
      const std::size_t n = p->value().size();
      if (p->requires_grad) {
        double* dst = p->grad_buffer().data();
        for (std::size_t i = 0; i < n; ++i) dst[i] += self.grad[off + i];
      }
      off += n;
    }
  });
}

Var concat_cols(std::span<const Var> parts) {
  if (parts.empty()) throw DimensionError("concat_cols: no inputs");
  const std::size_t m = parts[0].value().rows();
  std::size_t total = 0;
  for (const Var& p : parts) {
    require_matrix(p.value(), "concat_cols");
    if (p.value().rows() != m) {
      throw DimensionError("concat_cols: row mismatch " +
                           shape_string(parts[0].shape()) + " vs " +
                           shape_string(p.shape()));
    }
    total += p.value().cols();
  }
  Tensor out({m, total});
  std::vector<NodePtr> parents;
  std::size_t col = 0;
  for (const Var& p : parts) {
    const std::size_t w = p.value().cols();
    for (std::size_t r = 0; r < m; ++r) {
      std::copy_n(p.value().data() + r * w, w, out.data() + r * total + col);
    }
    col += w;
    parents.push_back(p.node());
  }
  return make_result(std::move(out), parents,
                     [parents, m, total](const detail::Node& self) {
                       std::size_t c0 = 0;
                       for (const NodePtr& p : parents) {
                         const std::size_t w = p->value().cols();
                         if (p->requires_grad) {
                           double* dst = p->grad_buffer().data();
                           for (std::size_t r = 0; r < m; ++r) {
                             for (std::size_t c = 0; c < w; ++c) {
                               dst[r * w + c] += self.grad[r * total + c0 + c];
                             }
                           }
                         }
                         c0 += w;
                       }
                     });
}

Var cross_entropy(const Var& log_probs, std::span<const TokenId> targets,
                  std::span<const std::uint8_t> mask) {
  const Tensor& lp = log_probs.value();
  require_matrix(lp, "cross_entropy");
  const std::size_t n = lp.rows(), v = lp.cols();
  if (targets.size() != n || mask.size() != n) {
    throw DimensionError("cross_entropy: " + std::to_string(targets.size()) +
                         " targets / " + std::to_string(mask.size()) +
                         " mask flags for log-probs " + shape_string(lp.shape()));
  }
  std::size_t count = 0;
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!mask[i]) continue;
    if (targets[i] >= v) {
      throw ParameterError("cross_entropy: target id " + std::to_string(targets[i]) +
                           " >= vocabulary size " + std::to_string(v));
    }
    total -= lp.at(i, targets[i]);
    ++count;
  }
  if (count == 0) throw ParameterError("cross_entropy: mask selects no positions");
  const double inv = 1.0 / static_cast<double>(count);
  std::vector<std::size_t> rows, cols;
  for (std::size_t i = 0; i < n; ++i) {
    if (mask[i]) {
      rows.push_back(i);
      cols.push_back(targets[i]);
    }
  }
  NodePtr ln = log_probs.node();
  return make_result(Tensor::scalar(total * inv), {ln},
                     [ln, v, inv, rows = std::move(rows),
                      cols = std::move(cols)](const detail::Node& self) {
                       if (!ln->requires_grad) return;
                       Tensor& g = ln->grad_buffer();
                       const double g0 = self.grad[0];
                       for (std::size_t k = 0; k < rows.size(); ++k) {
                         g[rows[k] * v + cols[k]] -= g0 * inv;
                       }
                     });
}

}  // namespace sanlm
