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

#include "sanlm/autograd.hpp"
#include "sanlm/errors.hpp"
#include "testing.hpp"

namespace sanlm {
namespace {

using testing::gradient_check;
using testing::max_error;
using testing::random_parameter;
using testing::random_tensor;

Tensor naive_matmul(const Tensor& a, const Tensor& b) {
  Tensor c({a.rows(), b.cols()});
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.cols(); ++j) {
      double s = 0;
      for (std::size_t k = 0; k < a.cols(); ++k) s += a.at(i, k) * b.at(k, j);
      c.at(i, j) = s;
    }
  return c;
}

TEST(Matmul, IdentityLeavesMatrix) {
  Rng rng(1);
  const Tensor b = random_tensor({3, 5}, rng);
  const Tensor eye = Tensor::matrix({{1, 0, 0}, {0, 1, 0}, {0, 0, 1}});
  EXPECT_EQ(matmul(constant(eye), constant(b)).value(), b);
}

TEST(Matmul, HandExample) {
  const Tensor c = matmul(constant(Tensor::matrix({{1, 2}, {3, 4}})),
                          constant(Tensor::matrix({{0}, {1}}))).value();
  EXPECT_EQ(c, Tensor::matrix({{2}, {4}}));
}

TEST(Matmul, MatchesTripleLoop) {
  Rng rng(2);
  const Tensor a = random_tensor({5, 7}, rng), b = random_tensor({7, 3}, rng);
  const Tensor got = matmul(constant(a), constant(b)).value();
  const Tensor want = naive_matmul(a, b);
  for (std::size_t i = 0; i < got.size(); ++i) EXPECT_NEAR(got[i], want[i], 1e-12);
}

TEST(Matmul, ShapeMismatchNamesBothShapes) {
  try {
    matmul(constant(Tensor({2, 3})), constant(Tensor({4, 2})));
    FAIL();
  } catch (const DimensionError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("2x3"), std::string::npos) << msg;
    EXPECT_NE(msg.find("4x2"), std::string::npos) << msg;
  }
}

TEST(Softmax, EqualValuesGiveUniformRow) {
  const Tensor s = softmax_rows(constant(Tensor({1, 4}, 2.0))).value();
  for (double v : s.values()) EXPECT_DOUBLE_EQ(v, 0.25);
}

TEST(Softmax, ClosedForm) {
  const Tensor s = softmax_rows(constant(Tensor::matrix({{0.0, std::log(3.0)}}))).value();
  EXPECT_NEAR(s[0], 0.25, 1e-15);
  EXPECT_NEAR(s[1], 0.75, 1e-15);
}

TEST(Softmax, RowsAreDistributions) {
  Rng rng(3);
  const Tensor s = softmax_rows(constant(random_tensor({6, 9}, rng, 30.0))).value();
  for (std::size_t r = 0; r < 6; ++r) {
    double sum = 0;
    for (double v : s.row(r)) {
      EXPECT_GE(v, 0.0);
      sum += v;
    }
    EXPECT_NEAR(sum, 1.0, 1e-9);
  }
}

TEST(Softmax, MaskedCellsAreExactlyZero) {
  Rng rng(4);
  const std::vector<std::uint8_t> allowed = {1, 0, 1, 1, 1, 0};
  const Tensor s = masked_softmax_rows(constant(random_tensor({2, 3}, rng)), allowed).value();
  EXPECT_EQ(s[1], 0.0);
  EXPECT_EQ(s[5], 0.0);
  EXPECT_NEAR(s[0] + s[2], 1.0, 1e-12);
  EXPECT_THROW(masked_softmax_rows(constant(Tensor({1, 2})), std::vector<std::uint8_t>{0, 0}),
               ParameterError);
}

TEST(LogSoftmax, AgreesWithSoftmax) {
  Rng rng(5);
  const Var x = constant(random_tensor({3, 4}, rng));
  const Tensor a = log_softmax_rows(x).value(), b = softmax_rows(x).value();
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(std::exp(a[i]), b[i], 1e-14);
}

Var ln_plain(const Tensor& x, const Tensor& bias) {
  const std::size_t d = x.cols();
  return layer_norm(constant(x), constant(Tensor({d}, 1.0)), constant(bias));
}

TEST(LayerNorm, ConstantRowBecomesZero) {
  const Tensor y = ln_plain(Tensor({1, 5}, 3.0), Tensor({5})).value();
  for (double v : y.values()) EXPECT_EQ(v, 0.0);
}

TEST(LayerNorm, UnitMomentsForNonConstantRows) {
  Rng rng(6);
  const Tensor y = ln_plain(random_tensor({4, 8}, rng, 5.0), Tensor({8})).value();
  for (std::size_t r = 0; r < 4; ++r) {
    double m = 0, v = 0;
    for (double e : y.row(r)) m += e;
    m /= 8;
    for (double e : y.row(r)) v += (e - m) * (e - m);
    v /= 8;
    EXPECT_NEAR(m, 0.0, 1e-9);
    EXPECT_NEAR(v, 1.0, 1e-6);
  }
}

TEST(LayerNorm, BiasShiftsMean) {
  Rng rng(7);
  const Tensor bias = random_tensor({6}, rng);
  double bias_mean = 0;
  for (double b : bias.values()) bias_mean += b / 6;
  const Tensor y = ln_plain(random_tensor({3, 6}, rng), bias).value();
  for (std::size_t r = 0; r < 3; ++r) {
    double m = 0;
    for (double e : y.row(r)) m += e / 6;
    EXPECT_NEAR(m, bias_mean, 1e-9);
  }
}

TEST(Gelu, ReferenceValues) {
  EXPECT_EQ(gelu_value(0.0), 0.0);
  EXPECT_NEAR(gelu_value(1.0), 0.5 * (1.0 + std::erf(1.0 / std::sqrt(2.0))), 1e-15);
  EXPECT_NEAR(gelu_value(1.0), 0.841345, 1e-6);
  EXPECT_NEAR(gelu_value(-10.0), 0.0, 1e-6);
  const Tensor y = gelu(constant(Tensor::matrix({{0.0, 1.0}}))).value();
  EXPECT_EQ(y[1], gelu_value(1.0));
}

TEST(Dropout, IdentityCases) {
  Rng rng(8);
  const Tensor x = random_tensor({4, 4}, rng);
  EXPECT_EQ(dropout(constant(x), 0.0, rng, true).value(), x);
  EXPECT_EQ(dropout(constant(x), 0.7, rng, false).value(), x);
}

TEST(Dropout, RejectsBadProbability) {
  Rng rng(9);
  EXPECT_THROW(dropout(constant(Tensor({2}, 1.0)), 1.0, rng, true), ParameterError);
  EXPECT_THROW(dropout(constant(Tensor({2}, 1.0)), -0.1, rng, true), ParameterError);
}

TEST(Dropout, PreservesExpectation) {
  Rng rng(10);
  const Tensor y = dropout(constant(Tensor({1000, 1000}, 1.0)), 0.5, rng, true).value();
  double mean = 0, zeros = 0;
  for (double v : y.values()) {
    mean += v;
    zeros += v == 0.0;
  }
  EXPECT_NEAR(mean / 1e6, 1.0, 0.01);
  EXPECT_NEAR(zeros / 1e6, 0.5, 0.01);
}

TEST(Dropout, SameSeedSameMask) {
  Rng a(11), b(11);
  const Tensor x({50}, 1.0);
  EXPECT_EQ(dropout(constant(x), 0.3, a, true).value(), dropout(constant(x), 0.3, b, true).value());
}

TEST(CrossEntropy, UniformGivesLogV) {
  const std::size_t v = 13;
  const Tensor lp({3, v}, -std::log(13.0));
  const std::vector<TokenId> targets = {0, 5, 12};
  const std::vector<std::uint8_t> mask = {1, 1, 1};
  EXPECT_NEAR(cross_entropy(constant(lp), targets, mask).value().item(), std::log(13.0), 1e-12);
}

TEST(CrossEntropy, ConfidentCorrectPredictionApproachesZero) {
  const Var lp = log_softmax_rows(constant(Tensor::matrix({{60.0, 0.0, 0.0}})));
  const std::vector<TokenId> t = {0};
  const std::vector<std::uint8_t> m = {1};
  EXPECT_LT(cross_entropy(lp, t, m).value().item(), 1e-20);
}

TEST(CrossEntropy, MaskedMeanOfSelectedTerms) {
  const Tensor lp = Tensor::matrix({{-0.1, -2.0}, {-3.0, -0.5}, {-1.0, -1.5}});
  const std::vector<TokenId> t = {1, 0, 1};
  const std::vector<std::uint8_t> m = {1, 0, 1};
  EXPECT_NEAR(cross_entropy(constant(lp), t, m).value().item(), (2.0 + 1.5) / 2.0, 1e-15);
}

TEST(CrossEntropy, Errors) {
  const Tensor lp({2, 3}, -1.0);
  const std::vector<TokenId> t = {0, 1};
  EXPECT_THROW(cross_entropy(constant(lp), t, std::vector<std::uint8_t>{0, 0}), ParameterError);
  EXPECT_THROW(cross_entropy(constant(lp), std::vector<TokenId>{0, 3},
                             std::vector<std::uint8_t>{1, 1}),
               ParameterError);
}

TEST(Backward, SumOfLinearMapGivesBroadcastInput) {
  Parameter w("w", Tensor::matrix({{1, 2, 3}, {4, 5, 6}}));
  const Tensor x = Tensor::matrix({{0.5}, {-1.0}, {2.0}});
  backward(sum(matmul(leaf(w), constant(x))));
  // d/dW sum(W x) = 1·xᵀ for every row.
  EXPECT_EQ(w.grad, Tensor::matrix({{0.5, -1.0, 2.0}, {0.5, -1.0, 2.0}}));
}

TEST(Backward, RejectsNonScalar) {
  Parameter w("w", Tensor({2, 2}, 1.0));
  EXPECT_THROW(backward(matmul(leaf(w), leaf(w))), DimensionError);
}

TEST(Backward, TiedParameterAccumulatesBothPaths) {
  Rng rng(12);
  Parameter e = random_parameter("e", {5, 3}, rng);
  Parameter e1("e1", e.value), e2("e2", e.value);
  const Tensor h = random_tensor({2, 3}, rng);
  const std::vector<TokenId> ids = {4, 1};
  auto graph = [&](const Parameter& a, const Parameter& b) {
    const Var x = add(gather_rows(leaf(a), ids), constant(h));
    return sum(log_softmax_rows(matmul_nt(x, leaf(b))));
  };
  backward(graph(e, e));
  backward(graph(e1, e2));
  for (std::size_t i = 0; i < e.grad.size(); ++i) {
    EXPECT_NEAR(e.grad[i], e1.grad[i] + e2.grad[i], 1e-12);
  }
}

TEST(Backward, UntrackedLeafBuildsNoGraph) {
  Parameter w("w", Tensor({2, 2}, 1.0));
  const Var y = matmul(leaf(w, false), leaf(w, false));
  EXPECT_FALSE(y.requires_grad());
}

// Finite-difference checks for each differentiable operation.
class OpGradient : public ::testing::Test {
 protected:
  Rng rng{13};
  void expect_ok(const std::vector<const Parameter*>& ps, const std::function<Var()>& f) {
    const auto reports = gradient_check(ps, f);
    for (const auto& r : reports) EXPECT_LT(r.relative_error, 1e-6) << r.name;
  }
};

TEST_F(OpGradient, Matmul) {
  Parameter a = random_parameter("a", {3, 4}, rng), b = random_parameter("b", {4, 2}, rng);
  Parameter c = random_parameter("c", {5, 4}, rng);
  const Tensor w = random_tensor({3, 5}, rng);
  const Tensor v = random_tensor({2, 1}, rng);
  expect_ok({&a, &b, &c}, [&] {
    const Var ab = matmul(leaf(a), leaf(b));
    const Var ac = matmul_nt(leaf(a), leaf(c));
    return add(sum(matmul(ab, constant(v))), sum(matmul_nt(ac, constant(w))));
  });
}

TEST_F(OpGradient, SoftmaxFamilies) {
  Parameter x = random_parameter("x", {3, 5}, rng);
  const Tensor w = random_tensor({3, 5}, rng);
  std::vector<std::uint8_t> allowed(15, 1);
  allowed[3] = allowed[7] = 0;
  expect_ok({&x}, [&] {
    const Var a = softmax_rows(leaf(x));
    const Var b = masked_softmax_rows(leaf(x), allowed);
    const Var c = log_softmax_rows(leaf(x));
    const Var mix = add(add(a, b), scale(c, 0.3));
    return sum(matmul_nt(mix, constant(w)));
  });
}

TEST_F(OpGradient, LayerNormGeluBias) {
  Parameter x = random_parameter("x", {4, 6}, rng);
  Parameter g = random_parameter("gain", {6}, rng);
  Parameter b = random_parameter("bias", {6}, rng);
  const Tensor w = random_tensor({6, 2}, rng);
  expect_ok({&x, &g, &b}, [&] {
    const Var y = gelu(add_bias(layer_norm(leaf(x), leaf(g), leaf(b)), leaf(b)));
    return sum(matmul(y, constant(w)));
  });
}

TEST_F(OpGradient, RowOpsAndCrossEntropy) {
  Parameter table = random_parameter("table", {6, 3}, rng);
  Parameter y = random_parameter("y", {2, 3}, rng);
  const std::vector<TokenId> ids = {5, 0, 5, 2};
  const std::vector<TokenId> targets = {1, 4, 0, 5, 2};
  const std::vector<std::uint8_t> mask = {1, 0, 1, 1, 1};
  expect_ok({&table, &y}, [&] {
    const Var g = gather_rows(leaf(table), ids);
    const Var parts[] = {slice_rows(g, 1, 3), leaf(y)};
    const Var stacked = concat_rows(parts);               // 5×3
    const Var cols[] = {stacked, scale(stacked, -0.5)};   // 5×6
    const Var logits = concat_cols(cols);
    return cross_entropy(log_softmax_rows(logits), targets, mask);
  });
}

TEST_F(OpGradient, DropoutWithFixedMask) {
  Parameter x = random_parameter("x", {4, 4}, rng);
  expect_ok({&x}, [&] {
    Rng fixed(99);
    return sum(gelu(dropout(leaf(x), 0.4, fixed, true)));
  });
}

}  // namespace
}  // namespace sanlm
