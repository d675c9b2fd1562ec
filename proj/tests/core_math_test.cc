// Copyright 2026 The narjoint Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <limits>

#include "nar/errors.h"
#include "nar/grad_check.h"
#include "nar/ops.h"
#include "test_util.h"

namespace nar {
namespace {

using testing::randomProjection;
using testing::randomTensor;

Tensor matrix(std::int64_t r, std::int64_t c, std::vector<double> v,
              Precision p = Precision::kF64) {
  return Tensor::fromValues({r, c}, v, p);
}

TEST(Tensor, ShapeInvariant) {
  Tensor t({3, 4}, Precision::kF32);
  EXPECT_EQ(t.numel(), 12);
  EXPECT_EQ(t.rows(), 3);
  EXPECT_EQ(t.cols(), 4);
  EXPECT_THROW(Tensor::fromValues({2, 2}, std::vector<double>{1, 2, 3}, Precision::kF64),
               ContractError);
  EXPECT_THROW(Tensor({1, 2, 3}, Precision::kF64), ContractError);
}

TEST(Primitive, MatmulIdentity) {
  Graph g(Precision::kF64);
  Var eye = g.constant(matrix(3, 3, {1, 0, 0, 0, 1, 0, 0, 0, 1}));
  const Tensor a = matrix(3, 3, {1.5, -2, 3, 4, 5, -6, 7, 8.25, 9});
  Var out = matmul(eye, g.constant(a));
  EXPECT_EQ(out.value(), a);
}

TEST(Primitive, SoftmaxSymmetric) {
  Graph g(Precision::kF64);
  Var out = softmax(g.constant(matrix(1, 2, {0, 0})));
  EXPECT_DOUBLE_EQ(out.value().get(0), 0.5);
  EXPECT_DOUBLE_EQ(out.value().get(1), 0.5);
}

// Scalar reference: population variance, eps inside the square root.
std::vector<double> referenceLayerNorm(const std::vector<double>& x, double eps) {
  double mu = 0;
  for (double v : x) mu += v;
  mu /= static_cast<double>(x.size());
  double var = 0;
  for (double v : x) var += (v - mu) * (v - mu);
  var /= static_cast<double>(x.size());
  std::vector<double> out;
  for (double v : x) out.push_back((v - mu) / std::sqrt(var + eps));
  return out;
}

TEST(Primitive, LayerNormPopulationVariance) {
  Graph g(Precision::kF64);
  Var x = g.constant(matrix(1, 2, {1, 3}));
  Var gamma = g.constant(Tensor::fromValues({2}, std::vector<double>{1, 1}, Precision::kF64));
  Var beta = g.constant(Tensor({2}, Precision::kF64));
  Var out = layerNorm(x, gamma, beta);
  const auto ref = referenceLayerNorm({1, 3}, 1e-5);
  EXPECT_DOUBLE_EQ(out.value().get(0), ref[0]);
  EXPECT_DOUBLE_EQ(out.value().get(1), ref[1]);
  EXPECT_NEAR(out.value().get(0), -1.0, 1e-5);
  EXPECT_NEAR(out.value().get(1), 1.0, 1e-5);
}

TEST(Backward, SumGivesOnes) {
  Rng rng(1);
  Parameter p("p", randomTensor({3, 5}, rng));
  Graph g(Precision::kF64);
  g.backward(sum(g.param(p)));
  for (std::int64_t i = 0; i < p.grad().numel(); ++i) EXPECT_EQ(p.grad().get(i), 1.0);
}

TEST(Backward, L1OfIdenticalInputsHasZeroSubgradient) {
  Rng rng(2);
  Parameter p("p", randomTensor({4, 3}, rng));
  Graph g(Precision::kF64);
  Var x = g.param(p);
  g.backward(l1Loss(x, x));
  for (std::int64_t i = 0; i < p.grad().numel(); ++i) EXPECT_EQ(p.grad().get(i), 0.0);
}

TEST(Backward, UnreachableParameterGetsZero) {
  Rng rng(3);
  Parameter used("used", randomTensor({2, 2}, rng));
  Parameter unused("unused", randomTensor({2, 2}, rng));
  Graph g(Precision::kF64);
  g.param(unused);
  g.backward(sum(g.param(used)));
  for (std::int64_t i = 0; i < unused.grad().numel(); ++i) {
    EXPECT_EQ(unused.grad().get(i), 0.0);
  }
}

TEST(Backward, RejectsNonScalarLoss) {
  Rng rng(4);
  Parameter p("p", randomTensor({2, 2}, rng));
  Graph g(Precision::kF64);
  EXPECT_THROW(g.backward(g.param(p)), ContractError);
}

TEST(Primitive, ShapeMismatchIsContractViolation) {
  Graph g(Precision::kF64);
  Var a = g.constant(Tensor({2, 3}, Precision::kF64));
  Var b = g.constant(Tensor({3, 2}, Precision::kF64));
  EXPECT_THROW(add(a, b), ContractError);
  EXPECT_THROW(matmul(a, a), ContractError);
}

TEST(Primitive, MixedPrecisionIsContractViolation) {
  Graph g(Precision::kF64);
  EXPECT_THROW(g.constant(Tensor({2, 3}, Precision::kF32)), ContractError);
}

TEST(Primitive, NonFiniteOutputNamesTheOp) {
  Graph g(Precision::kF64);
  Var big = g.constant(matrix(1, 1, {1e308}));
  try {
    scale(big, 10.0);
    FAIL() << "expected NumericError";
  } catch (const NumericError& e) {
    EXPECT_NE(std::string(e.what()).find("scale"), std::string::npos);
  }
}

TEST(Primitive, Float32Mode) {
  Graph g(Precision::kF32);
  Var a = g.constant(matrix(2, 2, {1, 2, 3, 4}, Precision::kF32));
  Var out = matmul(a, a);
  EXPECT_EQ(out.precision(), Precision::kF32);
  EXPECT_FLOAT_EQ(static_cast<float>(out.value().get(0)), 7.0f);
}

TEST(Dropout, SameSeedSameMaskAndInferenceNoop) {
  Rng rng(5);
  const Tensor x = randomTensor({6, 7}, rng);
  auto run = [&](std::uint64_t seed) {
    Graph g(Precision::kF64, /*training=*/true, seed);
    return dropout(g.constant(x), 0.3).value();
  };
  EXPECT_EQ(run(11), run(11));
  EXPECT_FALSE(run(11) == run(12));
  Graph eval(Precision::kF64, /*training=*/false, 11);
  EXPECT_EQ(dropout(eval.constant(x), 0.3).value(), x);
}

TEST(Backward, BitIdenticalAcrossRuns) {
  auto run = [] {
    Rng rng(6);
    Parameter w("w", randomTensor({5, 4}, rng));
    Parameter x("x", randomTensor({3, 5}, rng));
    Graph g(Precision::kF64, true, 99);
    Var h = dropout(swish(matmul(g.param(x), g.param(w))), 0.2);
    Var loss = mean(softmax(h));
    g.backward(randomProjection(h, 7));
    return std::make_pair(loss.value().get(0), w.grad());
  };
  auto a = run();
  auto b = run();
  EXPECT_EQ(a.first, b.first);
  EXPECT_EQ(a.second, b.second);
}

// --- finite-difference audit of every primitive -------------------------

TEST(GradCheck, EveryPrimitiveMatchesCentralDifferences) {
  for (const auto& c : primitiveAudits()) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      const double err = c.error(c.run(seed * 7919 + 13));
      EXPECT_LT(err, 1e-4) << c.name << " seed " << seed;
    }
  }
}

TEST(GradCheck, QuadraticForm) {
  Rng rng(21);
  Parameter x("x", randomTensor({1, 6}, rng));
  Parameter a("a", randomTensor({6, 6}, rng));
  auto f = [&](Graph& g) {
    Var xv = g.param(x);
    return sum(mul(matmul(xv, g.param(a)), xv));
  };
  EXPECT_LT(gradCheck(f, {&x, &a}, 1e-5).maxRelativeError, 1e-8);
}

TEST(GradCheck, SoftmaxCrossEntropy) {
  Rng rng(22);
  Parameter logits("logits", randomTensor({4, 5}, rng));
  const std::vector<int> targets{0, 3, 2, 4};
  auto f = [&](Graph& g) { return crossEntropy(g.param(logits), targets); };
  EXPECT_LT(gradCheck(f, {&logits}, 1e-5).maxRelativeError, 1e-6);
}

TEST(GradCheck, RandomTwoLayerComposite) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Rng rng(seed);
    Parameter x("x", randomTensor({3, 4}, rng));
    Parameter w1("w1", randomTensor({4, 6}, rng, 0.5));
    Parameter b1("b1", randomTensor({6}, rng));
    Parameter w2("w2", randomTensor({6, 3}, rng, 0.5));
    auto f = [&](Graph& g) {
      Var h = gelu(add(matmul(g.param(x), g.param(w1)), g.param(b1)));
      return randomProjection(logSoftmax(matmul(h, g.param(w2))), seed);
    };
    EXPECT_LT(gradCheck(f, {&x, &w1, &b1, &w2}).maxRelativeError, 1e-4);
  }
}

TEST(GradCheck, RejectsBadEpsAndF32) {
  Parameter p("p", Tensor({2}, Precision::kF64));
  auto f = [&](Graph& g) { return sum(g.param(p)); };
  EXPECT_THROW(gradCheck(f, {&p}, 1e-3), ContractError);
  Parameter q("q", Tensor({2}, Precision::kF32));
  EXPECT_THROW(gradCheck(f, {&q}), ContractError);
}

}  // namespace
}  // namespace nar
