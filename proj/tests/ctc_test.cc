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
#include <limits>

#include "nar/ctc.h"
#include "nar/errors.h"
#include "nar/grad_check.h"
#include "nar/ops.h"
#include "nar/random.h"
#include "oracles.h"

namespace nar {
namespace {

using Rows = std::vector<std::vector<double>>;

Tensor toTensor(const Rows& rows) {
  std::vector<double> flat;
  for (const auto& r : rows) flat.insert(flat.end(), r.begin(), r.end());
  return Tensor::fromValues({static_cast<std::int64_t>(rows.size()),
                             static_cast<std::int64_t>(rows.front().size())},
                            flat, Precision::kF64);
}

Rows randomRows(Rng& rng, int frames, int vocab, double scale = 2.0) {
  Rows rows(static_cast<size_t>(frames), std::vector<double>(static_cast<size_t>(vocab)));
  for (auto& r : rows)
    for (double& v : r) v = scale * rng.normal();
  return rows;
}

std::vector<std::vector<int>> targetsUpTo(int maxLen, int vocab) {
  std::vector<std::vector<int>> out;
  for (int len = 0; len <= maxLen; ++len) {
    oracle::forEachPath(len, vocab - 1, [&](const std::vector<int>& t) {
      std::vector<int> shifted = t;
      for (int& c : shifted) c += 1;
      out.push_back(shifted);
    });
  }
  return out;
}

TEST(CtcLoss, UniformTwoFrameExample) {
  const Tensor logits = toTensor({{0.0, 0.0}, {0.0, 0.0}});
  const auto r = ctcLoss(logits, std::vector<int>{1});
  EXPECT_NEAR(r.loss, -std::log(0.75), 1e-12);
}

TEST(CtcLoss, MatchesEnumerationOnAllSmallInstances) {
  Rng rng(11);
  const auto targets = targetsUpTo(3, 3);
  int checked = 0;
  for (int frames = 1; frames <= 6; ++frames) {
    for (int draw = 0; draw < 20; ++draw) {
      const Rows rows = randomRows(rng, frames, 3);
      const Tensor logits = toTensor(rows);
      for (const auto& target : targets) {
        const double expected = oracle::ctcLossByEnumeration(rows, target);
        if (ctcMinFrames(target) > frames) {
          ASSERT_TRUE(std::isinf(expected));
          ASSERT_THROW(ctcLoss(logits, target), ContractError);
          continue;
        }
        ASSERT_NEAR(ctcLoss(logits, target).loss, expected, 1e-9)
            << "T=" << frames << " |y|=" << target.size();
        ++checked;
      }
    }
  }
  EXPECT_GT(checked, 1000);
}

TEST(CtcLoss, SharpeningTowardsAPathDrivesLossToZero) {
  const std::vector<int> path{0, 1, 1, 0, 2};
  double previous = std::numeric_limits<double>::infinity();
  for (double sharp : {1.0, 4.0, 16.0, 64.0}) {
    Rows rows(path.size(), std::vector<double>(3, 0.0));
    for (size_t t = 0; t < path.size(); ++t) rows[t][static_cast<size_t>(path[t])] = sharp;
    const double loss = ctcLoss(toTensor(rows), std::vector<int>{1, 2}).loss;
    EXPECT_LT(loss, previous);
    previous = loss;
  }
  EXPECT_LT(previous, 1e-20);
}

TEST(CtcLoss, GradientRowsSumToZeroAndLossNonNegative) {
  Rng rng(2);
  for (int trial = 0; trial < 200; ++trial) {
    const int frames = static_cast<int>(rng.uniformInt(3, 30));
    const int vocab = static_cast<int>(rng.uniformInt(2, 8));
    std::vector<int> target;
    const int len = static_cast<int>(rng.uniformInt(0, frames / 2));
    for (int i = 0; i < len; ++i) target.push_back(static_cast<int>(rng.uniformInt(1, vocab - 1)));
    const auto r = ctcLoss(toTensor(randomRows(rng, frames, vocab)), target);
    ASSERT_GE(r.loss, 0.0);
    for (int t = 0; t < frames; ++t) {
      double s = 0;
      for (int k = 0; k < vocab; ++k) s += r.gradient[static_cast<size_t>(t * vocab + k)];
      ASSERT_NEAR(s, 0.0, 1e-12);
    }
  }
}

TEST(CtcLoss, LongSequencesStayFinite) {
  Rng rng(4);
  std::vector<int> target;
  for (int i = 0; i < 300; ++i) target.push_back(1 + i % 5);
  const auto r = ctcLoss(toTensor(randomRows(rng, 2000, 6, 8.0)), target);
  EXPECT_TRUE(std::isfinite(r.loss));
  for (double v : r.gradient) ASSERT_TRUE(std::isfinite(v));
}

TEST(CtcLoss, InfeasibleTargetIsContractError) {
  const Tensor logits = toTensor({{0, 0, 0}, {0, 0, 0}});
  EXPECT_THROW(ctcLoss(logits, std::vector<int>{1, 1}), ContractError);
  EXPECT_THROW(ctcLoss(logits, std::vector<int>{1, 2, 1}), ContractError);
  EXPECT_THROW(ctcLoss(logits, std::vector<int>{0}), ContractError);
  EXPECT_NO_THROW(ctcLoss(logits, std::vector<int>{1, 2}));
}

TEST(CtcLoss, GradCheck) {
  Rng rng(8);
  for (int trial = 0; trial < 20; ++trial) {
    const int frames = static_cast<int>(rng.uniformInt(1, 5));
    const int vocab = static_cast<int>(rng.uniformInt(2, 4));
    std::vector<int> target;
    const int len = static_cast<int>(rng.uniformInt(0, frames));
    for (int i = 0; i < len; ++i) target.push_back(static_cast<int>(rng.uniformInt(1, vocab - 1)));
    if (ctcMinFrames(target) > frames) continue;
    Parameter p("logits", toTensor(randomRows(rng, frames, vocab)));
    const auto r = gradCheck([&](Graph& g) { return ctcLoss(g.param(p), target); }, {&p});
    EXPECT_LT(r.maxRelativeError, 1e-5) << "trial " << trial;
  }
}

TEST(CtcLoss, AutodiffMatchesDirectGradient) {
  Rng rng(9);
  const Rows rows = randomRows(rng, 6, 4);
  const std::vector<int> target{1, 3, 3};
  Parameter p("logits", toTensor(rows));
  Graph g(Precision::kF64);
  g.backward(scale(ctcLoss(g.param(p), target), 2.0));
  const auto direct = ctcLoss(toTensor(rows), target);
  for (size_t i = 0; i < direct.gradient.size(); ++i) {
    EXPECT_NEAR(p.grad().get(static_cast<std::int64_t>(i)), 2.0 * direct.gradient[i], 1e-12);
  }
}

TEST(GreedyDecode, Examples) {
  // Path _CCA_T_ with ids C=4, A=2, T=21 over a 29-token vocabulary.
  const std::vector<int> path{0, 4, 4, 2, 0, 21, 0};
  Rows rows(path.size(), std::vector<double>(29, 0.0));
  for (size_t t = 0; t < path.size(); ++t) rows[t][static_cast<size_t>(path[t])] = 5.0;
  const auto h = greedyDecode(toTensor(rows));
  EXPECT_EQ(h.path, path);
  EXPECT_EQ(h.text, (std::vector<int>{4, 2, 21}));
  EXPECT_EQ(charConfidences(h).size(), 3u);

  Rows blank(4, std::vector<double>(3, 0.0));
  for (auto& r : blank) r[0] = 1.0;
  EXPECT_TRUE(greedyDecode(toTensor(blank)).text.empty());
}

TEST(GreedyDecode, TiesGoToLowestIndexAndSuppressionIsHonoured) {
  const auto tie = greedyDecode(toTensor({{1.0, 3.0, 3.0}, {2.0, 2.0, 2.0}}));
  EXPECT_EQ(tie.path, (std::vector<int>{1, 0}));
  const auto suppressed = greedyDecode(toTensor({{0.0, 1.0, 9.0}}), 2);
  EXPECT_EQ(suppressed.path, (std::vector<int>{1}));
}

TEST(CharConfidences, MeanOverRuns) {
  Hypothesis h{{0, 3, 3, 0, 3, 5}, {3, 3, 5}, {0.9, 0.8, 0.6, 0.5, 0.4, 1.0}};
  const auto c = charConfidences(h);
  ASSERT_EQ(c.size(), 3u);
  EXPECT_NEAR(c[0], 0.7, 1e-12);
  EXPECT_NEAR(c[1], 0.4, 1e-12);
  EXPECT_NEAR(c[2], 1.0, 1e-12);
}

TEST(CharConfidences, CountMatchesCollapseAndValuesAreProbabilities) {
  Rng rng(6);
  for (int trial = 0; trial < 500; ++trial) {
    const int frames = static_cast<int>(rng.uniformInt(1, 40));
    const auto h = greedyDecode(toTensor(randomRows(rng, frames, 5)));
    const auto c = charConfidences(h);
    ASSERT_EQ(c.size(), oracle::collapse(h.path).size());
    for (double v : c) {
      ASSERT_GE(v, 0.0);
      ASSERT_LE(v, 1.0);
    }
  }
}

TEST(ViterbiAlign, MatchesEnumerationArgmax) {
  Rng rng(21);
  const auto targets = targetsUpTo(3, 3);
  for (int frames = 1; frames <= 6; ++frames) {
    for (int draw = 0; draw < 3; ++draw) {
      const Rows rows = randomRows(rng, frames, 3);
      const Tensor logits = toTensor(rows);
      for (const auto& target : targets) {
        if (ctcMinFrames(target) > frames) {
          ASSERT_THROW(viterbiAlign(logits, target), ContractError);
          continue;
        }
        double best = 0;
        const auto expected = oracle::bestPathByEnumeration(rows, target, &best);
        const auto a = viterbiAlign(logits, target);
        ASSERT_NO_THROW(validateAlignment(a));
        const auto path = upsampleByRepeats(a.tokens, a.repeats);
        ASSERT_EQ(path, expected);
        ASSERT_NEAR(pathLogProb(logits, path), best, 1e-9);
      }
    }
  }
}

TEST(ViterbiAlign, SharpLogitsRecoverTheUniquePath) {
  const std::vector<int> path{0, 0, 3, 3, 3, 0, 3, 1, 1, 0};
  Rows rows(path.size(), std::vector<double>(4, 0.0));
  for (size_t t = 0; t < path.size(); ++t) rows[t][static_cast<size_t>(path[t])] = 20.0;
  const auto a = viterbiAlign(toTensor(rows), std::vector<int>{3, 3, 1});
  EXPECT_EQ(a.repeats, (std::vector<int>{2, 3, 1, 1, 0, 2, 1}));
}

// Draws a uniformly random valid alignment of `target` into `frames`.
std::vector<int> randomValidPath(Rng& rng, const std::vector<int>& target, int frames) {
  while (true) {
    auto tokens = addBlank(target);
    std::vector<int> repeats(tokens.size(), 0);
    for (size_t i = 1; i < tokens.size(); i += 2) repeats[i] = 1;
    for (size_t i = 2; i + 1 < tokens.size(); i += 2) {
      if (tokens[i - 1] == tokens[i + 1]) repeats[i] = 1;
    }
    int used = 0;
    for (int r : repeats) used += r;
    for (; used < frames; ++used) {
      ++repeats[static_cast<size_t>(rng.uniformInt(0, static_cast<std::int64_t>(tokens.size()) - 1))];
    }
    if (used == frames) return upsampleByRepeats(tokens, repeats);
  }
}

TEST(ViterbiAlign, BeatsRandomValidPaths) {
  Rng rng(33);
  for (int trial = 0; trial < 10; ++trial) {
    const int frames = static_cast<int>(rng.uniformInt(10, 40));
    std::vector<int> target;
    const int len = static_cast<int>(rng.uniformInt(1, frames / 3));
    for (int i = 0; i < len; ++i) target.push_back(static_cast<int>(rng.uniformInt(1, 5)));
    const Tensor logits = toTensor(randomRows(rng, frames, 6));
    const auto a = viterbiAlign(logits, target);
    const auto best = pathLogProb(logits, upsampleByRepeats(a.tokens, a.repeats));
    ASSERT_EQ(collapsePath(upsampleByRepeats(a.tokens, a.repeats)), target);
    for (int s = 0; s < 1000; ++s) {
      const auto path = randomValidPath(rng, target, frames);
      ASSERT_EQ(collapsePath(path), target);
      ASSERT_LE(pathLogProb(logits, path), best + 1e-12);
    }
  }
}

}  // namespace
}  // namespace nar
