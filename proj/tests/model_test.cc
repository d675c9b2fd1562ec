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

#include "nar/alignment.h"
#include "nar/ctc.h"
#include "nar/errors.h"
#include "nar/grad_check.h"
#include "nar/model.h"
#include "nar/ops.h"
#include "test_util.h"

namespace nar {
namespace {

ModelConfig tinyConfig() {
  ModelConfig c;
  c.dModel = 8;
  c.heads = 2;
  c.mmLayers = 1;
  c.peripheralLayers = 1;
  c.melBins = 4;
  c.vocabSize = 5;
  c.maxRepeat = 4;
  c.convKernel = 3;
  c.ffnMultiplier = 2;
  c.dropout = 0.0;
  c.speakers = 2;
  c.precision = Precision::kF64;
  return c;
}

Matrix randomFrames(Rng& rng, std::int64_t frames, std::int64_t bins) {
  Matrix m(frames, bins);
  for (std::int64_t i = 0; i < m.size(); ++i) m.data()[i] = static_cast<float>(rng.normal());
  return m;
}

std::vector<int> randomText(Rng& rng, int length, int vocab) {
  std::vector<int> t;
  for (int i = 0; i < length; ++i) t.push_back(static_cast<int>(rng.uniformInt(1, vocab - 2)));
  return t;
}

TEST(ConformerBlock, PreservesShape) {
  BlockHarness h(64, 2, 7, 2, Precision::kF32, 1);
  Rng rng(1);
  Graph g(Precision::kF32);
  Var x = g.constant(testing::randomTensor({7, 64}, rng, 1.0, Precision::kF32));
  EXPECT_EQ(h.block()(g, x).shape(), (Shape{7, 64}));
}

TEST(ConformerBlock, ZeroBranchScalesReduceToFinalNorm) {
  BlockHarness h(16, 2, 5, 2, Precision::kF64, 3, 0.0);
  Rng rng(2);
  Graph g(Precision::kF64);
  Var x = g.constant(testing::randomTensor({6, 16}, rng, 1.0, Precision::kF64));
  const auto& b = h.block();
  Var actual = b(g, x);
  Var expected = layerNorm(x, g.param(*b.outNorm.gamma), g.param(*b.outNorm.beta));
  EXPECT_EQ(actual.value(), expected.value());
}

TEST(Model, InitIsDeterministicPerSeed) {
  const ModelConfig c = tinyConfig();
  Model a(c, 5), b(c, 5), other(c, 6);
  const auto pa = a.parameters(), pb = b.parameters(), po = other.parameters();
  ASSERT_EQ(pa.size(), pb.size());
  bool anyDifferent = false;
  for (size_t i = 0; i < pa.size(); ++i) {
    EXPECT_EQ(pa[i]->value(), pb[i]->value()) << pa[i]->name();
    anyDifferent |= !(pa[i]->value() == po[i]->value());
  }
  EXPECT_TRUE(anyDifferent);
}

TEST(Model, ConfigRoundTrip) {
  ModelConfig c = tinyConfig();
  c.dropout = 0.123456789;
  EXPECT_EQ(ModelConfig::parse(c.serialize()), c);
  EXPECT_THROW(ModelConfig::parse("bogus=1\n"), DataError);
  EXPECT_THROW(ModelConfig::parse("heads=two\n"), DataError);
}

TEST(Model, WorkedAlignmentGivesSevenFrames) {
  ModelConfig c = tinyConfig();
  c.vocabSize = 29;
  Model m(c, 1);
  Graph g(c.precision);
  // "CAT" with C=4, A=2, T=21.
  const auto tokens = unmaskedTokens(std::vector<int>{4, 2, 21});
  const std::vector<int> repeats{1, 2, 0, 1, 1, 1, 1};
  ForwardInput in;
  in.text = &tokens;
  in.repeats = repeats;
  const auto out = m.forward(g, in);
  EXPECT_EQ(out.frames, 7);
  EXPECT_EQ(out.speech.shape(), (Shape{7, 4}));
  EXPECT_EQ(out.text.shape(), (Shape{7, 29}));
}

TEST(Model, HeadShapesAtDefaultWidth) {
  ModelConfig c;
  Model m(c, 1);
  Rng rng(3);
  const auto speech = unmaskedSpeech(randomFrames(rng, 30, c.melBins));
  Graph g(c.precision);
  ForwardInput in;
  in.speech = &speech;
  const auto out = m.forward(g, in);
  EXPECT_EQ(out.speech.shape(), (Shape{30, 16}));
  EXPECT_EQ(out.text.shape(), (Shape{30, 29}));
  EXPECT_TRUE(out.speech.value().allFinite());
  EXPECT_TRUE(std::isfinite(ctcLoss(out.text.value(), std::vector<int>{3, 4, 5}).loss));
}

TEST(Model, LengthMismatchWithBothModalitiesIsContractError) {
  const ModelConfig c = tinyConfig();
  Model m(c, 1);
  Rng rng(4);
  const auto speech = unmaskedSpeech(randomFrames(rng, 6, c.melBins));
  const auto tokens = unmaskedTokens(std::vector<int>{1, 2});
  const std::vector<int> repeats{1, 1, 1, 1, 1};
  Graph g(c.precision);
  ForwardInput in;
  in.speech = &speech;
  in.text = &tokens;
  in.repeats = repeats;
  EXPECT_THROW(m.forward(g, in), ContractError);
}

TEST(Model, AbsentTextFeedsTheMaskEmbeddingAtEveryFrame) {
  const ModelConfig c = tinyConfig();
  Model m(c, 1);
  Rng rng(5);
  const auto speech = unmaskedSpeech(randomFrames(rng, 5, c.melBins));
  Graph g(c.precision);
  ForwardInput in;
  in.speech = &speech;
  in.speechHead = false;
  g.backward(testing::randomProjection(m.forward(g, in).text, 1));
  EXPECT_GT(std::abs(m.parameter("mask_embedding.table").grad().get(0)), 0.0);
  EXPECT_EQ(m.parameter("token_embedding.table").grad().toDoubles(),
            std::vector<double>(static_cast<size_t>(c.vocabSize * c.dModel), 0.0));
}

TEST(Model, PredictedRepeatsAreValidAlignments) {
  const ModelConfig c = tinyConfig();
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Model m(c, seed);
    Rng rng(seed);
    const auto text = randomText(rng, static_cast<int>(rng.uniformInt(0, 6)), c.vocabSize);
    const auto tokens = addBlank(text);
    Graph g(c.precision);
    const auto repeats = m.predictRepeats(g, tokens, 0);
    ASSERT_NO_THROW(validateAlignment({tokens, repeats}));
  }
}

TEST(Model, EitherHeadAloneReachesTheTrunk) {
  const ModelConfig c = tinyConfig();
  Rng rng(6);
  const auto speech = unmaskedSpeech(randomFrames(rng, 5, c.melBins));
  for (bool speechHead : {true, false}) {
    Model m(c, 2);
    Graph g(c.precision);
    ForwardInput in;
    in.speech = &speech;
    in.speechHead = speechHead;
    in.textHead = !speechHead;
    const auto out = m.forward(g, in);
    g.backward(testing::randomProjection(speechHead ? out.speech : out.text, 3));
    double norm = 0;
    for (double v : m.parameter("mm_encoder.0.attn.query.w").grad().toDoubles()) norm += v * v;
    EXPECT_GT(norm, 0.0);
    double other = 0;
    const std::string unused = speechHead ? "text_head.out.w" : "speech_head.out.w";
    for (double v : m.parameter(unused).grad().toDoubles()) other += v * v;
    EXPECT_EQ(other, 0.0);
  }
}

TEST(Model, PerfectDurationLogitsGiveNearZeroLoss) {
  Graph g(Precision::kF64);
  const std::vector<int> repeats{0, 2, 1, 3};
  std::vector<double> logits(4 * 5, 0.0);
  for (size_t i = 0; i < repeats.size(); ++i) logits[i * 5 + static_cast<size_t>(repeats[i])] = 50.0;
  Var l = crossEntropy(g.constant(Tensor::fromValues({4, 5}, logits, Precision::kF64)), repeats);
  EXPECT_LT(l.value().get(0), 1e-20);
}

// Full-graph gradient checks on a tiny f64 model. Thousands of components
// per graph means some gradients land near 1e-10, where differencing is at
// the roundoff floor, so these compare whole parameter tensors.

// Whole-model cases compare per parameter tensor: single elements of
// near-zero gradients sit at the roundoff floor of a central difference.
TEST(ModelGradCheck, EveryAuditCaseMatchesCentralDifferences) {
  for (const auto& c : modelAudits()) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      const auto r = c.run(seed);
      EXPECT_LT(c.error(r), 1e-4) << c.name << " seed " << seed << " worst "
                                  << (c.perTensor ? r.worstTensor : r.worstParameter);
    }
  }
}

}  // namespace
}  // namespace nar
