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
#include "nar/masking.h"
#include "nar/random.h"
#include "nar/vocabulary.h"
#include "oracles.h"

namespace nar {
namespace {

const Vocabulary& vocab() {
  static const Vocabulary v = Vocabulary::defaultAlphabet();
  return v;
}

Matrix ramp(std::int64_t rows, std::int64_t cols) {
  Matrix m(rows, cols);
  for (std::int64_t r = 0; r < rows; ++r)
    for (std::int64_t c = 0; c < cols; ++c) m(r, c) = static_cast<float>(1 + r * cols + c);
  return m;
}

TEST(MaskText, Extremes) {
  const auto text = vocab().encode("HELLO");
  const auto none = maskText(text, 0.0, 1, vocab().maskId());
  EXPECT_EQ(none.ids, text);
  EXPECT_EQ(none.maskedCount(), 0);
  const auto all = maskText(text, 1.0, 1, vocab().maskId());
  EXPECT_EQ(all.maskedCount(), 5);
  for (int id : all.ids) EXPECT_EQ(id, vocab().maskId());
}

TEST(MaskText, ExactCountAndUniformPositions) {
  const auto text = vocab().encode("CAT");
  std::vector<int> hits(3, 0);
  const int trials = 10000;
  for (int s = 0; s < trials; ++s) {
    const auto m = maskText(text, 1.0 / 3.0, static_cast<std::uint64_t>(s), vocab().maskId());
    ASSERT_EQ(m.maskedCount(), 1);
    for (int i = 0; i < 3; ++i) hits[static_cast<size_t>(i)] += m.masked[static_cast<size_t>(i)];
  }
  for (int h : hits) EXPECT_NEAR(h / static_cast<double>(trials), 1.0 / 3.0, 0.02);
}

TEST(MaskText, CountIsRoundedHalfUpAndDeterministic) {
  Rng rng(3);
  for (int trial = 0; trial < 500; ++trial) {
    const int n = static_cast<int>(rng.uniformInt(0, 20));
    std::vector<int> text(static_cast<size_t>(n), 2);
    const double p = rng.uniform();
    const auto a = maskText(text, p, 99, vocab().maskId());
    EXPECT_EQ(a.maskedCount(), static_cast<int>(std::floor(p * n + 0.5)));
    EXPECT_EQ(a.ids, maskText(text, p, 99, vocab().maskId()).ids);
  }
}

TEST(PropagateBlankMasks, WorkedExample) {
  const int mask = vocab().maskId();
  // "CAT" masked as "C<mask>T".
  MaskedTokens chars{{vocab().id('C'), mask, vocab().id('T')}, {0, 1, 0}, MaskSchedule::kText};
  const auto tokens = propagateBlankMasks(chars, mask);
  EXPECT_EQ(vocab().render(tokens.ids), "_C_<mask><mask>T_");
  const auto frames = upsampleByRepeats(tokens.ids, std::vector<int>{1, 2, 0, 1, 1, 1, 1});
  EXPECT_EQ(vocab().render(frames), "_CC<mask><mask>T_");
}

TEST(PropagateBlankMasks, NoneAndAll) {
  const auto text = vocab().encode("ABBA");
  const auto none = propagateBlankMasks(maskText(text, 0.0, 1, vocab().maskId()), vocab().maskId());
  EXPECT_EQ(none.maskedCount(), 0);
  EXPECT_EQ(none.ids, addBlank(text));
  const auto all = fullyMaskedTokens(text, vocab().maskId());
  EXPECT_EQ(all.maskedCount(), 8);
  EXPECT_EQ(all.masked[0], 0);
  EXPECT_EQ(all.ids[0], Vocabulary::kBlank);
}

TEST(PropagateBlankMasks, RuleHoldsAndFirstBlankNeverMasked) {
  Rng rng(5);
  for (int trial = 0; trial < 1000; ++trial) {
    const int n = static_cast<int>(rng.uniformInt(0, 12));
    std::vector<int> text;
    for (int i = 0; i < n; ++i) text.push_back(static_cast<int>(rng.uniformInt(1, 27)));
    const auto masked = maskText(text, rng.uniform(), rng.next(), vocab().maskId());
    const auto tokens = propagateBlankMasks(masked, vocab().maskId());
    ASSERT_EQ(tokens.ids.size(), 2 * text.size() + 1);
    ASSERT_EQ(tokens.masked[0], 0);
    for (size_t i = 1; i <= text.size(); ++i) {
      ASSERT_EQ(tokens.masked[2 * i], tokens.masked[2 * i - 1]);
      ASSERT_EQ(tokens.masked[2 * i - 1], masked.masked[i - 1]);
    }
  }
}

TEST(MaskSpeechSpans, Extremes) {
  const Matrix x = ramp(20, 3);
  EXPECT_EQ(maskSpeechSpans(x, 0.0, 10, 1).frames, x);
  const auto full = maskSpeechSpans(x, 1.0, 3, 1);
  EXPECT_EQ(full.frames, Matrix(20, 3));
  EXPECT_EQ(full.maskedFrames(), 20);
}

TEST(MaskSpeechSpans, SpanBoundsAndZeroFill) {
  const Matrix x = ramp(100, 2);
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const auto m = maskSpeechSpans(x, 0.0625, 10, seed);
    ASSERT_GE(m.maskedFrames(), 10);
    ASSERT_LE(m.maskedFrames(), 60);
    for (std::int64_t t = 0; t < 100; ++t) {
      const bool zeroed = m.frames(t, 0) == 0.0f && m.frames(t, 1) == 0.0f;
      ASSERT_EQ(zeroed, m.masked[static_cast<size_t>(t)] == 1);
    }
  }
}

TEST(MaskSpeechSpans, MonteCarloCoverageMatchesAnalyticExpectation) {
  const int T = 100, M = 10, trials = 10000;
  const int starts = roundedCount(0.0625, T);
  ASSERT_EQ(starts, 6);
  const auto moments = oracle::spanCoverageMoments(T, starts, M);
  const Matrix x(T, 1, 1.0f);
  double total = 0;
  for (int s = 0; s < trials; ++s) {
    total += maskSpeechSpans(x, 0.0625, M, static_cast<std::uint64_t>(s) * 2654435761u).maskedFrames();
  }
  const double mcMean = total / trials;
  const double sigma = std::sqrt(moments.variance / trials);
  EXPECT_NEAR(mcMean, moments.mean, 3 * sigma);
}

TEST(MaskSpeechCorner, Examples) {
  const Matrix x = ramp(10, 8);
  EXPECT_EQ(maskSpeechCorner(x, 0.0).frames, x);
  EXPECT_EQ(maskSpeechCorner(x, 1.0).frames, Matrix(10, 8));
  const auto half = maskSpeechCorner(x, 0.5);
  EXPECT_EQ(half.keptFrames, 5);
  EXPECT_EQ(half.keptBins, 4);
  int zeros = 0;
  for (float v : half.frames.values()) zeros += v == 0.0f;
  EXPECT_EQ(zeros, 60);
}

TEST(MaskSpeechCorner, MaskedFractionIsExact) {
  Rng rng(9);
  const std::vector<double> ps{0.1, 0.25, 0.5, 0.75, 0.9};
  for (int trial = 0; trial < 300; ++trial) {
    const auto T = rng.uniformInt(1, 60);
    const auto F = rng.uniformInt(1, 20);
    const double p = ps[static_cast<size_t>(rng.uniformInt(0, 4))];
    const auto m = maskSpeechCorner(Matrix(T, F, 1.0f), p);
    std::int64_t zeros = 0;
    for (float v : m.frames.values()) zeros += v == 0.0f;
    ASSERT_EQ(zeros, T * F - m.keptFrames * m.keptBins);
    ASSERT_EQ(m.keptFrames, static_cast<std::int64_t>(std::floor((1 - p) * T + 1e-9)));
  }
}

TEST(MaskSpeechCorner, RepresentationErrorDoesNotDropAFrame) {
  // (1 - 0.9) * 10 is 0.99999... in binary floating point.
  EXPECT_EQ(maskSpeechCorner(Matrix(10, 10, 1.0f), 0.9).keptFrames, 1);
}

}  // namespace
}  // namespace nar
