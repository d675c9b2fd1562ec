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

#include "nar/masking.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "nar/alignment.h"
#include "nar/errors.h"
#include "nar/random.h"

namespace nar {

int MaskedTokens::maskedCount() const {
  return static_cast<int>(std::count(masked.begin(), masked.end(), 1));
}

int MaskedStream::maskedFrames() const {
  return static_cast<int>(std::count(masked.begin(), masked.end(), 1));
}

MaskedTokens maskText(std::span<const int> text, double p, std::uint64_t seed, int maskId) {
  NAR_REQUIRE(p >= 0.0 && p <= 1.0, "mask_text: p must be in [0,1]");
  MaskedTokens out{{text.begin(), text.end()},
                   std::vector<std::uint8_t>(text.size(), 0),
                   MaskSchedule::kText};
  const int n = static_cast<int>(text.size());
  Rng rng(seed);
  for (int pos : rng.sampleWithoutReplacement(n, roundedCount(p, n))) {
    out.ids[static_cast<size_t>(pos)] = maskId;
    out.masked[static_cast<size_t>(pos)] = 1;
  }
  return out;
}

MaskedTokens propagateBlankMasks(const MaskedTokens& characters, int maskId) {
  NAR_REQUIRE(characters.ids.size() == characters.masked.size(),
              "propagate_blank_masks: flags/ids length differ");
  MaskedTokens out{addBlank(characters.ids),
                   std::vector<std::uint8_t>(2 * characters.ids.size() + 1, 0),
                   characters.schedule};
  for (size_t i = 0; i < characters.ids.size(); ++i) {
    if (!characters.masked[i]) continue;
    out.masked[2 * i + 1] = 1;
    out.masked[2 * i + 2] = 1;
    out.ids[2 * i + 1] = maskId;
    out.ids[2 * i + 2] = maskId;
  }
  return out;
}

MaskedTokens fullyMaskedTokens(std::span<const int> text, int maskId) {
  MaskedTokens chars{std::vector<int>(text.size(), maskId),
                     std::vector<std::uint8_t>(text.size(), 1), MaskSchedule::kFull};
  return propagateBlankMasks(chars, maskId);
}

MaskedTokens unmaskedTokens(std::span<const int> text) {
  return {addBlank(text), std::vector<std::uint8_t>(2 * text.size() + 1, 0),
          MaskSchedule::kNone};
}

MaskedStream maskSpeechSpans(const Matrix& x, double p, int spanLength, std::uint64_t seed) {
  NAR_REQUIRE(p >= 0.0 && p <= 1.0, "mask_speech_spans: p must be in [0,1]");
  NAR_REQUIRE(spanLength >= 1, "mask_speech_spans: span length must be >= 1");
  const auto frames = x.rows();
  MaskedStream out{x, std::vector<std::uint8_t>(static_cast<size_t>(frames), 0),
                   MaskSchedule::kSpans};
  Rng rng(seed);
  const int starts = roundedCount(p, frames);
  for (int s : rng.sampleWithoutReplacement(static_cast<int>(frames), starts)) {
    const auto end = std::min<std::int64_t>(s + spanLength, frames);
    for (std::int64_t t = s; t < end; ++t) out.masked[static_cast<size_t>(t)] = 1;
  }
  for (std::int64_t t = 0; t < frames; ++t) {
    if (out.masked[static_cast<size_t>(t)]) {
      std::fill(out.frames.row(t).begin(), out.frames.row(t).end(), 0.0f);
    }
  }
  return out;
}

MaskedStream keepCorner(const Matrix& x, std::int64_t keptFrames, std::int64_t keptBins) {
  NAR_REQUIRE(keptFrames >= 0 && keptFrames <= x.rows() && keptBins >= 0 &&
                  keptBins <= x.cols(),
              "keep_corner: corner exceeds the matrix");
  MaskedStream out{x, std::vector<std::uint8_t>(static_cast<size_t>(x.rows()), 0),
                   MaskSchedule::kCorner, keptFrames, keptBins};
  for (std::int64_t t = 0; t < x.rows(); ++t) {
    for (std::int64_t f = 0; f < x.cols(); ++f) {
      if (t >= keptFrames || f >= keptBins) {
        out.frames(t, f) = 0.0f;
        out.masked[static_cast<size_t>(t)] = 1;
      }
    }
  }
  return out;
}

MaskedStream maskSpeechCorner(const Matrix& x, double p) {
  NAR_REQUIRE(p >= 0.0 && p <= 1.0, "mask_speech_corner: p must be in [0,1]");
  // The epsilon absorbs representation error such as (1 - 0.9) * 10.
  const auto t0 = static_cast<std::int64_t>(
      std::floor((1.0 - p) * static_cast<double>(x.rows()) + 1e-9));
  const auto f0 = static_cast<std::int64_t>(
      std::floor((1.0 - p) * static_cast<double>(x.cols()) + 1e-9));
  return keepCorner(x, t0, f0);
}

MaskedStream unmaskedSpeech(const Matrix& x) {
  return {x, std::vector<std::uint8_t>(static_cast<size_t>(x.rows()), 0),
          MaskSchedule::kNone, x.rows(), x.cols()};
}

MaskedStream absentSpeech(std::int64_t frames, std::int64_t bins) {
  return {Matrix(frames, bins), std::vector<std::uint8_t>(static_cast<size_t>(frames), 1),
          MaskSchedule::kFull};
}

}  // namespace nar
