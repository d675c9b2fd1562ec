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

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "nar/matrix.h"

namespace nar {

enum class MaskSchedule : std::uint8_t {
  kNone,
  kText,     // Mask_Y
  kSpans,    // Mask_X1
  kCorner,   // Mask_X2
  kFull,     // modality absent
};

// A text-side stream: character ids or blank-interleaved tokens, with
// masked positions replaced by the <mask> id.
struct MaskedTokens {
  std::vector<int> ids;
  std::vector<std::uint8_t> masked;
  MaskSchedule schedule = MaskSchedule::kNone;

  int maskedCount() const;
};

// A speech-side stream. Masked cells are exactly zero. `masked[t]` is set
// when any cell of frame t was zeroed.
struct MaskedStream {
  Matrix frames;
  std::vector<std::uint8_t> masked;
  MaskSchedule schedule = MaskSchedule::kNone;
  // Mask_X2 only: the kept leading corner is [0, keptFrames) x [0, keptBins).
  std::int64_t keptFrames = 0;
  std::int64_t keptBins = 0;

  int maskedFrames() const;
};

// Mask_Y: exactly round(p * |text|) characters, uniformly without
// replacement, become <mask>.
MaskedTokens maskText(std::span<const int> text, double p, std::uint64_t seed, int maskId);

// Interleaves blanks into masked characters; the blank after a masked
// character is masked too, and the leading blank never is.
MaskedTokens propagateBlankMasks(const MaskedTokens& characters, int maskId);

// Masks every character and its following blank (the p_Y = 1 stream).
MaskedTokens fullyMaskedTokens(std::span<const int> text, int maskId);
// No masking: plain addBlank with all flags clear.
MaskedTokens unmaskedTokens(std::span<const int> text);

// Mask_X1: round(p*T) start frames without replacement; [s, s+M) zeroed,
// clipped at T. p = 1 zeroes every frame.
MaskedStream maskSpeechSpans(const Matrix& x, double p, int spanLength, std::uint64_t seed);

// Mask_X2: t0 = floor((1-p) T), f0 = floor((1-p) F); every cell with
// t >= t0 or f >= f0 is zeroed.
MaskedStream maskSpeechCorner(const Matrix& x, double p);
// Keeps exactly [0, keptFrames) x [0, keptBins).
MaskedStream keepCorner(const Matrix& x, std::int64_t keptFrames, std::int64_t keptBins);

MaskedStream unmaskedSpeech(const Matrix& x);
// T x F zero frames: an absent speech modality.
MaskedStream absentSpeech(std::int64_t frames, std::int64_t bins);

}  // namespace nar
