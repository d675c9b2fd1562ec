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

#include <span>
#include <vector>

namespace nar {

// A frame-level CTC path in run-length form: the blank-interleaved token
// sequence of a transcript plus one repeat count per token.
//
// Odd positions hold characters and repeat at least once; even positions
// are blanks (or <mask> stand-ins) and may repeat zero times, except that
// a blank between two identical characters needs at least one frame.
struct CtcAlignment {
  std::vector<int> tokens;
  std::vector<int> repeats;

  int frames() const;
  friend bool operator==(const CtcAlignment&, const CtcAlignment&) = default;
};

// "CAT" -> "_C_A_T_" (as ids, blank = 0).
std::vector<int> addBlank(std::span<const int> text);

// Expands tokens by their repeat counts. Character repeats must be >= 1.
std::vector<int> upsampleByRepeats(std::span<const int> tokens,
                                   std::span<const int> repeats);

// Token index of every frame after upsampling; the row map used to repeat
// token embeddings up to frame rate.
std::vector<int> repeatIndices(std::span<const int> repeats);

// Merges adjacent duplicates, then drops blanks.
std::vector<int> collapsePath(std::span<const int> frames);

// Inverse of upsampling: recovers the repeats of addBlank(text) from a
// frame path that collapses to `text`. Throws ContractError otherwise.
CtcAlignment repeatsFromPath(std::span<const int> frames, std::span<const int> text);

// Checks every CtcAlignment invariant; throws ContractError with the reason.
void validateAlignment(const CtcAlignment& alignment);

}  // namespace nar
