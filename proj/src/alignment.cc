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

#include "nar/alignment.h"

#include <numeric>
#include <string>

#include "nar/errors.h"
#include "nar/vocabulary.h"

namespace nar {

int CtcAlignment::frames() const {
  return std::accumulate(repeats.begin(), repeats.end(), 0);
}

std::vector<int> addBlank(std::span<const int> text) {
  std::vector<int> tokens(2 * text.size() + 1, Vocabulary::kBlank);
  for (size_t i = 0; i < text.size(); ++i) tokens[2 * i + 1] = text[i];
  return tokens;
}

std::vector<int> upsampleByRepeats(std::span<const int> tokens,
                                   std::span<const int> repeats) {
  NAR_REQUIRE(tokens.size() == repeats.size(),
              "upsample: " + std::to_string(tokens.size()) + " tokens but " +
                  std::to_string(repeats.size()) + " repeats");
  std::vector<int> frames;
  for (size_t i = 0; i < tokens.size(); ++i) {
    NAR_REQUIRE(repeats[i] >= 0, "upsample: negative repeat at token " + std::to_string(i));
    NAR_REQUIRE(i % 2 == 0 || repeats[i] >= 1,
                "upsample: character token " + std::to_string(i) + " has zero repeats");
    frames.insert(frames.end(), static_cast<size_t>(repeats[i]), tokens[i]);
  }
  return frames;
}

std::vector<int> repeatIndices(std::span<const int> repeats) {
  std::vector<int> rows;
  for (size_t i = 0; i < repeats.size(); ++i) {
    NAR_REQUIRE(repeats[i] >= 0, "negative repeat at token " + std::to_string(i));
    rows.insert(rows.end(), static_cast<size_t>(repeats[i]), static_cast<int>(i));
  }
  return rows;
}

std::vector<int> collapsePath(std::span<const int> frames) {
  std::vector<int> out;
  int previous = -1;
  for (int f : frames) {
    if (f != previous && f != Vocabulary::kBlank) out.push_back(f);
    previous = f;
  }
  return out;
}

CtcAlignment repeatsFromPath(std::span<const int> frames, std::span<const int> text) {
  CtcAlignment a{addBlank(text), std::vector<int>(2 * text.size() + 1, 0)};
  // Current state in the blank-interleaved sequence; even = blank.
  size_t state = 0;
  for (size_t t = 0; t < frames.size(); ++t) {
    const int f = frames[t];
    if (f == Vocabulary::kBlank) {
      if (state % 2 == 1) ++state;
    } else if (!(state % 2 == 1 && a.tokens[state] == f)) {
      const size_t next = state % 2 == 0 ? state + 1 : state + 2;
      if (next >= a.tokens.size() || a.tokens[next] != f) {
        throw ContractError("frame path does not collapse to the transcript (frame " +
                            std::to_string(t) + ")");
      }
      state = next;
    }
    ++a.repeats[state];
  }
  if (state + 2 < a.tokens.size()) {
    throw ContractError("frame path ends before emitting the whole transcript");
  }
  return a;
}

void validateAlignment(const CtcAlignment& alignment) {
  const auto& tokens = alignment.tokens;
  const auto& repeats = alignment.repeats;
  NAR_REQUIRE(tokens.size() % 2 == 1, "alignment must have an odd token count");
  NAR_REQUIRE(tokens.size() == repeats.size(), "alignment tokens/repeats length differ");
  for (size_t i = 0; i < tokens.size(); ++i) {
    if (i % 2 == 0) {
      NAR_REQUIRE(repeats[i] >= 0, "blank repeat below zero at " + std::to_string(i));
    } else {
      NAR_REQUIRE(tokens[i] != Vocabulary::kBlank, "blank at character position " +
                                                       std::to_string(i));
      NAR_REQUIRE(repeats[i] >= 1, "character repeat below one at " + std::to_string(i));
      if (i >= 3 && tokens[i] == tokens[i - 2]) {
        NAR_REQUIRE(repeats[i - 1] >= 1, "blank between repeated characters at " +
                                             std::to_string(i - 1) + " needs a frame");
      }
    }
  }
}

}  // namespace nar
