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

#include "nar/alignment.h"
#include "nar/graph.h"
#include "nar/tensor.h"

namespace nar {

struct CtcLossResult {
  double loss = 0.0;
  // d loss / d logits, row-major T x V. Every row sums to zero.
  std::vector<double> gradient;
};

// Minimum number of frames a target needs: one per character plus one
// blank between each pair of equal neighbours.
int ctcMinFrames(std::span<const int> target);

// Negative log-likelihood of `target` under per-frame softmax(logits),
// summed over every path that collapses to it. Blank is token 0.
// Throws ContractError when the target cannot fit in T frames.
CtcLossResult ctcLoss(const Tensor& logits, std::span<const int> target);

// Autodiff wrapper over ctcLoss. Returns a {1} scalar.
Var ctcLoss(Var logits, std::span<const int> target);

struct Hypothesis {
  std::vector<int> path;
  std::vector<int> text;
  // Probability of the chosen token at each frame.
  std::vector<double> frameProbs;
};

// Framewise argmax, ties to the lowest index. `suppressToken` (if >= 0) is
// never chosen.
Hypothesis greedyDecode(const Tensor& logits, int suppressToken = -1);

// One confidence per emitted character: the mean chosen probability over
// the frames of its run.
std::vector<double> charConfidences(const Hypothesis& hypothesis);

// Most probable path collapsing to `target`, as repeats of addBlank(target).
CtcAlignment viterbiAlign(const Tensor& logits, std::span<const int> target);

// Sum of log softmax(logits)[t][path[t]].
double pathLogProb(const Tensor& logits, std::span<const int> path);

}  // namespace nar
