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

#include <functional>
#include <string>
#include <vector>

#include "nar/graph.h"

namespace nar {

struct GradCheckResult {
  double maxRelativeError = 0.0;
  std::string worstParameter;
  std::int64_t worstIndex = -1;
  double analytic = 0.0;
  double numeric = 0.0;
  // Per parameter tensor: ||analytic - fd|| / max(||analytic||, ||fd||, 1e-12)
  // with Euclidean norms, maximized over tensors.
  double maxTensorError = 0.0;
  std::string worstTensor;
};

// Builds the scalar to be checked on a fresh graph each call.
using ScalarFunction = std::function<Var(Graph&)>;

// Compares backward() against central differences for every element of
// every listed parameter: |analytic - fd| / max(|analytic|, |fd|, 1e-12).
// The parameters must be f64 and eps must lie in [1e-6, 1e-4]. Every
// evaluation uses a graph with the same training flag and seed, so stochastic
// ops see identical masks.
GradCheckResult gradCheck(const ScalarFunction& f,
                          const std::vector<Parameter*>& parameters,
                          double eps = 1e-5, bool training = false,
                          std::uint64_t graphSeed = 0);

}  // namespace nar
