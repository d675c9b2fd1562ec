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
#include <vector>

#include "nar/graph.h"

namespace nar {

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.98;
  double epsilon = 1e-9;
  double clipNorm = 5.0;  // global gradient L2 norm; <= 0 disables
};

// Adam with global-norm gradient clipping. Moments live in the parameter
// precision; the update itself is computed in double.
class Adam {
 public:
  struct Slot {
    Parameter* parameter = nullptr;
    Tensor m;
    Tensor v;
  };

  Adam(const AdamConfig& config, const std::vector<Parameter*>& parameters);

  // Applies one update from the accumulated gradients; returns the gradient
  // norm before clipping. Throws NumericError on a non-finite norm.
  double step(double lr);

  std::int64_t steps() const { return steps_; }
  void setSteps(std::int64_t steps) { steps_ = steps; }
  const AdamConfig& config() const { return config_; }
  std::vector<Slot>& slots() { return slots_; }
  const std::vector<Slot>& slots() const { return slots_; }

 private:
  AdamConfig config_;
  std::vector<Slot> slots_;
  std::int64_t steps_ = 0;
};

double gradientNorm(const std::vector<Parameter*>& parameters);

}  // namespace nar
