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
#include <functional>
#include <ostream>
#include <string>
#include <vector>

#include "nar/grad_check.h"
#include "nar/model.h"
#include "nar/random.h"

namespace nar {

Tensor randomTensor(Shape shape, Rng& rng, double scale = 1.0, Precision precision = Precision::kF64);

// sum(x * w) with a fixed random w: a scalar whose gradient w.r.t. x is w,
// which keeps checked gradients away from exact zeros.
Var randomProjection(Var x, std::uint64_t seed);

// One finite-difference check, parameterized by seed. Whole-model cases
// compare per parameter tensor; everything else per element.
struct AuditCase {
  std::string name;
  std::function<GradCheckResult(std::uint64_t seed)> run;
  bool perTensor = false;

  double error(const GradCheckResult& r) const { return perTensor ? r.maxTensorError : r.maxRelativeError; }
};

// Every differentiable primitive on small random shapes.
std::vector<AuditCase> primitiveAudits();
// Conformer block, duration model, full STT graph, full TTS graph.
std::vector<AuditCase> modelAudits();

// The tiny f64 model the model audits use: d=8, 2 heads, one layer per
// stack, unit branch scales.
ModelConfig auditModelConfig();

struct AuditSummary {
  std::string name;
  int seeds = 0;
  double worst = 0.0;
  std::string where;  // parameter holding the worst error
};

// Runs every case over `seeds` seeds; reports each case as it finishes.
std::vector<AuditSummary> runGradAudit(int seeds, std::ostream* progress = nullptr);

}  // namespace nar
