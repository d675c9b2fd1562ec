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

#include "nar/grad_check.h"

#include <algorithm>
#include <cmath>

#include "nar/errors.h"

namespace nar {
namespace {

double evaluate(const ScalarFunction& f, bool training, std::uint64_t seed) {
  Graph g(Precision::kF64, training, seed);
  Var out = f(g);
  NAR_REQUIRE(out.numel() == 1, "grad_check: function must return a scalar");
  return out.value().get(0);
}

}  // namespace

GradCheckResult gradCheck(const ScalarFunction& f,
                          const std::vector<Parameter*>& parameters, double eps,
                          bool training, std::uint64_t graphSeed) {
  NAR_REQUIRE(eps >= 1e-6 && eps <= 1e-4, "grad_check: eps must lie in [1e-6, 1e-4]");
  for (Parameter* p : parameters) {
    NAR_REQUIRE(p->value().precision() == Precision::kF64,
                "grad_check: parameter " + p->name() + " is not f64");
    p->zeroGrad();
  }
  {
    Graph g(Precision::kF64, training, graphSeed);
    Var out = f(g);
    g.backward(out);
  }
  GradCheckResult result;
  for (Parameter* p : parameters) {
    const Tensor analytic = p->grad();
    double diff2 = 0.0, an2 = 0.0, fd2 = 0.0;
    for (std::int64_t i = 0; i < p->value().numel(); ++i) {
      const double original = p->value().get(i);
      p->value().set(i, original + eps);
      const double up = evaluate(f, training, graphSeed);
      p->value().set(i, original - eps);
      const double down = evaluate(f, training, graphSeed);
      p->value().set(i, original);
      const double fd = (up - down) / (2.0 * eps);
      const double an = analytic.get(i);
      const double denom = std::max({std::abs(an), std::abs(fd), 1e-12});
      const double rel = std::abs(an - fd) / denom;
      if (rel > result.maxRelativeError) {
        result.maxRelativeError = rel;
        result.worstParameter = p->name();
        result.worstIndex = i;
        result.analytic = an;
        result.numeric = fd;
      }
      diff2 += (an - fd) * (an - fd);
      an2 += an * an;
      fd2 += fd * fd;
    }
    const double tensorRel =
        std::sqrt(diff2) / std::max({std::sqrt(an2), std::sqrt(fd2), 1e-12});
    if (tensorRel > result.maxTensorError) {
      result.maxTensorError = tensorRel;
      result.worstTensor = p->name();
    }
  }
  return result;
}

}  // namespace nar
