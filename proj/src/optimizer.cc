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

#include "nar/optimizer.h"

#include <cmath>

#include "nar/errors.h"

namespace nar {

double gradientNorm(const std::vector<Parameter*>& parameters) {
  double sq = 0.0;
  for (const Parameter* p : parameters) {
    const Tensor& g = p->grad();
    for (std::int64_t i = 0; i < g.numel(); ++i) sq += g.get(i) * g.get(i);
  }
  return std::sqrt(sq);
}

Adam::Adam(const AdamConfig& config, const std::vector<Parameter*>& parameters) : config_(config) {
  for (Parameter* p : parameters) {
    slots_.push_back({p, Tensor(p->value().shape(), p->value().precision()),
                      Tensor(p->value().shape(), p->value().precision())});
  }
}

double Adam::step(double lr) {
  std::vector<Parameter*> params;
  for (auto& s : slots_) params.push_back(s.parameter);
  const double norm = gradientNorm(params);
  if (!std::isfinite(norm)) throw NumericError("optimizer: non-finite gradient norm");
  const double clip = config_.clipNorm > 0.0 && norm > config_.clipNorm ? config_.clipNorm / norm : 1.0;
  ++steps_;
  const double c1 = 1.0 - std::pow(config_.beta1, static_cast<double>(steps_));
  const double c2 = 1.0 - std::pow(config_.beta2, static_cast<double>(steps_));
  for (auto& s : slots_) {
    Tensor& w = s.parameter->value();
    const Tensor& g = s.parameter->grad();
    for (std::int64_t i = 0; i < w.numel(); ++i) {
      const double gi = g.get(i) * clip;
      const double m = config_.beta1 * s.m.get(i) + (1.0 - config_.beta1) * gi;
      const double v = config_.beta2 * s.v.get(i) + (1.0 - config_.beta2) * gi * gi;
      s.m.set(i, m);
      s.v.set(i, v);
      w.set(i, w.get(i) - lr * (m / c1) / (std::sqrt(v / c2) + config_.epsilon));
    }
  }
  return norm;
}

}  // namespace nar
