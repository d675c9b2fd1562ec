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
#include <random>
#include <string>
#include <vector>

namespace nar {

// splitmix64 finalizer; used to derive independent stream seeds.
std::uint64_t mixSeed(std::uint64_t a, std::uint64_t b = 0);

// Deterministic RNG with distributions implemented here rather than taken
// from <random>, whose distribution algorithms vary between standard
// libraries. The engine itself (mt19937_64) is fully specified.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }
  // Uniform integer in [lo, hi], inclusive.
  std::int64_t uniformInt(std::int64_t lo, std::int64_t hi);
  // Uniform double in [0, 1).
  double uniform();
  double normal(double mean = 0.0, double stddev = 1.0);
  // k distinct values from [0, n), in sampling order.
  std::vector<int> sampleWithoutReplacement(int n, int k);

  std::string state() const;
  void setState(const std::string& state);

 private:
  std::mt19937_64 engine_;
};

// round-half-up of p*n, the convention used for every "p% of n" count.
int roundedCount(double p, std::int64_t n);

}  // namespace nar
