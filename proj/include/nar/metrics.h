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
#include <string>
#include <string_view>
#include <vector>

namespace nar {

struct EditStats {
  std::int64_t distance = 0;
  std::int64_t referenceLength = 0;

  // distance / referenceLength. An empty reference counts every hypothesis
  // unit as an insertion over a length of one, so the rate is the distance.
  double rate() const;
  EditStats& operator+=(const EditStats& o) {
    distance += o.distance;
    referenceLength += o.referenceLength;
    return *this;
  }
};

std::int64_t levenshtein(std::span<const std::string> a, std::span<const std::string> b);
std::int64_t levenshtein(std::string_view a, std::string_view b);

EditStats characterErrors(std::string_view hypothesis, std::string_view reference);
// Whitespace-split words.
EditStats wordErrors(std::string_view hypothesis, std::string_view reference);

std::vector<std::string> splitWords(std::string_view text);

}  // namespace nar
