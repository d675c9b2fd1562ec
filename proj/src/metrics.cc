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

#include "nar/metrics.h"

#include <algorithm>
#include <cctype>

namespace nar {
namespace {

template <typename Seq>
std::int64_t editDistance(const Seq& a, const Seq& b) {
  std::vector<std::int64_t> prev(b.size() + 1), cur(b.size() + 1);
  for (size_t j = 0; j <= b.size(); ++j) prev[j] = static_cast<std::int64_t>(j);
  for (size_t i = 1; i <= a.size(); ++i) {
    cur[0] = static_cast<std::int64_t>(i);
    for (size_t j = 1; j <= b.size(); ++j) {
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1)});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

}  // namespace

double EditStats::rate() const {
  if (referenceLength == 0) return static_cast<double>(distance);
  return static_cast<double>(distance) / static_cast<double>(referenceLength);
}

std::int64_t levenshtein(std::span<const std::string> a, std::span<const std::string> b) {
  return editDistance(a, b);
}

std::int64_t levenshtein(std::string_view a, std::string_view b) { return editDistance(a, b); }

std::vector<std::string> splitWords(std::string_view text) {
  std::vector<std::string> out;
  size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    size_t j = i;
    while (j < text.size() && !std::isspace(static_cast<unsigned char>(text[j]))) ++j;
    if (j > i) out.emplace_back(text.substr(i, j - i));
    i = j;
  }
  return out;
}

EditStats characterErrors(std::string_view hypothesis, std::string_view reference) {
  return {levenshtein(hypothesis, reference), static_cast<std::int64_t>(reference.size())};
}

EditStats wordErrors(std::string_view hypothesis, std::string_view reference) {
  const auto h = splitWords(hypothesis);
  const auto r = splitWords(reference);
  return {levenshtein(h, r), static_cast<std::int64_t>(r.size())};
}

}  // namespace nar
