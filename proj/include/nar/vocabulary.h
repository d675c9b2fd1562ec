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

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace nar {

// Character vocabulary. Index 0 is the CTC blank "_", indices 1..n are the
// characters in file order, and the last index is "<mask>".
class Vocabulary {
 public:
  static constexpr int kBlank = 0;
  static constexpr std::string_view kBlankToken = "_";
  static constexpr std::string_view kMaskToken = "<mask>";

  Vocabulary() : Vocabulary(std::string_view{}) {}
  explicit Vocabulary(std::string_view characters);

  // Space followed by A-Z.
  static Vocabulary defaultAlphabet();
  // One token per line, order = index.
  static Vocabulary load(const std::filesystem::path& path);
  static Vocabulary parse(std::string_view text);
  void save(const std::filesystem::path& path) const;
  std::string serialize() const;

  int size() const { return static_cast<int>(characters_.size()) + 2; }
  int maskId() const { return size() - 1; }
  int characterCount() const { return static_cast<int>(characters_.size()); }
  bool isCharacter(int id) const { return id > kBlank && id < maskId(); }

  // Throws ContractError naming the character when it is not in the set.
  int id(char c) const;
  char character(int id) const;
  std::string token(int id) const;
  const std::string& characters() const { return characters_; }

  std::vector<int> encode(std::string_view text) const;
  // Blanks are dropped; <mask> is rendered as '?'.
  std::string decode(std::span<const int> ids) const;
  // Renders tokens with "_" for blank and "<mask>" for mask.
  std::string render(std::span<const int> ids) const;

  // FNV-1a of serialize(); stable across save/load.
  std::uint64_t hash() const;

  friend bool operator==(const Vocabulary&, const Vocabulary&) = default;

 private:
  std::string characters_;
  std::array<int, 256> index_{};
};

}  // namespace nar
