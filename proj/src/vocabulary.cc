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

#include "nar/vocabulary.h"

#include <fstream>
#include <sstream>

#include "nar/errors.h"

namespace nar {

Vocabulary::Vocabulary(std::string_view characters) : characters_(characters) {
  index_.fill(-1);
  for (size_t i = 0; i < characters_.size(); ++i) {
    const auto c = static_cast<unsigned char>(characters_[i]);
    NAR_REQUIRE(characters_[i] != '_' && characters_[i] != '\n' && characters_[i] != '\r',
                "reserved character in vocabulary");
    NAR_REQUIRE(index_[c] == -1, std::string("duplicate character '") + characters_[i] +
                                     "' in vocabulary");
    index_[c] = static_cast<int>(i) + 1;
  }
}

Vocabulary Vocabulary::defaultAlphabet() {
  return Vocabulary(" ABCDEFGHIJKLMNOPQRSTUVWXYZ");
}

std::string Vocabulary::serialize() const {
  std::string out(kBlankToken);
  out += '\n';
  for (char c : characters_) {
    out += c;
    out += '\n';
  }
  out += kMaskToken;
  out += '\n';
  return out;
}

Vocabulary Vocabulary::parse(std::string_view text) {
  std::vector<std::string> lines;
  size_t start = 0;
  while (start < text.size()) {
    size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    lines.emplace_back(text.substr(start, end - start));
    start = end + 1;
  }
  if (lines.size() < 2 || lines.front() != kBlankToken || lines.back() != kMaskToken) {
    throw DataError("vocabulary must start with '_' and end with '<mask>'");
  }
  std::string chars;
  for (size_t i = 1; i + 1 < lines.size(); ++i) {
    if (lines[i].size() != 1) {
      throw DataError("vocabulary line " + std::to_string(i + 1) +
                      " is not a single character");
    }
    chars += lines[i][0];
  }
  try {
    return Vocabulary(chars);
  } catch (const ContractError& e) {
    throw DataError(e.what());
  }
}

Vocabulary Vocabulary::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open vocabulary " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

void Vocabulary::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write vocabulary " + path.string());
  out << serialize();
}

int Vocabulary::id(char c) const {
  const int i = index_[static_cast<unsigned char>(c)];
  if (i < 0) {
    throw ContractError(std::string("character '") + c + "' is not in the vocabulary");
  }
  return i;
}

char Vocabulary::character(int id) const {
  NAR_REQUIRE(isCharacter(id), "token " + std::to_string(id) + " is not a character");
  return characters_[static_cast<size_t>(id - 1)];
}

std::string Vocabulary::token(int id) const {
  if (id == kBlank) return std::string(kBlankToken);
  if (id == maskId()) return std::string(kMaskToken);
  return std::string(1, character(id));
}

std::vector<int> Vocabulary::encode(std::string_view text) const {
  std::vector<int> ids;
  ids.reserve(text.size());
  for (char c : text) ids.push_back(id(c));
  return ids;
}

std::string Vocabulary::decode(std::span<const int> ids) const {
  std::string out;
  for (int i : ids) {
    if (i == kBlank) continue;
    out += i == maskId() ? '?' : character(i);
  }
  return out;
}

std::string Vocabulary::render(std::span<const int> ids) const {
  std::string out;
  for (int i : ids) out += token(i);
  return out;
}

std::uint64_t Vocabulary::hash() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : serialize()) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace nar
