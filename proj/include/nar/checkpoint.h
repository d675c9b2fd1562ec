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
#include <filesystem>
#include <string>
#include <vector>

#include "nar/model.h"
#include "nar/optimizer.h"
#include "nar/vocabulary.h"

namespace nar {

// Container layout (little-endian), see docs/formats.md:
//   "NARC", u32 version, str model config, u64 config hash, str vocabulary,
//   u64 vocabulary hash, str train config, u64 step, str rng state,
//   u32 n, n x tensor (str name, u8 dtype, u32 rank, u64 dims, values),
//   u8 has-optimizer, [u64 adam steps, u32 n, n x (str name, m tensor, v tensor)],
//   u64 hash of all preceding bytes.
// str = u32 length + bytes; dtype 0 = f32, 1 = f64.
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct NamedTensor {
  std::string name;
  Tensor value;
};

struct Checkpoint {
  std::string modelConfig;
  std::string vocabulary;
  std::string trainConfig;
  std::int64_t step = 0;
  std::string rngState;
  std::vector<NamedTensor> parameters;
  bool hasOptimizer = false;
  std::int64_t optimizerSteps = 0;
  std::vector<NamedTensor> firstMoments;
  std::vector<NamedTensor> secondMoments;

  static Checkpoint capture(const Model& model, const Vocabulary& vocabulary,
                            const Adam* optimizer = nullptr);

  ModelConfig config() const { return ModelConfig::parse(modelConfig); }
  Vocabulary vocab() const { return Vocabulary::parse(vocabulary); }
  // Copies values into a model built from config(); names and shapes must match.
  void restoreModel(Model& model) const;
  void restoreOptimizer(Adam& optimizer) const;
};

std::vector<char> encodeCheckpoint(const Checkpoint& checkpoint);
// Throws DataError on bad magic, version, hash or truncation.
Checkpoint decodeCheckpoint(const std::vector<char>& bytes, const std::string& source = "checkpoint");

// Writes to a sibling temporary file, then renames over `path`.
void saveCheckpoint(const std::filesystem::path& path, const Checkpoint& checkpoint);
Checkpoint loadCheckpoint(const std::filesystem::path& path);

// FNV-1a 64.
std::uint64_t fnv1a(const void* data, size_t size, std::uint64_t seed = 14695981039346656037ULL);

}  // namespace nar
