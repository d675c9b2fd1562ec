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

#include "nar/matrix.h"

namespace nar {

// Feature file layout, all little-endian:
//   bytes 0-3   magic "NARF"
//   bytes 4-7   u32 version (1)
//   bytes 8-11  u32 frame count T
//   bytes 12-15 u32 bin count F
//   then T*F f32 values, row-major.
inline constexpr std::uint32_t kFeatureVersion = 1;

struct FeatureHeader {
  std::uint32_t frames = 0;
  std::uint32_t bins = 0;
};

void writeFeatures(const std::filesystem::path& path, const Matrix& features);
Matrix readFeatures(const std::filesystem::path& path);
// Reads and validates only the header.
FeatureHeader readFeatureHeader(const std::filesystem::path& path);

}  // namespace nar
