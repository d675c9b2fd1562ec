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

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "nar/matrix.h"

namespace nar {

// One JSON-lines record: {"id", "features"?, "text"?, "speaker", "repeats"?}.
// Feature paths are relative to the manifest's directory.
struct ManifestRecord {
  std::string id;
  std::optional<std::string> features;
  std::optional<std::string> text;
  int speaker = 0;
  std::optional<std::vector<int>> repeats;
  std::int64_t frames = 0;  // from the feature header, 0 without features
};

enum class ManifestKind {
  kAny,
  kPaired,  // features and text required
  kSpeech,  // features required
  kText,    // text required
};

// Records are validated on load (fields, feature header, width, repeat
// sums); feature values are read on first access and cached.
class Dataset {
 public:
  Dataset() = default;
  static Dataset load(const std::filesystem::path& manifest, ManifestKind kind, int melBins);

  size_t size() const { return records_.size(); }
  bool empty() const { return records_.empty(); }
  const ManifestRecord& record(size_t i) const { return records_.at(i); }
  const std::vector<ManifestRecord>& records() const { return records_; }
  const std::filesystem::path& baseDir() const { return baseDir_; }

  // Not safe for concurrent first access.
  const Matrix& features(size_t i) const;

 private:
  std::filesystem::path baseDir_;
  std::vector<ManifestRecord> records_;
  mutable std::vector<std::optional<Matrix>> cache_;
};

std::string recordToJson(const ManifestRecord& record);
void writeManifest(const std::filesystem::path& path, const std::vector<ManifestRecord>& records);

}  // namespace nar
