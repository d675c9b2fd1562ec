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

#include "nar/manifest.h"

#include <fstream>
#include <numeric>

#include "json.hpp"
#include "nar/errors.h"
#include "nar/features.h"

namespace nar {
namespace {

using nlohmann::json;

ManifestRecord parseRecord(const json& j) {
  if (!j.is_object()) throw std::runtime_error("record is not a JSON object");
  ManifestRecord r;
  r.id = j.at("id").get<std::string>();
  if (j.contains("features")) r.features = j.at("features").get<std::string>();
  if (j.contains("text")) r.text = j.at("text").get<std::string>();
  if (j.contains("speaker")) r.speaker = j.at("speaker").get<int>();
  if (j.contains("repeats")) r.repeats = j.at("repeats").get<std::vector<int>>();
  if (r.speaker < 0) throw std::runtime_error("negative speaker id");
  return r;
}

}  // namespace

Dataset Dataset::load(const std::filesystem::path& manifest, ManifestKind kind, int melBins) {
  std::ifstream is(manifest);
  if (!is) throw DataError("cannot open manifest " + manifest.string());
  Dataset d;
  d.baseDir_ = manifest.parent_path();
  std::string line;
  int lineNo = 0;
  while (std::getline(is, line)) {
    ++lineNo;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = manifest.string() + ":" + std::to_string(lineNo) + ": ";
    ManifestRecord r;
    try {
      r = parseRecord(json::parse(line));
    } catch (const std::exception& e) {
      throw DataError(where + e.what());
    }
    const bool needFeatures = kind == ManifestKind::kPaired || kind == ManifestKind::kSpeech;
    const bool needText = kind == ManifestKind::kPaired || kind == ManifestKind::kText;
    if (needFeatures && !r.features) throw DataError(where + "record " + r.id + " has no features");
    if (needText && !r.text) throw DataError(where + "record " + r.id + " has no transcript");
    if (r.features) {
      const auto path = d.baseDir_ / *r.features;
      FeatureHeader h;
      try {
        h = readFeatureHeader(path);
      } catch (const DataError& e) {
        throw DataError(where + e.what());
      }
      if (static_cast<int>(h.bins) != melBins) {
        throw DataError(where + path.string() + " has " + std::to_string(h.bins) +
                        " bins, expected " + std::to_string(melBins));
      }
      r.frames = h.frames;
    }
    if (r.repeats) {
      if (!r.text) throw DataError(where + "repeats without a transcript");
      if (r.repeats->size() != 2 * r.text->size() + 1) {
        throw DataError(where + "expected " + std::to_string(2 * r.text->size() + 1) +
                        " repeats, got " + std::to_string(r.repeats->size()));
      }
      const auto total = std::accumulate(r.repeats->begin(), r.repeats->end(), std::int64_t{0});
      if (r.features && total != r.frames) {
        throw DataError(where + "repeats sum to " + std::to_string(total) + " but features have " +
                        std::to_string(r.frames) + " frames");
      }
    }
    d.records_.push_back(std::move(r));
  }
  d.cache_.resize(d.records_.size());
  return d;
}

const Matrix& Dataset::features(size_t i) const {
  const auto& r = records_.at(i);
  if (!r.features) throw DataError("record " + r.id + " has no features");
  if (!cache_[i]) cache_[i] = readFeatures(baseDir_ / *r.features);
  return *cache_[i];
}

std::string recordToJson(const ManifestRecord& r) {
  json j;
  j["id"] = r.id;
  if (r.features) j["features"] = *r.features;
  if (r.text) j["text"] = *r.text;
  j["speaker"] = r.speaker;
  if (r.repeats) j["repeats"] = *r.repeats;
  return j.dump();
}

void writeManifest(const std::filesystem::path& path, const std::vector<ManifestRecord>& records) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw DataError("cannot write " + path.string());
  for (const auto& r : records) os << recordToJson(r) << "\n";
  if (!os) throw DataError("write failed: " + path.string());
}

}  // namespace nar
