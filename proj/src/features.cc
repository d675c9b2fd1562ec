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

#include "nar/features.h"

#include <bit>
#include <cstring>
#include <fstream>
#include <vector>

#include "nar/errors.h"

namespace nar {
namespace {

constexpr char kMagic[4] = {'N', 'A', 'R', 'F'};

void putU32(std::vector<char>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::uint32_t getU32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | static_cast<std::uint32_t>(p[1]) << 8 |
         static_cast<std::uint32_t>(p[2]) << 16 | static_cast<std::uint32_t>(p[3]) << 24;
}

FeatureHeader parseHeader(const unsigned char* h, const std::filesystem::path& path) {
  if (std::memcmp(h, kMagic, 4) != 0) throw DataError(path.string() + ": not a feature file");
  const std::uint32_t version = getU32(h + 4);
  if (version != kFeatureVersion) {
    throw DataError(path.string() + ": unsupported feature version " + std::to_string(version));
  }
  return {getU32(h + 8), getU32(h + 12)};
}

}  // namespace

void writeFeatures(const std::filesystem::path& path, const Matrix& features) {
  std::vector<char> out(kMagic, kMagic + 4);
  putU32(out, kFeatureVersion);
  putU32(out, static_cast<std::uint32_t>(features.rows()));
  putU32(out, static_cast<std::uint32_t>(features.cols()));
  for (float f : features.values()) putU32(out, std::bit_cast<std::uint32_t>(f));
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw DataError("cannot write " + path.string());
  os.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!os) throw DataError("write failed: " + path.string());
}

FeatureHeader readFeatureHeader(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot open feature file " + path.string());
  unsigned char h[16];
  if (!is.read(reinterpret_cast<char*>(h), 16)) {
    throw DataError(path.string() + ": truncated header");
  }
  return parseHeader(h, path);
}

Matrix readFeatures(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot open feature file " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  if (bytes.size() < 16) throw DataError(path.string() + ": truncated header");
  const FeatureHeader h = parseHeader(bytes.data(), path);
  const std::uint64_t count = std::uint64_t{h.frames} * h.bins;
  if (bytes.size() != 16 + 4 * count) {
    throw DataError(path.string() + ": expected " + std::to_string(count) + " values, file has " +
                    std::to_string((bytes.size() - 16) / 4));
  }
  Matrix m(h.frames, h.bins);
  for (std::uint64_t i = 0; i < count; ++i) {
    m.data()[i] = std::bit_cast<float>(getU32(bytes.data() + 16 + 4 * i));
  }
  return m;
}

}  // namespace nar
