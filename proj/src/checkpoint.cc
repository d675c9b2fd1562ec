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

#include "nar/checkpoint.h"

#include <bit>
#include <fstream>
#include <iterator>

#include "nar/errors.h"

namespace nar {
namespace {

class Writer {
 public:
  void u8(std::uint8_t v) { out_.push_back(static_cast<char>(v)); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void str(const std::string& s) {
    u32(static_cast<std::uint32_t>(s.size()));
    out_.insert(out_.end(), s.begin(), s.end());
  }
  void tensor(const Tensor& t) {
    const bool f64 = t.precision() == Precision::kF64;
    u8(f64 ? 1 : 0);
    u32(static_cast<std::uint32_t>(t.rank()));
    for (auto d : t.shape()) u64(static_cast<std::uint64_t>(d));
    for (std::int64_t i = 0; i < t.numel(); ++i) {
      if (f64) {
        u64(std::bit_cast<std::uint64_t>(t.data<double>()[i]));
      } else {
        u32(std::bit_cast<std::uint32_t>(t.data<float>()[i]));
      }
    }
  }
  std::vector<char>& bytes() { return out_; }

 private:
  std::vector<char> out_;
};

class Reader {
 public:
  Reader(const std::vector<char>& bytes, size_t end, std::string source)
      : bytes_(bytes), end_(end), source_(std::move(source)) {}

  std::uint8_t u8() {
    need(1);
    return static_cast<std::uint8_t>(bytes_[pos_++]);
  }
  std::uint32_t u32() {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(u8()) << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(u8()) << (8 * i);
    return v;
  }
  std::string str() {
    const auto n = u32();
    need(n);
    std::string s(bytes_.data() + pos_, n);
    pos_ += n;
    return s;
  }
  Tensor tensor() {
    const auto dtype = u8();
    if (dtype > 1) fail("unknown tensor dtype " + std::to_string(dtype));
    const auto rank = u32();
    if (rank > 8) fail("implausible tensor rank " + std::to_string(rank));
    Shape shape;
    std::uint64_t count = 1;
    for (std::uint32_t i = 0; i < rank; ++i) {
      shape.push_back(static_cast<std::int64_t>(u64()));
      count *= static_cast<std::uint64_t>(shape.back());
    }
    need(count * (dtype == 1 ? 8 : 4));
    Tensor t(shape, dtype == 1 ? Precision::kF64 : Precision::kF32);
    for (std::uint64_t i = 0; i < count; ++i) {
      if (dtype == 1) {
        t.data<double>()[i] = std::bit_cast<double>(u64());
      } else {
        t.data<float>()[i] = std::bit_cast<float>(u32());
      }
    }
    return t;
  }
  size_t position() const { return pos_; }
  [[noreturn]] void fail(const std::string& what) const { throw DataError(source_ + ": " + what); }

 private:
  void need(std::uint64_t n) const {
    if (pos_ + n > end_) fail("truncated");
  }
  const std::vector<char>& bytes_;
  size_t end_;
  size_t pos_ = 0;
  std::string source_;
};

std::uint64_t hashString(const std::string& s) { return fnv1a(s.data(), s.size()); }

}  // namespace

std::uint64_t fnv1a(const void* data, size_t size, std::uint64_t seed) {
  std::uint64_t h = seed;
  const auto* p = static_cast<const unsigned char*>(data);
  for (size_t i = 0; i < size; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

Checkpoint Checkpoint::capture(const Model& model, const Vocabulary& vocabulary, const Adam* optimizer) {
  Checkpoint c;
  c.modelConfig = model.config().serialize();
  c.vocabulary = vocabulary.serialize();
  for (const Parameter* p : model.parameters()) c.parameters.push_back({p->name(), p->value()});
  if (optimizer) {
    c.hasOptimizer = true;
    c.optimizerSteps = optimizer->steps();
    for (const auto& s : optimizer->slots()) {
      c.firstMoments.push_back({s.parameter->name(), s.m});
      c.secondMoments.push_back({s.parameter->name(), s.v});
    }
  }
  return c;
}

void Checkpoint::restoreModel(Model& model) const {
  const auto params = model.parameters();
  if (params.size() != parameters.size()) {
    throw DataError("checkpoint has " + std::to_string(parameters.size()) +
                    " parameters, model has " + std::to_string(params.size()));
  }
  for (size_t i = 0; i < params.size(); ++i) {
    const auto& src = parameters[i];
    Parameter& dst = *params[i];
    if (src.name != dst.name() || src.value.shape() != dst.value().shape()) {
      throw DataError("checkpoint parameter " + src.name + " " + toString(src.value.shape()) +
                      " does not match model parameter " + dst.name() + " " +
                      toString(dst.value().shape()));
    }
    dst.value() = src.value.cast(dst.value().precision());
  }
}

void Checkpoint::restoreOptimizer(Adam& optimizer) const {
  if (!hasOptimizer) throw DataError("checkpoint has no optimizer state");
  auto& slots = optimizer.slots();
  if (slots.size() != firstMoments.size()) throw DataError("checkpoint optimizer state size mismatch");
  for (size_t i = 0; i < slots.size(); ++i) {
    if (firstMoments[i].name != slots[i].parameter->name()) {
      throw DataError("checkpoint optimizer slot " + firstMoments[i].name + " does not match " +
                      slots[i].parameter->name());
    }
    slots[i].m = firstMoments[i].value.cast(slots[i].m.precision());
    slots[i].v = secondMoments[i].value.cast(slots[i].v.precision());
  }
  optimizer.setSteps(optimizerSteps);
}

std::vector<char> encodeCheckpoint(const Checkpoint& c) {
  Writer w;
  for (char ch : {'N', 'A', 'R', 'C'}) w.u8(static_cast<std::uint8_t>(ch));
  w.u32(kCheckpointVersion);
  w.str(c.modelConfig);
  w.u64(hashString(c.modelConfig));
  w.str(c.vocabulary);
  w.u64(hashString(c.vocabulary));
  w.str(c.trainConfig);
  w.u64(static_cast<std::uint64_t>(c.step));
  w.str(c.rngState);
  w.u32(static_cast<std::uint32_t>(c.parameters.size()));
  for (const auto& p : c.parameters) {
    w.str(p.name);
    w.tensor(p.value);
  }
  w.u8(c.hasOptimizer ? 1 : 0);
  if (c.hasOptimizer) {
    w.u64(static_cast<std::uint64_t>(c.optimizerSteps));
    w.u32(static_cast<std::uint32_t>(c.firstMoments.size()));
    for (size_t i = 0; i < c.firstMoments.size(); ++i) {
      w.str(c.firstMoments[i].name);
      w.tensor(c.firstMoments[i].value);
      w.tensor(c.secondMoments[i].value);
    }
  }
  auto& bytes = w.bytes();
  w.u64(fnv1a(bytes.data(), bytes.size()));
  return std::move(bytes);
}

Checkpoint decodeCheckpoint(const std::vector<char>& bytes, const std::string& source) {
  if (bytes.size() < 16) throw DataError(source + ": truncated");
  const size_t body = bytes.size() - 8;
  Reader trailer(bytes, bytes.size(), source);
  for (size_t i = 0; i < body; ++i) trailer.u8();
  if (trailer.u64() != fnv1a(bytes.data(), body)) throw DataError(source + ": checksum mismatch");

  Reader r(bytes, body, source);
  std::string magic;
  for (int i = 0; i < 4; ++i) magic += static_cast<char>(r.u8());
  if (magic != "NARC") r.fail("not a checkpoint");
  const auto version = r.u32();
  if (version != kCheckpointVersion) r.fail("unsupported checkpoint version " + std::to_string(version));
  Checkpoint c;
  c.modelConfig = r.str();
  if (r.u64() != hashString(c.modelConfig)) r.fail("model config does not match its hash");
  c.vocabulary = r.str();
  if (r.u64() != hashString(c.vocabulary)) r.fail("vocabulary does not match its hash");
  c.trainConfig = r.str();
  c.step = static_cast<std::int64_t>(r.u64());
  c.rngState = r.str();
  const auto n = r.u32();
  for (std::uint32_t i = 0; i < n; ++i) {
    std::string name = r.str();
    c.parameters.push_back({std::move(name), r.tensor()});
  }
  c.hasOptimizer = r.u8() != 0;
  if (c.hasOptimizer) {
    c.optimizerSteps = static_cast<std::int64_t>(r.u64());
    const auto slots = r.u32();
    for (std::uint32_t i = 0; i < slots; ++i) {
      std::string name = r.str();
      Tensor m = r.tensor();
      Tensor v = r.tensor();
      c.firstMoments.push_back({name, std::move(m)});
      c.secondMoments.push_back({std::move(name), std::move(v)});
    }
  }
  if (r.position() != body) r.fail("trailing bytes");
  return c;
}

void saveCheckpoint(const std::filesystem::path& path, const Checkpoint& checkpoint) {
  const auto bytes = encodeCheckpoint(checkpoint);
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw DataError("cannot write " + tmp.string());
    os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    os.flush();
    if (!os) {
      std::filesystem::remove(tmp);
      throw DataError("write failed: " + tmp.string());
    }
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint loadCheckpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot open checkpoint " + path.string());
  std::vector<char> bytes((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  return decodeCheckpoint(bytes, path.string());
}

}  // namespace nar
