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

#include "nar/model.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

#include "nar/alignment.h"
#include "nar/errors.h"
#include "nar/ops.h"
#include "nar/random.h"

namespace nar {
namespace {

bool endsWith(const std::string& s, std::string_view suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

std::string formatDouble(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

Var residual(Graph& g, Var x, Var branch, Parameter* scaleParam, double halfStep) {
  Var s = g.param(*scaleParam);
  if (halfStep != 1.0) branch = scale(branch, halfStep);
  return add(x, mul(branch, s));
}

}  // namespace

void ModelConfig::validate() const {
  NAR_REQUIRE(dModel > 0 && heads > 0 && dModel % heads == 0,
              "model config: d_model must be a positive multiple of heads");
  NAR_REQUIRE(mmLayers >= 0 && peripheralLayers >= 0, "model config: negative layer count");
  NAR_REQUIRE(melBins > 0, "model config: mel_bins must be positive");
  NAR_REQUIRE(vocabSize >= 3, "model config: vocabulary needs blank, one character and <mask>");
  NAR_REQUIRE(maxRepeat >= 1, "model config: max_repeat must be >= 1");
  NAR_REQUIRE(convKernel >= 1 && convKernel % 2 == 1, "model config: conv_kernel must be odd");
  NAR_REQUIRE(ffnMultiplier >= 1, "model config: ffn_multiplier must be >= 1");
  NAR_REQUIRE(dropout >= 0.0 && dropout < 1.0, "model config: dropout must be in [0,1)");
  NAR_REQUIRE(speakers >= 1, "model config: speakers must be >= 1");
}

std::string ModelConfig::serialize() const {
  std::ostringstream os;
  os << "d_model=" << dModel << "\n"
     << "heads=" << heads << "\n"
     << "mm_layers=" << mmLayers << "\n"
     << "peripheral_layers=" << peripheralLayers << "\n"
     << "mel_bins=" << melBins << "\n"
     << "vocab_size=" << vocabSize << "\n"
     << "max_repeat=" << maxRepeat << "\n"
     << "conv_kernel=" << convKernel << "\n"
     << "ffn_multiplier=" << ffnMultiplier << "\n"
     << "dropout=" << formatDouble(dropout) << "\n"
     << "speakers=" << speakers << "\n"
     << "branch_scale_init=" << formatDouble(branchScaleInit) << "\n"
     << "precision=" << toString(precision) << "\n";
  return os.str();
}

ModelConfig ModelConfig::parse(const std::string& text) {
  ModelConfig c;
  std::istringstream is(text);
  std::string line;
  int lineNo = 0;
  while (std::getline(is, line)) {
    ++lineNo;
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw DataError("model config line " + std::to_string(lineNo) + ": expected key=value");
    }
    const std::string key = line.substr(0, eq);
    const std::string value = line.substr(eq + 1);
    try {
      if (key == "d_model") c.dModel = std::stoi(value);
      else if (key == "heads") c.heads = std::stoi(value);
      else if (key == "mm_layers") c.mmLayers = std::stoi(value);
      else if (key == "peripheral_layers") c.peripheralLayers = std::stoi(value);
      else if (key == "mel_bins") c.melBins = std::stoi(value);
      else if (key == "vocab_size") c.vocabSize = std::stoi(value);
      else if (key == "max_repeat") c.maxRepeat = std::stoi(value);
      else if (key == "conv_kernel") c.convKernel = std::stoi(value);
      else if (key == "ffn_multiplier") c.ffnMultiplier = std::stoi(value);
      else if (key == "dropout") c.dropout = std::stod(value);
      else if (key == "speakers") c.speakers = std::stoi(value);
      else if (key == "branch_scale_init") c.branchScaleInit = std::stod(value);
      else if (key == "precision") {
        if (value == "f32") c.precision = Precision::kF32;
        else if (value == "f64") c.precision = Precision::kF64;
        else throw DataError("model config: unknown precision '" + value + "'");
      } else {
        throw DataError("model config line " + std::to_string(lineNo) + ": unknown key '" + key + "'");
      }
    } catch (const std::logic_error&) {
      throw DataError("model config line " + std::to_string(lineNo) + ": bad value for " + key);
    }
  }
  return c;
}

Parameter* ParameterSet::make(const std::string& name, Shape shape, Precision precision) {
  NAR_REQUIRE(!byName_.count(name), "duplicate parameter name " + name);
  params_.push_back(std::make_unique<Parameter>(name, Tensor(std::move(shape), precision)));
  byName_[name] = params_.back().get();
  return params_.back().get();
}

void ParameterSet::initialize(std::uint64_t seed, double branchScaleInit) {
  Rng rng(seed);
  for (auto& p : params_) {
    Tensor& v = p->value();
    const std::string& name = p->name();
    if (endsWith(name, ".w") || endsWith(name, ".kernel")) {
      const double std = 1.0 / std::sqrt(static_cast<double>(v.shape()[0]));
      for (std::int64_t i = 0; i < v.numel(); ++i) v.set(i, rng.normal(0.0, std));
    } else if (endsWith(name, ".table")) {
      for (std::int64_t i = 0; i < v.numel(); ++i) v.set(i, rng.normal());
    } else if (endsWith(name, ".gamma")) {
      v.fill(1.0);
    } else if (endsWith(name, ".scale")) {
      v.fill(branchScaleInit);
    } else {
      v.fill(0.0);
    }
    p->zeroGrad();
  }
}

std::vector<Parameter*> ParameterSet::all() const {
  std::vector<Parameter*> out;
  out.reserve(params_.size());
  for (const auto& p : params_) out.push_back(p.get());
  return out;
}

Parameter& ParameterSet::get(const std::string& name) const {
  auto it = byName_.find(name);
  NAR_REQUIRE(it != byName_.end(), "unknown parameter " + name);
  return *it->second;
}

std::int64_t ParameterSet::elementCount() const {
  std::int64_t n = 0;
  for (const auto& p : params_) n += p->value().numel();
  return n;
}

void ParameterSet::zeroGrad() {
  for (auto& p : params_) p->zeroGrad();
}

Var Linear::operator()(Graph& g, Var x) const {
  Var y = matmul(x, g.param(*weight));
  return bias ? add(y, g.param(*bias)) : y;
}

Var LayerNormParams::operator()(Graph& g, Var x) const {
  return layerNorm(x, g.param(*gamma), g.param(*beta));
}

Var ConformerBlock::operator()(Graph& g, Var x) const {
  auto feedForward = [&](const LayerNormParams& norm, const Linear& in, const Linear& out) {
    Var h = swish(in(g, norm(g, x)));
    return dropout(out(g, dropout(h, dropoutRate)), dropoutRate);
  };
  x = residual(g, x, feedForward(ffn1Norm, ffn1In, ffn1Out), ffn1Scale, 0.5);

  {
    Var h = attnNorm(g, x);
    Var q = query(g, h);
    Var k = key(g, h);
    Var v = value(g, h);
    const std::int64_t width = q.cols() / heads;
    const double inv = 1.0 / std::sqrt(static_cast<double>(width));
    std::vector<Var> outs;
    for (int i = 0; i < heads; ++i) {
      Var qh = heads == 1 ? q : sliceCols(q, i * width, width);
      Var kh = heads == 1 ? k : sliceCols(k, i * width, width);
      Var vh = heads == 1 ? v : sliceCols(v, i * width, width);
      Var attn = softmax(scale(matmul(qh, kh, false, true), inv));
      outs.push_back(matmul(attn, vh));
    }
    Var merged = heads == 1 ? outs.front() : concatCols(outs);
    x = residual(g, x, dropout(attnOut(g, merged), dropoutRate), attnScale, 1.0);
  }

  {
    Var h = glu(convIn(g, convNorm(g, x)));
    h = depthwiseConv1d(h, g.param(*depthwiseKernel), g.param(*depthwiseBias));
    h = swish(convInnerNorm(g, h));
    x = residual(g, x, dropout(convOut(g, h), dropoutRate), convScale, 1.0);
  }

  x = residual(g, x, feedForward(ffn2Norm, ffn2In, ffn2Out), ffn2Scale, 0.5);
  return outNorm(g, x);
}

Linear makeLinear(ParameterSet& set, const std::string& name, int in, int out,
                  Precision precision) {
  return {set.make(name + ".w", {in, out}, precision), set.make(name + ".b", {out}, precision)};
}

LayerNormParams makeLayerNorm(ParameterSet& set, const std::string& name, int width,
                              Precision precision) {
  return {set.make(name + ".gamma", {width}, precision),
          set.make(name + ".beta", {width}, precision)};
}

ConformerBlock makeConformerBlock(ParameterSet& set, const std::string& name, int width,
                                  int heads, int kernel, int ffnMultiplier, double dropoutRate,
                                  Precision precision) {
  NAR_REQUIRE(width % heads == 0, "conformer block: width must divide into heads");
  const int inner = width * ffnMultiplier;
  ConformerBlock b;
  b.heads = heads;
  b.dropoutRate = dropoutRate;
  b.ffn1Norm = makeLayerNorm(set, name + ".ffn1.norm", width, precision);
  b.ffn1In = makeLinear(set, name + ".ffn1.in", width, inner, precision);
  b.ffn1Out = makeLinear(set, name + ".ffn1.out", inner, width, precision);
  b.ffn1Scale = set.make(name + ".ffn1.scale", {1}, precision);
  b.attnNorm = makeLayerNorm(set, name + ".attn.norm", width, precision);
  b.query = makeLinear(set, name + ".attn.query", width, width, precision);
  // A key bias only shifts each score row by a constant, which softmax ignores.
  b.key = {set.make(name + ".attn.key.w", {width, width}, precision), nullptr};
  b.value = makeLinear(set, name + ".attn.value", width, width, precision);
  b.attnOut = makeLinear(set, name + ".attn.out", width, width, precision);
  b.attnScale = set.make(name + ".attn.scale", {1}, precision);
  b.convNorm = makeLayerNorm(set, name + ".conv.norm", width, precision);
  b.convIn = makeLinear(set, name + ".conv.in", width, 2 * width, precision);
  b.depthwiseKernel = set.make(name + ".conv.depthwise.kernel", {kernel, width}, precision);
  b.depthwiseBias = set.make(name + ".conv.depthwise.b", {width}, precision);
  b.convInnerNorm = makeLayerNorm(set, name + ".conv.inner_norm", width, precision);
  b.convOut = makeLinear(set, name + ".conv.out", width, width, precision);
  b.convScale = set.make(name + ".conv.scale", {1}, precision);
  b.ffn2Norm = makeLayerNorm(set, name + ".ffn2.norm", width, precision);
  b.ffn2In = makeLinear(set, name + ".ffn2.in", width, inner, precision);
  b.ffn2Out = makeLinear(set, name + ".ffn2.out", inner, width, precision);
  b.ffn2Scale = set.make(name + ".ffn2.scale", {1}, precision);
  b.outNorm = makeLayerNorm(set, name + ".out_norm", width, precision);
  return b;
}

Model::Model(const ModelConfig& config, std::uint64_t seed) : config_(config) {
  config_.validate();
  const int d = config_.dModel;
  const Precision p = config_.precision;
  auto blocks = [&](const std::string& prefix, int n) {
    std::vector<ConformerBlock> out;
    for (int i = 0; i < n; ++i) {
      out.push_back(makeConformerBlock(params_, prefix + "." + std::to_string(i), d,
                                       config_.heads, config_.convKernel, config_.ffnMultiplier,
                                       config_.dropout, p));
    }
    return out;
  };
  tokenEmbedding_ = params_.make("token_embedding.table", {config_.vocabSize, d}, p);
  speakerTable_ = params_.make("speaker.table", {config_.speakers, d}, p);
  maskEmbedding_ = params_.make("mask_embedding.table", {1, d}, p);
  textEncoder_ = blocks("text_encoder", config_.peripheralLayers);
  durationBlocks_ = blocks("duration", config_.peripheralLayers);
  durationOut_ = makeLinear(params_, "duration.out", d, config_.maxRepeat + 1, p);
  projX_ = makeLinear(params_, "proj_x", config_.melBins, d, p);
  normX_ = makeLayerNorm(params_, "proj_x.norm", d, p);
  projY_ = makeLinear(params_, "proj_y", d, d, p);
  normY_ = makeLayerNorm(params_, "proj_y.norm", d, p);
  mmBlocks_ = blocks("mm_encoder", config_.mmLayers);
  speechBlocks_ = blocks("speech_head", config_.peripheralLayers);
  speechOut_ = makeLinear(params_, "speech_head.out", d, config_.melBins, p);
  textBlocks_ = blocks("text_head", config_.peripheralLayers);
  textOut_ = makeLinear(params_, "text_head.out", d, config_.vocabSize, p);
  initParams(seed);
}

void Model::initParams(std::uint64_t seed) { params_.initialize(seed, config_.branchScaleInit); }

Var Model::runBlocks(Graph& g, const std::vector<ConformerBlock>& blocks, Var x) const {
  for (const auto& b : blocks) x = b(g, x);
  return x;
}

Var Model::encodeText(Graph& g, std::span<const int> tokens, int speaker) const {
  NAR_REQUIRE(!tokens.empty(), "text encoder: empty token sequence");
  NAR_REQUIRE(speaker >= 0 && speaker < config_.speakers,
              "text encoder: speaker " + std::to_string(speaker) + " out of range");
  for (int t : tokens) {
    NAR_REQUIRE(t >= 0 && t < config_.vocabSize, "text encoder: token " + std::to_string(t) +
                                                     " outside the vocabulary");
  }
  Var x = embedding(g.param(*tokenEmbedding_), tokens);
  x = add(x, g.constant(sinusoidalPositions(x.rows(), x.cols(), config_.precision)));
  x = runBlocks(g, textEncoder_, x);
  const int spk[1] = {speaker};
  return add(x, embedding(g.param(*speakerTable_), spk));
}

Var Model::durationLogits(Graph& g, Var encoded) const {
  return durationOut_(g, runBlocks(g, durationBlocks_, encoded));
}

namespace {

std::vector<int> argmaxRepeats(const Tensor& logits, std::span<const int> tokens) {
  const std::int64_t n = logits.rows();
  const std::int64_t classes = logits.cols();
  const auto values = logits.toDoubles();
  std::vector<int> repeats(static_cast<size_t>(n));
  for (std::int64_t i = 0; i < n; ++i) {
    const double* row = values.data() + i * classes;
    repeats[static_cast<size_t>(i)] = static_cast<int>(std::max_element(row, row + classes) - row);
  }
  for (size_t i = 1; i < repeats.size(); i += 2) repeats[i] = std::max(repeats[i], 1);
  for (size_t i = 2; i + 1 < repeats.size(); i += 2) {
    if (tokens[i - 1] == tokens[i + 1]) repeats[i] = std::max(repeats[i], 1);
  }
  return repeats;
}

}  // namespace

std::vector<int> Model::predictRepeats(Graph& g, std::span<const int> tokens, int speaker) const {
  Var logits = durationLogits(g, encodeText(g, tokens, speaker));
  return argmaxRepeats(logits.value(), tokens);
}

ForwardOutput Model::forward(Graph& g, const ForwardInput& in) const {
  NAR_REQUIRE(g.precision() == config_.precision, "forward: graph precision differs from model");
  ForwardOutput out;
  Var textStream;
  if (in.text) {
    const auto& tokens = in.text->ids;
    NAR_REQUIRE(tokens.size() % 2 == 1, "forward: text tokens must be blank-interleaved");
    Var ey = encodeText(g, tokens, in.speaker);
    if (in.durationLoss || in.repeats.empty()) out.durationLogits = durationLogits(g, ey);
    if (in.repeats.empty()) {
      out.repeats = argmaxRepeats(out.durationLogits.value(), tokens);
    } else {
      NAR_REQUIRE(in.repeats.size() == tokens.size(),
                  "forward: " + std::to_string(in.repeats.size()) + " repeats for " +
                      std::to_string(tokens.size()) + " tokens");
      out.repeats.assign(in.repeats.begin(), in.repeats.end());
    }
    if (in.durationLoss) {
      std::vector<int> targets(out.repeats.size());
      std::vector<double> weights(out.repeats.size());
      for (size_t i = 0; i < targets.size(); ++i) {
        targets[i] = std::min(out.repeats[i], config_.maxRepeat);
        out.clampedRepeats += out.repeats[i] > config_.maxRepeat;
        weights[i] = in.text->masked.empty() || !in.text->masked[i] ? 1.0 : 0.0;
      }
      out.durationLoss = crossEntropy(out.durationLogits, targets, weights);
    }
    const auto rows = repeatIndices(out.repeats);
    out.frames = static_cast<std::int64_t>(rows.size());
    NAR_REQUIRE(out.frames > 0, "forward: repeats sum to zero frames");
    textStream = gatherRows(ey, rows);
  }

  Tensor speech;
  if (in.speech) {
    NAR_REQUIRE(in.speech->frames.cols() == config_.melBins,
                "forward: speech has " + std::to_string(in.speech->frames.cols()) +
                    " bins, model expects " + std::to_string(config_.melBins));
    if (in.text) {
      NAR_REQUIRE(in.speech->frames.rows() == out.frames,
                  "forward: speech has " + std::to_string(in.speech->frames.rows()) +
                      " frames but the alignment has " + std::to_string(out.frames));
    }
    out.frames = in.speech->frames.rows();
    NAR_REQUIRE(out.frames > 0, "forward: speech has no frames");
    speech = matrixToTensor(in.speech->frames, config_.precision);
  } else {
    NAR_REQUIRE(in.text, "forward: at least one modality is needed to fix the length");
    speech = Tensor({out.frames, config_.melBins}, config_.precision);
  }
  if (!in.text) {
    textStream = embedding(g.param(*maskEmbedding_),
                           std::vector<int>(static_cast<size_t>(out.frames), 0));
  }

  Var z = add(normX_(g, projX_(g, g.constant(std::move(speech)))), normY_(g, projY_(g, textStream)));
  z = add(z, g.constant(sinusoidalPositions(out.frames, config_.dModel, config_.precision)));
  z = runBlocks(g, mmBlocks_, z);
  if (in.speechHead) out.speech = speechOut_(g, runBlocks(g, speechBlocks_, z));
  if (in.textHead) out.text = textOut_(g, runBlocks(g, textBlocks_, z));
  return out;
}

BlockHarness::BlockHarness(int width, int heads, int kernel, int ffnMultiplier,
                           Precision precision, std::uint64_t seed, double branchScaleInit) {
  block_ = makeConformerBlock(params_, "block", width, heads, kernel, ffnMultiplier, 0.0, precision);
  params_.initialize(seed, branchScaleInit);
}

Tensor matrixToTensor(const Matrix& m, Precision precision) {
  Tensor t({m.rows(), m.cols()}, precision);
  dispatch(precision, [&](auto zero) {
    using T = decltype(zero);
    T* p = t.data<T>();
    for (std::int64_t i = 0; i < m.size(); ++i) p[i] = static_cast<T>(m.data()[i]);
  });
  return t;
}

Matrix tensorToMatrix(const Tensor& t) {
  Matrix m(t.rows(), t.cols());
  for (std::int64_t i = 0; i < t.numel(); ++i) m.data()[i] = static_cast<float>(t.get(i));
  return m;
}

Tensor sinusoidalPositions(std::int64_t rows, std::int64_t width, Precision precision) {
  std::vector<double> v(static_cast<size_t>(rows * width));
  for (std::int64_t t = 0; t < rows; ++t) {
    for (std::int64_t i = 0; i < width; ++i) {
      const double freq = std::pow(10000.0, -static_cast<double>(i - i % 2) / static_cast<double>(width));
      v[static_cast<size_t>(t * width + i)] = i % 2 == 0 ? std::sin(t * freq) : std::cos(t * freq);
    }
  }
  return Tensor::fromValues({rows, width}, v, precision);
}

}  // namespace nar
