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
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "nar/graph.h"
#include "nar/masking.h"

namespace nar {

struct ModelConfig {
  int dModel = 64;
  int heads = 2;
  int mmLayers = 4;
  int peripheralLayers = 2;
  int melBins = 16;
  int vocabSize = 29;
  int maxRepeat = 32;
  int convKernel = 7;
  int ffnMultiplier = 2;
  double dropout = 0.1;
  int speakers = 3;
  double branchScaleInit = 0.1;
  Precision precision = Precision::kF32;

  void validate() const;
  // Flat key=value lines, stable key order.
  std::string serialize() const;
  static ModelConfig parse(const std::string& text);
  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

// Owns named parameters in creation order. Initialization is keyed by the
// name suffix: ".w" ~ N(0, 1/fan_in), ".kernel" ~ N(0, 1/K), ".gamma" = 1,
// ".scale" = the branch scale, ".table" ~ N(0, 1), everything else 0.
class ParameterSet {
 public:
  Parameter* make(const std::string& name, Shape shape, Precision precision);
  void initialize(std::uint64_t seed, double branchScaleInit);

  std::vector<Parameter*> all() const;
  Parameter& get(const std::string& name) const;
  bool contains(const std::string& name) const { return byName_.count(name) > 0; }
  std::int64_t elementCount() const;
  void zeroGrad();

 private:
  std::vector<std::unique_ptr<Parameter>> params_;
  std::map<std::string, Parameter*> byName_;
};

struct Linear {
  Parameter* weight = nullptr;  // in x out
  Parameter* bias = nullptr;    // out, or none

  Var operator()(Graph& g, Var x) const;
};

struct LayerNormParams {
  Parameter* gamma = nullptr;
  Parameter* beta = nullptr;

  Var operator()(Graph& g, Var x) const;
};

// Macaron conformer block: half-step FFN, self-attention, convolution
// module, half-step FFN, final layer norm. Each residual branch is
// multiplied by a learnable scalar.
struct ConformerBlock {
  LayerNormParams ffn1Norm, ffn2Norm, attnNorm, convNorm, convInnerNorm, outNorm;
  Linear ffn1In, ffn1Out, ffn2In, ffn2Out;
  Linear query, key, value, attnOut;
  Linear convIn, convOut;
  Parameter* depthwiseKernel = nullptr;
  Parameter* depthwiseBias = nullptr;
  Parameter* ffn1Scale = nullptr;
  Parameter* attnScale = nullptr;
  Parameter* convScale = nullptr;
  Parameter* ffn2Scale = nullptr;
  int heads = 1;
  double dropoutRate = 0.0;

  Var operator()(Graph& g, Var x) const;
};

Linear makeLinear(ParameterSet& set, const std::string& name, int in, int out, Precision precision);
LayerNormParams makeLayerNorm(ParameterSet& set, const std::string& name, int width,
                              Precision precision);
ConformerBlock makeConformerBlock(ParameterSet& set, const std::string& name, int width,
                                  int heads, int kernel, int ffnMultiplier, double dropout,
                                  Precision precision);

// Everything a single forward pass needs. Absent modalities are nullptr.
struct ForwardInput {
  // Masked speech frames; nullptr means speech is absent (zero frames).
  const MaskedStream* speech = nullptr;
  // Blank-interleaved (possibly masked) tokens; nullptr means text absent,
  // which feeds the mask embedding at every frame.
  const MaskedTokens* text = nullptr;
  // Teacher-forced repeats of text->ids. Empty means use predicted repeats.
  std::span<const int> repeats;
  int speaker = 0;
  // Adds the duration cross-entropy (over unmasked tokens) to the outputs.
  bool durationLoss = false;
  bool speechHead = true;
  bool textHead = true;
};

struct ForwardOutput {
  Var speech;            // T x F
  Var text;              // T x V logits
  Var durationLogits;    // tokens x (R_max + 1), when text is present
  Var durationLoss;      // {1}, when requested
  std::vector<int> repeats;  // repeats used for upsampling
  std::int64_t frames = 0;
  int clampedRepeats = 0;    // teacher repeats above R_max
};

class Model {
 public:
  explicit Model(const ModelConfig& config, std::uint64_t seed = 0);
  Model(const Model&) = delete;
  Model& operator=(const Model&) = delete;

  const ModelConfig& config() const { return config_; }

  // Deterministic per seed. Weights ~ N(0, 1/fan_in), biases 0, norms
  // (1, 0), branch scales at config.branchScaleInit, embeddings N(0, 1).
  void initParams(std::uint64_t seed);

  ForwardOutput forward(Graph& g, const ForwardInput& input) const;

  // Text encoder output plus speaker embedding: E_Y.
  Var encodeText(Graph& g, std::span<const int> tokens, int speaker) const;
  // Repeat logits for each token of E_Y.
  Var durationLogits(Graph& g, Var encoded) const;
  // Argmax repeats with characters clamped to >= 1 and blanks between
  // equal characters clamped to >= 1.
  std::vector<int> predictRepeats(Graph& g, std::span<const int> tokens, int speaker) const;

  std::vector<Parameter*> parameters() const { return params_.all(); }
  Parameter& parameter(const std::string& name) const { return params_.get(name); }
  std::int64_t parameterCount() const { return params_.elementCount(); }
  void zeroGrad() { params_.zeroGrad(); }

  // Blocks exposed for isolated checks.
  const ConformerBlock& mmBlock(int i) const { return mmBlocks_[static_cast<size_t>(i)]; }

 private:
  Var runBlocks(Graph& g, const std::vector<ConformerBlock>& blocks, Var x) const;

  ModelConfig config_;
  ParameterSet params_;

  Parameter* tokenEmbedding_ = nullptr;
  Parameter* speakerTable_ = nullptr;
  Parameter* maskEmbedding_ = nullptr;
  std::vector<ConformerBlock> textEncoder_, durationBlocks_, mmBlocks_, speechBlocks_, textBlocks_;
  Linear durationOut_, projX_, projY_, speechOut_, textOut_;
  LayerNormParams normX_, normY_;
};

// Standalone conformer block with its own parameters, for tests and audits.
class BlockHarness {
 public:
  BlockHarness(int width, int heads, int kernel, int ffnMultiplier, Precision precision,
               std::uint64_t seed, double branchScaleInit = 0.1);
  const ConformerBlock& block() const { return block_; }
  std::vector<Parameter*> parameters() const { return params_.all(); }

 private:
  ParameterSet params_;
  ConformerBlock block_;
};

Tensor matrixToTensor(const Matrix& m, Precision precision);
Matrix tensorToMatrix(const Tensor& t);

// Sinusoidal absolute positions, rows x width.
Tensor sinusoidalPositions(std::int64_t rows, std::int64_t width, Precision precision);

}  // namespace nar
