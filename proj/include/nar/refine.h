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
#include <span>
#include <string>
#include <vector>

#include "nar/ctc.h"
#include "nar/matrix.h"
#include "nar/model.h"

namespace nar {

struct RefineConfig {
  int iterations = 1;  // K
  double thresholdStart = 0.99;
  double thresholdEnd = 0.90;
  // TTS: re-predict the whole canvas each pass instead of freezing the
  // committed corner.
  bool repredictAll = false;

  void validate() const;
};

// tau_k for k in [1, K]; linear from thresholdStart (k = 1) to
// thresholdEnd (k = K). K = 1 gives thresholdStart.
double refineThreshold(int k, const RefineConfig& config);

struct SttPass {
  int iteration = 0;
  double threshold = 0.0;     // tau used to mask this pass's input; 0 on pass 1
  int maskedCharacters = 0;   // in this pass's input
  std::vector<int> inputTokens;  // blank-interleaved, <mask> where masked
  std::vector<int> text;         // greedy output of this pass
  std::vector<double> confidences;
};

struct SttResult {
  std::vector<int> text;
  Hypothesis hypothesis;
  std::vector<SttPass> trace;
};

// Single greedy pass with the text modality absent.
Hypothesis decodeStt(const Model& model, const Matrix& speech);

// Pass 1 is decodeStt. Each later pass masks characters whose confidence
// is below tau_k (with their following blank), keeps the others, takes the
// repeats from the previous frame path and decodes again with the speech
// unmasked. An empty hypothesis stops early.
SttResult refineStt(const Model& model, const Matrix& speech, int speaker, const RefineConfig& config);

struct TtsPass {
  int iteration = 0;
  std::int64_t keptFrames = 0;
  std::int64_t keptBins = 0;
  std::int64_t maskedCells = 0;  // cells the model fills on this pass
};

struct TtsResult {
  Matrix mel;
  std::vector<int> repeats;
  std::vector<TtsPass> trace;
};

// Single pass with the speech modality absent. Empty `repeats` means the
// predicted ones.
TtsResult synthesizeTts(const Model& model, std::span<const int> text, int speaker,
                        std::span<const int> repeats = {});

// Pass k feeds the previous canvas with only the corner
// [0, floor((k-1)T/K)) x [0, floor((k-1)F/K)) kept. T is fixed by pass 1.
TtsResult refineTts(const Model& model, std::span<const int> text, int speaker,
                    const RefineConfig& config, std::span<const int> repeats = {});

// One JSON object per pass.
std::string sttTraceJsonLines(const SttResult& result, const std::string& id);
std::string ttsTraceJsonLines(const TtsResult& result, const std::string& id);

}  // namespace nar
