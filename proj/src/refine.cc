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

#include "nar/refine.h"

#include <cmath>

#include "json.hpp"
#include "nar/alignment.h"
#include "nar/errors.h"
#include "nar/masking.h"

namespace nar {
namespace {

Tensor forwardText(const Model& model, const MaskedStream& speech, const MaskedTokens* text,
                   std::span<const int> repeats, int speaker) {
  Graph g(model.config().precision);
  ForwardInput in;
  in.speech = &speech;
  in.text = text;
  in.repeats = repeats;
  in.speaker = speaker;
  in.speechHead = false;
  return model.forward(g, in).text.value();
}

}  // namespace

void RefineConfig::validate() const {
  NAR_REQUIRE(iterations >= 1, "refine: iterations must be >= 1");
  NAR_REQUIRE(thresholdEnd > 0.0 && thresholdEnd <= thresholdStart && thresholdStart < 1.0,
              "refine: thresholds must satisfy 0 < end <= start < 1");
}

double refineThreshold(int k, const RefineConfig& c) {
  NAR_REQUIRE(k >= 1 && k <= c.iterations, "refine: iteration out of range");
  if (c.iterations == 1) return c.thresholdStart;
  return c.thresholdStart -
         (k - 1) * (c.thresholdStart - c.thresholdEnd) / static_cast<double>(c.iterations - 1);
}

Hypothesis decodeStt(const Model& model, const Matrix& speech) {
  // The mask token is an input symbol only.
  return greedyDecode(forwardText(model, unmaskedSpeech(speech), nullptr, {}, 0), model.config().vocabSize - 1);
}

SttResult refineStt(const Model& model, const Matrix& speech, int speaker, const RefineConfig& config) {
  config.validate();
  const int maskId = model.config().vocabSize - 1;
  const MaskedStream input = unmaskedSpeech(speech);
  SttResult out;
  out.hypothesis = decodeStt(model, speech);
  out.text = out.hypothesis.text;
  out.trace.push_back({1, 0.0, 0, {}, out.text, charConfidences(out.hypothesis)});

  for (int k = 2; k <= config.iterations && !out.text.empty(); ++k) {
    const double tau = refineThreshold(k, config);
    const std::vector<double> conf = charConfidences(out.hypothesis);
    const CtcAlignment align = repeatsFromPath(out.hypothesis.path, out.text);
    MaskedTokens tokens;
    tokens.ids = align.tokens;
    tokens.masked.assign(tokens.ids.size(), 0);
    tokens.schedule = MaskSchedule::kText;
    int masked = 0;
    for (size_t c = 0; c < conf.size(); ++c) {
      if (conf[c] >= tau) continue;
      ++masked;
      for (size_t pos : {2 * c + 1, 2 * c + 2}) {
        tokens.ids[pos] = maskId;
        tokens.masked[pos] = 1;
      }
    }
    out.hypothesis = greedyDecode(forwardText(model, input, &tokens, align.repeats, speaker), maskId);
    out.text = out.hypothesis.text;
    out.trace.push_back({k, tau, masked, tokens.ids, out.text, charConfidences(out.hypothesis)});
  }
  return out;
}

TtsResult synthesizeTts(const Model& model, std::span<const int> text, int speaker,
                        std::span<const int> repeats) {
  const MaskedTokens tokens = unmaskedTokens(text);
  Graph g(model.config().precision);
  ForwardInput in;
  in.text = &tokens;
  in.repeats = repeats;
  in.speaker = speaker;
  in.textHead = false;
  const ForwardOutput o = model.forward(g, in);
  TtsResult out;
  out.mel = tensorToMatrix(o.speech.value());
  out.repeats = o.repeats;
  out.trace.push_back({1, 0, 0, out.mel.size()});
  return out;
}

TtsResult refineTts(const Model& model, std::span<const int> text, int speaker,
                    const RefineConfig& config, std::span<const int> repeats) {
  config.validate();
  TtsResult out = synthesizeTts(model, text, speaker, repeats);
  const MaskedTokens tokens = unmaskedTokens(text);
  const std::int64_t T = out.mel.rows();
  const std::int64_t F = out.mel.cols();
  const int K = config.iterations;
  for (int k = 2; k <= K; ++k) {
    const std::int64_t t0 = (k - 1) * T / K;
    const std::int64_t f0 = (k - 1) * F / K;
    const MaskedStream input = keepCorner(out.mel, t0, f0);
    Graph g(model.config().precision);
    ForwardInput in;
    in.speech = &input;
    in.text = &tokens;
    in.repeats = out.repeats;
    in.speaker = speaker;
    in.textHead = false;
    const Matrix pred = tensorToMatrix(model.forward(g, in).speech.value());
    for (std::int64_t t = 0; t < T; ++t) {
      for (std::int64_t f = 0; f < F; ++f) {
        if (config.repredictAll || t >= t0 || f >= f0) out.mel(t, f) = pred(t, f);
      }
    }
    out.trace.push_back({k, t0, f0, config.repredictAll ? T * F : T * F - t0 * f0});
  }
  return out;
}

std::string sttTraceJsonLines(const SttResult& result, const std::string& id) {
  std::string out;
  for (const auto& p : result.trace) {
    nlohmann::json j;
    j["id"] = id;
    j["iteration"] = p.iteration;
    j["threshold"] = p.threshold;
    j["masked_characters"] = p.maskedCharacters;
    j["input_tokens"] = p.inputTokens;
    j["text"] = p.text;
    j["confidences"] = p.confidences;
    out += j.dump() + "\n";
  }
  return out;
}

std::string ttsTraceJsonLines(const TtsResult& result, const std::string& id) {
  std::string out;
  for (const auto& p : result.trace) {
    nlohmann::json j;
    j["id"] = id;
    j["iteration"] = p.iteration;
    j["kept_frames"] = p.keptFrames;
    j["kept_bins"] = p.keptBins;
    j["masked_cells"] = p.maskedCells;
    out += j.dump() + "\n";
  }
  return out;
}

}  // namespace nar
