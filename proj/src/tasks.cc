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

#include "nar/tasks.h"

#include <algorithm>

#include "nar/alignment.h"
#include "nar/ctc.h"
#include "nar/errors.h"
#include "nar/ops.h"
#include "nar/random.h"

namespace nar {
namespace {

constexpr std::array<std::string_view, 6> kNames = {"stt", "tts", "t2t", "s2s", "st2t", "st2s"};

const std::array<TaskRecipe, 6> kRecipes = {{
    // kind, source, text?, pY, sampleY, speech, pX, sampleX, M, textHead, speechHead, dur, specaug
    {TaskKind::kStt, TaskSource::kPaired, false, 1.0, false, MaskSchedule::kNone, 0.0, false, 0,
     true, false, false, true},
    {TaskKind::kTts, TaskSource::kPaired, true, 0.0, false, MaskSchedule::kFull, 1.0, false, 0,
     false, true, true, false},
    {TaskKind::kT2t, TaskSource::kUnpairedText, true, 0.25, false, MaskSchedule::kFull, 1.0,
     false, 0, true, false, false, false},
    {TaskKind::kS2s, TaskSource::kUnpairedSpeech, false, 1.0, false, MaskSchedule::kSpans, 0.0625,
     false, 10, false, true, false, false},
    {TaskKind::kSt2t, TaskSource::kPaired, true, 0.0, true, MaskSchedule::kNone, 0.0, false, 0,
     true, false, false, false},
    {TaskKind::kSt2s, TaskSource::kPaired, true, 0.0, false, MaskSchedule::kCorner, 0.0, true, 0,
     false, true, true, false},
}};

}  // namespace

std::string_view taskName(TaskKind kind) { return kNames[static_cast<size_t>(kind)]; }

TaskKind parseTaskName(std::string_view name) {
  for (size_t i = 0; i < kNames.size(); ++i) {
    if (kNames[i] == name) return static_cast<TaskKind>(i);
  }
  throw ContractError("unknown task '" + std::string(name) + "' (expected stt, tts, t2t, s2s, st2t, st2s or all)");
}

std::vector<TaskKind> parseTaskList(std::string_view list) {
  std::array<bool, 6> on{};
  size_t i = 0;
  while (i <= list.size()) {
    size_t j = list.find(',', i);
    if (j == std::string_view::npos) j = list.size();
    const auto name = list.substr(i, j - i);
    if (name == "all") {
      on.fill(true);
    } else if (!name.empty()) {
      on[static_cast<size_t>(parseTaskName(name))] = true;
    }
    i = j + 1;
  }
  std::vector<TaskKind> out;
  for (TaskKind k : kAllTasks) {
    if (on[static_cast<size_t>(k)]) out.push_back(k);
  }
  NAR_REQUIRE(!out.empty(), "task list is empty");
  return out;
}

std::string taskListString(std::span<const TaskKind> tasks) {
  std::string out;
  for (TaskKind k : tasks) {
    if (!out.empty()) out += ',';
    out += taskName(k);
  }
  return out;
}

const TaskRecipe& recipe(TaskKind kind) { return kRecipes[static_cast<size_t>(kind)]; }

std::vector<Example> examplesFromDataset(const Dataset& dataset, const Vocabulary& vocabulary) {
  std::vector<Example> out;
  for (size_t i = 0; i < dataset.size(); ++i) {
    const auto& r = dataset.record(i);
    Example e;
    e.id = r.id;
    e.speaker = r.speaker;
    if (r.text) {
      e.hasText = true;
      e.text = vocabulary.encode(*r.text);
    }
    if (r.features) e.features = std::make_shared<const Matrix>(dataset.features(i));
    if (r.repeats) {
      e.repeats = *r.repeats;
      validateAlignment({addBlank(e.text), e.repeats});
    }
    out.push_back(std::move(e));
  }
  return out;
}

Matrix specAugment(const Matrix& x, const SpecAugmentConfig& config, std::uint64_t seed) {
  Matrix out = x;
  Rng rng(seed);
  const auto T = x.rows();
  const auto F = x.cols();
  for (int n = 0; n < config.timeMasks; ++n) {
    const auto w = std::min<std::int64_t>(rng.uniformInt(0, config.timeWidth), T);
    const auto s = rng.uniformInt(0, T - w);
    for (auto t = s; t < s + w; ++t) {
      for (std::int64_t f = 0; f < F; ++f) out(t, f) = 0.0f;
    }
  }
  for (int n = 0; n < config.freqMasks; ++n) {
    const auto w = std::min<std::int64_t>(rng.uniformInt(0, config.freqWidth), F);
    const auto s = rng.uniformInt(0, F - w);
    for (std::int64_t t = 0; t < T; ++t) {
      for (auto f = s; f < s + w; ++f) out(t, f) = 0.0f;
    }
  }
  return out;
}

ForwardInput TaskInput::forwardInput() const {
  const TaskRecipe& r = recipe(kind);
  ForwardInput in;
  in.speech = speech ? &*speech : nullptr;
  in.text = text ? &*text : nullptr;
  in.repeats = repeats;
  in.speaker = speaker;
  in.durationLoss = r.durationLoss;
  in.textHead = r.textHead;
  in.speechHead = r.speechHead;
  return in;
}

TaskInput buildTaskInput(TaskKind kind, const Example& e, int maskId,
                         const SpecAugmentConfig& specAugmentConfig, std::uint64_t seed) {
  const TaskRecipe& r = recipe(kind);
  const std::string what = std::string(taskName(kind)) + " example " + e.id;
  TaskInput in;
  in.kind = kind;
  in.id = e.id;
  in.speaker = e.speaker;
  Rng rng(seed);
  const std::uint64_t maskSeed = rng.next();
  const bool needSpeech = r.speechSchedule != MaskSchedule::kFull || r.speechHead;
  NAR_REQUIRE(!needSpeech || e.features, what + " has no features");
  NAR_REQUIRE(!(r.textPresent || r.textHead) || e.hasText, what + " has no transcript");

  if (r.textPresent) {
    NAR_REQUIRE(!e.repeats.empty(), what + " has no alignment repeats");
    double pY = r.pY;
    if (r.samplePY) {
      pY = kSampledRatios[static_cast<size_t>(rng.uniformInt(0, kSampledRatios.size() - 1))];
      in.sampledRatio = pY;
    }
    in.text = pY > 0.0 ? propagateBlankMasks(maskText(e.text, pY, maskSeed, maskId), maskId)
                       : unmaskedTokens(e.text);
    in.repeats = e.repeats;
  }
  if (r.textHead) in.targetText = e.text;

  switch (r.speechSchedule) {
    case MaskSchedule::kNone:
      in.speech = unmaskedSpeech(r.specAugment ? specAugment(*e.features, specAugmentConfig, rng.next())
                                               : *e.features);
      break;
    case MaskSchedule::kSpans:
      in.speech = maskSpeechSpans(*e.features, r.pX, r.spanLength, maskSeed);
      break;
    case MaskSchedule::kCorner: {
      double pX = r.pX;
      if (r.samplePX) {
        pX = kSampledRatios[static_cast<size_t>(rng.uniformInt(0, kSampledRatios.size() - 1))];
        in.sampledRatio = pX;
      }
      in.speech = maskSpeechCorner(*e.features, pX);
      break;
    }
    default:
      break;
  }
  if (r.speechHead) in.targetSpeech = e.features;
  return in;
}

std::vector<TaskInput> buildTaskBatch(TaskKind kind, std::span<const Example* const> examples,
                                      int maskId, const SpecAugmentConfig& specAugmentConfig,
                                      std::uint64_t seed) {
  std::vector<TaskInput> out;
  for (size_t i = 0; i < examples.size(); ++i) {
    out.push_back(buildTaskInput(kind, *examples[i], maskId, specAugmentConfig, mixSeed(seed, i)));
  }
  return out;
}

TaskLoss taskLoss(const TaskInput& input, const ForwardOutput& output, double alpha) {
  const TaskRecipe& r = recipe(input.kind);
  TaskLoss out;
  if (r.textHead) {
    const double norm = std::max<double>(1.0, static_cast<double>(input.targetText.size()));
    out.total = scale(ctcLoss(output.text, input.targetText), 1.0 / norm);
  } else {
    Graph& g = *output.speech.graph();
    out.total = l1Loss(output.speech, g.constant(matrixToTensor(*input.targetSpeech, g.precision())));
  }
  out.main = out.total.value().get(0);
  if (r.durationLoss) {
    out.duration = output.durationLoss.value().get(0);
    out.clampedRepeats = output.clampedRepeats;
    out.total = add(out.total, scale(output.durationLoss, alpha));
  }
  return out;
}

}  // namespace nar
