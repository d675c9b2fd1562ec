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

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "nar/manifest.h"
#include "nar/masking.h"
#include "nar/model.h"
#include "nar/vocabulary.h"

namespace nar {

enum class TaskKind : std::uint8_t { kStt, kTts, kT2t, kS2s, kSt2t, kSt2s };

inline constexpr std::array<TaskKind, 6> kAllTasks = {TaskKind::kStt,  TaskKind::kTts,
                                                      TaskKind::kT2t,  TaskKind::kS2s,
                                                      TaskKind::kSt2t, TaskKind::kSt2s};

std::string_view taskName(TaskKind kind);
TaskKind parseTaskName(std::string_view name);
// Comma-separated names ("stt,tts"); "all" means every task. Result is in
// canonical order without duplicates.
std::vector<TaskKind> parseTaskList(std::string_view list);
std::string taskListString(std::span<const TaskKind> tasks);

enum class TaskSource : std::uint8_t { kPaired, kUnpairedSpeech, kUnpairedText };

// Mask ratios drawn uniformly per utterance by ST2T (text) and ST2S (speech).
inline constexpr std::array<double, 5> kSampledRatios = {0.1, 0.25, 0.5, 0.75, 0.9};

struct TaskRecipe {
  TaskKind kind;
  TaskSource source;
  // Text side: absent (fully masked), Mask_Y at pY, or unmasked.
  bool textPresent;
  double pY;        // used when textPresent
  bool samplePY;
  // Speech side.
  MaskSchedule speechSchedule;  // kNone, kSpans, kCorner or kFull (absent)
  double pX;
  bool samplePX;
  int spanLength;
  bool textHead;     // CTC on O_Y
  bool speechHead;   // L1 on O_X
  bool durationLoss;
  bool specAugment;
};

const TaskRecipe& recipe(TaskKind kind);

// One utterance of training data; fields absent in the source are empty.
struct Example {
  std::string id;
  std::vector<int> text;  // character ids
  bool hasText = false;
  std::shared_ptr<const Matrix> features;
  std::vector<int> repeats;  // of addBlank(text); empty when unknown
  int speaker = 0;
};

// Loads every record, reading features eagerly.
std::vector<Example> examplesFromDataset(const Dataset& dataset, const Vocabulary& vocabulary);

struct SpecAugmentConfig {
  int timeMasks = 2;
  int timeWidth = 20;
  int freqMasks = 2;
  int freqWidth = 10;
};

// Zeroes up to timeMasks bands of width U[0, timeWidth] frames and
// freqMasks bands of width U[0, freqWidth] bins.
Matrix specAugment(const Matrix& x, const SpecAugmentConfig& config, std::uint64_t seed);

// A single masked model input with its targets.
struct TaskInput {
  TaskKind kind;
  std::string id;
  std::optional<MaskedStream> speech;
  std::optional<MaskedTokens> text;
  std::vector<int> repeats;
  int speaker = 0;
  std::vector<int> targetText;
  std::shared_ptr<const Matrix> targetSpeech;
  double sampledRatio = -1.0;  // ST2T / ST2S draw

  // Text stream absent, i.e. Ê_A is all mask embeddings.
  bool textFullyMasked() const { return !text; }
  ForwardInput forwardInput() const;
};

// Applies the recipe's masking to one example. Throws ContractError when
// the example lacks what the task needs (features, text, or repeats).
TaskInput buildTaskInput(TaskKind kind, const Example& example, int maskId,
                         const SpecAugmentConfig& specAugment, std::uint64_t seed);

std::vector<TaskInput> buildTaskBatch(TaskKind kind, std::span<const Example* const> examples,
                                      int maskId, const SpecAugmentConfig& specAugment,
                                      std::uint64_t seed);

struct TaskLoss {
  Var total;
  double main = 0.0;      // CTC per target character, or L1
  double duration = 0.0;  // unweighted L_dur, when the task has one
  int clampedRepeats = 0;
};

// CTC losses are divided by max(1, |target|); speech losses are the mean
// absolute error over the whole T x F canvas; TTS and ST2S add alpha*L_dur.
TaskLoss taskLoss(const TaskInput& input, const ForwardOutput& output, double alpha);

}  // namespace nar
