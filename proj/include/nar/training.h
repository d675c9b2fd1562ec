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

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "nar/checkpoint.h"
#include "nar/key_values.h"
#include "nar/metrics.h"
#include "nar/model.h"
#include "nar/optimizer.h"
#include "nar/random.h"
#include "nar/refine.h"
#include "nar/tasks.h"

namespace nar {

// Every field is a key in the flat key=value config and a --kebab-case flag.
struct TrainConfig {
  int epochs = 100;
  double warmupEpochs = 30.0;
  double peakLr = 5e-4;  // at batch size 32; scaled by sqrt(batch / 32)
  int batchSize = 32;
  double alpha = 1.0;    // duration-loss weight
  std::uint64_t seed = 0;
  std::string tasks = "all";
  std::string taskSchedule = "sum";  // sum | interleave
  std::int64_t maxSteps = 0;         // 0 = no cap

  std::string dataDir;
  std::string paired;          // manifests; empty = <data_dir>/<default name>
  std::string unpairedSpeech;
  std::string unpairedText;
  std::string dev;
  std::string durationCheckpoint;  // bootstrap duration model for pseudo-alignments

  std::string outDir = "run";
  int checkpointEvery = 1;   // epochs; 0 = only at the end
  int keepCheckpoints = 2;
  int devEvalEvery = 0;      // epochs; 0 = off
  int devEvalLimit = 0;      // utterances; 0 = all

  ModelConfig model;
  AdamConfig adam;
  SpecAugmentConfig specAugment;
  RefineConfig refine;

  std::string serialize() const;
  static TrainConfig parse(const std::string& text);
  void set(const std::string& key, const std::string& value);
  std::vector<std::string> keys() const;
  void validate() const;

  std::vector<TaskKind> activeTasks() const { return parseTaskList(tasks); }
  double scaledPeakLr() const;
  std::filesystem::path manifestPath(const std::string& explicitPath, const char* defaultName) const;
};

// OneCycle: linear from peak/25 to peak over the warmup, then linear to
// peak/1e4 at the last step; constant after that.
double lrAt(std::int64_t step, const TrainConfig& config, std::int64_t stepsPerEpoch);

struct TrainingData {
  std::vector<Example> paired;
  std::vector<Example> unpairedSpeech;
  std::vector<Example> unpairedText;
  std::vector<Example> dev;
};

// Loads the manifests named by the config (missing optional files give
// empty sources).
TrainingData loadTrainingData(const TrainConfig& config, const Vocabulary& vocabulary);

struct StepReport {
  std::int64_t step = 0;
  int epoch = 0;
  double lr = 0.0;
  std::vector<std::pair<TaskKind, double>> losses;  // per-task mean loss
  std::vector<std::pair<TaskKind, double>> durationLosses;
  std::vector<TaskKind> skipped;
  double total = 0.0;
  double gradNorm = 0.0;
  int clampedRepeats = 0;
  int viterbiFallbacks = 0;
  double seconds = 0.0;
};

class Trainer {
 public:
  Trainer(const TrainConfig& config, const Vocabulary& vocabulary, TrainingData data);

  // One optimizer step over one batch per active task. Throws NumericError
  // naming the task and utterance on a non-finite loss.
  StepReport step();
  // Runs to the end of the schedule, writing the metrics log and
  // checkpoints under out_dir. Returns the number of steps taken.
  std::int64_t train(std::ostream* log = nullptr);

  std::int64_t stepsPerEpoch() const { return stepsPerEpoch_; }
  std::int64_t totalSteps() const;
  std::int64_t currentStep() const { return step_; }
  Model& model() { return *model_; }
  const Model& model() const { return *model_; }
  Adam& optimizer() { return optimizer_; }
  const TrainConfig& config() const { return config_; }
  const TrainingData& data() const { return data_; }

  Checkpoint checkpoint() const;
  void resume(const Checkpoint& checkpoint);

  std::string headerJson() const;
  static std::string stepJson(const StepReport& report);

 private:
  const std::vector<Example>& source(TaskSource s) const;
  std::vector<const Example*> batchFor(TaskSource s, std::int64_t step);
  std::vector<int> fallbackRepeats(const Example& e);

  TrainConfig config_;
  Vocabulary vocabulary_;
  TrainingData data_;
  std::vector<TaskKind> tasks_;
  std::unique_ptr<Model> model_;
  Adam optimizer_;
  Rng rng_;
  std::int64_t step_ = 0;
  std::int64_t stepsPerEpoch_ = 1;
  int viterbiFallbacks_ = 0;
  std::map<std::pair<int, std::int64_t>, std::vector<int>> orders_;
};

// Standalone text encoder + duration predictor trained with L_dur on
// paired data (the model's MM encoder is built with zero layers).
std::unique_ptr<Model> trainDurationModel(const TrainConfig& config, const Vocabulary& vocabulary,
                                          std::span<const Example> paired, std::ostream* log = nullptr);
// Mean |predicted - true| repeat per token over examples with repeats.
double durationMae(const Model& model, std::span<const Example> examples);
// Fills missing repeats of text examples from the model's predictions.
int makePseudoAlignments(const Model& model, std::vector<Example>& examples);

struct SttEvaluation {
  EditStats characters;
  EditStats words;
};

SttEvaluation evaluateStt(const Model& model, const Vocabulary& vocabulary,
                          std::span<const Example> examples, const RefineConfig& refine);
// Mean absolute error over all cells, with the true repeats fixing T.
double evaluateTtsL1(const Model& model, std::span<const Example> examples, const RefineConfig& refine);

// Stops glibc from handing tensor-sized blocks back to the kernel after
// every graph; training otherwise spends a large share of time in page
// faults. No-op on other C libraries.
void retainFreedMemory();

}  // namespace nar
