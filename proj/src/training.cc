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

#include "nar/training.h"

#if defined(__GLIBC__)
#include <malloc.h>
#endif

#include <algorithm>
#include <cmath>
#include <fstream>

#include "json.hpp"
#include "nar/alignment.h"
#include "nar/ctc.h"
#include "nar/errors.h"
#include "nar/ops.h"
#include "nar/synth.h"

namespace nar {
namespace {

using Clock = std::chrono::steady_clock;

KeyValueBinder binder(TrainConfig& c) {
  KeyValueBinder b("train config");
  b.bind("epochs", c.epochs);
  b.bind("warmup_epochs", c.warmupEpochs);
  b.bind("peak_lr", c.peakLr);
  b.bind("batch_size", c.batchSize);
  b.bind("alpha", c.alpha);
  b.bind("seed", c.seed);
  b.bind("tasks", c.tasks);
  b.bind("task_schedule", c.taskSchedule);
  b.bind("max_steps", c.maxSteps);
  b.bind("data_dir", c.dataDir);
  b.bind("paired", c.paired);
  b.bind("unpaired_speech", c.unpairedSpeech);
  b.bind("unpaired_text", c.unpairedText);
  b.bind("dev", c.dev);
  b.bind("duration_checkpoint", c.durationCheckpoint);
  b.bind("out_dir", c.outDir);
  b.bind("checkpoint_every", c.checkpointEvery);
  b.bind("keep_checkpoints", c.keepCheckpoints);
  b.bind("dev_eval_every", c.devEvalEvery);
  b.bind("dev_eval_limit", c.devEvalLimit);
  ModelConfig& m = c.model;
  b.bind("d_model", m.dModel);
  b.bind("heads", m.heads);
  b.bind("mm_layers", m.mmLayers);
  b.bind("peripheral_layers", m.peripheralLayers);
  b.bind("mel_bins", m.melBins);
  b.bind("vocab_size", m.vocabSize);
  b.bind("max_repeat", m.maxRepeat);
  b.bind("conv_kernel", m.convKernel);
  b.bind("ffn_multiplier", m.ffnMultiplier);
  b.bind("dropout", m.dropout);
  b.bind("speakers", m.speakers);
  b.bind("branch_scale_init", m.branchScaleInit);
  b.bind(
      "precision",
      [&m](const std::string& v) {
        if (v == "f32") {
          m.precision = Precision::kF32;
        } else if (v == "f64") {
          m.precision = Precision::kF64;
        } else {
          throw std::invalid_argument(v);
        }
      },
      [&m] { return toString(m.precision); });
  b.bind("adam_beta1", c.adam.beta1);
  b.bind("adam_beta2", c.adam.beta2);
  b.bind("adam_epsilon", c.adam.epsilon);
  b.bind("clip_norm", c.adam.clipNorm);
  b.bind("spec_time_masks", c.specAugment.timeMasks);
  b.bind("spec_time_width", c.specAugment.timeWidth);
  b.bind("spec_freq_masks", c.specAugment.freqMasks);
  b.bind("spec_freq_width", c.specAugment.freqWidth);
  b.bind("refine_k", c.refine.iterations);
  b.bind("refine_threshold_start", c.refine.thresholdStart);
  b.bind("refine_threshold_end", c.refine.thresholdEnd);
  b.bind("refine_repredict_all", c.refine.repredictAll);
  return b;
}

std::vector<Example> loadOptional(const std::filesystem::path& path, ManifestKind kind, int bins,
                                  const Vocabulary& vocabulary) {
  if (path.empty() || !std::filesystem::exists(path)) return {};
  return examplesFromDataset(Dataset::load(path, kind, bins), vocabulary);
}

void checkFinite(double v, const std::string& what) {
  if (!std::isfinite(v)) throw NumericError("non-finite loss in " + what);
}

}  // namespace

std::string TrainConfig::serialize() const {
  TrainConfig copy = *this;
  return binder(copy).serialize();
}

TrainConfig TrainConfig::parse(const std::string& text) {
  TrainConfig c;
  binder(c).apply(parseKeyValues(text, "train config"));
  return c;
}

void TrainConfig::set(const std::string& key, const std::string& value) { binder(*this).set(key, value); }

std::vector<std::string> TrainConfig::keys() const {
  TrainConfig copy = *this;
  return binder(copy).keys();
}

void TrainConfig::validate() const {
  NAR_REQUIRE(epochs >= 1, "train config: epochs must be >= 1");
  NAR_REQUIRE(warmupEpochs > 0.0 && warmupEpochs < epochs,
              "train config: warmup_epochs must lie in (0, epochs)");
  NAR_REQUIRE(peakLr > 0.0, "train config: peak_lr must be positive");
  NAR_REQUIRE(batchSize >= 1, "train config: batch_size must be >= 1");
  NAR_REQUIRE(alpha >= 0.0, "train config: alpha must be >= 0");
  NAR_REQUIRE(taskSchedule == "sum" || taskSchedule == "interleave",
              "train config: task_schedule must be sum or interleave");
  NAR_REQUIRE(keepCheckpoints >= 1 && checkpointEvery >= 0, "train config: bad checkpoint cadence");
  activeTasks();
  model.validate();
  refine.validate();
}

double TrainConfig::scaledPeakLr() const { return peakLr * std::sqrt(batchSize / 32.0); }

std::filesystem::path TrainConfig::manifestPath(const std::string& explicitPath,
                                                const char* defaultName) const {
  if (!explicitPath.empty()) return explicitPath;
  if (dataDir.empty()) return {};
  return std::filesystem::path(dataDir) / defaultName;
}

double lrAt(std::int64_t step, const TrainConfig& config, std::int64_t stepsPerEpoch) {
  NAR_REQUIRE(step >= 0, "lr_at: negative step");
  const double peak = config.scaledPeakLr();
  const double start = peak / 25.0;
  const double end = peak / 1e4;
  const double warmup = config.warmupEpochs * static_cast<double>(stepsPerEpoch);
  const double total = static_cast<double>(config.epochs) * static_cast<double>(stepsPerEpoch);
  const double s = static_cast<double>(step);
  if (s <= warmup) return start + (peak - start) * s / warmup;
  if (s >= total) return end;
  return peak + (end - peak) * (s - warmup) / (total - warmup);
}

TrainingData loadTrainingData(const TrainConfig& c, const Vocabulary& vocabulary) {
  const int bins = c.model.melBins;
  TrainingData d;
  d.paired = loadOptional(c.manifestPath(c.paired, CorpusFiles::kPaired), ManifestKind::kPaired, bins, vocabulary);
  d.unpairedSpeech = loadOptional(c.manifestPath(c.unpairedSpeech, CorpusFiles::kUnpairedSpeech),
                                  ManifestKind::kSpeech, bins, vocabulary);
  d.unpairedText = loadOptional(c.manifestPath(c.unpairedText, CorpusFiles::kUnpairedText),
                                ManifestKind::kText, bins, vocabulary);
  d.dev = loadOptional(c.manifestPath(c.dev, CorpusFiles::kDev), ManifestKind::kPaired, bins, vocabulary);
  return d;
}

Trainer::Trainer(const TrainConfig& config, const Vocabulary& vocabulary, TrainingData data)
    : config_(config),
      vocabulary_(vocabulary),
      data_(std::move(data)),
      tasks_(config.activeTasks()),
      model_(std::make_unique<Model>(config.model, config.seed)),
      optimizer_(config.adam, model_->parameters()),
      rng_(mixSeed(config.seed, 0x7472616eULL)) {
  config_.validate();
  NAR_REQUIRE(config_.model.vocabSize == vocabulary_.size(),
              "train: vocab_size " + std::to_string(config_.model.vocabSize) + " but the vocabulary has " +
                  std::to_string(vocabulary_.size()) + " tokens");
  const bool needsText = std::find(tasks_.begin(), tasks_.end(), TaskKind::kT2t) != tasks_.end();
  if (needsText) {
    bool missing = false;
    for (const auto& e : data_.unpairedText) missing |= e.repeats.empty();
    if (missing) {
      NAR_REQUIRE(!config_.durationCheckpoint.empty(),
                  "train: t2t needs pseudo-alignments for unpaired text; run train-duration and set "
                  "duration_checkpoint");
      const Checkpoint ck = loadCheckpoint(config_.durationCheckpoint);
      Model bootstrap(ck.config());
      ck.restoreModel(bootstrap);
      makePseudoAlignments(bootstrap, data_.unpairedText);
    }
  }
  std::size_t epochSource = 0;
  for (TaskKind k : tasks_) {
    if (recipe(k).source == TaskSource::kPaired) epochSource = std::max(epochSource, data_.paired.size());
  }
  if (epochSource == 0) {
    for (TaskKind k : tasks_) epochSource = std::max(epochSource, source(recipe(k).source).size());
  }
  NAR_REQUIRE(epochSource > 0, "train: no data for any active task");
  const auto b = static_cast<std::size_t>(config_.batchSize);
  stepsPerEpoch_ = static_cast<std::int64_t>((epochSource + b - 1) / b);
}

std::int64_t Trainer::totalSteps() const {
  const std::int64_t full = static_cast<std::int64_t>(config_.epochs) * stepsPerEpoch_;
  return config_.maxSteps > 0 ? std::min(full, config_.maxSteps) : full;
}

const std::vector<Example>& Trainer::source(TaskSource s) const {
  switch (s) {
    case TaskSource::kPaired:
      return data_.paired;
    case TaskSource::kUnpairedSpeech:
      return data_.unpairedSpeech;
    default:
      return data_.unpairedText;
  }
}

// Paired data is reshuffled every epoch and batched in order; unpaired
// sources are consumed as an endless stream of reshuffled passes.
std::vector<const Example*> Trainer::batchFor(TaskSource s, std::int64_t step) {
  const auto& src = source(s);
  const auto n = static_cast<std::int64_t>(src.size());
  const std::int64_t b = config_.batchSize;
  auto order = [&](std::int64_t cycle) -> const std::vector<int>& {
    auto key = std::make_pair(static_cast<int>(s), cycle);
    auto it = orders_.find(key);
    if (it == orders_.end()) {
      Rng r(mixSeed(mixSeed(config_.seed, 0x6f726465ULL + static_cast<std::uint64_t>(s)),
                    static_cast<std::uint64_t>(cycle)));
      it = orders_.emplace(key, r.sampleWithoutReplacement(static_cast<int>(n), static_cast<int>(n))).first;
    }
    return it->second;
  };
  std::vector<const Example*> out;
  if (s == TaskSource::kPaired) {
    const std::int64_t epoch = step / stepsPerEpoch_;
    const std::int64_t first = (step % stepsPerEpoch_) * b;
    const auto& perm = order(epoch);
    for (std::int64_t i = first; i < std::min(first + b, n); ++i) out.push_back(&src[static_cast<size_t>(perm[static_cast<size_t>(i)])]);
  } else {
    for (std::int64_t j = 0; j < b; ++j) {
      const std::int64_t k = step * b + j;
      const auto& perm = order(k / n);
      out.push_back(&src[static_cast<size_t>(perm[static_cast<size_t>(k % n)])]);
    }
  }
  if (orders_.size() > 16) orders_.erase(orders_.begin());
  return out;
}

std::vector<int> Trainer::fallbackRepeats(const Example& e) {
  ++viterbiFallbacks_;
  Graph g(config_.model.precision);
  const MaskedStream speech = unmaskedSpeech(*e.features);
  ForwardInput in;
  in.speech = &speech;
  in.speechHead = false;
  return viterbiAlign(model_->forward(g, in).text.value(), e.text).repeats;
}

StepReport Trainer::step() {
  const auto started = Clock::now();
  StepReport report;
  report.step = step_;
  report.epoch = static_cast<int>(step_ / stepsPerEpoch_);
  report.lr = lrAt(step_, config_, stepsPerEpoch_);
  const std::uint64_t stepSeed = rng_.next();
  const int maskId = vocabulary_.maskId();
  viterbiFallbacks_ = 0;

  std::vector<TaskKind> now = tasks_;
  if (config_.taskSchedule == "interleave") now = {tasks_[static_cast<size_t>(step_ % static_cast<std::int64_t>(tasks_.size()))]};

  model_->zeroGrad();
  for (TaskKind kind : now) {
    const TaskRecipe& r = recipe(kind);
    if (source(r.source).empty()) {
      report.skipped.push_back(kind);
      continue;
    }
    std::vector<const Example*> batch = batchFor(r.source, step_);
    std::vector<Example> patched;
    patched.reserve(batch.size());
    if (r.textPresent) {
      for (auto& e : batch) {
        if (!e->repeats.empty()) continue;
        patched.push_back(*e);
        patched.back().repeats = fallbackRepeats(*e);
        e = &patched.back();
      }
    }
    const std::uint64_t taskSeed = mixSeed(stepSeed, static_cast<std::uint64_t>(kind));
    const auto inputs = buildTaskBatch(kind, batch, maskId, config_.specAugment, taskSeed);
    double taskTotal = 0.0;
    double durTotal = 0.0;
    const double weight = 1.0 / static_cast<double>(inputs.size());
    for (size_t i = 0; i < inputs.size(); ++i) {
      Graph g(config_.model.precision, /*training=*/true, mixSeed(taskSeed, 1000 + i));
      const ForwardOutput out = model_->forward(g, inputs[i].forwardInput());
      const TaskLoss loss = taskLoss(inputs[i], out, config_.alpha);
      const double value = loss.total.value().get(0);
      checkFinite(value, std::string(taskName(kind)) + " (utterance " + inputs[i].id + ")");
      taskTotal += value * weight;
      durTotal += loss.duration * weight;
      report.clampedRepeats += loss.clampedRepeats;
      g.backward(scale(loss.total, weight));
    }
    report.losses.emplace_back(kind, taskTotal);
    if (r.durationLoss) report.durationLosses.emplace_back(kind, durTotal);
    report.total += taskTotal;
  }
  checkFinite(report.total, "total loss");
  report.gradNorm = optimizer_.step(report.lr);
  report.viterbiFallbacks = viterbiFallbacks_;
  ++step_;
  report.seconds = std::chrono::duration<double>(Clock::now() - started).count();
  return report;
}

std::int64_t Trainer::train(std::ostream* log) {
  namespace fs = std::filesystem;
  const bool writeFiles = !config_.outDir.empty();
  if (writeFiles) fs::create_directories(config_.outDir);
  std::ofstream fileLog;
  if (!log && writeFiles) {
    fileLog.open(fs::path(config_.outDir) / "metrics.jsonl", step_ == 0 ? std::ios::trunc : std::ios::app);
    log = &fileLog;
  }
  if (log && step_ == 0) *log << headerJson() << "\n";
  std::vector<fs::path> kept;
  const std::int64_t end = totalSteps();
  const std::int64_t begin = step_;
  while (step_ < end) {
    const StepReport r = step();
    if (log) *log << stepJson(r) << "\n" << std::flush;
    const bool epochEnd = step_ % stepsPerEpoch_ == 0;
    const int epoch = static_cast<int>(step_ / stepsPerEpoch_);
    if (epochEnd && config_.devEvalEvery > 0 && epoch % config_.devEvalEvery == 0 && !data_.dev.empty()) {
      std::span<const Example> dev = data_.dev;
      if (config_.devEvalLimit > 0 && dev.size() > static_cast<size_t>(config_.devEvalLimit)) {
        dev = dev.first(static_cast<size_t>(config_.devEvalLimit));
      }
      nlohmann::json j;
      j["type"] = "eval";
      j["epoch"] = epoch;
      j["step"] = step_;
      if (std::any_of(tasks_.begin(), tasks_.end(), [](TaskKind k) { return recipe(k).textHead; })) {
        j["dev_cer"] = evaluateStt(*model_, vocabulary_, dev, config_.refine).characters.rate();
      }
      if (std::any_of(tasks_.begin(), tasks_.end(), [](TaskKind k) { return recipe(k).speechHead; })) {
        j["dev_mel_l1"] = evaluateTtsL1(*model_, dev, config_.refine);
      }
      if (log) *log << j.dump() << "\n" << std::flush;
    }
    const bool last = step_ == end;
    const bool cadence = epochEnd && config_.checkpointEvery > 0 && epoch % config_.checkpointEvery == 0;
    if (writeFiles && (cadence || last)) {
      const fs::path path = fs::path(config_.outDir) / ("step-" + std::to_string(step_) + ".ckpt");
      const Checkpoint ck = checkpoint();
      saveCheckpoint(path, ck);
      saveCheckpoint(fs::path(config_.outDir) / "latest.ckpt", ck);
      kept.push_back(path);
      while (static_cast<int>(kept.size()) > config_.keepCheckpoints) {
        fs::remove(kept.front());
        kept.erase(kept.begin());
      }
    }
  }
  return step_ - begin;
}

Checkpoint Trainer::checkpoint() const {
  Checkpoint c = Checkpoint::capture(*model_, vocabulary_, &optimizer_);
  c.trainConfig = config_.serialize();
  c.step = step_;
  c.rngState = rng_.state();
  return c;
}

void Trainer::resume(const Checkpoint& c) {
  if (c.config() != config_.model) throw DataError("resume: checkpoint model config differs from the run's");
  if (c.vocab() != vocabulary_) throw DataError("resume: checkpoint vocabulary differs from the run's");
  c.restoreModel(*model_);
  c.restoreOptimizer(optimizer_);
  step_ = c.step;
  rng_.setState(c.rngState);
}

std::string Trainer::headerJson() const {
  nlohmann::json j;
  j["type"] = "header";
  std::vector<std::string> names;
  for (TaskKind k : tasks_) names.emplace_back(taskName(k));
  j["tasks"] = names;
  j["task_schedule"] = config_.taskSchedule;
  j["refine_k"] = config_.refine.iterations;
  j["steps_per_epoch"] = stepsPerEpoch_;
  j["parameters"] = model_->parameterCount();
  nlohmann::json cfg = nlohmann::json::object();
  for (const auto& [k, v] : parseKeyValues(config_.serialize(), "train config")) cfg[k] = v;
  j["config"] = cfg;
  return j.dump();
}

std::string Trainer::stepJson(const StepReport& r) {
  nlohmann::json j;
  j["type"] = "step";
  j["step"] = r.step;
  j["epoch"] = r.epoch;
  j["lr"] = r.lr;
  nlohmann::json losses = nlohmann::json::object();
  for (const auto& [k, v] : r.losses) losses[std::string(taskName(k))] = v;
  j["losses"] = losses;
  nlohmann::json dur = nlohmann::json::object();
  for (const auto& [k, v] : r.durationLosses) dur[std::string(taskName(k))] = v;
  j["duration_losses"] = dur;
  std::vector<std::string> skipped;
  for (TaskKind k : r.skipped) skipped.emplace_back(taskName(k));
  j["skipped"] = skipped;
  j["total"] = r.total;
  j["grad_norm"] = r.gradNorm;
  j["clamped_repeats"] = r.clampedRepeats;
  j["viterbi_fallbacks"] = r.viterbiFallbacks;
  j["wall_time"] = r.seconds;
  return j.dump();
}

std::unique_ptr<Model> trainDurationModel(const TrainConfig& config, const Vocabulary& vocabulary,
                                          std::span<const Example> paired, std::ostream* log) {
  config.validate();
  NAR_REQUIRE(!paired.empty(), "train-duration: no paired data");
  ModelConfig mc = config.model;
  mc.mmLayers = 0;
  NAR_REQUIRE(mc.vocabSize == vocabulary.size(), "train-duration: vocab_size does not match the vocabulary");
  auto model = std::make_unique<Model>(mc, config.seed);
  Adam adam(config.adam, model->parameters());
  const auto b = static_cast<size_t>(config.batchSize);
  const auto spe = static_cast<std::int64_t>((paired.size() + b - 1) / b);
  std::int64_t total = config.epochs * spe;
  if (config.maxSteps > 0) total = std::min(total, config.maxSteps);
  if (log) {
    nlohmann::json h;
    h["type"] = "header";
    h["tasks"] = std::vector<std::string>{"duration"};
    h["steps_per_epoch"] = spe;
    *log << h.dump() << "\n";
  }
  std::vector<int> perm;
  for (std::int64_t step = 0; step < total; ++step) {
    const std::int64_t epoch = step / spe;
    if (step % spe == 0) {
      Rng r(mixSeed(config.seed, static_cast<std::uint64_t>(epoch)));
      perm = r.sampleWithoutReplacement(static_cast<int>(paired.size()), static_cast<int>(paired.size()));
    }
    const size_t first = static_cast<size_t>(step % spe) * b;
    const size_t last = std::min(first + b, paired.size());
    model->zeroGrad();
    double loss = 0.0;
    const double weight = 1.0 / static_cast<double>(last - first);
    for (size_t i = first; i < last; ++i) {
      const Example& e = paired[static_cast<size_t>(perm[i])];
      NAR_REQUIRE(!e.repeats.empty(), "train-duration: example " + e.id + " has no repeats");
      Graph g(mc.precision, true, mixSeed(config.seed, static_cast<std::uint64_t>(step * 100003 + static_cast<std::int64_t>(i))));
      const auto tokens = addBlank(e.text);
      std::vector<int> targets(e.repeats.size());
      for (size_t t = 0; t < targets.size(); ++t) targets[t] = std::min(e.repeats[t], mc.maxRepeat);
      Var l = crossEntropy(model->durationLogits(g, model->encodeText(g, tokens, e.speaker)), targets);
      loss += l.value().get(0) * weight;
      checkFinite(loss, "duration (utterance " + e.id + ")");
      g.backward(scale(l, weight));
    }
    const double lr = lrAt(step, config, spe);
    const double norm = adam.step(lr);
    if (log) {
      nlohmann::json j;
      j["type"] = "step";
      j["step"] = step;
      j["epoch"] = epoch;
      j["lr"] = lr;
      j["losses"] = {{"duration", loss}};
      j["total"] = loss;
      j["grad_norm"] = norm;
      *log << j.dump() << "\n";
    }
  }
  return model;
}

double durationMae(const Model& model, std::span<const Example> examples) {
  double err = 0.0;
  std::int64_t count = 0;
  for (const auto& e : examples) {
    if (e.repeats.empty()) continue;
    Graph g(model.config().precision);
    const auto pred = model.predictRepeats(g, addBlank(e.text), e.speaker);
    for (size_t i = 0; i < pred.size(); ++i) err += std::abs(pred[i] - e.repeats[i]);
    count += static_cast<std::int64_t>(pred.size());
  }
  NAR_REQUIRE(count > 0, "duration_mae: no examples with repeats");
  return err / static_cast<double>(count);
}

int makePseudoAlignments(const Model& model, std::vector<Example>& examples) {
  int made = 0;
  for (auto& e : examples) {
    if (!e.hasText || !e.repeats.empty()) continue;
    Graph g(model.config().precision);
    e.repeats = model.predictRepeats(g, addBlank(e.text), e.speaker);
    if (e.text.empty() && e.repeats[0] == 0) e.repeats[0] = 1;
    ++made;
  }
  return made;
}

SttEvaluation evaluateStt(const Model& model, const Vocabulary& vocabulary,
                          std::span<const Example> examples, const RefineConfig& refine) {
  SttEvaluation out;
  for (const auto& e : examples) {
    NAR_REQUIRE(e.features && e.hasText, "evaluate_stt: example " + e.id + " is not paired");
    const auto result = refineStt(model, *e.features, e.speaker, refine);
    const std::string hyp = vocabulary.decode(result.text);
    const std::string ref = vocabulary.decode(e.text);
    out.characters += characterErrors(hyp, ref);
    out.words += wordErrors(hyp, ref);
  }
  return out;
}

double evaluateTtsL1(const Model& model, std::span<const Example> examples, const RefineConfig& refine) {
  double abs = 0.0;
  std::int64_t cells = 0;
  for (const auto& e : examples) {
    NAR_REQUIRE(e.features && e.hasText && !e.repeats.empty(),
                "evaluate_tts: example " + e.id + " needs features, text and repeats");
    const auto result = refineTts(model, e.text, e.speaker, refine, e.repeats);
    for (std::int64_t i = 0; i < result.mel.size(); ++i) abs += std::abs(result.mel.data()[i] - e.features->data()[i]);
    cells += result.mel.size();
  }
  NAR_REQUIRE(cells > 0, "evaluate_tts: no examples");
  return abs / static_cast<double>(cells);
}

void retainFreedMemory() {
#if defined(__GLIBC__)
  mallopt(M_MMAP_THRESHOLD, 256 << 20);
  mallopt(M_TRIM_THRESHOLD, 1 << 30);
#endif
}

}  // namespace nar
