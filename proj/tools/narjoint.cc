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

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "nar/audit.h"
#include "nar/checkpoint.h"
#include "nar/errors.h"
#include "nar/features.h"
#include "nar/manifest.h"
#include "nar/synth.h"
#include "nar/training.h"

namespace fs = std::filesystem;
using namespace nar;

namespace {

enum Exit { kOk = 0, kUsage = 1, kData = 2, kNumeric = 3 };

std::string kebab(std::string key) {
  for (char& c : key) {
    if (c == '_') c = '-';
  }
  return key;
}

std::string readText(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read " + path.string());
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

// One --kebab-case option per config key. Values are kept as text and
// applied after the config file, so flags win.
class KeyFlags {
 public:
  KeyFlags(CLI::App* app, const std::vector<std::string>& keys, const std::string& group) {
    for (const auto& k : keys) {
      values_[k];
      options_[k] = app->add_option("--" + kebab(k), values_[k], "config key " + k)->group(group);
    }
  }

  template <typename Config>
  void apply(Config& c) const {
    for (const auto& [k, opt] : options_) {
      if (opt->count() > 0) c.set(k, values_.at(k));
    }
  }

 private:
  std::map<std::string, std::string> values_;
  std::map<std::string, CLI::Option*> options_;
};

const std::vector<std::string> kRefineKeys = {"refine_k", "refine_threshold_start", "refine_threshold_end",
                                              "refine_repredict_all"};

TrainConfig loadTrainConfig(const std::string& file, const KeyFlags& flags, const std::string& base = "") {
  TrainConfig c = base.empty() ? TrainConfig{} : TrainConfig::parse(base);
  if (!file.empty()) {
    // A file replaces the base wholesale; flags then override single keys.
    c = TrainConfig::parse(readText(file));
  }
  flags.apply(c);
  c.validate();
  return c;
}

Vocabulary corpusVocabulary(const TrainConfig& c) {
  NAR_REQUIRE(!c.dataDir.empty(), "data_dir is not set (use --data-dir or a config file)");
  return Vocabulary::load(fs::path(c.dataDir) / CorpusFiles::kVocabulary);
}

struct LoadedModel {
  Checkpoint checkpoint;
  std::unique_ptr<Model> model;
  Vocabulary vocab;
};

LoadedModel loadModel(const std::string& path) {
  LoadedModel m{loadCheckpoint(path), nullptr, {}};
  m.model = std::make_unique<Model>(m.checkpoint.config());
  m.checkpoint.restoreModel(*m.model);
  m.vocab = m.checkpoint.vocab();
  return m;
}

// Refinement settings from flags, defaulting to a single pass.
RefineConfig refineFromFlags(const KeyFlags& flags) {
  TrainConfig c;
  c.refine = RefineConfig{};
  flags.apply(c);
  c.refine.validate();
  return c.refine;
}

std::ostream& openOutput(const std::string& path, std::ofstream& file) {
  if (path.empty() || path == "-") return std::cout;
  file.open(path);
  if (!file) throw DataError("cannot write " + path);
  return file;
}

int runGradAuditCommand(int seeds) {
  const auto results = runGradAudit(seeds, &std::cout);
  double worst = 0.0;
  std::string where;
  for (const auto& r : results) {
    if (r.worst >= worst) {
      worst = r.worst;
      where = r.name + " (" + r.where + ")";
    }
  }
  std::cout << "cases=" << results.size() << " max_rel_err=" << worst << " at " << where << "\n";
  if (worst >= 1e-4) {
    std::cerr << "grad-audit: relative error " << worst << " >= 1e-4 in " << where << "\n";
    return kNumeric;
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  nar::retainFreedMemory();
  CLI::App app{"Joint speech/text masked-prediction model on a synthetic corpus"};
  app.require_subcommand(1);

  // synth-data
  auto* synth = app.add_subcommand("synth-data", "Generate the synthetic corpus");
  std::string synthOut, synthConfigFile;
  synth->add_option("--out", synthOut, "output directory")->required();
  synth->add_option("--config", synthConfigFile, "synth config file (key=value)");
  KeyFlags synthFlags(synth, SynthConfig{}.keys(), "Synth config");

  // train-duration
  auto* dur = app.add_subcommand("train-duration", "Train the bootstrap duration model on paired data");
  std::string durConfigFile, durOut;
  dur->add_option("--config", durConfigFile, "train config file (key=value)");
  dur->add_option("--output", durOut, "checkpoint path (default <out_dir>/duration.ckpt)");
  KeyFlags durFlags(dur, TrainConfig{}.keys(), "Train config");

  // train
  auto* train = app.add_subcommand("train", "Joint multi-task training");
  std::string trainConfigFile, resumePath;
  train->add_option("--config", trainConfigFile, "train config file (key=value)");
  train->add_option("--resume", resumePath, "checkpoint to continue from");
  KeyFlags trainFlags(train, TrainConfig{}.keys(), "Train config");

  // decode-stt
  auto* decode = app.add_subcommand("decode-stt", "Transcribe the speech of a manifest");
  std::string decodeCkpt, decodeManifest, decodeOut, decodeTrace;
  decode->add_option("--checkpoint", decodeCkpt, "model checkpoint")->required();
  decode->add_option("--manifest", decodeManifest, "manifest with features")->required();
  decode->add_option("--output", decodeOut, "hypotheses as JSON lines (default stdout)");
  decode->add_option("--trace", decodeTrace, "per-pass refinement trace (JSON lines)");
  KeyFlags decodeFlags(decode, kRefineKeys, "Refinement");

  // synth-tts
  auto* tts = app.add_subcommand("synth-tts", "Synthesize features for the text of a manifest");
  std::string ttsCkpt, ttsManifest, ttsOut, ttsTrace;
  bool ttsTeacher = false;
  tts->add_option("--checkpoint", ttsCkpt, "model checkpoint")->required();
  tts->add_option("--manifest", ttsManifest, "manifest with text")->required();
  tts->add_option("--out", ttsOut, "output directory for features and manifest")->required();
  tts->add_option("--trace", ttsTrace, "per-pass refinement trace (JSON lines)");
  tts->add_flag("--teacher-forced", ttsTeacher, "use the manifest repeats instead of predicted ones");
  KeyFlags ttsFlags(tts, kRefineKeys, "Refinement");

  // eval
  auto* eval = app.add_subcommand("eval", "CER/WER and mel L1 on a paired manifest");
  std::string evalCkpt, evalManifest, evalJson;
  int evalLimit = 0;
  eval->add_option("--checkpoint", evalCkpt, "model checkpoint")->required();
  eval->add_option("--manifest", evalManifest, "paired manifest")->required();
  eval->add_option("--limit", evalLimit, "first N utterances only (0 = all)");
  eval->add_option("--json", evalJson, "also write the results as one JSON object");
  KeyFlags evalFlags(eval, kRefineKeys, "Refinement");

  // grad-audit
  auto* audit = app.add_subcommand("grad-audit", "Finite-difference audit of every gradient");
  int auditSeeds = 10;
  audit->add_option("--seeds", auditSeeds, "seeds per case")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*synth) {
      SynthConfig c = synthConfigFile.empty() ? SynthConfig{} : SynthConfig::parse(readText(synthConfigFile));
      synthFlags.apply(c);
      c.validate();
      genCorpus(c, synthOut);
      std::cout << "wrote corpus to " << synthOut << " (" << c.trainSize << " train, " << c.devSize
                << " dev, " << c.testSize << " test)\n";
      return kOk;
    }

    if (*dur) {
      const TrainConfig c = loadTrainConfig(durConfigFile, durFlags);
      const Vocabulary vocab = corpusVocabulary(c);
      const TrainingData data = loadTrainingData(c, vocab);
      NAR_REQUIRE(!data.paired.empty(), "train-duration: no paired data under " + c.dataDir);
      if (!c.outDir.empty()) fs::create_directories(c.outDir);
      std::ofstream log;
      if (!c.outDir.empty()) log.open(fs::path(c.outDir) / "duration_metrics.jsonl");
      auto model = trainDurationModel(c, vocab, data.paired, log.is_open() ? &log : nullptr);
      const fs::path out = durOut.empty() ? fs::path(c.outDir) / "duration.ckpt" : fs::path(durOut);
      Checkpoint ck = Checkpoint::capture(*model, vocab);
      ck.trainConfig = c.serialize();
      saveCheckpoint(out, ck);
      nlohmann::json j;
      j["checkpoint"] = out.string();
      j["train_duration_mae"] = durationMae(*model, data.paired);
      if (!data.dev.empty()) j["dev_duration_mae"] = durationMae(*model, data.dev);
      std::cout << j.dump() << "\n";
      return kOk;
    }

    if (*train) {
      std::optional<Checkpoint> resume;
      if (!resumePath.empty()) resume = loadCheckpoint(resumePath);
      const TrainConfig c = loadTrainConfig(trainConfigFile, trainFlags, resume ? resume->trainConfig : "");
      const Vocabulary vocab = corpusVocabulary(c);
      Trainer trainer(c, vocab, loadTrainingData(c, vocab));
      if (resume) trainer.resume(*resume);
      std::cerr << "training " << taskListString(c.activeTasks()) << ": " << trainer.model().parameterCount()
                << " parameters, " << trainer.stepsPerEpoch() << " steps/epoch, " << trainer.totalSteps()
                << " steps\n";
      const auto steps = trainer.train();
      std::cout << "trained " << steps << " steps; checkpoints in " << c.outDir << "\n";
      return kOk;
    }

    if (*decode) {
      const RefineConfig refine = refineFromFlags(decodeFlags);
      const LoadedModel m = loadModel(decodeCkpt);
      const Dataset ds = Dataset::load(decodeManifest, ManifestKind::kAny, m.model->config().melBins);
      std::ofstream outFile, traceFile;
      std::ostream& out = openOutput(decodeOut, outFile);
      if (!decodeTrace.empty()) {
        traceFile.open(decodeTrace);
        if (!traceFile) throw DataError("cannot write " + decodeTrace);
      }
      for (size_t i = 0; i < ds.size(); ++i) {
        const auto& r = ds.record(i);
        if (!r.features) throw DataError(decodeManifest + ": record " + r.id + " has no features");
        const SttResult res = refineStt(*m.model, ds.features(i), r.speaker, refine);
        nlohmann::json j;
        j["id"] = r.id;
        j["text"] = m.vocab.decode(res.text);
        out << j.dump() << "\n";
        if (traceFile.is_open()) traceFile << sttTraceJsonLines(res, r.id);
      }
      return kOk;
    }

    if (*tts) {
      const RefineConfig refine = refineFromFlags(ttsFlags);
      const LoadedModel m = loadModel(ttsCkpt);
      const Dataset ds = Dataset::load(ttsManifest, ManifestKind::kAny, m.model->config().melBins);
      fs::create_directories(fs::path(ttsOut) / "features");
      std::ofstream traceFile;
      if (!ttsTrace.empty()) {
        traceFile.open(ttsTrace);
        if (!traceFile) throw DataError("cannot write " + ttsTrace);
      }
      std::vector<ManifestRecord> written;
      for (const auto& r : ds.records()) {
        if (!r.text) throw DataError(ttsManifest + ": record " + r.id + " has no text");
        std::vector<int> repeats;
        if (ttsTeacher) {
          if (!r.repeats) throw DataError(ttsManifest + ": record " + r.id + " has no repeats");
          repeats = *r.repeats;
        }
        const TtsResult res = refineTts(*m.model, m.vocab.encode(*r.text), r.speaker, refine, repeats);
        const std::string rel = "features/" + r.id + ".feat";
        writeFeatures(fs::path(ttsOut) / rel, res.mel);
        written.push_back({r.id, rel, r.text, r.speaker, res.repeats, res.mel.rows()});
        if (traceFile.is_open()) traceFile << ttsTraceJsonLines(res, r.id);
      }
      writeManifest(fs::path(ttsOut) / "manifest.jsonl", written);
      std::cout << "wrote " << written.size() << " utterances to " << ttsOut << "\n";
      return kOk;
    }

    if (*eval) {
      const RefineConfig refine = refineFromFlags(evalFlags);
      const LoadedModel m = loadModel(evalCkpt);
      const Dataset ds = Dataset::load(evalManifest, ManifestKind::kPaired, m.model->config().melBins);
      std::vector<Example> ex = examplesFromDataset(ds, m.vocab);
      if (evalLimit > 0 && ex.size() > static_cast<size_t>(evalLimit)) ex.resize(static_cast<size_t>(evalLimit));
      const SttEvaluation stt = evaluateStt(*m.model, m.vocab, ex, refine);
      bool haveRepeats = !ex.empty();
      for (const auto& e : ex) haveRepeats &= !e.repeats.empty();
      const double l1 = haveRepeats ? evaluateTtsL1(*m.model, ex, refine) : -1.0;
      std::printf("%-10s %8s %12s\n", "metric", "value", "errors/ref");
      std::printf("%-10s %8.4f %6lld/%-6lld\n", "cer", stt.characters.rate(),
                  static_cast<long long>(stt.characters.distance),
                  static_cast<long long>(stt.characters.referenceLength));
      std::printf("%-10s %8.4f %6lld/%-6lld\n", "wer", stt.words.rate(), static_cast<long long>(stt.words.distance),
                  static_cast<long long>(stt.words.referenceLength));
      if (haveRepeats) std::printf("%-10s %8.4f\n", "mel_l1", l1);
      std::printf("utterances=%zu refine_k=%d\n", ex.size(), refine.iterations);
      if (!evalJson.empty()) {
        nlohmann::json j;
        j["utterances"] = ex.size();
        j["refine_k"] = refine.iterations;
        j["cer"] = stt.characters.rate();
        j["wer"] = stt.words.rate();
        if (haveRepeats) j["mel_l1"] = l1;
        std::ofstream(evalJson) << j.dump() << "\n";
      }
      return kOk;
    }

    if (*audit) return runGradAuditCommand(auditSeeds);
  } catch (const ContractError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return kNumeric;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kData;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kData;
  }
  return kUsage;
}
