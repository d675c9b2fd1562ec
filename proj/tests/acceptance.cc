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

// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
// criterion fails. Criteria 5, 6 and 8 share one trained model pair.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "nar/alignment.h"
#include "nar/audit.h"
#include "nar/checkpoint.h"
#include "nar/ctc.h"
#include "nar/errors.h"
#include "nar/masking.h"
#include "nar/random.h"
#include "nar/refine.h"
#include "nar/synth.h"
#include "nar/training.h"
#include "oracles.h"

namespace fs = std::filesystem;
using namespace nar;

namespace {

using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = false;
  std::string detail;
};

double secondsSince(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

// --- 1: CTC against exhaustive enumeration --------------------------------

Outcome ctcOracle() {
  const auto start = Clock::now();
  Rng rng(1);
  int instances = 0;
  double worst = 0.0;
  std::vector<std::vector<int>> targets = {{}};
  for (int len = 1; len <= 3; ++len) {
    std::vector<int> t(static_cast<size_t>(len), 1);
    while (true) {
      targets.push_back(t);
      int i = 0;
      while (i < len && ++t[static_cast<size_t>(i)] == 3) t[static_cast<size_t>(i++)] = 1;
      if (i == len) break;
    }
  }
  for (int T = 1; T <= 6; ++T) {
    for (const auto& target : targets) {
      if (ctcMinFrames(target) > T) continue;
      for (int draw = 0; draw < 5; ++draw) {
        std::vector<std::vector<double>> logits(static_cast<size_t>(T), std::vector<double>(3));
        std::vector<double> flat;
        for (auto& row : logits) {
          for (double& v : row) {
            v = rng.normal(0.0, 2.0);
            flat.push_back(v);
          }
        }
        const double dp = ctcLoss(Tensor::fromValues({T, 3}, flat, Precision::kF64), target).loss;
        const double brute = oracle::ctcLossByEnumeration(logits, target);
        worst = std::max(worst, std::abs(dp - brute));
        ++instances;
      }
    }
  }
  const double secs = secondsSince(start);
  return {worst <= 1e-9 && secs < 60.0,
          std::to_string(instances) + " instances, max |dp - enumeration| = " + fmt("%.3g", worst) + ", " +
              fmt("%.1f", secs) + " s"};
}

// --- 2: gradient audit ----------------------------------------------------

Outcome gradAudit() {
  const auto start = Clock::now();
  const auto results = runGradAudit(10);
  double worst = 0.0;
  std::string where;
  for (const auto& r : results) {
    if (r.worst >= worst) {
      worst = r.worst;
      where = r.name;
    }
  }
  const double secs = secondsSince(start);
  return {worst < 1e-4 && secs < 300.0,
          std::to_string(results.size()) + " cases x 10 seeds, max rel err " + fmt("%.3g", worst) + " (" + where +
              "), " + fmt("%.1f", secs) + " s"};
}

// --- 3: alignment algebra -------------------------------------------------

Outcome alignmentAlgebra() {
  const Vocabulary v = Vocabulary::defaultAlphabet();
  Rng rng(3);
  int failures = 0;
  const int trials = 100000;
  for (int trial = 0; trial < trials; ++trial) {
    std::vector<int> text;
    const int n = static_cast<int>(rng.uniformInt(0, 10));
    for (int i = 0; i < n; ++i) text.push_back(static_cast<int>(rng.uniformInt(1, 4)));
    CtcAlignment a{addBlank(text), {}};
    for (size_t i = 0; i < a.tokens.size(); ++i) {
      int r = static_cast<int>(i % 2 ? rng.uniformInt(1, 4) : rng.uniformInt(0, 3));
      if (i % 2 == 0 && i >= 2 && i + 1 < a.tokens.size() && a.tokens[i - 1] == a.tokens[i + 1]) r = std::max(r, 1);
      a.repeats.push_back(r);
    }
    if (a.frames() == 0) a.repeats[0] = 1;
    const auto path = upsampleByRepeats(a.tokens, a.repeats);
    const bool ok = collapsePath(path) == text && oracle::collapse(path) == text &&
                    repeatsFromPath(path, text) == a &&
                    upsampleByRepeats(a.tokens, repeatsFromPath(path, text).repeats) == path;
    failures += !ok;
  }
  // Worked example.
  const auto cat = v.encode("CAT");
  const std::string blanked = v.render(addBlank(cat));
  const std::vector<int> repeats{1, 2, 0, 1, 1, 1, 1};
  const std::string upsampled = v.render(upsampleByRepeats(addBlank(cat), repeats));
  MaskedTokens chars{{cat[0], v.maskId(), cat[2]}, {0, 1, 0}, MaskSchedule::kText};
  const std::string masked = v.render(upsampleByRepeats(propagateBlankMasks(chars, v.maskId()).ids, repeats));
  const std::string back = v.decode(collapsePath(upsampleByRepeats(addBlank(cat), repeats)));
  const bool worked = blanked == "_C_A_T_" && upsampled == "_CCA_T_" && masked == "_CC<mask><mask>T_" &&
                      back == "CAT";
  return {failures == 0 && worked, std::to_string(trials) + " round trips, " + std::to_string(failures) +
                                       " failures; CAT -> " + blanked + " -> " + upsampled + " -> " + masked};
}

// --- 4: masking statistics ------------------------------------------------

Outcome maskingStatistics() {
  Rng rng(4);
  const int maskId = 28;
  int badCount = 0;
  for (int trial = 0; trial < 2000; ++trial) {
    std::vector<int> text;
    const int n = static_cast<int>(rng.uniformInt(0, 30));
    for (int i = 0; i < n; ++i) text.push_back(static_cast<int>(rng.uniformInt(1, 27)));
    const double p = rng.uniform();
    const auto m = maskText(text, p, rng.next(), maskId);
    int masked = 0;
    for (size_t i = 0; i < text.size(); ++i) masked += m.ids[i] == maskId;
    badCount += masked != static_cast<int>(std::floor(p * n + 0.5)) || m.maskedCount() != masked;
    const auto tokens = propagateBlankMasks(m, maskId);
    badCount += tokens.ids[0] != 0;
  }

  const int T = 100, M = 10, trials = 10000;
  const auto moments = oracle::spanCoverageMoments(T, roundedCount(0.0625, T), M);
  const Matrix ones(T, 1, 1.0f);
  double total = 0;
  for (int s = 0; s < trials; ++s) {
    total += maskSpeechSpans(ones, 0.0625, M, mixSeed(44, static_cast<std::uint64_t>(s))).maskedFrames();
  }
  const double mc = total / trials;
  const double sigma = std::sqrt(moments.variance / trials);
  const bool coverage = std::abs(mc - moments.mean) <= 3 * sigma;

  int cornerBad = 0;
  for (int trial = 0; trial < 500; ++trial) {
    const int t = static_cast<int>(rng.uniformInt(1, 60)), f = static_cast<int>(rng.uniformInt(1, 20));
    const double p = rng.uniform();
    const auto c = maskSpeechCorner(Matrix(t, f, 1.0f), p);
    std::int64_t zeros = 0;
    for (std::int64_t i = 0; i < c.frames.size(); ++i) zeros += c.frames.data()[i] == 0.0f;
    // masked fraction == 1 - t0 f0 / (T F), compared as integers.
    cornerBad += zeros != static_cast<std::int64_t>(t) * f - c.keptFrames * c.keptBins;
  }
  return {badCount == 0 && coverage && cornerBad == 0,
          "Mask_Y violations " + std::to_string(badCount) + "; span coverage MC " + fmt("%.4f", mc) +
              " vs analytic " + fmt("%.4f", moments.mean) + " (3 sigma = " + fmt("%.4f", 3 * sigma) +
              "); corner mismatches " + std::to_string(cornerBad)};
}

// --- 5, 6, 8: trained models ----------------------------------------------

struct Trained {
  Vocabulary vocab;
  TrainingData data;
  std::vector<Example> test;
  SynthConfig synth;
  std::unique_ptr<Trainer> joint;
  std::unique_ptr<Trainer> baseline;
  std::vector<std::string> jointLog;  // step records without wall time
  double durationMae = 0.0;
  double seconds = 0.0;  // corpus, duration model and joint training
};

std::string stripWallTime(const StepReport& r) {
  auto j = nlohmann::json::parse(Trainer::stepJson(r));
  j.erase("wall_time");
  return j.dump();
}

std::unique_ptr<Trained> train(const fs::path& work, const fs::path& configPath) {
  auto out = std::make_unique<Trained>();
  const auto start = Clock::now();
  const fs::path data = work / "corpus";
  genCorpus(out->synth, data);
  out->vocab = Vocabulary::load(data / CorpusFiles::kVocabulary);

  std::ifstream in(configPath);
  if (!in) throw DataError("cannot read " + configPath.string());
  std::stringstream text;
  text << in.rdbuf();
  TrainConfig base = TrainConfig::parse(text.str());
  base.dataDir = data.string();
  base.outDir = "";

  // Bootstrap duration model for the pseudo-alignments of unpaired text.
  TrainConfig durCfg = base;
  durCfg.epochs = base.epochs * 2;
  auto dataNoPseudo = loadTrainingData(base, out->vocab);
  auto duration = trainDurationModel(durCfg, out->vocab, dataNoPseudo.paired);
  out->durationMae = durationMae(*duration, dataNoPseudo.dev);
  const fs::path durCk = work / "duration.ckpt";
  saveCheckpoint(durCk, Checkpoint::capture(*duration, out->vocab));
  std::cerr << "  duration model: dev MAE " << out->durationMae << " (" << secondsSince(start) << " s)\n";

  TrainConfig jointCfg = base;
  jointCfg.tasks = "all";
  jointCfg.durationCheckpoint = durCk.string();
  out->joint = std::make_unique<Trainer>(jointCfg, out->vocab, loadTrainingData(jointCfg, out->vocab));
  while (out->joint->currentStep() < out->joint->totalSteps()) {
    const StepReport r = out->joint->step();
    if (out->jointLog.size() < 50) out->jointLog.push_back(stripWallTime(r));
    if (r.step % out->joint->stepsPerEpoch() == 0) {
      std::cerr << "  joint epoch " << r.epoch << " total " << r.total << " (" << secondsSince(start) << " s)\n";
    }
  }

  out->seconds = secondsSince(start);

  TrainConfig sttCfg = base;
  sttCfg.tasks = "stt";
  out->baseline = std::make_unique<Trainer>(sttCfg, out->vocab, loadTrainingData(sttCfg, out->vocab));
  while (out->baseline->currentStep() < out->baseline->totalSteps()) out->baseline->step();
  std::cerr << "  baseline done (" << secondsSince(start) << " s)\n";

  out->data = out->joint->data();
  out->test = examplesFromDataset(Dataset::load(data / CorpusFiles::kTest, ManifestKind::kPaired, base.model.melBins),
                                  out->vocab);
  return out;
}

RefineConfig refineK(int k) {
  RefineConfig c;
  c.iterations = k;
  return c;
}

Outcome endToEnd(const Trained& t) {
  const auto& dev = t.data.dev;
  const double joint = evaluateStt(t.joint->model(), t.vocab, dev, refineK(1)).characters.rate();
  const double base = evaluateStt(t.baseline->model(), t.vocab, dev, refineK(1)).characters.rate();
  const double l1 = evaluateTtsL1(t.joint->model(), t.test, refineK(1));
  const double floor = t.synth.noiseFloor();
  const int epochs = t.joint->config().epochs;
  const bool budget = epochs <= 20 && t.seconds <= 1800.0;
  return {joint <= base + 0.02 && l1 <= 1.5 * floor && budget,
          "dev CER joint " + fmt("%.4f", joint) + " vs STT-only " + fmt("%.4f", base) + " (allowed +0.02); " +
              "test mel L1 " + fmt("%.4f", l1) + " vs 1.5 x floor " + fmt("%.4f", 1.5 * floor) + "; " +
              std::to_string(epochs) + " epochs, joint pipeline " + fmt("%.0f", t.seconds) + " s"};
}

Outcome refinementTrend(const Trained& t) {
  const auto& m = t.joint->model();
  const auto& dev = t.data.dev;
  const double c1 = evaluateStt(m, t.vocab, dev, refineK(1)).characters.rate();
  const double c2 = evaluateStt(m, t.vocab, dev, refineK(2)).characters.rate();
  const double c4 = evaluateStt(m, t.vocab, dev, refineK(4)).characters.rate();
  const bool stt = c4 <= c1 + 0.001 && c2 <= c1 + 0.002 && c4 <= c2 + 0.002;
  // Scored on the cells every K = 4 pass re-predicts (outside the corner
  // kept on the last pass), for the K = 1 output too.
  double a1 = 0, a4 = 0;
  std::int64_t cells = 0;
  for (const auto& e : t.test) {
    const TtsResult r1 = refineTts(m, e.text, e.speaker, refineK(1), e.repeats);
    const TtsResult r4 = refineTts(m, e.text, e.speaker, refineK(4), e.repeats);
    const auto T = r1.mel.rows(), F = r1.mel.cols();
    const auto t0 = 3 * T / 4, f0 = 3 * F / 4;
    for (std::int64_t tt = 0; tt < T; ++tt) {
      for (std::int64_t f = 0; f < F; ++f) {
        if (tt < t0 && f < f0) continue;
        a1 += std::abs(r1.mel(tt, f) - (*e.features)(tt, f));
        a4 += std::abs(r4.mel(tt, f) - (*e.features)(tt, f));
        ++cells;
      }
    }
  }
  const double singleRegion = a1 / static_cast<double>(cells);
  const double refinedRegion = a4 / static_cast<double>(cells);
  const bool tts = refinedRegion <= 1.05 * singleRegion;
  return {stt && tts, "dev CER K=1 " + fmt("%.4f", c1) + ", K=2 " + fmt("%.4f", c2) + ", K=4 " + fmt("%.4f", c4) +
                          "; masked-region mel L1 K=4 " + fmt("%.4f", refinedRegion) + " vs K=1 " +
                          fmt("%.4f", singleRegion)};
}

// --- 7: K = 1 equals the plain pass ----------------------------------------

Outcome singlePassEquivalence(const Model& m, std::span<const Example> examples) {
  int mismatches = 0;
  for (const auto& e : examples) {
    const SttResult r = refineStt(m, *e.features, e.speaker, refineK(1));
    const Hypothesis h = decodeStt(m, *e.features);
    mismatches += r.hypothesis.path != h.path || r.hypothesis.frameProbs != h.frameProbs || r.text != h.text;
    const TtsResult a = refineTts(m, e.text, e.speaker, refineK(1));
    const TtsResult b = synthesizeTts(m, e.text, e.speaker);
    mismatches += !(a.mel == b.mel) || a.repeats != b.repeats;
  }
  return {mismatches == 0, std::to_string(examples.size()) + " utterances, " + std::to_string(mismatches) +
                               " STT/TTS mismatches between K=1 and the plain pass"};
}

// --- 8: determinism ---------------------------------------------------------

Outcome determinism(const Trained& t) {
  Trainer again(t.joint->config(), t.vocab, loadTrainingData(t.joint->config(), t.vocab));
  int differing = 0;
  size_t compared = 0;
  for (const auto& expected : t.jointLog) {
    differing += stripWallTime(again.step()) != expected;
    ++compared;
  }
  return {compared == 50 && differing == 0,
          std::to_string(compared) + " steps of the joint run replayed, " + std::to_string(differing) + " differ"};
}

// --- 9: ablation rows through the CLI ---------------------------------------

Outcome ablationSurface(const fs::path& cli, const fs::path& work) {
  if (cli.empty() || !fs::exists(cli)) return {false, "CLI binary not found: " + cli.string()};
  const fs::path dir = work / "ablation";
  fs::remove_all(dir);
  fs::create_directories(dir);
  auto run = [](const std::string& cmd) { return std::system((cmd + " > /dev/null 2>&1").c_str()); };
  const std::string c = "\"" + cli.string() + "\"";
  const std::string data = (dir / "data").string();
  if (run(c + " synth-data --out " + data +
          " --train-size 40 --paired-size 12 --unpaired-speech-size 12 --dev-size 4 --test-size 2") != 0) {
    return {false, "synth-data failed"};
  }
  const std::string small =
      " --data-dir " + data + " --d-model 16 --mm-layers 1 --peripheral-layers 1 --batch-size 4 --epochs 2"
      " --warmup-epochs 1 --max-steps 1";
  if (run(c + " train-duration" + small + " --out-dir " + (dir / "dur").string()) != 0) {
    return {false, "train-duration failed"};
  }
  const std::string dur = " --duration-checkpoint " + (dir / "dur" / "duration.ckpt").string();
  struct Row {
    std::string flags;
    std::vector<std::string> tasks;
    int refineK;
  };
  const std::vector<Row> rows = {
      {"--tasks stt", {"stt"}, 1},
      {"--tasks tts", {"tts"}, 1},
      {"--tasks stt,tts", {"stt", "tts"}, 1},
      {"--tasks stt,tts,t2t,s2s" + dur, {"stt", "tts", "t2t", "s2s"}, 1},
      {"--tasks all" + dur, {"stt", "tts", "t2t", "s2s", "st2t", "st2s"}, 1},
      {"--tasks all --refine-k 4" + dur, {"stt", "tts", "t2t", "s2s", "st2t", "st2s"}, 4},
  };
  std::string detail;
  bool ok = true;
  for (size_t i = 0; i < rows.size(); ++i) {
    const fs::path out = dir / ("row" + std::to_string(i + 1));
    const int rc = run(c + " train" + small + " " + rows[i].flags + " --out-dir " + out.string());
    bool rowOk = rc == 0;
    if (rowOk) {
      std::ifstream log(out / "metrics.jsonl");
      std::string line;
      rowOk = static_cast<bool>(std::getline(log, line));
      if (rowOk) {
        const auto h = nlohmann::json::parse(line);
        rowOk = h["type"] == "header" && h["tasks"].get<std::vector<std::string>>() == rows[i].tasks &&
                h["refine_k"].get<int>() == rows[i].refineK;
      }
    }
    ok &= rowOk;
    detail += "(" + std::to_string(i + 1) + ")" + (rowOk ? "ok " : "BAD ");
  }
  return {ok, "rows " + detail + "via flags only"};
}

}  // namespace

int main(int argc, char** argv) {
  nar::retainFreedMemory();
  CLI::App app{"Acceptance criteria"};
  std::string cli, work = "acceptance_work", config;
  std::vector<int> only;
  app.add_option("--cli", cli, "path to the narjoint binary (criterion 9)");
  app.add_option("--work-dir", work, "scratch directory");
  app.add_option("--config", config, "training config for criteria 5, 6 and 8")->required();
  app.add_option("--only", only, "run only these criteria")->delimiter(',');
  CLI11_PARSE(app, argc, argv);

  auto wanted = [&](int n) { return only.empty() || std::find(only.begin(), only.end(), n) != only.end(); };
  fs::create_directories(work);
  int failed = 0;
  auto report = [&](int n, const std::string& name, const std::function<Outcome()>& run) {
    if (!wanted(n)) return;
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::cout << "criterion " << n << " [" << name << "]: " << (o.pass ? "PASS" : "FAIL") << " - " << o.detail
              << std::endl;
  };

  report(1, "ctc oracle", ctcOracle);
  report(2, "gradient audit", gradAudit);
  report(3, "alignment algebra", alignmentAlgebra);
  report(4, "masking statistics", maskingStatistics);

  std::unique_ptr<Trained> trained;
  std::string trainError;
  if (wanted(5) || wanted(6) || wanted(7) || wanted(8)) {
    try {
      trained = train(work, config);
    } catch (const std::exception& e) {
      trainError = e.what();
    }
  }
  auto needTrained = [&](const std::function<Outcome(const Trained&)>& f) {
    return [&, f]() -> Outcome {
      if (!trained) return {false, "training failed: " + trainError};
      return f(*trained);
    };
  };
  report(5, "end-to-end training", needTrained(endToEnd));
  report(6, "refinement trend", needTrained(refinementTrend));
  report(7, "single-pass equivalence", needTrained([](const Trained& t) {
           return singlePassEquivalence(t.joint->model(), t.data.dev);
         }));
  report(8, "determinism", needTrained(determinism));
  report(9, "ablation surface", [&] { return ablationSurface(cli, work); });

  std::cout << (failed == 0 ? "all criteria passed" : std::to_string(failed) + " criteria failed") << std::endl;
  return failed == 0 ? 0 : 1;
}
