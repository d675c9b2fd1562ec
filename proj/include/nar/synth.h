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
#include <filesystem>
#include <string>
#include <vector>

#include "nar/alignment.h"
#include "nar/matrix.h"
#include "nar/vocabulary.h"

namespace nar {

// Synthetic "spectro-glyph" speech. Every letter has a fixed random F-dim
// prototype and is held for U[min_duration, max_duration] frames. Space is
// silence for U[min_silence, max_silence] frames, as are the leading and
// trailing blanks. Other blanks get no frames, except the one between two
// equal letters, which gets one silence frame. Each frame adds the speaker
// offset and N(0, noise^2) noise; silence is offset plus noise.
struct SynthConfig {
  int letters = 26;
  int melBins = 16;
  std::uint64_t prototypeSeed = 7;
  int minDuration = 2;
  int maxDuration = 5;
  int minSilence = 1;
  int maxSilence = 3;
  double noise = 0.05;
  int speakers = 3;
  double speakerOffsetScale = 0.3;
  int trainSize = 2000;
  int pairedSize = 500;
  int unpairedSpeechSize = 750;  // the rest of train is unpaired text
  int devSize = 200;
  int testSize = 200;
  int minWords = 3;
  int maxWords = 8;
  int lexiconSize = 200;
  int minWordLength = 2;
  int maxWordLength = 5;
  std::uint64_t seed = 1;

  void validate() const;
  std::string serialize() const;
  static SynthConfig parse(const std::string& text);
  void set(const std::string& key, const std::string& value);
  std::vector<std::string> keys() const;

  // Space followed by the first `letters` capitals.
  Vocabulary vocabulary() const;
  // Mean absolute value of the noise: the L1 of a perfect predictor.
  double noiseFloor() const;
};

struct Utterance {
  std::string text;
  int speaker = 0;
  CtcAlignment alignment;  // exact ground truth
  Matrix features;
};

Utterance renderUtterance(const std::string& text, int speaker, const SynthConfig& config,
                          std::uint64_t seed);

// The clean (noise-free) frame for a token id; silence for blank and space.
std::vector<float> prototypeFrame(int token, int speaker, const SynthConfig& config);

struct CorpusFiles {
  static constexpr const char* kPaired = "train_paired.jsonl";
  static constexpr const char* kUnpairedSpeech = "train_unpaired_speech.jsonl";
  static constexpr const char* kUnpairedText = "train_unpaired_text.jsonl";
  static constexpr const char* kDev = "dev.jsonl";
  static constexpr const char* kTest = "test.jsonl";
  static constexpr const char* kVocabulary = "vocab.txt";
  static constexpr const char* kConfig = "synth.cfg";
};

// Writes features/, the five manifests, vocab.txt and synth.cfg under
// `dir`. Unpaired speech drops transcripts and repeats; unpaired text drops
// features and repeats.
void genCorpus(const SynthConfig& config, const std::filesystem::path& dir);

}  // namespace nar
