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

#include "nar/synth.h"

#include <cmath>
#include <fstream>
#include <numbers>
#include <set>

#include "nar/errors.h"
#include "nar/features.h"
#include "nar/key_values.h"
#include "nar/manifest.h"
#include "nar/random.h"

namespace nar {
namespace {

KeyValueBinder binder(SynthConfig& c) {
  KeyValueBinder b("synth config");
  b.bind("letters", c.letters);
  b.bind("mel_bins", c.melBins);
  b.bind("prototype_seed", c.prototypeSeed);
  b.bind("min_duration", c.minDuration);
  b.bind("max_duration", c.maxDuration);
  b.bind("min_silence", c.minSilence);
  b.bind("max_silence", c.maxSilence);
  b.bind("noise", c.noise);
  b.bind("speakers", c.speakers);
  b.bind("speaker_offset_scale", c.speakerOffsetScale);
  b.bind("train_size", c.trainSize);
  b.bind("paired_size", c.pairedSize);
  b.bind("unpaired_speech_size", c.unpairedSpeechSize);
  b.bind("dev_size", c.devSize);
  b.bind("test_size", c.testSize);
  b.bind("min_words", c.minWords);
  b.bind("max_words", c.maxWords);
  b.bind("lexicon_size", c.lexiconSize);
  b.bind("min_word_length", c.minWordLength);
  b.bind("max_word_length", c.maxWordLength);
  b.bind("seed", c.seed);
  return b;
}

bool isSilence(int token, int spaceId) { return token == Vocabulary::kBlank || token == spaceId; }

}  // namespace

void SynthConfig::validate() const {
  NAR_REQUIRE(letters >= 1 && letters <= 26, "synth config: letters must be in [1, 26]");
  NAR_REQUIRE(melBins >= 1, "synth config: mel_bins must be positive");
  NAR_REQUIRE(minDuration >= 1 && maxDuration >= minDuration, "synth config: bad duration range");
  NAR_REQUIRE(minSilence >= 1 && maxSilence >= minSilence, "synth config: bad silence range");
  NAR_REQUIRE(noise >= 0.0, "synth config: noise must be >= 0");
  NAR_REQUIRE(speakers >= 1 && speakerOffsetScale >= 0.0, "synth config: bad speaker settings");
  NAR_REQUIRE(pairedSize >= 0 && unpairedSpeechSize >= 0 &&
                  pairedSize + unpairedSpeechSize <= trainSize,
              "synth config: paired + unpaired speech exceeds train size");
  NAR_REQUIRE(devSize >= 0 && testSize >= 0, "synth config: negative split size");
  NAR_REQUIRE(minWords >= 1 && maxWords >= minWords, "synth config: bad word count range");
  NAR_REQUIRE(minWordLength >= 1 && maxWordLength >= minWordLength,
              "synth config: bad word length range");
  NAR_REQUIRE(lexiconSize >= 1, "synth config: lexicon_size must be positive");
  NAR_REQUIRE(std::pow(static_cast<double>(letters), maxWordLength) >= 2.0 * lexiconSize,
              "synth config: too few distinct words for the lexicon");
}

std::string SynthConfig::serialize() const {
  SynthConfig copy = *this;
  return binder(copy).serialize();
}

SynthConfig SynthConfig::parse(const std::string& text) {
  SynthConfig c;
  binder(c).apply(parseKeyValues(text, "synth config"));
  c.validate();
  return c;
}

void SynthConfig::set(const std::string& key, const std::string& value) { binder(*this).set(key, value); }

std::vector<std::string> SynthConfig::keys() const {
  SynthConfig copy = *this;
  return binder(copy).keys();
}

Vocabulary SynthConfig::vocabulary() const {
  return Vocabulary(" " + std::string("ABCDEFGHIJKLMNOPQRSTUVWXYZ").substr(0, static_cast<size_t>(letters)));
}

double SynthConfig::noiseFloor() const { return noise * std::sqrt(2.0 / std::numbers::pi); }

std::vector<float> prototypeFrame(int token, int speaker, const SynthConfig& config) {
  std::vector<float> frame(static_cast<size_t>(config.melBins), 0.0f);
  Rng speakerRng(mixSeed(config.prototypeSeed, 1000003ULL + static_cast<std::uint64_t>(speaker)));
  for (auto& v : frame) v = static_cast<float>(speakerRng.normal(0.0, config.speakerOffsetScale));
  const int spaceId = config.vocabulary().id(' ');
  if (!isSilence(token, spaceId)) {
    Rng tokenRng(mixSeed(config.prototypeSeed, static_cast<std::uint64_t>(token)));
    for (auto& v : frame) v += static_cast<float>(tokenRng.normal());
  }
  return frame;
}

Utterance renderUtterance(const std::string& text, int speaker, const SynthConfig& config,
                          std::uint64_t seed) {
  NAR_REQUIRE(speaker >= 0 && speaker < config.speakers,
              "render_utterance: speaker " + std::to_string(speaker) + " out of range");
  const Vocabulary vocab = config.vocabulary();
  const int spaceId = vocab.id(' ');
  Utterance u;
  u.text = text;
  u.speaker = speaker;
  u.alignment.tokens = addBlank(vocab.encode(text));
  const auto& tokens = u.alignment.tokens;
  Rng rng(seed);
  u.alignment.repeats.resize(tokens.size());
  for (size_t i = 0; i < tokens.size(); ++i) {
    int r = 0;
    if (tokens[i] == spaceId) {
      r = static_cast<int>(rng.uniformInt(config.minSilence, config.maxSilence));
    } else if (tokens[i] != Vocabulary::kBlank) {
      r = static_cast<int>(rng.uniformInt(config.minDuration, config.maxDuration));
    } else if (i == 0 || i + 1 == tokens.size()) {
      r = static_cast<int>(rng.uniformInt(config.minSilence, config.maxSilence));
    } else if (tokens[i - 1] == tokens[i + 1]) {
      r = 1;
    }
    u.alignment.repeats[i] = r;
  }
  const auto frames = upsampleByRepeats(tokens, u.alignment.repeats);
  u.features = Matrix(static_cast<std::int64_t>(frames.size()), config.melBins);
  std::vector<std::vector<float>> protos(static_cast<size_t>(vocab.size()));
  for (size_t t = 0; t < frames.size(); ++t) {
    auto& proto = protos[static_cast<size_t>(frames[t])];
    if (proto.empty()) proto = prototypeFrame(frames[t], speaker, config);
    auto row = u.features.row(static_cast<std::int64_t>(t));
    for (int f = 0; f < config.melBins; ++f) {
      row[static_cast<size_t>(f)] = proto[static_cast<size_t>(f)] +
                                    static_cast<float>(rng.normal(0.0, config.noise));
    }
  }
  return u;
}

void genCorpus(const SynthConfig& config, const std::filesystem::path& dir) {
  config.validate();
  const Vocabulary vocab = config.vocabulary();
  std::filesystem::create_directories(dir / "features");

  Rng rng(mixSeed(config.seed, 1));
  const std::string letters = vocab.characters().substr(1);
  std::vector<std::string> lexicon;
  std::set<std::string> seen;
  while (static_cast<int>(lexicon.size()) < config.lexiconSize) {
    const auto len = rng.uniformInt(config.minWordLength, config.maxWordLength);
    std::string w;
    for (std::int64_t i = 0; i < len; ++i) {
      w += letters[static_cast<size_t>(rng.uniformInt(0, static_cast<std::int64_t>(letters.size()) - 1))];
    }
    if (seen.insert(w).second) lexicon.push_back(w);
  }

  const int total = config.trainSize + config.devSize + config.testSize;
  std::vector<ManifestRecord> paired, speech, text, dev, test;
  for (int n = 0; n < total; ++n) {
    const auto words = rng.uniformInt(config.minWords, config.maxWords);
    std::string sentence;
    for (std::int64_t w = 0; w < words; ++w) {
      if (w) sentence += ' ';
      sentence += lexicon[static_cast<size_t>(rng.uniformInt(0, config.lexiconSize - 1))];
    }
    const int speaker = static_cast<int>(rng.uniformInt(0, config.speakers - 1));
    char id[32];
    std::snprintf(id, sizeof(id), "utt%05d", n);

    ManifestRecord r;
    r.id = id;
    r.speaker = speaker;
    r.text = sentence;
    const bool textOnly = n >= config.pairedSize + config.unpairedSpeechSize && n < config.trainSize;
    if (!textOnly) {
      const Utterance u = renderUtterance(sentence, speaker, config, mixSeed(config.seed, 100 + static_cast<std::uint64_t>(n)));
      r.features = std::string("features/") + id + ".feat";
      writeFeatures(dir / *r.features, u.features);
      r.frames = u.features.rows();
      r.repeats = u.alignment.repeats;
    }
    if (n < config.pairedSize) {
      paired.push_back(r);
    } else if (n < config.pairedSize + config.unpairedSpeechSize) {
      r.text.reset();
      r.repeats.reset();
      speech.push_back(r);
    } else if (n < config.trainSize) {
      text.push_back(r);
    } else if (n < config.trainSize + config.devSize) {
      dev.push_back(r);
    } else {
      test.push_back(r);
    }
  }
  writeManifest(dir / CorpusFiles::kPaired, paired);
  writeManifest(dir / CorpusFiles::kUnpairedSpeech, speech);
  writeManifest(dir / CorpusFiles::kUnpairedText, text);
  writeManifest(dir / CorpusFiles::kDev, dev);
  writeManifest(dir / CorpusFiles::kTest, test);
  vocab.save(dir / CorpusFiles::kVocabulary);
  std::ofstream(dir / CorpusFiles::kConfig) << config.serialize();
}

}  // namespace nar
