// Copyright (c) 2026 The lcam Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef LCAM_CORPUS_CORPUS_H_
#define LCAM_CORPUS_CORPUS_H_

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "augment/mix.h"
#include "corpus/manifest.h"
#include "corpus/scenario.h"
#include "dsp/wave.h"

namespace lcam::corpus {

struct CorpusConfig {
  uint64_t seed = 7;
  int sample_rate = dsp::kDefaultSampleRate;
  int n_speakers = 16;
  int utterances_per_speaker = 40;
  double utterance_seconds = 2.0;
  int noise_clips = 64;
  int music_clips = 64;
  int speech_clips_per_profile = 8;  // times kNumInterfererProfiles clips
  double interference_seconds = 3.0;
  // Fraction of utterances and interference clips sent to the test split.
  double test_fraction = 0.2;
  // Gain range for test mixtures (overlap and concat).
  augment::MixSpec test_mix;
  std::vector<double> ramp_snr_db = {10.0, 5.0, -5.0, -10.0, -15.0, -30.0};
  int ramp_utterances = 2;

  void Validate() const;
};

// Hash-stable split: a key goes to test when its hash bucket (out of 10000)
// falls below test_fraction * 10000.
Split HashSplit(const std::string& key, double test_fraction);

// Synthetic target speakers plus interference pools and test scenarios.
Manifest BuildSyntheticManifest(const CorpusConfig& config);

// Adds interference pools of every type (split train/test by hash), and for
// every test utterance one overlap and one concat mixture per interference
// type drawn from the test pool, plus ramp records for the first few test
// utterances. Gains and crop offsets are drawn deterministically per record.
void AddInterferenceScenarios(const CorpusConfig& config, Manifest* manifest);

// How ingest derives a speaker label from a file path relative to the
// ingest root.
enum class LabelRule {
  kParentDirectory,  // "spk1/utt3.wav" -> "spk1"
  kFilenamePrefix,   // "spk1_utt3.wav" or "spk1-utt3.wav" -> "spk1"
};

struct IngestResult {
  Manifest manifest;
  // (relative path, reason) for every file that could not be used.
  std::vector<std::pair<std::string, std::string>> rejects;
};

// Scans `directory` recursively for .wav files. Labels map to speaker ids in
// sorted label order; the split is by hash of the relative path. Speakers
// whose utterances all hash to test keep their lowest-hash utterance in
// training so the closed-set property holds.
IngestResult IngestWav(const std::string& directory, LabelRule rule,
                       const CorpusConfig& config);

// Materializes manifest records on demand. Clean sources are generated (or
// read) once and cached. Not thread-safe; use one instance per thread.
class Corpus {
 public:
  explicit Corpus(Manifest manifest);

  const Manifest& manifest() const { return manifest_; }
  const ManifestRecord& Record(const std::string& key) const;

  // Audio of any record. Mixtures are built from their references: overlap
  // is Mix(target, interferer, alpha, offset); concat appends alpha times the
  // interferer cut to the target length. Ramp records return the target.
  dsp::Waveform Wave(const std::string& key);
  // Concat mixture with its frame labels.
  ConcatResult Concat(const std::string& key);
  // Ramp mixtures, one per recorded SNR.
  std::vector<dsp::Waveform> Ramp(const std::string& key);

  std::vector<const ManifestRecord*> Select(
      const std::function<bool(const ManifestRecord&)>& pred) const;
  std::vector<const ManifestRecord*> Utterances(Split split) const;
  std::vector<const ManifestRecord*> InterferencePool(InterferenceType type,
                                                      Split split) const;

  // Interference clips realized so far, per type (including via mixtures).
  int64_t interference_reads(InterferenceType type) const;
  int64_t interference_reads() const;

 private:
  const dsp::Waveform& Source(const ManifestRecord& record);

  Manifest manifest_;
  std::map<std::string, std::shared_ptr<const dsp::Waveform>> cache_;
  std::map<InterferenceType, int64_t> reads_;
};

}  // namespace lcam::corpus

#endif  // LCAM_CORPUS_CORPUS_H_
