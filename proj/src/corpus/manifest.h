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

#ifndef LCAM_CORPUS_MANIFEST_H_
#define LCAM_CORPUS_MANIFEST_H_

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "corpus/synth.h"

namespace lcam::corpus {

enum class RecordKind { kUtterance, kInterference, kMixture };
enum class Split { kTrain, kTest };
enum class Scenario { kClean, kPool, kConcat, kOverlap, kRamp };
enum class SourceType { kSynthSpeech, kSynthInterference, kWav };

std::string ToString(RecordKind v);
std::string ToString(Split v);
std::string ToString(Scenario v);
std::string ToString(SourceType v);

// How to obtain the audio of an utterance or interference clip.
struct SourceSpec {
  SourceType type = SourceType::kSynthSpeech;
  int profile = -1;        // synth speech: profile id
  uint64_t seed = 0;       // synth: generator seed
  double duration_s = 0.0; // synth
  std::string path;        // wav

  friend bool operator==(const SourceSpec&, const SourceSpec&) = default;
};

// One manifest line. Utterances and interference clips carry a source;
// mixtures reference them by key and record their mixing parameters.
struct ManifestRecord {
  std::string key;
  RecordKind kind = RecordKind::kUtterance;
  int speaker = -1;  // target speaker; -1 for interference clips
  std::string speaker_label;
  Split split = Split::kTrain;
  Scenario scenario = Scenario::kClean;
  std::optional<InterferenceType> interference;
  SourceSpec source;

  std::string target;      // mixture: utterance key
  std::string interferer;  // mixture: interference clip key
  double alpha = 0.0;      // gain on the interference
  uint64_t offset = 0;     // start sample inside the interference clip
  // concat: first interference sample. Present iff scenario is concat.
  std::optional<uint64_t> boundary;
  // ramp
  std::vector<double> snr_db;
  uint64_t window_begin = 0;
  uint64_t window_end = 0;

  friend bool operator==(const ManifestRecord&, const ManifestRecord&) = default;
};

struct Manifest {
  uint64_t seed = 0;
  int sample_rate = 16000;
  int n_speakers = 0;
  // Human-readable statement of how test mixtures were drawn.
  std::string mixture_policy;
  std::vector<ManifestRecord> records;  // sorted by key

  friend bool operator==(const Manifest&, const Manifest&) = default;

  // Sorts records by key and checks every structural invariant: unique
  // keys, resolvable references, speaker ids in range, boundaries present
  // iff concat, and every test speaker also present in training.
  void Finalize();
  const ManifestRecord* Find(const std::string& key) const;
};

// Line-delimited JSON: a header line followed by one line per record.
std::string SerializeManifest(const Manifest& manifest);
Manifest ParseManifest(const std::string& text);
void WriteManifest(const Manifest& manifest, const std::string& path);
Manifest ReadManifest(const std::string& path);

}  // namespace lcam::corpus

#endif  // LCAM_CORPUS_MANIFEST_H_
