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

#ifndef LCAM_MODEL_CHECKPOINT_H_
#define LCAM_MODEL_CHECKPOINT_H_

#include <cstdint>
#include <string>
#include <vector>

#include "model/speaker_net.h"

namespace lcam::model {

inline constexpr uint32_t kCheckpointVersion = 1;

struct TrainingMetadata {
  int epochs = 0;
  std::string mode = "untrained";      // base | vanilla_da | act_da
  std::string interference = "none";   // none | noise | speech | music
  uint64_t seed = 0;

  friend bool operator==(const TrainingMetadata&, const TrainingMetadata&) = default;
};

struct Checkpoint {
  ModelConfig config;
  TrainingMetadata metadata;
  ad::NamedTensors parameters;
  ad::NamedTensors buffers;
};

Checkpoint MakeCheckpoint(const SpeakerNet& net, const TrainingMetadata& meta);
SpeakerNet NetFromCheckpoint(Checkpoint checkpoint);

// Canonical "key=value" text for the config and metadata block.
std::string CanonicalConfigText(const ModelConfig& config,
                                const TrainingMetadata& meta);

std::vector<uint8_t> EncodeCheckpoint(const Checkpoint& checkpoint);
// Distinct kFormat diagnostics for bad magic, unsupported version,
// truncation and checksum failure.
Checkpoint DecodeCheckpoint(const std::vector<uint8_t>& bytes);

void SaveCheckpoint(const Checkpoint& checkpoint, const std::string& path);
Checkpoint LoadCheckpoint(const std::string& path);

// Throws kConfig describing every field that differs from what the caller
// expects; a negative expectation is not checked.
void RequireCompatible(const ModelConfig& loaded, int expected_n_mels,
                       int expected_n_speakers);

}  // namespace lcam::model

#endif  // LCAM_MODEL_CHECKPOINT_H_
