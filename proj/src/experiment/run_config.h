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

#ifndef LCAM_EXPERIMENT_RUN_CONFIG_H_
#define LCAM_EXPERIMENT_RUN_CONFIG_H_

#include <cstdint>
#include <string>
#include <vector>

#include "augment/train.h"
#include "corpus/corpus.h"
#include "dsp/fbank.h"
#include "model/speaker_net.h"

namespace lcam::experiment {

struct AnalysisConfig {
  double frame_threshold_ratio = 0.1875;  // SPR/IPR threshold = ratio * n_mels
  int deletion_thresholds = 21;
  // Test utterances per interference type entering the deletion test; 0
  // means all of them.
  int deletion_utterances = 0;
  std::vector<int> topk = {1, 5, 10};
  // Test utterances exported by the saliency command.
  int saliency_exports = 4;
};

// Everything one experiment depends on. Serialized as one JSON document;
// unknown keys are rejected with the offending path in the message.
struct RunConfig {
  uint64_t seed = 7;
  std::string results_dir = "results";
  // Optional directory of PCM-16 WAV files to ingest instead of the
  // synthetic speakers.
  std::string ingest_dir;
  corpus::LabelRule label_rule = corpus::LabelRule::kParentDirectory;

  corpus::CorpusConfig corpus;
  dsp::FeatureConfig features;
  model::ModelConfig model;
  augment::TrainConfig train;  // mode and interference are set per run
  AnalysisConfig analysis;

  // Throws kConfig naming the first invalid field.
  void Validate() const;
  // Applies the global seed to the corpus, model and training seeds.
  void ApplySeed(uint64_t new_seed);
};

// Desk-scale defaults used when no config file is given.
RunConfig DefaultRunConfig();

RunConfig ParseRunConfig(const std::string& json_text);
RunConfig LoadRunConfig(const std::string& path);
// Canonical JSON (sorted keys, two-space indent).
std::string SerializeRunConfig(const RunConfig& config);

}  // namespace lcam::experiment

#endif  // LCAM_EXPERIMENT_RUN_CONFIG_H_
