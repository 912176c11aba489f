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

#ifndef LCAM_MODEL_SPEAKER_NET_H_
#define LCAM_MODEL_SPEAKER_NET_H_

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "ad/ops.h"
#include "ad/optim.h"
#include "ad/tape.h"
#include "dsp/fbank.h"

namespace lcam::model {

inline constexpr int kNumStages = 4;

struct ModelConfig {
  int n_mels = 40;
  std::array<int, kNumStages> stage_channels{16, 32, 64, 128};
  std::array<int, kNumStages> blocks_per_stage{1, 1, 1, 1};
  int embedding_dim = 64;
  int n_speakers = 16;
  int se_reduction = 8;
  uint64_t seed = 1;

  // Throws kConfig naming the first offending field.
  void Validate() const;
  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

enum class Mode { kTrain, kEval };

// Output resolution (frames, mel bins) of each stage for a given input. Stage
// 1 keeps the input resolution; stages 2-4 halve both axes (rounding up).
std::array<std::pair<int, int>, kNumStages> StageResolutions(int frames,
                                                             int n_mels);

struct ForwardResult {
  ad::Var embedding;  // [N, embedding_dim]
  ad::Var logits;     // [N, n_speakers]
  // Post-activation output of the last block of each stage, [N,C,H,W].
  std::array<ad::Var, kNumStages> taps;
  // Batch statistics per batch-norm layer (training mode only).
  std::vector<std::pair<std::string, ad::BatchNormStats>> batch_stats;
};

// Parameters bound as leaves on one tape. Binding once and running several
// forward passes accumulates all their gradients onto the same leaves.
struct BoundParams {
  std::map<std::string, ad::Var> vars;
};

// Scaled SE-ResNet speaker classifier: stem conv, four residual stages with
// squeeze-and-excitation, global average pooling, an embedding layer and a
// linear classification head.
class SpeakerNet {
 public:
  explicit SpeakerNet(const ModelConfig& config);
  SpeakerNet(const ModelConfig& config, ad::NamedTensors parameters,
             ad::NamedTensors buffers);

  const ModelConfig& config() const { return config_; }
  ad::NamedTensors& parameters() { return parameters_; }
  const ad::NamedTensors& parameters() const { return parameters_; }
  // Batch-norm running statistics.
  ad::NamedTensors& buffers() { return buffers_; }
  const ad::NamedTensors& buffers() const { return buffers_; }

  BoundParams Bind(ad::Tape& tape) const;
  ForwardResult Forward(const BoundParams& bound, const ad::Var& input,
                        Mode mode) const;

  // Folds batch statistics from a training pass into the running estimates.
  void UpdateRunningStats(
      const std::vector<std::pair<std::string, ad::BatchNormStats>>& stats,
      double momentum = 0.1);

 private:
  ad::Var ConvBn(const BoundParams& b, const std::string& prefix,
                 const ad::Var& x, int stride, int padding, Mode mode,
                 ForwardResult* result) const;
  ad::Var Block(const BoundParams& b, const std::string& prefix,
                const ad::Var& x, int stride, bool projection, Mode mode,
                ForwardResult* result) const;

  ModelConfig config_;
  ad::NamedTensors parameters_;
  ad::NamedTensors buffers_;
};

// Maps log-Fbank values to network input: (v - floor) / |floor|, so a silent
// (floored) cell is exactly 0. All matrices must share a shape.
ad::Tensor FeaturesToInput(const std::vector<const dsp::FbankMatrix*>& batch);
ad::Tensor FeaturesToInput(const dsp::FbankMatrix& features);

struct Inference {
  std::vector<double> embedding;
  std::vector<double> logits;
};

// Eval-mode forward pass on one utterance.
Inference Infer(const SpeakerNet& net, const dsp::FbankMatrix& features);

// Eval-mode forward pass on a batch of equally shaped utterances.
std::vector<Inference> InferBatch(
    const SpeakerNet& net, const std::vector<const dsp::FbankMatrix*>& batch);

// k distinct class ids by descending logit; ties go to the lower id.
std::vector<int> PredictTopK(const std::vector<double>& logits, int k);

}  // namespace lcam::model

#endif  // LCAM_MODEL_SPEAKER_NET_H_
