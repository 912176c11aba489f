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

#ifndef LCAM_AUGMENT_TRAIN_H_
#define LCAM_AUGMENT_TRAIN_H_

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "augment/mix.h"
#include "corpus/corpus.h"
#include "dsp/fbank.h"
#include "model/checkpoint.h"
#include "model/speaker_net.h"

namespace lcam::augment {

enum class TrainMode { kBase, kVanillaDa, kActDa };

std::string ToString(TrainMode mode);
std::optional<TrainMode> ParseTrainMode(const std::string& text);

struct TrainConfig {
  TrainMode mode = TrainMode::kBase;
  // Required for the DA modes, ignored for base.
  std::optional<corpus::InterferenceType> interference;
  int epochs = 30;
  int batch_size = 8;
  double learning_rate = 0.01;
  double momentum = 0.9;
  MixSpec mix;
  uint64_t seed = 1;
  // Length of the random training crop in frames; 0 trains on whole
  // utterances (which must then share one length).
  int crop_frames = 0;
  dsp::FeatureConfig features;

  void Validate() const;
};

// Scalar loss terms of one objective evaluation.
struct LossTerms {
  double total = 0.0;
  double ce_clean = 0.0;
  double ce_augmented = 0.0;
  double distance = 0.0;
};

struct LossResult {
  LossTerms terms;
  ad::NamedTensors grads;  // d total / d parameter
  std::vector<std::pair<std::string, ad::BatchNormStats>> batch_stats;
  std::vector<double> clean_logits;  // [N * n_speakers], row-major
};

// CE(x). Inputs are model input tensors [N,1,T,F].
LossResult BaseLoss(const model::SpeakerNet& net, const ad::Tensor& x,
                    const std::vector<int>& labels,
                    model::Mode mode = model::Mode::kTrain);
// CE(x) + CE(x_aug), both passes on one tape, one backward sweep.
LossResult VanillaDaLoss(const model::SpeakerNet& net, const ad::Tensor& x,
                         const ad::Tensor& x_aug, const std::vector<int>& labels,
                         model::Mode mode = model::Mode::kTrain);
// CE(x) + CE(x_aug) + mean over the batch of ||e(x) - e(x_aug)||^2.
LossResult ActDaLoss(const model::SpeakerNet& net, const ad::Tensor& x,
                     const ad::Tensor& x_aug, const std::vector<int>& labels,
                     model::Mode mode = model::Mode::kTrain);

struct EpochLog {
  int epoch = 0;
  LossTerms mean_terms;  // averaged over batches
  double train_accuracy = 0.0;  // clean-crop top-1 during the epoch
  double seconds = 0.0;
};

using EpochSink = std::function<void(const EpochLog&)>;

// Trains a fresh network on the manifest's training utterances. In the DA
// modes every utterance gets one augmented copy per epoch with a fresh gain
// and a fresh clip from the training pool of the configured interference
// type. Base mode never touches any interference pool.
model::Checkpoint Train(corpus::Corpus& corpus, const model::ModelConfig& model_config,
                        const TrainConfig& config, const EpochSink& on_epoch = {});

// Frames [start, start + frames) of `full`.
dsp::FbankMatrix CropFrames(const dsp::FbankMatrix& full, std::size_t start,
                            std::size_t frames);

}  // namespace lcam::augment

#endif  // LCAM_AUGMENT_TRAIN_H_
