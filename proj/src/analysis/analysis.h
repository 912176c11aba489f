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

#ifndef LCAM_ANALYSIS_ANALYSIS_H_
#define LCAM_ANALYSIS_ANALYSIS_H_

#include <cstddef>
#include <optional>
#include <vector>

#include "base/grid.h"
#include "corpus/scenario.h"
#include "dsp/fbank.h"
#include "dsp/wave.h"
#include "model/speaker_net.h"

namespace lcam::analysis {

// Sum of a saliency map over the mel axis, one value per frame.
std::vector<double> FrameSaliency(const Grid& map);

// Frame threshold for SPR/IPR: ratio * n_mels.
inline constexpr double kFrameThresholdRatio = 0.1875;
double DefaultFrameThreshold(int n_mels);

// Frames whose summed saliency exceeds the threshold, counted per label.
struct RetentionCounts {
  std::size_t target_frames = 0;
  std::size_t target_kept = 0;
  std::size_t interference_frames = 0;
  std::size_t interference_kept = 0;

  void Add(const RetentionCounts& other);
  // Fractions of kept frames; empty when the class has no frames.
  std::optional<double> Spr() const;
  std::optional<double> Ipr() const;
};

RetentionCounts CountRetention(const Grid& map,
                               const std::vector<corpus::SegmentLabel>& labels,
                               double frame_threshold);

struct SprIpr {
  std::optional<double> spr;
  std::optional<double> ipr;
};
SprIpr ComputeSprIpr(const Grid& map, const std::vector<corpus::SegmentLabel>& labels,
                     double frame_threshold);

// Fraction of rows whose label is among the top k logits, for each k.
std::vector<double> TopKAccuracy(const std::vector<std::vector<double>>& logits,
                                 const std::vector<int>& labels,
                                 const std::vector<int>& ks);

// Evenly spaced thresholds over [0, 1], `count` >= 2 of them.
std::vector<double> ThresholdGrid(int count = 21);

// Cells deleted at threshold theta: saliency strictly below theta.
std::vector<bool> DeletionSet(const Grid& saliency, double theta);

// True when every cell deleted at a threshold is also deleted at every
// larger threshold of the list, checked cell by cell. Thresholds must
// increase strictly.
bool DeletionSetsNested(const Grid& saliency, const std::vector<double>& thresholds);

// Copy of `clean` with every deleted cell set to the log floor, which the
// model input mapping sends to exactly zero.
dsp::FbankMatrix ApplyDeletion(const dsp::FbankMatrix& clean, const Grid& saliency,
                               double theta);

struct DeletionPoint {
  double threshold = 0.0;
  double masked_fraction = 0.0;
  double top1 = 0.0;
};

struct DeletionCurve {
  std::vector<DeletionPoint> points;
  double auc = 0.0;
};

// Trapezoidal area under y(x), divided by the x extent.
double NormalizedTrapezoidArea(const std::vector<double>& x,
                               const std::vector<double>& y);

struct DeletionItem {
  const dsp::FbankMatrix* clean = nullptr;  // judged input
  const Grid* saliency = nullptr;           // map from the noisy input
  int label = 0;
};

// Top-1 of the judge on every item's clean Fbank after deletion at each
// threshold. Thresholds must be strictly increasing within [0, 1].
DeletionCurve DeletionTest(const model::SpeakerNet& judge,
                           const std::vector<DeletionItem>& items,
                           const std::vector<double>& thresholds);

// Logits for many utterances, evaluated in fixed chunks of `batch`
// consecutive equally shaped inputs so that repeated evaluations of the same
// list are bit-identical.
inline constexpr std::size_t kEvalBatch = 16;
std::vector<std::vector<double>> ClassifyAll(
    const model::SpeakerNet& net, const std::vector<const dsp::FbankMatrix*>& inputs);

// SNR of the resynthesized noisy speech against the clean reference after
// applying `mask` to the noisy Fbank and borrowing the clean phase.
double MaskedResynthesisSnr(const dsp::Waveform& clean, const dsp::Waveform& noisy,
                            const Grid& mask, const dsp::FeatureConfig& features = {});

}  // namespace lcam::analysis

#endif  // LCAM_ANALYSIS_ANALYSIS_H_
