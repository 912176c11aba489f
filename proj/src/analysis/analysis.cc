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

#include "analysis/analysis.h"

#include <algorithm>
#include <numeric>

#include "base/error.h"
#include "dsp/stft.h"

namespace lcam::analysis {

std::vector<double> FrameSaliency(const Grid& map) {
  std::vector<double> out(map.rows(), 0.0);
  for (std::size_t t = 0; t < map.rows(); ++t) {
    for (double v : map.row(t)) out[t] += v;
  }
  return out;
}

double DefaultFrameThreshold(int n_mels) { return kFrameThresholdRatio * n_mels; }

void RetentionCounts::Add(const RetentionCounts& o) {
  target_frames += o.target_frames;
  target_kept += o.target_kept;
  interference_frames += o.interference_frames;
  interference_kept += o.interference_kept;
}

std::optional<double> RetentionCounts::Spr() const {
  if (target_frames == 0) return std::nullopt;
  return static_cast<double>(target_kept) / static_cast<double>(target_frames);
}

std::optional<double> RetentionCounts::Ipr() const {
  if (interference_frames == 0) return std::nullopt;
  return static_cast<double>(interference_kept) /
         static_cast<double>(interference_frames);
}

RetentionCounts CountRetention(const Grid& map,
                               const std::vector<corpus::SegmentLabel>& labels,
                               double frame_threshold) {
  LCAM_REQUIRE(labels.size() == map.rows(), ErrorKind::kShapeMismatch, "have ",
               labels.size(), " frame labels for a ", map.rows(), "-frame map");
  LCAM_REQUIRE(frame_threshold > 0.0, ErrorKind::kInvalidArgument,
               "frame threshold must be positive");
  const std::vector<double> frames = FrameSaliency(map);
  RetentionCounts c;
  for (std::size_t t = 0; t < frames.size(); ++t) {
    const bool kept = frames[t] > frame_threshold;
    if (labels[t] == corpus::SegmentLabel::kTarget) {
      ++c.target_frames;
      c.target_kept += kept;
    } else {
      ++c.interference_frames;
      c.interference_kept += kept;
    }
  }
  return c;
}

SprIpr ComputeSprIpr(const Grid& map, const std::vector<corpus::SegmentLabel>& labels,
                     double frame_threshold) {
  const RetentionCounts c = CountRetention(map, labels, frame_threshold);
  return {c.Spr(), c.Ipr()};
}

std::vector<double> TopKAccuracy(const std::vector<std::vector<double>>& logits,
                                 const std::vector<int>& labels,
                                 const std::vector<int>& ks) {
  LCAM_REQUIRE(!logits.empty(), ErrorKind::kInvalidArgument,
               "top-k accuracy of an empty test set");
  LCAM_REQUIRE(logits.size() == labels.size(), ErrorKind::kShapeMismatch,
               logits.size(), " logit rows for ", labels.size(), " labels");
  std::vector<double> acc;
  for (int k : ks) {
    std::size_t hits = 0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
      const std::vector<int> top = model::PredictTopK(logits[i], k);
      hits += std::find(top.begin(), top.end(), labels[i]) != top.end();
    }
    acc.push_back(static_cast<double>(hits) / static_cast<double>(logits.size()));
  }
  return acc;
}

std::vector<double> ThresholdGrid(int count) {
  LCAM_REQUIRE(count >= 2, ErrorKind::kInvalidArgument,
               "threshold grid needs at least 2 points");
  std::vector<double> out(count);
  for (int i = 0; i < count; ++i) out[i] = static_cast<double>(i) / (count - 1);
  return out;
}

std::vector<bool> DeletionSet(const Grid& saliency, double theta) {
  std::vector<bool> out(saliency.size());
  for (std::size_t i = 0; i < saliency.size(); ++i) out[i] = saliency.data()[i] < theta;
  return out;
}

bool DeletionSetsNested(const Grid& saliency, const std::vector<double>& thresholds) {
  for (std::size_t i = 1; i < thresholds.size(); ++i) {
    LCAM_REQUIRE(thresholds[i] > thresholds[i - 1], ErrorKind::kInvalidArgument,
                 "deletion thresholds must increase strictly");
  }
  // Inclusion is transitive, so adjacent thresholds cover every pair.
  std::vector<bool> lower;
  for (std::size_t i = 0; i < thresholds.size(); ++i) {
    std::vector<bool> upper = DeletionSet(saliency, thresholds[i]);
    for (std::size_t c = 0; c < lower.size(); ++c) {
      if (lower[c] && !upper[c]) return false;
    }
    lower = std::move(upper);
  }
  return true;
}

dsp::FbankMatrix ApplyDeletion(const dsp::FbankMatrix& clean, const Grid& saliency,
                               double theta) {
  LCAM_REQUIRE(saliency.SameShape(clean.values), ErrorKind::kShapeMismatch,
               "saliency ", saliency.rows(), "x", saliency.cols(),
               " misaligned with clean Fbank ", clean.frames(), "x", clean.n_mels());
  dsp::FbankMatrix out = clean;
  const double floor = clean.FloorLog();
  for (std::size_t i = 0; i < saliency.size(); ++i) {
    if (saliency.data()[i] < theta) out.values.data()[i] = floor;
  }
  return out;
}

double NormalizedTrapezoidArea(const std::vector<double>& x,
                               const std::vector<double>& y) {
  LCAM_REQUIRE(x.size() == y.size() && x.size() >= 2, ErrorKind::kInvalidArgument,
               "trapezoid area needs at least two matching points");
  double area = 0.0;
  for (std::size_t i = 1; i < x.size(); ++i) {
    LCAM_REQUIRE(x[i] > x[i - 1], ErrorKind::kInvalidArgument,
                 "abscissae must be strictly increasing");
    area += 0.5 * (y[i] + y[i - 1]) * (x[i] - x[i - 1]);
  }
  return area / (x.back() - x.front());
}

std::vector<std::vector<double>> ClassifyAll(
    const model::SpeakerNet& net, const std::vector<const dsp::FbankMatrix*>& inputs) {
  std::vector<std::vector<double>> out;
  out.reserve(inputs.size());
  std::size_t i = 0;
  while (i < inputs.size()) {
    // A chunk ends early where the input shape changes.
    std::size_t j = i + 1;
    while (j < inputs.size() && j - i < kEvalBatch &&
           inputs[j]->values.SameShape(inputs[i]->values)) {
      ++j;
    }
    std::vector<const dsp::FbankMatrix*> chunk(inputs.begin() + i, inputs.begin() + j);
    for (auto& r : model::InferBatch(net, chunk)) out.push_back(std::move(r.logits));
    i = j;
  }
  return out;
}

DeletionCurve DeletionTest(const model::SpeakerNet& judge,
                           const std::vector<DeletionItem>& items,
                           const std::vector<double>& thresholds) {
  LCAM_REQUIRE(!items.empty(), ErrorKind::kInvalidArgument,
               "deletion test needs at least one utterance");
  LCAM_REQUIRE(thresholds.size() >= 2, ErrorKind::kInvalidArgument,
               "deletion test needs at least two thresholds");
  for (std::size_t i = 0; i < thresholds.size(); ++i) {
    LCAM_REQUIRE(thresholds[i] >= 0.0 && thresholds[i] <= 1.0 &&
                     (i == 0 || thresholds[i] > thresholds[i - 1]),
                 ErrorKind::kInvalidArgument,
                 "deletion thresholds must increase strictly within [0, 1]");
  }
  std::vector<int> labels;
  std::size_t total_cells = 0;
  for (const DeletionItem& it : items) {
    LCAM_REQUIRE(it.saliency->SameShape(it.clean->values), ErrorKind::kShapeMismatch,
                 "deletion pair misaligned: saliency ", it.saliency->rows(), "x",
                 it.saliency->cols(), " vs clean ", it.clean->frames(), "x",
                 it.clean->n_mels());
    labels.push_back(it.label);
    total_cells += it.saliency->size();
  }
  DeletionCurve curve;
  std::vector<double> ys;
  for (double theta : thresholds) {
    std::vector<dsp::FbankMatrix> masked;
    masked.reserve(items.size());
    std::size_t deleted = 0;
    for (const DeletionItem& it : items) {
      masked.push_back(ApplyDeletion(*it.clean, *it.saliency, theta));
      for (double v : it.saliency->data()) deleted += v < theta;
    }
    std::vector<const dsp::FbankMatrix*> ptrs;
    for (const auto& m : masked) ptrs.push_back(&m);
    const double top1 = TopKAccuracy(ClassifyAll(judge, ptrs), labels, {1})[0];
    curve.points.push_back(
        {theta, static_cast<double>(deleted) / static_cast<double>(total_cells), top1});
    ys.push_back(top1);
  }
  curve.auc = NormalizedTrapezoidArea(thresholds, ys);
  return curve;
}

double MaskedResynthesisSnr(const dsp::Waveform& clean, const dsp::Waveform& noisy,
                            const Grid& mask, const dsp::FeatureConfig& features) {
  LCAM_REQUIRE(clean.size() == noisy.size(), ErrorKind::kShapeMismatch,
               "clean and noisy lengths differ (", clean.size(), " vs ",
               noisy.size(), ")");
  const dsp::FbankMatrix noisy_fbank = dsp::ComputeFbank(noisy, features);
  const dsp::ComplexSpectrogram phase = dsp::Stft(clean, features.stft);
  const dsp::Waveform out = dsp::ResynthesizeMasked(noisy_fbank, mask, phase);
  return dsp::Snr(clean, out);
}

}  // namespace lcam::analysis
