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

#include "corpus/scenario.h"

#include <algorithm>
#include <cmath>

#include "augment/mix.h"
#include "base/error.h"

namespace lcam::corpus {

std::vector<SegmentLabel> FrameLabels(std::size_t total_samples,
                                      std::size_t boundary,
                                      const dsp::StftConfig& stft) {
  const std::size_t frames = dsp::NumFrames(total_samples, stft);
  std::vector<SegmentLabel> labels(frames);
  const std::size_t len = static_cast<std::size_t>(stft.frame_length);
  for (std::size_t t = 0; t < frames; ++t) {
    const std::size_t start = t * static_cast<std::size_t>(stft.hop);
    const std::size_t end = start + len;
    const std::size_t target =
        boundary <= start ? 0 : std::min(end, boundary) - start;
    labels[t] = 2 * target >= len ? SegmentLabel::kTarget : SegmentLabel::kInterference;
  }
  return labels;
}

ConcatResult BuildConcat(const dsp::Waveform& target,
                         const dsp::Waveform& interference,
                         const dsp::StftConfig& stft) {
  LCAM_REQUIRE(target.sample_rate == interference.sample_rate,
               ErrorKind::kInvalidArgument, "sample-rate mismatch: target ",
               target.sample_rate, " Hz, interference ",
               interference.sample_rate, " Hz");
  ConcatResult r;
  r.wave.sample_rate = target.sample_rate;
  r.wave.samples = target.samples;
  r.wave.samples.insert(r.wave.samples.end(), interference.samples.begin(),
                        interference.samples.end());
  r.boundary = target.size();
  r.labels = FrameLabels(r.wave.size(), r.boundary, stft);
  return r;
}

std::vector<dsp::Waveform> BuildRamp(const dsp::Waveform& target,
                                     const dsp::Waveform& interference,
                                     const std::vector<double>& snr_db,
                                     std::size_t window_begin,
                                     std::size_t window_end) {
  LCAM_REQUIRE(target.sample_rate == interference.sample_rate,
               ErrorKind::kInvalidArgument, "sample-rate mismatch");
  LCAM_REQUIRE(window_begin < window_end && window_end <= target.size(),
               ErrorKind::kInvalidArgument, "ramp window [", window_begin, ", ",
               window_end, ") is not inside the ", target.size(),
               "-sample target");
  const std::size_t len = window_end - window_begin;
  const std::vector<double> noise = augment::FitToLength(interference.samples, len);
  double target_energy = 0.0, noise_energy = 0.0;
  for (std::size_t i = 0; i < len; ++i) {
    target_energy += target.samples[window_begin + i] * target.samples[window_begin + i];
    noise_energy += noise[i] * noise[i];
  }
  LCAM_REQUIRE(target_energy > 0.0 && noise_energy > 0.0,
               ErrorKind::kInvalidArgument,
               "zero-energy window: target or interference is silent in [",
               window_begin, ", ", window_end, ")");
  std::vector<dsp::Waveform> out;
  out.reserve(snr_db.size());
  for (double snr : snr_db) {
    const double gain =
        std::sqrt(target_energy / (noise_energy * std::pow(10.0, snr / 10.0)));
    dsp::Waveform mixed = target;
    for (std::size_t i = 0; i < len; ++i) mixed.samples[window_begin + i] += gain * noise[i];
    out.push_back(std::move(mixed));
  }
  return out;
}

}  // namespace lcam::corpus
