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

#ifndef LCAM_CORPUS_SCENARIO_H_
#define LCAM_CORPUS_SCENARIO_H_

#include <cstddef>
#include <cstdint>
#include <vector>

#include "dsp/stft.h"
#include "dsp/wave.h"

namespace lcam::corpus {

enum class SegmentLabel : uint8_t { kTarget, kInterference };

// Label of every analysis frame of a signal of `total_samples` samples whose
// first `boundary` samples are target speech. A frame straddling the splice
// takes the label owning the majority of its samples; an exact tie goes to
// the target.
std::vector<SegmentLabel> FrameLabels(std::size_t total_samples,
                                      std::size_t boundary,
                                      const dsp::StftConfig& stft = {});

struct ConcatResult {
  dsp::Waveform wave;
  std::size_t boundary = 0;  // first interference sample
  std::vector<SegmentLabel> labels;
};

// Target followed by interference.
ConcatResult BuildConcat(const dsp::Waveform& target,
                         const dsp::Waveform& interference,
                         const dsp::StftConfig& stft = {});

// One mixture per requested SNR. Inside [window_begin, window_end) the
// interference (tiled or cut to the window length) is added with the gain
// that gives the requested SNR against the target segment; outside the
// window the target is copied unchanged.
std::vector<dsp::Waveform> BuildRamp(const dsp::Waveform& target,
                                     const dsp::Waveform& interference,
                                     const std::vector<double>& snr_db,
                                     std::size_t window_begin,
                                     std::size_t window_end);

}  // namespace lcam::corpus

#endif  // LCAM_CORPUS_SCENARIO_H_
