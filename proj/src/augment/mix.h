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

#ifndef LCAM_AUGMENT_MIX_H_
#define LCAM_AUGMENT_MIX_H_

#include <cstddef>
#include <vector>

#include "base/rng.h"
#include "dsp/wave.h"

namespace lcam::augment {

// Gain range for the interference waveform.
struct MixSpec {
  double alpha_min = 0.1;
  double alpha_max = 2.0;

  // Throws kConfig unless 0 < alpha_min <= alpha_max.
  void Validate() const;
};

// One uniform draw from [alpha_min, alpha_max].
double SampleAlpha(const MixSpec& spec, Rng& rng);

// `n` tiled (when shorter) or cut (when longer) to `length` samples,
// starting `offset` samples into n. Offsets wrap around.
std::vector<double> FitToLength(const std::vector<double>& n, std::size_t length,
                                std::size_t offset = 0);

// Random crop start for fitting an interference of `source_length` samples
// to `length`; zero when no crop is needed.
std::size_t SampleOffset(std::size_t source_length, std::size_t length, Rng& rng);

// x + alpha * FitToLength(n, len(x), offset). Output length = len(x).
dsp::Waveform Mix(const dsp::Waveform& x, const dsp::Waveform& n, double alpha,
                  std::size_t offset = 0);

}  // namespace lcam::augment

#endif  // LCAM_AUGMENT_MIX_H_
