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

#include "augment/mix.h"

#include "base/error.h"

namespace lcam::augment {

void MixSpec::Validate() const {
  LCAM_REQUIRE(alpha_min > 0.0 && alpha_min <= alpha_max, ErrorKind::kConfig,
               "mix alpha range must satisfy 0 < alpha_min <= alpha_max, got [",
               alpha_min, ", ", alpha_max, "]");
}

double SampleAlpha(const MixSpec& spec, Rng& rng) {
  return rng.Uniform(spec.alpha_min, spec.alpha_max);
}

std::vector<double> FitToLength(const std::vector<double>& n, std::size_t length,
                                std::size_t offset) {
  LCAM_REQUIRE(!n.empty() || length == 0, ErrorKind::kInvalidArgument,
               "cannot fit an empty interference to ", length, " samples");
  std::vector<double> out(length);
  if (length == 0) return out;
  std::size_t j = offset % n.size();
  for (std::size_t i = 0; i < length; ++i) {
    out[i] = n[j];
    if (++j == n.size()) j = 0;
  }
  return out;
}

std::size_t SampleOffset(std::size_t source_length, std::size_t length, Rng& rng) {
  if (source_length <= length) return 0;
  return static_cast<std::size_t>(rng.Index(source_length - length + 1));
}

dsp::Waveform Mix(const dsp::Waveform& x, const dsp::Waveform& n, double alpha,
                  std::size_t offset) {
  LCAM_REQUIRE(x.sample_rate == n.sample_rate, ErrorKind::kInvalidArgument,
               "sample-rate mismatch: target ", x.sample_rate,
               " Hz, interference ", n.sample_rate, " Hz");
  LCAM_REQUIRE(alpha >= 0.0, ErrorKind::kInvalidArgument,
               "mixing gain must be >= 0, got ", alpha);
  dsp::Waveform out = x;
  if (alpha == 0.0) return out;
  const std::vector<double> fitted = FitToLength(n.samples, x.size(), offset);
  for (std::size_t i = 0; i < out.size(); ++i) out.samples[i] += alpha * fitted[i];
  return out;
}

}  // namespace lcam::augment
