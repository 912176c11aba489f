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

#ifndef LCAM_DSP_WAVE_H_
#define LCAM_DSP_WAVE_H_

#include <cstdint>
#include <string>
#include <vector>

namespace lcam::dsp {

inline constexpr int kDefaultSampleRate = 16000;

// Mono waveform, nominal amplitude range [-1, 1].
struct Waveform {
  std::vector<double> samples;
  int sample_rate = kDefaultSampleRate;

  std::size_t size() const { return samples.size(); }
  double Duration() const {
    return static_cast<double>(samples.size()) / sample_rate;
  }
  // Throws if the sample rate is not positive or any sample is non-finite.
  void Validate() const;
};

double Energy(const Waveform& wave);
double PeakAbs(const Waveform& wave);

// PCM 16-bit little-endian mono only. Any other encoding is rejected with a
// message naming the offending header field.
Waveform ReadWav(const std::string& path);
Waveform DecodeWav(const std::vector<uint8_t>& bytes);

// Samples are clipped to [-1, 1) and rounded to the nearest 16-bit step.
void WriteWav(const Waveform& wave, const std::string& path);
std::vector<uint8_t> EncodeWav(const Waveform& wave);

// Signal-to-noise ratio of `estimate` against `reference`, in dB. Both must
// have the same length. Identical signals give kSnrCapDb.
inline constexpr double kSnrCapDb = 100.0;
double Snr(const std::vector<double>& reference,
           const std::vector<double>& estimate);
double Snr(const Waveform& reference, const Waveform& estimate);

}  // namespace lcam::dsp

#endif  // LCAM_DSP_WAVE_H_
