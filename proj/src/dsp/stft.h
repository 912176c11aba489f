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

#ifndef LCAM_DSP_STFT_H_
#define LCAM_DSP_STFT_H_

#include <complex>
#include <cstddef>
#include <vector>

#include "dsp/wave.h"

namespace lcam::dsp {

enum class WindowType { kRectangular, kHann };

// Periodic window of the given length.
std::vector<double> MakeWindow(WindowType type, int length);

struct StftConfig {
  int frame_length = 400;  // 25 ms at 16 kHz
  int hop = 160;           // 10 ms at 16 kHz
  WindowType window = WindowType::kHann;
};

// frames x bins complex spectrum, bins = frame_length / 2 + 1.
struct ComplexSpectrogram {
  std::size_t frames = 0;
  std::size_t bins = 0;
  int frame_length = 0;
  int hop = 0;
  WindowType window = WindowType::kHann;
  int sample_rate = kDefaultSampleRate;
  // Length of the analysed signal; Istft pads its output back to it.
  std::size_t signal_length = 0;
  std::vector<std::complex<double>> data;

  std::complex<double>& at(std::size_t t, std::size_t k) {
    return data[t * bins + k];
  }
  const std::complex<double>& at(std::size_t t, std::size_t k) const {
    return data[t * bins + k];
  }
};

// Number of whole frames that fit in `length` samples (0 if none).
std::size_t NumFrames(std::size_t length, const StftConfig& config);

ComplexSpectrogram Stft(const Waveform& wave, const StftConfig& config = {});

// Weighted overlap-add with the analysis window, normalised by the summed
// squared window. Samples whose summed squared window is below 1e-3 of the
// steady-state value (the outer edges) come back as zero.
Waveform Istft(const ComplexSpectrogram& spec);

}  // namespace lcam::dsp

#endif  // LCAM_DSP_STFT_H_
