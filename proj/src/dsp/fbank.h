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

#ifndef LCAM_DSP_FBANK_H_
#define LCAM_DSP_FBANK_H_

#include <vector>

#include "base/grid.h"
#include "dsp/stft.h"
#include "dsp/wave.h"

namespace lcam::dsp {

struct FbankConfig {
  int n_mels = 40;
  // Mel energies are floored at this level relative to full-scale power
  // before the log, so silence maps to a finite value.
  double floor_db = -80.0;
};

struct FeatureConfig {
  StftConfig stft;
  FbankConfig fbank;
};

// frames x n_mels natural-log mel energies.
struct FbankMatrix {
  Grid values;
  int frame_length = 400;
  int hop = 160;
  int sample_rate = kDefaultSampleRate;
  double floor_db = -80.0;

  std::size_t frames() const { return values.rows(); }
  std::size_t n_mels() const { return values.cols(); }
  // Log-energy value assigned to silent cells.
  double FloorLog() const;
};

double HzToMel(double hz);
double MelToHz(double mel);

// Triangular filters equally spaced on the mel scale over [0, sample_rate/2].
class MelFilterbank {
 public:
  MelFilterbank(int n_mels, int frame_length, int sample_rate);

  int n_mels() const { return n_mels_; }
  int bins() const { return bins_; }
  // Centre frequency of filter `m`, in Hz.
  double CenterHz(int m) const;
  double Weight(int m, int bin) const { return weights_[m * bins_ + bin]; }

  // Mel energies from a linear power spectrum (length bins()).
  std::vector<double> Apply(const std::vector<double>& power) const;
  // Minimum-norm linear power spectrum reproducing the given mel energies,
  // clamped to be nonnegative.
  std::vector<double> Invert(const std::vector<double>& mel_power) const;

 private:
  int n_mels_;
  int bins_;
  std::vector<double> mel_edges_;
  std::vector<double> weights_;  // n_mels x bins
  std::vector<double> pinv_;     // bins x n_mels
};

// Process-wide immutable filterbank for the given geometry, built on first
// use. The returned reference stays valid for the life of the process.
const MelFilterbank& SharedFilterbank(int n_mels, int frame_length,
                                      int sample_rate);

// Factor mapping |X_k|^2 to normalised power: 1 / (sum of window)^2. A
// unit-amplitude sinusoid centred on a bin then reads 0.25 there.
double PowerScale(const std::vector<double>& window);

FbankMatrix ComputeFbank(const ComplexSpectrogram& spec,
                         const FbankConfig& config = {});
FbankMatrix ComputeFbank(const Waveform& wave, const FeatureConfig& config = {});

// Applies `mask` (same shape as the Fbank, values in [0,1]) as an amplitude
// gain on the mel energies, maps them back to a linear spectrum through the
// filterbank pseudo-inverse, attaches the phase of `donor_phase` and
// inverts. Output length equals the donor's signal length.
Waveform ResynthesizeMasked(const FbankMatrix& noisy_fbank, const Grid& mask,
                            const ComplexSpectrogram& donor_phase);

}  // namespace lcam::dsp

#endif  // LCAM_DSP_FBANK_H_
