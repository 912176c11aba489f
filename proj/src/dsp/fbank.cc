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

#include "dsp/fbank.h"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <tuple>

#include "base/error.h"

namespace lcam::dsp {

double FbankMatrix::FloorLog() const {
  return floor_db / 10.0 * std::log(10.0);
}

double HzToMel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double MelToHz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

MelFilterbank::MelFilterbank(int n_mels, int frame_length, int sample_rate)
    : n_mels_(n_mels), bins_(frame_length / 2 + 1) {
  LCAM_REQUIRE(n_mels >= 2, ErrorKind::kInvalidArgument,
               "n_mels must be >= 2, got ", n_mels);
  LCAM_REQUIRE(n_mels <= bins_, ErrorKind::kInvalidArgument, "n_mels ", n_mels,
               " exceeds the ", bins_, " frequency bins of a ", frame_length,
               "-sample frame");
  LCAM_REQUIRE(sample_rate > 0, ErrorKind::kInvalidArgument,
               "sample_rate must be positive");
  const double mel_hi = HzToMel(sample_rate / 2.0);
  mel_edges_.resize(n_mels + 2);
  for (int i = 0; i < n_mels + 2; ++i) {
    mel_edges_[i] = mel_hi * i / (n_mels + 1);
  }
  weights_.assign(static_cast<std::size_t>(n_mels) * bins_, 0.0);
  for (int k = 0; k < bins_; ++k) {
    const double mel = HzToMel(static_cast<double>(k) * sample_rate / frame_length);
    for (int m = 0; m < n_mels; ++m) {
      const double left = mel_edges_[m], center = mel_edges_[m + 1],
                   right = mel_edges_[m + 2];
      double w = 0.0;
      if (mel > left && mel <= center) {
        w = (mel - left) / (center - left);
      } else if (mel > center && mel < right) {
        w = (right - mel) / (right - center);
      }
      weights_[m * bins_ + k] = w;
    }
  }
  using RowMatrix =
      Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  Eigen::Map<const RowMatrix> f(weights_.data(), n_mels_, bins_);
  RowMatrix pinv = Eigen::CompleteOrthogonalDecomposition<RowMatrix>(f)
                       .pseudoInverse();
  pinv_.assign(pinv.data(), pinv.data() + pinv.size());
}

double MelFilterbank::CenterHz(int m) const { return MelToHz(mel_edges_[m + 1]); }

std::vector<double> MelFilterbank::Apply(const std::vector<double>& power) const {
  std::vector<double> out(n_mels_, 0.0);
  for (int m = 0; m < n_mels_; ++m) {
    const double* w = weights_.data() + static_cast<std::size_t>(m) * bins_;
    double acc = 0.0;
    for (int k = 0; k < bins_; ++k) acc += w[k] * power[k];
    out[m] = acc;
  }
  return out;
}

std::vector<double> MelFilterbank::Invert(
    const std::vector<double>& mel_power) const {
  std::vector<double> out(bins_, 0.0);
  for (int k = 0; k < bins_; ++k) {
    const double* p = pinv_.data() + static_cast<std::size_t>(k) * n_mels_;
    double acc = 0.0;
    for (int m = 0; m < n_mels_; ++m) acc += p[m] * mel_power[m];
    out[k] = std::max(0.0, acc);
  }
  return out;
}

const MelFilterbank& SharedFilterbank(int n_mels, int frame_length,
                                      int sample_rate) {
  static std::mutex mu;
  static std::map<std::tuple<int, int, int>, std::unique_ptr<MelFilterbank>>
      cache;
  std::lock_guard<std::mutex> lock(mu);
  auto& slot = cache[{n_mels, frame_length, sample_rate}];
  if (!slot) {
    slot = std::make_unique<MelFilterbank>(n_mels, frame_length, sample_rate);
  }
  return *slot;
}

double PowerScale(const std::vector<double>& window) {
  double sum = 0.0;
  for (double w : window) sum += w;
  return 1.0 / (sum * sum);
}

FbankMatrix ComputeFbank(const ComplexSpectrogram& spec,
                         const FbankConfig& config) {
  const MelFilterbank& bank =
      SharedFilterbank(config.n_mels, spec.frame_length, spec.sample_rate);
  FbankMatrix fbank;
  fbank.frame_length = spec.frame_length;
  fbank.hop = spec.hop;
  fbank.sample_rate = spec.sample_rate;
  fbank.floor_db = config.floor_db;
  fbank.values = Grid(spec.frames, config.n_mels);
  const double scale = PowerScale(MakeWindow(spec.window, spec.frame_length));
  const double floor_power = std::pow(10.0, config.floor_db / 10.0);
  std::vector<double> power(spec.bins);
  for (std::size_t t = 0; t < spec.frames; ++t) {
    for (std::size_t k = 0; k < spec.bins; ++k) {
      power[k] = std::norm(spec.at(t, k)) * scale;
    }
    std::vector<double> mel = bank.Apply(power);
    for (int m = 0; m < config.n_mels; ++m) {
      fbank.values(t, m) = std::log(std::max(mel[m], floor_power));
    }
  }
  return fbank;
}

FbankMatrix ComputeFbank(const Waveform& wave, const FeatureConfig& config) {
  return ComputeFbank(Stft(wave, config.stft), config.fbank);
}

Waveform ResynthesizeMasked(const FbankMatrix& noisy_fbank, const Grid& mask,
                            const ComplexSpectrogram& donor_phase) {
  LCAM_REQUIRE(mask.SameShape(noisy_fbank.values), ErrorKind::kShapeMismatch,
               "mask shape ", mask.rows(), "x", mask.cols(),
               " != fbank shape ", noisy_fbank.frames(), "x",
               noisy_fbank.n_mels());
  LCAM_REQUIRE(donor_phase.frames == noisy_fbank.frames(),
               ErrorKind::kShapeMismatch, "donor phase has ", donor_phase.frames,
               " frames, fbank has ", noisy_fbank.frames());
  LCAM_REQUIRE(donor_phase.frame_length == noisy_fbank.frame_length &&
                   donor_phase.sample_rate == noisy_fbank.sample_rate,
               ErrorKind::kShapeMismatch,
               "donor phase frame_length/sample_rate differ from the fbank's");
  const int n_mels = static_cast<int>(noisy_fbank.n_mels());
  const MelFilterbank& bank = SharedFilterbank(
      n_mels, noisy_fbank.frame_length, noisy_fbank.sample_rate);
  const double amp_scale =
      1.0 / std::sqrt(PowerScale(MakeWindow(donor_phase.window,
                                            donor_phase.frame_length)));

  ComplexSpectrogram out = donor_phase;
  std::vector<double> mel(n_mels);
  for (std::size_t t = 0; t < out.frames; ++t) {
    for (int m = 0; m < n_mels; ++m) {
      const double gain = mask(t, m);
      mel[m] = std::exp(noisy_fbank.values(t, m)) * gain * gain;
    }
    std::vector<double> power = bank.Invert(mel);
    for (std::size_t k = 0; k < out.bins; ++k) {
      const std::complex<double> donor = donor_phase.at(t, k);
      const double magnitude = std::sqrt(power[k]) * amp_scale;
      const double abs_donor = std::abs(donor);
      out.at(t, k) = abs_donor > 0.0 ? donor * (magnitude / abs_donor)
                                     : std::complex<double>(magnitude, 0.0);
    }
  }
  return Istft(out);
}

}  // namespace lcam::dsp
