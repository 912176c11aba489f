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

#include <gtest/gtest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <numbers>

#include "base/error.h"
#include "base/rng.h"
#include "dsp/fbank.h"
#include "dsp/stft.h"
#include "dsp/wave.h"

namespace lcam::dsp {
namespace {

Waveform Sine(double hz, std::size_t n, double amp = 1.0, int sr = kDefaultSampleRate) {
  Waveform w{std::vector<double>(n), sr};
  for (std::size_t i = 0; i < n; ++i) {
    w.samples[i] = amp * std::sin(2.0 * std::numbers::pi * hz * i / sr);
  }
  return w;
}

Waveform Noise(std::size_t n, uint64_t seed, double scale = 0.3) {
  Rng rng(seed);
  Waveform w{std::vector<double>(n), kDefaultSampleRate};
  for (double& v : w.samples) v = scale * rng.Normal();
  return w;
}

// A harmonic tone with three formant-like peaks, standing in for voiced speech.
Waveform Vowel(std::size_t n) {
  Waveform w{std::vector<double>(n), kDefaultSampleRate};
  const double f0 = 140.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / kDefaultSampleRate;
    double s = 0.0;
    for (int h = 1; h * f0 < 7800.0; ++h) {
      const double f = h * f0;
      const double a = 1.0 / (1.0 + std::pow((f - 700.0) / 150.0, 2)) +
                       0.5 / (1.0 + std::pow((f - 1800.0) / 200.0, 2)) +
                       0.2 / (1.0 + std::pow((f - 2800.0) / 300.0, 2));
      s += a * std::sin(2.0 * std::numbers::pi * f * t);
    }
    w.samples[i] = 0.1 * s;
  }
  return w;
}

double MaxAbsDiff(const Waveform& a, const Waveform& b, std::size_t from, std::size_t to) {
  double m = 0.0;
  for (std::size_t i = from; i < to; ++i) {
    m = std::max(m, std::fabs(a.samples[i] - b.samples[i]));
  }
  return m;
}

TEST(Stft, FrameCountFollowsLengthAndHop) {
  const StftConfig cfg;
  EXPECT_EQ(NumFrames(400, cfg), 1u);
  EXPECT_EQ(NumFrames(16000, cfg), 1u + (16000 - 400) / 160);
  EXPECT_EQ(NumFrames(399, cfg), 0u);
  const ComplexSpectrogram s = Stft(Noise(16000, 1), cfg);
  EXPECT_EQ(s.frames, 98u);
  EXPECT_EQ(s.bins, 201u);
}

TEST(Stft, ShortInputIsRejected) {
  try {
    Stft(Noise(100, 1));
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("input too short"), std::string::npos);
  }
}

TEST(Stft, DcWithRectangularWindowStaysInBinZero) {
  Waveform dc{std::vector<double>(1600, 0.5), kDefaultSampleRate};
  const ComplexSpectrogram s = Stft(dc, {.frame_length = 400, .hop = 160,
                                         .window = WindowType::kRectangular});
  for (std::size_t t = 0; t < s.frames; ++t) {
    EXPECT_NEAR(std::abs(s.at(t, 0)), 200.0, 1e-9);
    for (std::size_t k = 1; k < s.bins; ++k) EXPECT_LT(std::abs(s.at(t, k)), 1e-9);
  }
}

TEST(Stft, BinAlignedSinusoidPeaksAtItsBin) {
  const int k = 25;  // 25 * 16000 / 400 = 1000 Hz
  const ComplexSpectrogram s = Stft(Sine(k * 40.0, 8000));
  for (std::size_t t = 0; t < s.frames; ++t) {
    std::size_t best = 0;
    for (std::size_t b = 1; b < s.bins; ++b) {
      if (std::abs(s.at(t, b)) > std::abs(s.at(t, best))) best = b;
    }
    EXPECT_EQ(best, static_cast<std::size_t>(k));
  }
}

TEST(Istft, RoundTripOfRandomSignal) {
  const Waveform x = Noise(16000, 7);
  const Waveform y = Istft(Stft(x));
  ASSERT_EQ(y.size(), x.size());
  // Interior samples are covered by full window overlap.
  EXPECT_LE(MaxAbsDiff(x, y, 400, 16000 - 400), 1e-6);
}

TEST(Istft, RoundTripWhenLengthIsMultipleOfHop) {
  const Waveform x = Noise(160 * 120, 8, 1.0);
  const Waveform y = Istft(Stft(x));
  EXPECT_LE(MaxAbsDiff(x, y, 400, x.size() - 400), 1e-6);
}

TEST(Istft, SilenceStaysSilent) {
  Waveform z{std::vector<double>(4000, 0.0), kDefaultSampleRate};
  const Waveform y = Istft(Stft(z));
  for (double v : y.samples) EXPECT_EQ(v, 0.0);
}

TEST(Istft, ForeignPhaseKeepsCleanLength) {
  const Waveform clean = Vowel(12345);
  const Waveform other = Noise(12345, 3);
  const ComplexSpectrogram a = Stft(clean);
  ComplexSpectrogram b = Stft(other);
  for (std::size_t i = 0; i < b.data.size(); ++i) {
    const double mag = std::abs(a.data[i]);
    const double ph = std::arg(b.data[i]);
    b.data[i] = std::polar(mag, ph);
  }
  EXPECT_EQ(Istft(b).size(), clean.size());
}

TEST(Istft, HopBeyondFrameViolatesReconstruction) {
  EXPECT_THROW(Istft(Stft(Noise(4000, 1), {.frame_length = 200, .hop = 400})), Error);
}

TEST(Fbank, SilenceSitsAtTheFloor) {
  Waveform z{std::vector<double>(3200, 0.0), kDefaultSampleRate};
  const FbankMatrix f = ComputeFbank(z);
  for (double v : f.values.data()) EXPECT_DOUBLE_EQ(v, f.FloorLog());
  EXPECT_NEAR(f.FloorLog(), -80.0 / 10.0 * std::log(10.0), 1e-12);
}

TEST(Fbank, DoublingAmplitudeAddsLogFour) {
  const Waveform x = Vowel(8000);
  Waveform x2 = x;
  for (double& v : x2.samples) v *= 2.0;
  const FbankMatrix a = ComputeFbank(x), b = ComputeFbank(x2);
  for (std::size_t i = 0; i < a.values.size(); ++i) {
    if (a.values.data()[i] > a.FloorLog() + 2.0) {
      EXPECT_NEAR(b.values.data()[i] - a.values.data()[i], std::log(4.0), 1e-9);
    }
  }
}

TEST(Fbank, ScalingUpNeverDecreasesAnyCell) {
  const Waveform x = Noise(6400, 4, 0.01);
  for (double g : {1.01, 1.5, 3.0}) {
    Waveform y = x;
    for (double& v : y.samples) v *= g;
    const FbankMatrix a = ComputeFbank(x), b = ComputeFbank(y);
    for (std::size_t i = 0; i < a.values.size(); ++i) {
      EXPECT_GE(b.values.data()[i], a.values.data()[i]);
    }
  }
}

// Expected bands come from the band centre frequencies alone
// (tests/oracles/mel_centers.py).
TEST(Fbank, ToneLandsInNearestCentreBand) {
  const struct {
    double hz;
    std::size_t band;
  } cases[] = {{250.0, 4}, {440.0, 7}, {1000.0, 13}, {2000.0, 21}, {3500.0, 28}, {6000.0, 36}};
  for (const auto& c : cases) {
    const FbankMatrix f = ComputeFbank(Sine(c.hz, 8000, 0.5));
    const std::size_t t = f.frames() / 2;
    std::size_t best = 0;
    for (std::size_t m = 1; m < f.n_mels(); ++m) {
      if (f.values(t, m) > f.values(t, best)) best = m;
    }
    EXPECT_EQ(best, c.band) << c.hz << " Hz";
  }
}

TEST(Fbank, CentreFrequenciesMatchMelSpacing) {
  const MelFilterbank& bank = SharedFilterbank(40, 400, 16000);
  const double top = HzToMel(8000.0);
  for (int m = 0; m < 40; ++m) {
    EXPECT_NEAR(bank.CenterHz(m), MelToHz(top * (m + 1) / 41.0), 1e-9);
  }
  EXPECT_NEAR(MelToHz(HzToMel(1234.5)), 1234.5, 1e-9);
}

TEST(Fbank, TooManyMelsForTheFrameIsRejected) {
  EXPECT_THROW(MelFilterbank(300, 400, 16000), Error);
  EXPECT_THROW(MelFilterbank(1, 400, 16000), Error);
}

TEST(Resynthesis, AllOnesMaskOnCleanSpeechIsLossyButBounded) {
  // Measured once through the mel pseudo-inverse chain: 8.71 dB on this
  // signal. The filterbank discards fine spectral detail, so the chain
  // cannot approach transparency. The frozen bound leaves a 1.5 dB margin.
  const Waveform x = Vowel(32000);
  const ComplexSpectrogram spec = Stft(x);
  const FbankMatrix f = ComputeFbank(spec);
  const Waveform y = ResynthesizeMasked(f, Grid(f.frames(), f.n_mels(), 1.0), spec);
  ASSERT_EQ(y.size(), x.size());
  EXPECT_GE(Snr(x, y), 7.2);
}

TEST(Resynthesis, ZeroMaskIsNearSilent) {
  const Waveform x = Vowel(16000);
  const ComplexSpectrogram spec = Stft(x);
  const FbankMatrix f = ComputeFbank(spec);
  const Waveform y = ResynthesizeMasked(f, Grid(f.frames(), f.n_mels(), 0.0), spec);
  const double mean_power = Energy(y) / static_cast<double>(y.size());
  EXPECT_LT(10.0 * std::log10(mean_power + 1e-300), -60.0);
}

TEST(Resynthesis, SmallerMaskNeverAddsEnergy) {
  const Waveform x = Vowel(16000);
  const ComplexSpectrogram spec = Stft(x);
  const FbankMatrix f = ComputeFbank(spec);
  Rng rng(9);
  Grid a(f.frames(), f.n_mels()), b(f.frames(), f.n_mels());
  for (std::size_t i = 0; i < a.size(); ++i) {
    b.data()[i] = rng.Uniform();
    a.data()[i] = b.data()[i] * rng.Uniform();
  }
  EXPECT_LE(Energy(ResynthesizeMasked(f, a, spec)), Energy(ResynthesizeMasked(f, b, spec)));
}

TEST(Resynthesis, ShapeMismatchIsRejected) {
  const Waveform x = Vowel(8000);
  const ComplexSpectrogram spec = Stft(x);
  const FbankMatrix f = ComputeFbank(spec);
  EXPECT_THROW(ResynthesizeMasked(f, Grid(f.frames() + 1, f.n_mels(), 1.0), spec), Error);
}

TEST(Snr, IdenticalSignalsHitTheCap) {
  const Waveform x = Vowel(4000);
  EXPECT_EQ(Snr(x, x), kSnrCapDb);
}

TEST(Snr, NegatedSignalIsMinusSixDb) {
  const Waveform x = Vowel(4000);
  Waveform y = x;
  for (double& v : y.samples) v = -v;
  EXPECT_NEAR(Snr(x, y), 10.0 * std::log10(0.25), 1e-9);
}

TEST(Snr, SineInWhiteNoiseMatchesPowerRatio) {
  const Waveform x = Sine(440.0, 160000);
  for (double p : {0.01, 0.1, 0.5}) {
    Waveform y = x;
    Rng rng(static_cast<uint64_t>(p * 1000));
    for (double& v : y.samples) v += std::sqrt(p) * rng.Normal();
    EXPECT_NEAR(Snr(x, y), 10.0 * std::log10(0.5 / p), 0.5) << p;
  }
}

TEST(Snr, InvariantToCommonScaling) {
  const Waveform x = Vowel(4000);
  Waveform y = Noise(4000, 2);
  for (std::size_t i = 0; i < y.size(); ++i) y.samples[i] += x.samples[i];
  Waveform x3 = x, y3 = y;
  for (double& v : x3.samples) v *= 3.0;
  for (double& v : y3.samples) v *= 3.0;
  EXPECT_NEAR(Snr(x, y), Snr(x3, y3), 1e-9);
}

TEST(Snr, ZeroReferenceIsUndefined) {
  const std::vector<double> z(100, 0.0), y(100, 1.0);
  try {
    Snr(z, y);
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("undefined SNR"), std::string::npos);
  }
}

TEST(Wav, RoundTripIsBitExact) {
  Waveform x = Noise(5000, 11, 0.4);
  // Values already on the 16-bit grid survive exactly.
  for (double& v : x.samples) v = std::round(std::clamp(v, -1.0, 0.999) * 32768.0) / 32768.0;
  const std::vector<uint8_t> bytes = EncodeWav(x);
  const Waveform y = DecodeWav(bytes);
  EXPECT_EQ(y.sample_rate, x.sample_rate);
  EXPECT_EQ(y.samples, x.samples);
  EXPECT_EQ(EncodeWav(y), bytes);
  const std::string path =
      (std::filesystem::temp_directory_path() / "lcam_dsp_test.wav").string();
  WriteWav(x, path);
  EXPECT_EQ(ReadWav(path).samples, x.samples);
  std::filesystem::remove(path);
}

TEST(Wav, NonPcmEncodingNamesTheField) {
  std::vector<uint8_t> bytes = EncodeWav(Noise(100, 1));
  bytes[20] = 3;  // audio format: IEEE float
  try {
    DecodeWav(bytes);
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("format"), std::string::npos) << e.what();
  }
  std::vector<uint8_t> stereo = EncodeWav(Noise(100, 1));
  stereo[22] = 2;
  try {
    DecodeWav(stereo);
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("channel"), std::string::npos) << e.what();
  }
}

TEST(Waveform, ValidateRejectsNonFiniteAndBadRate) {
  Waveform w{{0.0, NAN}, 16000};
  EXPECT_THROW(w.Validate(), Error);
  Waveform r{{0.0}, 0};
  EXPECT_THROW(r.Validate(), Error);
}

}  // namespace
}  // namespace lcam::dsp
