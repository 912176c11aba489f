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

#include "corpus/synth.h"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "base/error.h"
#include "base/rng.h"
#include "dsp/stft.h"

namespace lcam::corpus {

namespace {

constexpr double kPi = std::numbers::pi;

void PeakNormalize(std::vector<double>* x, double level) {
  double peak = 0.0;
  for (double v : *x) peak = std::max(peak, std::abs(v));
  if (peak <= 0.0) return;
  const double g = level / peak;
  for (double& v : *x) v *= g;
}

// Two-pole resonator normalized to unit gain at DC.
struct Resonator {
  double a1 = 0.0, a2 = 0.0, g = 1.0, y1 = 0.0, y2 = 0.0;

  void Tune(double freq_hz, double bandwidth_hz, int sample_rate) {
    const double r = std::exp(-kPi * bandwidth_hz / sample_rate);
    a1 = 2.0 * r * std::cos(2.0 * kPi * freq_hz / sample_rate);
    a2 = -r * r;
    g = 1.0 - a1 - a2;
  }
  double Step(double x) {
    const double y = g * x + a1 * y1 + a2 * y2;
    y2 = y1;
    y1 = y;
    return y;
  }
};

// Raised-cosine onset and offset inside [0, length).
double SyllableEnvelope(double t, double length, double attack, double release) {
  if (t < 0.0 || t >= length) return 0.0;
  if (t < attack) return 0.5 - 0.5 * std::cos(kPi * t / attack);
  if (t > length - release) {
    return 0.5 - 0.5 * std::cos(kPi * (length - t) / release);
  }
  return 1.0;
}

std::vector<double> AveragePowerSpectrum(const dsp::Waveform& wave) {
  dsp::ComplexSpectrogram spec = dsp::Stft(wave, dsp::StftConfig{});
  std::vector<double> avg(spec.bins, 0.0);
  for (std::size_t t = 0; t < spec.frames; ++t) {
    for (std::size_t k = 0; k < spec.bins; ++k) avg[k] += std::norm(spec.at(t, k));
  }
  for (double& v : avg) v /= static_cast<double>(spec.frames);
  return avg;
}

}  // namespace

std::string ToString(InterferenceType type) {
  switch (type) {
    case InterferenceType::kNoise: return "noise";
    case InterferenceType::kSpeech: return "speech";
    case InterferenceType::kMusic: return "music";
  }
  return "unknown";
}

std::optional<InterferenceType> ParseInterferenceType(const std::string& text) {
  for (InterferenceType t : kAllInterferenceTypes) {
    if (ToString(t) == text) return t;
  }
  return std::nullopt;
}

void SpeakerProfile::Validate(int sample_rate) const {
  LCAM_REQUIRE(f0_min_hz > 0.0 && f0_min_hz <= f0_max_hz,
               ErrorKind::kInvalidArgument, "speaker ", speaker_id,
               ": bad F0 range [", f0_min_hz, ", ", f0_max_hz, "]");
  LCAM_REQUIRE(!formants_hz.empty() && formants_hz.size() == bandwidths_hz.size(),
               ErrorKind::kInvalidArgument, "speaker ", speaker_id,
               ": need one bandwidth per formant");
  const double nyquist = sample_rate / 2.0;
  for (std::size_t i = 0; i < formants_hz.size(); ++i) {
    LCAM_REQUIRE(formants_hz[i] > 0.0 && bandwidths_hz[i] > 0.0,
                 ErrorKind::kInvalidArgument, "speaker ", speaker_id,
                 ": formant ", i, " must be positive");
    LCAM_REQUIRE(i == 0 || formants_hz[i] > formants_hz[i - 1],
                 ErrorKind::kInvalidArgument, "speaker ", speaker_id,
                 ": formants must be strictly increasing");
    LCAM_REQUIRE(formants_hz[i] + bandwidths_hz[i] / 2.0 < nyquist,
                 ErrorKind::kInvalidArgument, "speaker ", speaker_id,
                 ": formant ", i, " at ", formants_hz[i],
                 " Hz is above Nyquist (", nyquist, " Hz)");
  }
  LCAM_REQUIRE(tilt >= 0.0 && tilt < 1.0, ErrorKind::kInvalidArgument,
               "speaker ", speaker_id, ": tilt must lie in [0, 1)");
  LCAM_REQUIRE(jitter >= 0.0 && breathiness >= 0.0, ErrorKind::kInvalidArgument,
               "speaker ", speaker_id, ": jitter and breathiness must be >= 0");
}

SpeakerProfile MakeProfile(int speaker_id, uint64_t corpus_seed) {
  Rng rng(MixSeed(corpus_seed, 0x9a0f11e5ULL, static_cast<uint64_t>(speaker_id)));
  SpeakerProfile p;
  p.speaker_id = speaker_id;
  const double f0_center = 85.0 * std::pow(260.0 / 85.0, rng.Uniform());
  p.f0_min_hz = f0_center * 0.85;
  p.f0_max_hz = f0_center * 1.15;
  // Vocal-tract length scaling shifts every formant together.
  const double tract = rng.Uniform(0.85, 1.2);
  const double f1 = rng.Uniform(300.0, 750.0) * tract;
  const double f2 = f1 + rng.Uniform(400.0, 1300.0) * tract;
  const double f3 = f2 + rng.Uniform(500.0, 1000.0) * tract;
  const double f4 = f3 + rng.Uniform(500.0, 1000.0) * tract;
  p.formants_hz = {f1, f2, f3, f4};
  p.bandwidths_hz = {rng.Uniform(60.0, 120.0), rng.Uniform(80.0, 150.0),
                     rng.Uniform(120.0, 200.0), rng.Uniform(150.0, 250.0)};
  p.tilt = rng.Uniform(0.85, 0.97);
  p.jitter = rng.Uniform(0.005, 0.02);
  p.breathiness = rng.Uniform(0.01, 0.05);
  return p;
}

dsp::Waveform SynthUtterance(const SpeakerProfile& profile, double duration_s,
                             uint64_t seed, int sample_rate) {
  LCAM_REQUIRE(duration_s >= 0.5, ErrorKind::kInvalidArgument,
               "utterance duration must be >= 0.5 s, got ", duration_s);
  profile.Validate(sample_rate);
  Rng rng(MixSeed(seed, static_cast<uint64_t>(profile.speaker_id), 0x5f11ab1eULL));
  const std::size_t n = static_cast<std::size_t>(std::llround(duration_s * sample_rate));
  std::vector<double> out(n, 0.0);
  const double sr = sample_rate;
  const std::size_t n_formants = profile.formants_hz.size();
  std::vector<Resonator> resonators(n_formants);

  double source_state = 0.0;
  double phase = 0.0;
  double period_scale = 1.0;
  double t0 = rng.Uniform(0.02, 0.15);
  while (t0 < duration_s) {
    const double length = rng.Uniform(0.12, 0.30);
    const double f0_start = rng.Uniform(profile.f0_min_hz, profile.f0_max_hz);
    const double f0_end = rng.Uniform(profile.f0_min_hz, profile.f0_max_hz);
    const double level = rng.Uniform(0.6, 1.0);
    for (std::size_t i = 0; i < n_formants; ++i) {
      // Per-syllable vowel quality moves each formant around its mean.
      double f = profile.formants_hz[i] * rng.Uniform(0.88, 1.12);
      f = std::min(f, sr / 2.0 - profile.bandwidths_hz[i]);
      resonators[i].Tune(f, profile.bandwidths_hz[i], sample_rate);
    }
    const std::size_t begin = static_cast<std::size_t>(t0 * sr);
    // Let the resonators ring out for 40 ms after the syllable.
    const std::size_t end =
        std::min(n, static_cast<std::size_t>((t0 + length + 0.04) * sr));
    for (std::size_t i = begin; i < end; ++i) {
      const double t = static_cast<double>(i) / sr - t0;
      const double env = SyllableEnvelope(t, length, 0.02, 0.03);
      const double f0 = f0_start + (f0_end - f0_start) * std::clamp(t / length, 0.0, 1.0);
      double pulse = 0.0;
      phase += f0 / sr * period_scale;
      if (phase >= 1.0) {
        phase -= 1.0;
        pulse = 1.0;
        period_scale = 1.0 + profile.jitter * rng.Normal();
      }
      const double excitation =
          env * level * (pulse + profile.breathiness * rng.Normal());
      source_state = excitation + profile.tilt * source_state;
      double y = source_state * (1.0 - profile.tilt);
      for (Resonator& r : resonators) y = r.Step(y);
      out[i] += y;
    }
    t0 += length;
    t0 += rng.Uniform() < 0.15 ? rng.Uniform(0.15, 0.3) : rng.Uniform(0.03, 0.12);
  }
  PeakNormalize(&out, kPeakLevel);
  return dsp::Waveform{std::move(out), sample_rate};
}

namespace {

std::vector<double> SynthNoise(std::size_t n, int sample_rate, Rng* rng) {
  std::vector<double> out(n);
  const double colour = rng->Uniform(-0.3, 0.5);
  const double drift_hz = rng->Uniform(0.2, 1.0);
  const double drift_phase = rng->Uniform(0.0, 2.0 * kPi);
  double prev = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    prev = rng->Normal() + colour * prev;
    const double t = static_cast<double>(i) / sample_rate;
    out[i] = prev * (1.0 + 0.3 * std::sin(2.0 * kPi * drift_hz * t + drift_phase));
  }
  return out;
}

std::vector<double> SynthMusic(std::size_t n, int sample_rate, Rng* rng) {
  static constexpr int kPentatonic[] = {0, 2, 4, 7, 9};
  std::vector<double> out(n, 0.0);
  const double sr = sample_rate;
  const int voices = 2 + static_cast<int>(rng->Index(2));
  const int root = 45 + static_cast<int>(rng->Index(12));
  for (int v = 0; v < voices; ++v) {
    const double brightness = rng->Uniform(0.8, 1.6);
    const double voice_level = rng->Uniform(0.5, 1.0);
    double t = 0.0;
    const double total = static_cast<double>(n) / sr;
    while (t < total) {
      const double length = rng->Uniform(0.12, 0.5);
      const int degree = static_cast<int>(rng->Index(10));
      const int midi = root + 12 * v + 12 * (degree / 5) + kPentatonic[degree % 5];
      const double f0 = 440.0 * std::pow(2.0, (midi - 69) / 12.0);
      const double decay = rng->Uniform(0.1, 0.4);
      const std::size_t begin = static_cast<std::size_t>(t * sr);
      const std::size_t end = std::min(n, static_cast<std::size_t>((t + length) * sr));
      for (int h = 1; h <= 6; ++h) {
        const double fh = f0 * h;
        if (fh >= sr / 2.0) break;
        const double amp = voice_level * std::pow(static_cast<double>(h), -brightness);
        const double w = 2.0 * kPi * fh / sr;
        for (std::size_t i = begin; i < end; ++i) {
          const double tt = static_cast<double>(i - begin) / sr;
          const double env = std::min(1.0, tt / 0.01) * std::exp(-tt / decay) *
                             std::min(1.0, (length - tt) / 0.01);
          out[i] += amp * env * std::sin(w * static_cast<double>(i - begin));
        }
      }
      t += length;
    }
  }
  return out;
}

}  // namespace

dsp::Waveform SynthInterference(InterferenceType type, double duration_s,
                                uint64_t seed, uint64_t corpus_seed,
                                int sample_rate) {
  LCAM_REQUIRE(duration_s > 0.0, ErrorKind::kInvalidArgument,
               "interference duration must be positive");
  if (type == InterferenceType::kSpeech) {
    const int id = kInterfererIdBase + static_cast<int>(seed % kNumInterfererProfiles);
    return SynthUtterance(MakeProfile(id, corpus_seed), std::max(duration_s, 0.5),
                          seed, sample_rate);
  }
  const std::size_t n = static_cast<std::size_t>(std::llround(duration_s * sample_rate));
  Rng rng(MixSeed(seed, static_cast<uint64_t>(type), 0x1e7f3ULL));
  std::vector<double> out = type == InterferenceType::kNoise
                                ? SynthNoise(n, sample_rate, &rng)
                                : SynthMusic(n, sample_rate, &rng);
  PeakNormalize(&out, kPeakLevel);
  return dsp::Waveform{std::move(out), sample_rate};
}

double SpectralFlatness(const dsp::Waveform& wave) {
  std::vector<double> p = AveragePowerSpectrum(wave);
  double log_sum = 0.0, sum = 0.0;
  for (std::size_t k = 1; k < p.size(); ++k) {
    log_sum += std::log(std::max(p[k], 1e-300));
    sum += p[k];
  }
  const double count = static_cast<double>(p.size() - 1);
  if (sum <= 0.0) return 0.0;
  return std::exp(log_sum / count) / (sum / count);
}

double SpectralCentroid(const dsp::Waveform& wave) {
  std::vector<double> p = AveragePowerSpectrum(wave);
  double num = 0.0, den = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) {
    const double hz = static_cast<double>(k) * wave.sample_rate / 400.0;
    num += hz * p[k];
    den += p[k];
  }
  return den > 0.0 ? num / den : 0.0;
}

}  // namespace lcam::corpus
