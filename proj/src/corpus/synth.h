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

#ifndef LCAM_CORPUS_SYNTH_H_
#define LCAM_CORPUS_SYNTH_H_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dsp/wave.h"

namespace lcam::corpus {

enum class InterferenceType { kNoise, kSpeech, kMusic };

inline constexpr InterferenceType kAllInterferenceTypes[] = {
    InterferenceType::kNoise, InterferenceType::kSpeech,
    InterferenceType::kMusic};

std::string ToString(InterferenceType type);
// Returns nullopt for anything other than noise, speech or music.
std::optional<InterferenceType> ParseInterferenceType(const std::string& text);

// Parameters of one synthetic talker: a glottal pulse train with jittered
// F0, shaped by a spectral tilt and a cascade of formant resonators.
struct SpeakerProfile {
  int speaker_id = 0;
  double f0_min_hz = 100.0;
  double f0_max_hz = 160.0;
  std::vector<double> formants_hz;    // strictly increasing
  std::vector<double> bandwidths_hz;  // one per formant
  double tilt = 0.9;     // one-pole lowpass coefficient on the source
  double jitter = 0.01;  // relative std of period-to-period F0 perturbation
  double breathiness = 0.02;  // aspiration noise level relative to pulses

  // Throws kInvalidArgument when formants are not increasing or any formant
  // (plus half its bandwidth) reaches Nyquist.
  void Validate(int sample_rate) const;
};

// Speaker ids at or above this value belong to the interference talkers,
// which never appear as target speakers.
inline constexpr int kInterfererIdBase = 1000;
inline constexpr int kNumInterfererProfiles = 8;

// Deterministic profile for `speaker_id` under a corpus seed.
SpeakerProfile MakeProfile(int speaker_id, uint64_t corpus_seed);

// Pseudo-syllabic voiced utterance, peak-normalized to kPeakLevel.
inline constexpr double kPeakLevel = 0.8;
dsp::Waveform SynthUtterance(const SpeakerProfile& profile, double duration_s,
                             uint64_t seed,
                             int sample_rate = dsp::kDefaultSampleRate);

// noise: coloured broadband noise with slow level drift. speech: an
// utterance of interference talker (seed mod kNumInterfererProfiles).
// music: two or three voices of enveloped harmonic notes on a scale.
dsp::Waveform SynthInterference(InterferenceType type, double duration_s,
                                uint64_t seed, uint64_t corpus_seed,
                                int sample_rate = dsp::kDefaultSampleRate);

// Ratio of geometric to arithmetic mean of the frame-averaged power
// spectrum (frame 400, hop 160, Hann), skipping the DC bin.
double SpectralFlatness(const dsp::Waveform& wave);
// Power-weighted mean frequency of the frame-averaged spectrum, in Hz.
double SpectralCentroid(const dsp::Waveform& wave);

}  // namespace lcam::corpus

#endif  // LCAM_CORPUS_SYNTH_H_
