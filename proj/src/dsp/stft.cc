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

#include "dsp/stft.h"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>

#include "base/error.h"

namespace lcam::dsp {

namespace {

// FFTW planning is not thread-safe; execution on fresh arrays is. Plans are
// created once per length under a lock and reused with the new-array API.
struct PlanPair {
  fftw_plan forward = nullptr;
  fftw_plan inverse = nullptr;
};

class PlanCache {
 public:
  static PlanCache& Instance() {
    static PlanCache cache;
    return cache;
  }

  PlanPair Get(int n) {
    std::lock_guard<std::mutex> lock(mutex_);
    auto it = plans_.find(n);
    if (it != plans_.end()) return it->second;
    double* in = fftw_alloc_real(n);
    fftw_complex* out = fftw_alloc_complex(n / 2 + 1);
    PlanPair pair;
    pair.forward = fftw_plan_dft_r2c_1d(n, in, out, FFTW_ESTIMATE);
    pair.inverse = fftw_plan_dft_c2r_1d(n, out, in, FFTW_ESTIMATE);
    fftw_free(in);
    fftw_free(out);
    plans_[n] = pair;
    return pair;
  }

 private:
  std::mutex mutex_;
  std::map<int, PlanPair> plans_;
};

struct FftwFree {
  void operator()(void* p) const { fftw_free(p); }
};

}  // namespace

std::vector<double> MakeWindow(WindowType type, int length) {
  std::vector<double> w(length, 1.0);
  if (type == WindowType::kHann) {
    for (int n = 0; n < length; ++n) {
      w[n] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * n / length);
    }
  }
  return w;
}

std::size_t NumFrames(std::size_t length, const StftConfig& config) {
  if (length < static_cast<std::size_t>(config.frame_length)) return 0;
  return 1 + (length - config.frame_length) / config.hop;
}

ComplexSpectrogram Stft(const Waveform& wave, const StftConfig& config) {
  LCAM_REQUIRE(config.frame_length >= 2 && config.hop >= 1,
               ErrorKind::kInvalidArgument, "bad frame_length/hop (",
               config.frame_length, "/", config.hop, ")");
  LCAM_REQUIRE(wave.size() >= static_cast<std::size_t>(config.frame_length),
               ErrorKind::kInvalidArgument, "input too short: ", wave.size(),
               " samples < frame_length ", config.frame_length);
  const int n = config.frame_length;
  ComplexSpectrogram spec;
  spec.frames = NumFrames(wave.size(), config);
  spec.bins = static_cast<std::size_t>(n / 2 + 1);
  spec.frame_length = n;
  spec.hop = config.hop;
  spec.window = config.window;
  spec.sample_rate = wave.sample_rate;
  spec.signal_length = wave.size();
  spec.data.resize(spec.frames * spec.bins);

  const std::vector<double> window = MakeWindow(config.window, n);
  PlanPair plan = PlanCache::Instance().Get(n);
  std::unique_ptr<double, FftwFree> in(fftw_alloc_real(n));
  std::unique_ptr<fftw_complex, FftwFree> out(fftw_alloc_complex(spec.bins));
  for (std::size_t t = 0; t < spec.frames; ++t) {
    const double* src = wave.samples.data() + t * config.hop;
    for (int i = 0; i < n; ++i) in.get()[i] = src[i] * window[i];
    fftw_execute_dft_r2c(plan.forward, in.get(), out.get());
    for (std::size_t k = 0; k < spec.bins; ++k) {
      spec.at(t, k) = {out.get()[k][0], out.get()[k][1]};
    }
  }
  return spec;
}

Waveform Istft(const ComplexSpectrogram& spec) {
  LCAM_REQUIRE(spec.frames >= 1 && spec.frame_length >= 2 && spec.hop >= 1 &&
                   spec.bins == static_cast<std::size_t>(spec.frame_length / 2 + 1) &&
                   spec.data.size() == spec.frames * spec.bins,
               ErrorKind::kInvalidArgument, "malformed spectrogram");
  const int n = spec.frame_length;
  const std::vector<double> window = MakeWindow(spec.window, n);

  // Steady-state overlap energy over one hop period. A zero anywhere means
  // some interior sample can never be reconstructed.
  double min_steady = INFINITY, max_steady = 0.0;
  for (int r = 0; r < spec.hop; ++r) {
    double acc = 0.0;
    for (int i = r; i < n; i += spec.hop) acc += window[i] * window[i];
    min_steady = std::min(min_steady, acc);
    max_steady = std::max(max_steady, acc);
  }
  LCAM_REQUIRE(min_steady > 1e-12 * std::max(max_steady, 1.0),
               ErrorKind::kInvalidArgument,
               "window/hop violates reconstruction condition (frame_length=", n,
               ", hop=", spec.hop, ")");

  const std::size_t covered = (spec.frames - 1) * spec.hop + n;
  const std::size_t length = std::max(covered, spec.signal_length);
  std::vector<double> acc(length, 0.0), norm(length, 0.0);

  PlanPair plan = PlanCache::Instance().Get(n);
  std::unique_ptr<double, FftwFree> out(fftw_alloc_real(n));
  std::unique_ptr<fftw_complex, FftwFree> in(fftw_alloc_complex(spec.bins));
  for (std::size_t t = 0; t < spec.frames; ++t) {
    for (std::size_t k = 0; k < spec.bins; ++k) {
      in.get()[k][0] = spec.at(t, k).real();
      in.get()[k][1] = spec.at(t, k).imag();
    }
    // c2r ignores the imaginary parts of DC and Nyquist, which is the
    // Hermitian projection we want for externally edited spectra.
    fftw_execute_dft_c2r(plan.inverse, in.get(), out.get());
    const std::size_t offset = t * spec.hop;
    for (int i = 0; i < n; ++i) {
      acc[offset + i] += out.get()[i] / n * window[i];
      norm[offset + i] += window[i] * window[i];
    }
  }
  // Near the outer edges the summed window energy decays to zero; dividing
  // there amplifies any spectral edit, so those samples are left at zero.
  const double tiny = 1e-3 * max_steady;
  Waveform wave;
  wave.sample_rate = spec.sample_rate;
  wave.samples.resize(spec.signal_length > 0 ? spec.signal_length : covered);
  for (std::size_t i = 0; i < wave.samples.size(); ++i) {
    wave.samples[i] = norm[i] > tiny ? acc[i] / norm[i] : 0.0;
  }
  return wave;
}

}  // namespace lcam::dsp
