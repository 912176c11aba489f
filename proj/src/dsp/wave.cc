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

#include "dsp/wave.h"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

#include "base/error.h"

namespace lcam::dsp {

void Waveform::Validate() const {
  LCAM_REQUIRE(sample_rate > 0, ErrorKind::kInvalidArgument,
               "sample_rate must be positive, got ", sample_rate);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    LCAM_REQUIRE(std::isfinite(samples[i]), ErrorKind::kInvalidArgument,
                 "non-finite sample at index ", i);
  }
}

double Energy(const Waveform& wave) {
  double e = 0.0;
  for (double s : wave.samples) e += s * s;
  return e;
}

double PeakAbs(const Waveform& wave) {
  double p = 0.0;
  for (double s : wave.samples) p = std::max(p, std::abs(s));
  return p;
}

namespace {

uint32_t ReadU32(const uint8_t* p) {
  return uint32_t(p[0]) | (uint32_t(p[1]) << 8) | (uint32_t(p[2]) << 16) |
         (uint32_t(p[3]) << 24);
}

uint16_t ReadU16(const uint8_t* p) { return uint16_t(p[0] | (p[1] << 8)); }

void PutU32(std::vector<uint8_t>* out, uint32_t v) {
  for (int i = 0; i < 4; ++i) out->push_back(uint8_t(v >> (8 * i)));
}

void PutU16(std::vector<uint8_t>* out, uint16_t v) {
  out->push_back(uint8_t(v));
  out->push_back(uint8_t(v >> 8));
}

}  // namespace

Waveform DecodeWav(const std::vector<uint8_t>& bytes) {
  LCAM_REQUIRE(bytes.size() >= 12 && std::memcmp(bytes.data(), "RIFF", 4) == 0 &&
                   std::memcmp(bytes.data() + 8, "WAVE", 4) == 0,
               ErrorKind::kFormat, "not a RIFF/WAVE file (riff_header)");
  std::size_t pos = 12;
  bool have_fmt = false;
  uint16_t channels = 0, bits = 0;
  uint32_t rate = 0;
  while (pos + 8 <= bytes.size()) {
    const uint8_t* chunk = bytes.data() + pos;
    uint32_t chunk_size = ReadU32(chunk + 4);
    std::size_t body = pos + 8;
    LCAM_REQUIRE(body + chunk_size <= bytes.size() ||
                     std::memcmp(chunk, "data", 4) == 0,
                 ErrorKind::kFormat, "truncated chunk '",
                 std::string(reinterpret_cast<const char*>(chunk), 4), "'");
    if (std::memcmp(chunk, "fmt ", 4) == 0) {
      LCAM_REQUIRE(chunk_size >= 16, ErrorKind::kFormat,
                   "fmt chunk too small (fmt_size=", chunk_size, ")");
      uint16_t format = ReadU16(bytes.data() + body);
      channels = ReadU16(bytes.data() + body + 2);
      rate = ReadU32(bytes.data() + body + 4);
      bits = ReadU16(bytes.data() + body + 14);
      LCAM_REQUIRE(format == 1, ErrorKind::kFormat,
                   "unsupported audio_format=", format, " (need 1, PCM)");
      LCAM_REQUIRE(channels == 1, ErrorKind::kFormat,
                   "unsupported num_channels=", channels, " (need 1)");
      LCAM_REQUIRE(bits == 16, ErrorKind::kFormat,
                   "unsupported bits_per_sample=", bits, " (need 16)");
      LCAM_REQUIRE(rate > 0, ErrorKind::kFormat, "invalid sample_rate=0");
      have_fmt = true;
    } else if (std::memcmp(chunk, "data", 4) == 0) {
      LCAM_REQUIRE(have_fmt, ErrorKind::kFormat, "data chunk before fmt chunk");
      LCAM_REQUIRE(body + chunk_size <= bytes.size(), ErrorKind::kFormat,
                   "truncated data chunk (data_size=", chunk_size,
                   ", available=", bytes.size() - body, ")");
      LCAM_REQUIRE(chunk_size % 2 == 0, ErrorKind::kFormat,
                   "odd data_size=", chunk_size, " for 16-bit samples");
      Waveform wave;
      wave.sample_rate = static_cast<int>(rate);
      wave.samples.resize(chunk_size / 2);
      for (std::size_t i = 0; i < wave.samples.size(); ++i) {
        auto v = static_cast<int16_t>(ReadU16(bytes.data() + body + 2 * i));
        wave.samples[i] = v / 32768.0;
      }
      return wave;
    }
    pos = body + chunk_size + (chunk_size & 1);
  }
  Fail(ErrorKind::kFormat, have_fmt ? "missing data chunk" : "missing fmt chunk");
}

Waveform ReadWav(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  LCAM_REQUIRE(in.good(), ErrorKind::kIo, "cannot open '", path, "'");
  std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                             std::istreambuf_iterator<char>());
  try {
    return DecodeWav(bytes);
  } catch (const Error& e) {
    Fail(e.kind(), path, ": ", e.what());
  }
}

std::vector<uint8_t> EncodeWav(const Waveform& wave) {
  wave.Validate();
  const uint32_t data_size = static_cast<uint32_t>(wave.samples.size() * 2);
  std::vector<uint8_t> out;
  out.reserve(44 + data_size);
  out.insert(out.end(), {'R', 'I', 'F', 'F'});
  PutU32(&out, 36 + data_size);
  out.insert(out.end(), {'W', 'A', 'V', 'E', 'f', 'm', 't', ' '});
  PutU32(&out, 16);
  PutU16(&out, 1);
  PutU16(&out, 1);
  PutU32(&out, static_cast<uint32_t>(wave.sample_rate));
  PutU32(&out, static_cast<uint32_t>(wave.sample_rate) * 2);
  PutU16(&out, 2);
  PutU16(&out, 16);
  out.insert(out.end(), {'d', 'a', 't', 'a'});
  PutU32(&out, data_size);
  for (double s : wave.samples) {
    double scaled = std::round(s * 32768.0);
    scaled = std::clamp(scaled, -32768.0, 32767.0);
    PutU16(&out, static_cast<uint16_t>(static_cast<int16_t>(scaled)));
  }
  return out;
}

void WriteWav(const Waveform& wave, const std::string& path) {
  std::vector<uint8_t> bytes = EncodeWav(wave);
  std::ofstream out(path, std::ios::binary);
  LCAM_REQUIRE(out.good(), ErrorKind::kIo, "cannot write '", path, "'");
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  LCAM_REQUIRE(out.good(), ErrorKind::kIo, "write failed for '", path, "'");
}

double Snr(const std::vector<double>& reference,
           const std::vector<double>& estimate) {
  LCAM_REQUIRE(reference.size() == estimate.size(), ErrorKind::kShapeMismatch,
               "SNR needs equal lengths (reference ", reference.size(),
               ", estimate ", estimate.size(), ")");
  double signal = 0.0, residual = 0.0;
  for (std::size_t i = 0; i < reference.size(); ++i) {
    double d = reference[i] - estimate[i];
    signal += reference[i] * reference[i];
    residual += d * d;
  }
  LCAM_REQUIRE(signal > 0.0, ErrorKind::kInvalidArgument,
               "undefined SNR: zero-energy reference");
  if (residual == 0.0) return kSnrCapDb;
  return std::min(kSnrCapDb, 10.0 * std::log10(signal / residual));
}

double Snr(const Waveform& reference, const Waveform& estimate) {
  return Snr(reference.samples, estimate.samples);
}

}  // namespace lcam::dsp
