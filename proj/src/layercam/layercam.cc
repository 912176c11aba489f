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

#include "layercam/layercam.h"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <sstream>

#include "ad/ops.h"
#include "ad/tape.h"
#include "base/bytes.h"
#include "base/error.h"

namespace lcam::layercam {

std::string ToString(MapSource source) {
  switch (source) {
    case MapSource::kStage1: return "stage1";
    case MapSource::kStage2: return "stage2";
    case MapSource::kStage3: return "stage3";
    case MapSource::kStage4: return "stage4";
    case MapSource::kFused: return "fused";
  }
  return "?";
}

std::optional<MapSource> ParseMapSource(const std::string& text) {
  for (MapSource s : {MapSource::kStage1, MapSource::kStage2, MapSource::kStage3,
                      MapSource::kStage4, MapSource::kFused}) {
    if (ToString(s) == text) return s;
  }
  return std::nullopt;
}

Grid LayerSaliency(const ad::Tensor& activation, const ad::Tensor& gradient,
                   std::size_t index) {
  ad::CheckSameShape(activation.shape(), gradient.shape(), "layer saliency gradient");
  LCAM_REQUIRE(activation.rank() == 4, ErrorKind::kShapeMismatch,
               "layer saliency needs [N,C,H,W] activations, got ",
               ad::ShapeString(activation.shape()));
  const std::size_t c = activation.dim(1), h = activation.dim(2),
                    w = activation.dim(3);
  LCAM_REQUIRE(index < activation.dim(0), ErrorKind::kInvalidArgument,
               "batch index ", index, " out of range");
  Grid map(h, w, 0.0);
  const std::size_t hw = h * w;
  for (std::size_t ch = 0; ch < c; ++ch) {
    const double* a = activation.data() + (index * c + ch) * hw;
    const double* g = gradient.data() + (index * c + ch) * hw;
    double* m = map.data().data();
    for (std::size_t i = 0; i < hw; ++i) m[i] += std::max(g[i], 0.0) * a[i];
  }
  for (double& v : map.data()) v = std::max(v, 0.0);
  return map;
}

Grid Normalize01(const Grid& map) {
  double lo = 0.0, hi = 0.0;
  bool first = true;
  for (double v : map.data()) {
    LCAM_REQUIRE(std::isfinite(v), ErrorKind::kInvalidArgument,
                 "cannot normalize a map with non-finite values");
    if (first) {
      lo = hi = v;
      first = false;
    }
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  Grid out(map.rows(), map.cols(), 0.0);
  if (hi > lo) {
    const double inv = 1.0 / (hi - lo);
    for (std::size_t i = 0; i < map.size(); ++i) {
      out.data()[i] = (map.data()[i] - lo) * inv;
    }
  }
  return out;
}

Grid UpsampleTo(const Grid& map, std::size_t rows, std::size_t cols) {
  LCAM_REQUIRE(!map.empty(), ErrorKind::kInvalidArgument, "cannot upsample an empty map");
  LCAM_REQUIRE(rows >= map.rows() && cols >= map.cols(), ErrorKind::kInvalidArgument,
               "upsample target ", rows, "x", cols, " is smaller than the source ",
               map.rows(), "x", map.cols());
  if (rows == map.rows() && cols == map.cols()) return map;
  // Source coordinate of each target index under corner alignment.
  auto coords = [](std::size_t src, std::size_t dst) {
    std::vector<std::pair<std::size_t, double>> out(dst);
    for (std::size_t i = 0; i < dst; ++i) {
      const double pos = dst == 1 ? 0.0
                                  : static_cast<double>(i) * (src - 1) / (dst - 1);
      std::size_t i0 = static_cast<std::size_t>(std::floor(pos));
      if (i0 >= src - 1) i0 = src > 1 ? src - 2 : 0;
      const double frac = src == 1 ? 0.0 : pos - static_cast<double>(i0);
      out[i] = {i0, frac};
    }
    return out;
  };
  const auto rc = coords(map.rows(), rows);
  const auto cc = coords(map.cols(), cols);
  const std::size_t last_r = map.rows() - 1, last_c = map.cols() - 1;
  Grid out(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    const auto [r0, fr] = rc[r];
    const std::size_t r1 = std::min(r0 + 1, last_r);
    for (std::size_t c = 0; c < cols; ++c) {
      const auto [c0, fc] = cc[c];
      const std::size_t c1 = std::min(c0 + 1, last_c);
      const double top = map(r0, c0) * (1.0 - fc) + map(r0, c1) * fc;
      const double bottom = map(r1, c0) * (1.0 - fc) + map(r1, c1) * fc;
      out(r, c) = top * (1.0 - fr) + bottom * fr;
    }
  }
  return out;
}

Grid MeanOfMaps(const std::vector<Grid>& maps) {
  LCAM_REQUIRE(!maps.empty(), ErrorKind::kInvalidArgument, "no maps to average");
  Grid out(maps[0].rows(), maps[0].cols(), 0.0);
  for (const Grid& m : maps) {
    LCAM_REQUIRE(m.SameShape(out), ErrorKind::kShapeMismatch,
                 "maps to average differ in shape");
    for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] += m.data()[i];
  }
  const double n = static_cast<double>(maps.size());
  for (double& v : out.data()) v /= n;
  return out;
}

std::vector<SaliencyResult> FusedSaliencyBatch(
    const model::SpeakerNet& net, const std::vector<const dsp::FbankMatrix*>& batch,
    const std::vector<int>& target_classes) {
  LCAM_REQUIRE(batch.size() == target_classes.size() && !batch.empty(),
               ErrorKind::kInvalidArgument, "saliency batch has ", batch.size(),
               " utterances and ", target_classes.size(), " target classes");
  const int n_classes = net.config().n_speakers;
  for (int c : target_classes) {
    LCAM_REQUIRE(c >= 0 && c < n_classes, ErrorKind::kInvalidArgument,
                 "target class ", c, " outside [0, ", n_classes, ")");
  }
  ad::Tape tape;
  model::BoundParams bound = net.Bind(tape);
  ad::Var input = tape.Constant(model::FeaturesToInput(batch));
  model::ForwardResult fr = net.Forward(bound, input, model::Mode::kEval);
  // Eval-mode samples are independent, so the gradient of the summed target
  // logits with respect to sample b's activations is that of logit b alone.
  ad::Var score;
  for (std::size_t b = 0; b < batch.size(); ++b) {
    ad::Var pick = ad::Pick(fr.logits, b * n_classes + target_classes[b]);
    score = b == 0 ? pick : ad::Add(score, pick);
  }
  ad::GradientMap grads = tape.Backward(score, fr.taps);

  const std::size_t rows = batch[0]->frames(), cols = batch[0]->n_mels();
  const ad::Tensor& logits = fr.logits.value();
  std::vector<SaliencyResult> out(batch.size());
  for (std::size_t b = 0; b < batch.size(); ++b) {
    SaliencyResult& r = out[b];
    std::vector<Grid> normalized;
    for (int s = 0; s < model::kNumStages; ++s) {
      Grid raw = LayerSaliency(fr.taps[s].value(), grads.at(fr.taps[s]), b);
      r.stages[s] = SaliencyMap{Normalize01(UpsampleTo(raw, rows, cols)),
                                target_classes[b], static_cast<MapSource>(s)};
      normalized.push_back(r.stages[s].values);
    }
    r.fused = SaliencyMap{MeanOfMaps(normalized), target_classes[b], MapSource::kFused};
    r.logits.assign(logits.data() + b * n_classes, logits.data() + (b + 1) * n_classes);
  }
  return out;
}

SaliencyResult FusedSaliency(const model::SpeakerNet& net,
                             const dsp::FbankMatrix& features, int target_class) {
  return FusedSaliencyBatch(net, {&features}, {target_class}).front();
}

std::vector<uint8_t> EncodeGrid(const SaliencyMap& map) {
  std::ostringstream header;
  header << "LCAMGRID rows=" << map.values.rows() << " cols=" << map.values.cols()
         << " class=" << map.target_class << " source=" << ToString(map.source)
         << "\n";
  ByteWriter w;
  const std::string h = header.str();
  w.Raw(h.data(), h.size());
  for (double v : map.values.data()) w.F32(static_cast<float>(v));
  return std::move(w.bytes());
}

SaliencyMap DecodeGrid(const std::vector<uint8_t>& bytes) {
  const auto nl = std::find(bytes.begin(), bytes.end(), '\n');
  LCAM_REQUIRE(nl != bytes.end(), ErrorKind::kFormat, "grid file lacks a header line");
  std::istringstream is(std::string(bytes.begin(), nl));
  std::string magic, field;
  is >> magic;
  LCAM_REQUIRE(magic == "LCAMGRID", ErrorKind::kFormat, "not a grid file");
  long long rows = -1, cols = -1, cls = -1;
  std::optional<MapSource> source;
  while (is >> field) {
    const auto eq = field.find('=');
    LCAM_REQUIRE(eq != std::string::npos, ErrorKind::kFormat,
                 "malformed grid header field '", field, "'");
    const std::string key = field.substr(0, eq), value = field.substr(eq + 1);
    try {
      if (key == "rows") rows = std::stoll(value);
      else if (key == "cols") cols = std::stoll(value);
      else if (key == "class") cls = std::stoll(value);
      else if (key == "source") source = ParseMapSource(value);
      else Fail(ErrorKind::kFormat, "unknown grid header field '", key, "'");
    } catch (const std::logic_error&) {
      Fail(ErrorKind::kFormat, "bad grid header value '", field, "'");
    }
  }
  LCAM_REQUIRE(rows > 0 && cols > 0 && cls >= 0 && source.has_value(),
               ErrorKind::kFormat, "incomplete grid header");
  const std::size_t offset = static_cast<std::size_t>(nl - bytes.begin()) + 1;
  const std::size_t count = static_cast<std::size_t>(rows * cols);
  LCAM_REQUIRE(bytes.size() - offset == count * sizeof(float), ErrorKind::kFormat,
               "grid payload holds ", bytes.size() - offset, " bytes, expected ",
               count * sizeof(float));
  SaliencyMap map;
  map.values = Grid(static_cast<std::size_t>(rows), static_cast<std::size_t>(cols));
  map.target_class = static_cast<int>(cls);
  map.source = *source;
  for (std::size_t i = 0; i < count; ++i) {
    float f;
    std::memcpy(&f, bytes.data() + offset + i * sizeof(float), sizeof f);
    map.values.data()[i] = f;
  }
  return map;
}

void WriteGridFile(const SaliencyMap& map, const std::string& path) {
  WriteFileBytes(path, EncodeGrid(map));
}

SaliencyMap ReadGridFile(const std::string& path) {
  try {
    return DecodeGrid(ReadFileBytes(path));
  } catch (const Error& e) {
    Fail(e.kind(), path, ": ", e.what());
  }
}

std::vector<uint8_t> EncodePgm(const Grid& map) {
  const std::size_t width = map.rows(), height = map.cols();
  const std::string header =
      "P5\n" + std::to_string(width) + " " + std::to_string(height) + "\n255\n";
  std::vector<uint8_t> out(header.begin(), header.end());
  out.reserve(header.size() + width * height);
  for (std::size_t y = 0; y < height; ++y) {
    const std::size_t mel = height - 1 - y;
    for (std::size_t x = 0; x < width; ++x) {
      const double v = std::clamp(map(x, mel), 0.0, 1.0);
      out.push_back(static_cast<uint8_t>(std::lround(v * 255.0)));
    }
  }
  return out;
}

void WritePgmFile(const Grid& map, const std::string& path) {
  WriteFileBytes(path, EncodePgm(map));
}

}  // namespace lcam::layercam
