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

#include "model/speaker_net.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "base/error.h"
#include "base/rng.h"

namespace lcam::model {

using ad::NamedTensors;
using ad::Shape;
using ad::Tensor;
using ad::Var;

void ModelConfig::Validate() const {
  LCAM_REQUIRE(n_mels > 0, ErrorKind::kConfig, "model.n_mels must be positive");
  for (int i = 0; i < kNumStages; ++i) {
    LCAM_REQUIRE(stage_channels[i] > 0, ErrorKind::kConfig,
                 "model.stage_channels[", i, "] must be positive");
    LCAM_REQUIRE(blocks_per_stage[i] > 0, ErrorKind::kConfig,
                 "model.blocks_per_stage[", i, "] must be positive");
  }
  LCAM_REQUIRE(embedding_dim > 0, ErrorKind::kConfig,
               "model.embedding_dim must be positive");
  LCAM_REQUIRE(n_speakers >= 2, ErrorKind::kConfig,
               "model.n_speakers must be >= 2, got ", n_speakers);
  LCAM_REQUIRE(se_reduction > 0, ErrorKind::kConfig,
               "model.se_reduction must be positive");
}

std::array<std::pair<int, int>, kNumStages> StageResolutions(int frames,
                                                             int n_mels) {
  std::array<std::pair<int, int>, kNumStages> res;
  int h = frames, w = n_mels;
  for (int s = 0; s < kNumStages; ++s) {
    if (s > 0) {
      // 3x3 kernel, padding 1, stride 2.
      h = (h - 1) / 2 + 1;
      w = (w - 1) / 2 + 1;
    }
    res[s] = {h, w};
  }
  return res;
}

namespace {

void HeUniform(Tensor* t, std::size_t fan_in, Rng* rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
  for (double& v : t->values()) v = rng->Uniform(-bound, bound);
}

void AddConvBn(NamedTensors* params, NamedTensors* buffers,
               const std::string& prefix, int cin, int cout, int k, Rng* rng) {
  Tensor w(Shape{std::size_t(cout), std::size_t(cin), std::size_t(k), std::size_t(k)});
  HeUniform(&w, static_cast<std::size_t>(cin) * k * k, rng);
  (*params)[prefix + ".conv.weight"] = std::move(w);
  (*params)[prefix + ".bn.gamma"] = Tensor(Shape{std::size_t(cout)}, 1.0);
  (*params)[prefix + ".bn.beta"] = Tensor(Shape{std::size_t(cout)}, 0.0);
  (*buffers)[prefix + ".bn.running_mean"] = Tensor(Shape{std::size_t(cout)}, 0.0);
  (*buffers)[prefix + ".bn.running_var"] = Tensor(Shape{std::size_t(cout)}, 1.0);
}

void AddLinear(NamedTensors* params, const std::string& prefix, int in, int out,
               Rng* rng, bool zero = false) {
  Tensor w(Shape{std::size_t(out), std::size_t(in)});
  if (!zero) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    for (double& v : w.values()) v = rng->Uniform(-bound, bound);
  }
  (*params)[prefix + ".weight"] = std::move(w);
  (*params)[prefix + ".bias"] = Tensor(Shape{std::size_t(out)}, 0.0);
}

std::string BlockPrefix(int stage, int block) {
  return "stage" + std::to_string(stage + 1) + ".block" + std::to_string(block);
}

int SeHidden(int channels, int reduction) {
  return std::max(1, channels / reduction);
}

}  // namespace

SpeakerNet::SpeakerNet(const ModelConfig& config) : config_(config) {
  config_.Validate();
  Rng rng(MixSeed(config_.seed, 0x5e7e7));
  const auto& ch = config_.stage_channels;
  AddConvBn(&parameters_, &buffers_, "stem", 1, ch[0], 3, &rng);
  int in = ch[0];
  for (int s = 0; s < kNumStages; ++s) {
    for (int b = 0; b < config_.blocks_per_stage[s]; ++b) {
      const std::string p = BlockPrefix(s, b);
      const int out = ch[s];
      AddConvBn(&parameters_, &buffers_, p + ".a", in, out, 3, &rng);
      AddConvBn(&parameters_, &buffers_, p + ".b", out, out, 3, &rng);
      const int hidden = SeHidden(out, config_.se_reduction);
      AddLinear(&parameters_, p + ".se.fc1", out, hidden, &rng);
      AddLinear(&parameters_, p + ".se.fc2", hidden, out, &rng);
      const bool stride2 = s > 0 && b == 0;
      if (stride2 || in != out) {
        AddConvBn(&parameters_, &buffers_, p + ".proj", in, out, 1, &rng);
      }
      in = out;
    }
  }
  AddLinear(&parameters_, "embedding", in, config_.embedding_dim, &rng);
  AddLinear(&parameters_, "head", config_.embedding_dim, config_.n_speakers, &rng);
}

SpeakerNet::SpeakerNet(const ModelConfig& config, NamedTensors parameters,
                       NamedTensors buffers)
    : SpeakerNet(config) {
  auto adopt = [](NamedTensors& mine, NamedTensors& given) {
    LCAM_REQUIRE(mine.size() == given.size(), ErrorKind::kFormat,
                 "parameter set has ", given.size(), " entries, model expects ",
                 mine.size());
    for (auto& [name, t] : mine) {
      auto it = given.find(name);
      LCAM_REQUIRE(it != given.end(), ErrorKind::kFormat,
                   "missing parameter '", name, "'");
      ad::CheckSameShape(t.shape(), it->second.shape(), "parameter " + name);
      t = std::move(it->second);
    }
  };
  adopt(parameters_, parameters);
  adopt(buffers_, buffers);
}

BoundParams SpeakerNet::Bind(ad::Tape& tape) const {
  BoundParams bound;
  for (const auto& [name, t] : parameters_) {
    Tensor leaf = t;
    leaf.set_requires_grad(true);
    bound.vars.emplace(name, tape.Leaf(std::move(leaf)));
  }
  return bound;
}

Var SpeakerNet::ConvBn(const BoundParams& b, const std::string& prefix,
                       const Var& x, int stride, int padding, Mode mode,
                       ForwardResult* result) const {
  Var y = ad::Conv2d(x, b.vars.at(prefix + ".conv.weight"), Var{},
                     {.stride = stride, .padding = padding});
  const bool training = mode == Mode::kTrain;
  ad::BatchNormStats stats;
  y = ad::BatchNorm2d(y, b.vars.at(prefix + ".bn.gamma"),
                      b.vars.at(prefix + ".bn.beta"),
                      buffers_.at(prefix + ".bn.running_mean"),
                      buffers_.at(prefix + ".bn.running_var"), training,
                      training ? &stats : nullptr);
  if (training) result->batch_stats.emplace_back(prefix + ".bn", std::move(stats));
  return y;
}

Var SpeakerNet::Block(const BoundParams& b, const std::string& prefix,
                      const Var& x, int stride, bool projection, Mode mode,
                      ForwardResult* result) const {
  Var h = ad::Relu(ConvBn(b, prefix + ".a", x, stride, 1, mode, result));
  h = ConvBn(b, prefix + ".b", h, 1, 1, mode, result);
  // Squeeze-and-excitation channel gate.
  Var z = ad::GlobalAvgPool(h);
  z = ad::Relu(ad::Linear(z, b.vars.at(prefix + ".se.fc1.weight"),
                          b.vars.at(prefix + ".se.fc1.bias")));
  z = ad::Sigmoid(ad::Linear(z, b.vars.at(prefix + ".se.fc2.weight"),
                             b.vars.at(prefix + ".se.fc2.bias")));
  h = ad::ScaleChannels(h, z);
  Var shortcut = projection ? ConvBn(b, prefix + ".proj", x, stride, 0, mode, result)
                            : x;
  return ad::Relu(ad::Add(h, shortcut));
}

ForwardResult SpeakerNet::Forward(const BoundParams& bound, const Var& input,
                                  Mode mode) const {
  const Shape& s = input.shape();
  LCAM_REQUIRE(s.size() == 4 && s[1] == 1, ErrorKind::kShapeMismatch,
               "model input must be [N,1,frames,n_mels], got ",
               ad::ShapeString(s));
  LCAM_REQUIRE(static_cast<int>(s[3]) == config_.n_mels,
               ErrorKind::kShapeMismatch, "feature n_mels ", s[3],
               " does not match model n_mels ", config_.n_mels);
  ForwardResult result;
  Var x = ad::Relu(ConvBn(bound, "stem", input, 1, 1, mode, &result));
  int in = config_.stage_channels[0];
  for (int st = 0; st < kNumStages; ++st) {
    for (int b = 0; b < config_.blocks_per_stage[st]; ++b) {
      const int stride = (st > 0 && b == 0) ? 2 : 1;
      const bool projection = stride != 1 || in != config_.stage_channels[st];
      x = Block(bound, BlockPrefix(st, b), x, stride, projection, mode, &result);
      in = config_.stage_channels[st];
    }
    result.taps[st] = x;
  }
  Var pooled = ad::GlobalAvgPool(x);
  result.embedding = ad::Linear(pooled, bound.vars.at("embedding.weight"),
                                bound.vars.at("embedding.bias"));
  result.logits = ad::Linear(ad::Relu(result.embedding),
                             bound.vars.at("head.weight"),
                             bound.vars.at("head.bias"));
  return result;
}

void SpeakerNet::UpdateRunningStats(
    const std::vector<std::pair<std::string, ad::BatchNormStats>>& stats,
    double momentum) {
  for (const auto& [prefix, st] : stats) {
    Tensor& mean = buffers_.at(prefix + ".running_mean");
    Tensor& var = buffers_.at(prefix + ".running_var");
    for (std::size_t i = 0; i < mean.size(); ++i) {
      mean[i] = (1.0 - momentum) * mean[i] + momentum * st.mean[i];
      var[i] = (1.0 - momentum) * var[i] + momentum * st.var[i];
    }
  }
}

Tensor FeaturesToInput(const std::vector<const dsp::FbankMatrix*>& batch) {
  LCAM_REQUIRE(!batch.empty(), ErrorKind::kInvalidArgument, "empty feature batch");
  const std::size_t t = batch[0]->frames(), f = batch[0]->n_mels();
  Tensor input(Shape{batch.size(), 1, t, f});
  for (std::size_t b = 0; b < batch.size(); ++b) {
    const dsp::FbankMatrix& fb = *batch[b];
    LCAM_REQUIRE(fb.frames() == t && fb.n_mels() == f, ErrorKind::kShapeMismatch,
                 "feature batch has mixed shapes (", fb.frames(), "x",
                 fb.n_mels(), " vs ", t, "x", f, ")");
    const double floor = fb.FloorLog();
    const double scale = 1.0 / std::abs(floor);
    const std::vector<double>& v = fb.values.data();
    double* dst = input.data() + b * t * f;
    for (std::size_t i = 0; i < t * f; ++i) dst[i] = (v[i] - floor) * scale;
  }
  return input;
}

Tensor FeaturesToInput(const dsp::FbankMatrix& features) {
  return FeaturesToInput(std::vector<const dsp::FbankMatrix*>{&features});
}

Inference Infer(const SpeakerNet& net, const dsp::FbankMatrix& features) {
  ad::Tape tape;
  BoundParams bound = net.Bind(tape);
  Var input = tape.Constant(FeaturesToInput(features));
  ForwardResult r = net.Forward(bound, input, Mode::kEval);
  Inference out;
  out.embedding = r.embedding.value().storage();
  out.logits = r.logits.value().storage();
  return out;
}

std::vector<Inference> InferBatch(
    const SpeakerNet& net, const std::vector<const dsp::FbankMatrix*>& batch) {
  ad::Tape tape;
  BoundParams bound = net.Bind(tape);
  Var input = tape.Constant(FeaturesToInput(batch));
  ForwardResult r = net.Forward(bound, input, Mode::kEval);
  const Tensor& e = r.embedding.value();
  const Tensor& l = r.logits.value();
  const std::size_t ed = e.dim(1), ld = l.dim(1);
  std::vector<Inference> out(batch.size());
  for (std::size_t b = 0; b < batch.size(); ++b) {
    out[b].embedding.assign(e.data() + b * ed, e.data() + (b + 1) * ed);
    out[b].logits.assign(l.data() + b * ld, l.data() + (b + 1) * ld);
  }
  return out;
}

std::vector<int> PredictTopK(const std::vector<double>& logits, int k) {
  LCAM_REQUIRE(k >= 1 && k <= static_cast<int>(logits.size()),
               ErrorKind::kInvalidArgument, "k=", k, " out of range [1, ",
               logits.size(), "]");
  std::vector<int> ids(logits.size());
  std::iota(ids.begin(), ids.end(), 0);
  std::stable_sort(ids.begin(), ids.end(),
                   [&](int a, int b) { return logits[a] > logits[b]; });
  ids.resize(k);
  return ids;
}

}  // namespace lcam::model
