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

#include "augment/train.h"

#include <chrono>
#include <cmath>
#include <numeric>

#include "ad/optim.h"
#include "base/error.h"
#include "base/rng.h"

namespace lcam::augment {

using ad::Tensor;
using ad::Var;
using corpus::InterferenceType;
using corpus::ManifestRecord;

std::string ToString(TrainMode mode) {
  switch (mode) {
    case TrainMode::kBase: return "base";
    case TrainMode::kVanillaDa: return "vanilla_da";
    case TrainMode::kActDa: return "act_da";
  }
  return "?";
}

std::optional<TrainMode> ParseTrainMode(const std::string& text) {
  for (TrainMode m : {TrainMode::kBase, TrainMode::kVanillaDa, TrainMode::kActDa}) {
    if (ToString(m) == text) return m;
  }
  return std::nullopt;
}

void TrainConfig::Validate() const {
  LCAM_REQUIRE(epochs > 0, ErrorKind::kConfig, "train.epochs must be positive");
  LCAM_REQUIRE(batch_size > 0, ErrorKind::kConfig,
               "train.batch_size must be positive");
  LCAM_REQUIRE(learning_rate > 0.0, ErrorKind::kConfig,
               "train.learning_rate must be positive");
  LCAM_REQUIRE(momentum >= 0.0 && momentum < 1.0, ErrorKind::kConfig,
               "train.momentum must lie in [0, 1)");
  LCAM_REQUIRE(crop_frames >= 0, ErrorKind::kConfig,
               "train.crop_frames must be >= 0");
  LCAM_REQUIRE(mode == TrainMode::kBase || interference.has_value(),
               ErrorKind::kConfig, "train mode ", ToString(mode),
               " needs an interference type");
  mix.Validate();
}

namespace {

LossResult ComputeLoss(const model::SpeakerNet& net, const Tensor& x,
                       const Tensor* x_aug, bool with_distance,
                       const std::vector<int>& labels, model::Mode mode) {
  ad::Tape tape;
  model::BoundParams bound = net.Bind(tape);
  LossResult result;
  model::ForwardResult clean = net.Forward(bound, tape.Constant(x), mode);
  Var loss = ad::SoftmaxCrossEntropy(clean.logits, labels);
  result.terms.ce_clean = loss.value().item();
  result.clean_logits = clean.logits.value().storage();
  result.batch_stats = std::move(clean.batch_stats);
  if (x_aug != nullptr) {
    model::ForwardResult aug = net.Forward(bound, tape.Constant(*x_aug), mode);
    Var ce_aug = ad::SoftmaxCrossEntropy(aug.logits, labels);
    result.terms.ce_augmented = ce_aug.value().item();
    loss = ad::Add(loss, ce_aug);
    if (with_distance) {
      Var d = ad::SquaredL2Distance(clean.embedding, aug.embedding);
      result.terms.distance = d.value().item();
      loss = ad::Add(loss, d);
    }
    for (auto& s : aug.batch_stats) result.batch_stats.push_back(std::move(s));
  }
  result.terms.total = loss.value().item();

  std::vector<Var> wrt;
  wrt.reserve(bound.vars.size());
  for (const auto& [name, v] : bound.vars) wrt.push_back(v);
  ad::GradientMap grads = tape.Backward(loss, wrt);
  for (const auto& [name, v] : bound.vars) result.grads[name] = grads.at(v);
  return result;
}

void CheckBatch(const Tensor& x, const Tensor& x_aug,
                const std::vector<int>& labels) {
  ad::CheckSameShape(x.shape(), x_aug.shape(), "augmented input");
  LCAM_REQUIRE(x.rank() == 4 && x.dim(0) == labels.size(),
               ErrorKind::kShapeMismatch, "batch of ", x.rank() == 4 ? x.dim(0) : 0,
               " inputs has ", labels.size(), " labels");
}

}  // namespace

LossResult BaseLoss(const model::SpeakerNet& net, const Tensor& x,
                    const std::vector<int>& labels, model::Mode mode) {
  return ComputeLoss(net, x, nullptr, false, labels, mode);
}

LossResult VanillaDaLoss(const model::SpeakerNet& net, const Tensor& x,
                         const Tensor& x_aug, const std::vector<int>& labels,
                         model::Mode mode) {
  CheckBatch(x, x_aug, labels);
  return ComputeLoss(net, x, &x_aug, false, labels, mode);
}

LossResult ActDaLoss(const model::SpeakerNet& net, const Tensor& x,
                     const Tensor& x_aug, const std::vector<int>& labels,
                     model::Mode mode) {
  CheckBatch(x, x_aug, labels);
  return ComputeLoss(net, x, &x_aug, true, labels, mode);
}

dsp::FbankMatrix CropFrames(const dsp::FbankMatrix& full, std::size_t start,
                            std::size_t frames) {
  LCAM_REQUIRE(start + frames <= full.frames(), ErrorKind::kInvalidArgument,
               "crop [", start, ", ", start + frames, ") exceeds ", full.frames(),
               " frames");
  dsp::FbankMatrix out = full;
  out.values = Grid(frames, full.n_mels());
  for (std::size_t t = 0; t < frames; ++t) {
    auto src = full.values.row(start + t);
    std::copy(src.begin(), src.end(), out.values.row(t).begin());
  }
  return out;
}

model::Checkpoint Train(corpus::Corpus& corpus, const model::ModelConfig& model_config,
                        const TrainConfig& config, const EpochSink& on_epoch) {
  config.Validate();
  const corpus::Manifest& manifest = corpus.manifest();
  LCAM_REQUIRE(manifest.n_speakers >= 2, ErrorKind::kInvalidArgument,
               "training needs at least 2 speakers");
  LCAM_REQUIRE(model_config.n_speakers == manifest.n_speakers, ErrorKind::kConfig,
               "model.n_speakers ", model_config.n_speakers,
               " differs from the corpus speaker count ", manifest.n_speakers);
  LCAM_REQUIRE(model_config.n_mels == config.features.fbank.n_mels, ErrorKind::kConfig,
               "model.n_mels ", model_config.n_mels,
               " differs from the feature n_mels ", config.features.fbank.n_mels);

  const bool augmenting = config.mode != TrainMode::kBase;
  const std::vector<const ManifestRecord*> train = corpus.Utterances(corpus::Split::kTrain);
  LCAM_REQUIRE(!train.empty(), ErrorKind::kInvalidArgument,
               "manifest has no training utterances");
  std::vector<const ManifestRecord*> pool;
  if (augmenting) {
    pool = corpus.InterferencePool(*config.interference, corpus::Split::kTrain);
    LCAM_REQUIRE(!pool.empty(), ErrorKind::kInvalidArgument, "no training clips of ",
                 corpus::ToString(*config.interference), " interference");
  }

  std::vector<dsp::FbankMatrix> clean(train.size());
  for (std::size_t i = 0; i < train.size(); ++i) {
    clean[i] = dsp::ComputeFbank(corpus.Wave(train[i]->key), config.features);
  }
  const std::size_t crop = static_cast<std::size_t>(config.crop_frames);
  for (const auto& f : clean) {
    LCAM_REQUIRE(crop == 0 ? f.frames() == clean[0].frames() : f.frames() >= crop,
                 ErrorKind::kInvalidArgument,
                 crop == 0 ? "whole-utterance training needs equal lengths"
                           : "an utterance is shorter than the training crop");
  }

  model::SpeakerNet net(model_config);
  ad::SgdMomentum optimizer(config.learning_rate, config.momentum);
  const int hop = config.features.stft.hop;
  const int frame_length = config.features.stft.frame_length;

  std::vector<std::size_t> order(train.size());
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    const auto started = std::chrono::steady_clock::now();
    // One sequential worker: its generator is keyed by (seed, worker 0, epoch).
    Rng rng(MixSeed(config.seed, 0, static_cast<uint64_t>(epoch)));
    std::iota(order.begin(), order.end(), 0);
    for (std::size_t i = order.size(); i > 1; --i) {
      std::swap(order[i - 1], order[rng.Index(i)]);
    }
    LossTerms sum;
    int batches = 0;
    std::size_t correct = 0;
    for (std::size_t b0 = 0; b0 < order.size(); b0 += config.batch_size) {
      const std::size_t b1 = std::min(order.size(), b0 + config.batch_size);
      std::vector<dsp::FbankMatrix> xs, augs;
      std::vector<int> labels;
      for (std::size_t j = b0; j < b1; ++j) {
        const std::size_t u = order[j];
        const dsp::FbankMatrix& full = clean[u];
        const std::size_t frames = crop == 0 ? full.frames() : crop;
        const std::size_t start =
            crop == 0 ? 0 : static_cast<std::size_t>(rng.Index(full.frames() - crop + 1));
        xs.push_back(crop == 0 ? full : CropFrames(full, start, frames));
        labels.push_back(train[u]->speaker);
        if (!augmenting) continue;
        const ManifestRecord& clip_rec = *pool[rng.Index(pool.size())];
        const dsp::Waveform clip = corpus.Wave(clip_rec.key);
        const dsp::Waveform target = corpus.Wave(train[u]->key);
        const double alpha = SampleAlpha(config.mix, rng);
        const std::size_t offset = SampleOffset(clip.size(), target.size(), rng);
        // Only the samples under the cropped frames are mixed; the frame grid
        // of the segment coincides with the crop of the full utterance.
        const std::size_t seg_begin = start * hop;
        const std::size_t seg_len = frame_length + (frames - 1) * hop;
        dsp::Waveform segment{
            std::vector<double>(target.samples.begin() + seg_begin,
                                target.samples.begin() + seg_begin + seg_len),
            target.sample_rate};
        const std::vector<double> noise =
            FitToLength(clip.samples, seg_len, offset + seg_begin);
        for (std::size_t k = 0; k < seg_len; ++k) segment.samples[k] += alpha * noise[k];
        augs.push_back(dsp::ComputeFbank(segment, config.features));
      }
      std::vector<const dsp::FbankMatrix*> xp, ap;
      for (const auto& f : xs) xp.push_back(&f);
      for (const auto& f : augs) ap.push_back(&f);
      const Tensor x = model::FeaturesToInput(xp);
      LossResult r;
      switch (config.mode) {
        case TrainMode::kBase:
          r = BaseLoss(net, x, labels);
          break;
        case TrainMode::kVanillaDa:
          r = VanillaDaLoss(net, x, model::FeaturesToInput(ap), labels);
          break;
        case TrainMode::kActDa:
          r = ActDaLoss(net, x, model::FeaturesToInput(ap), labels);
          break;
      }
      LCAM_REQUIRE(std::isfinite(r.terms.total), ErrorKind::kRuntime,
                   "training diverged: non-finite loss at epoch ", epoch + 1,
                   ", batch ", batches + 1);
      optimizer.Step(net.parameters(), r.grads);
      net.UpdateRunningStats(r.batch_stats);
      sum.total += r.terms.total;
      sum.ce_clean += r.terms.ce_clean;
      sum.ce_augmented += r.terms.ce_augmented;
      sum.distance += r.terms.distance;
      for (std::size_t j = 0; j < r.clean_logits.size() / manifest.n_speakers; ++j) {
        const std::vector<double> row(
            r.clean_logits.begin() + j * manifest.n_speakers,
            r.clean_logits.begin() + (j + 1) * manifest.n_speakers);
        if (model::PredictTopK(row, 1)[0] == labels[j]) ++correct;
      }
      ++batches;
    }
    if (on_epoch) {
      EpochLog log;
      log.epoch = epoch + 1;
      log.mean_terms = {sum.total / batches, sum.ce_clean / batches,
                        sum.ce_augmented / batches, sum.distance / batches};
      log.train_accuracy = static_cast<double>(correct) / order.size();
      log.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                                  started).count();
      on_epoch(log);
    }
  }
  model::TrainingMetadata meta;
  meta.epochs = config.epochs;
  meta.mode = ToString(config.mode);
  meta.interference =
      augmenting ? corpus::ToString(*config.interference) : std::string("none");
  meta.seed = config.seed;
  return model::MakeCheckpoint(net, meta);
}

}  // namespace lcam::augment
