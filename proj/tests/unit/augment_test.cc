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

#include "augment/mix.h"
#include "augment/train.h"
#include "base/error.h"
#include "base/rng.h"
#include "corpus/corpus.h"
#include "model/speaker_net.h"

namespace lcam::augment {
namespace {

model::ModelConfig Small(int n_speakers = 3) {
  model::ModelConfig c;
  c.n_mels = 8;
  c.stage_channels = {2, 3, 4, 4};
  c.embedding_dim = 4;
  c.n_speakers = n_speakers;
  c.se_reduction = 2;
  return c;
}

ad::Tensor RandomInput(uint64_t seed, std::size_t n = 4, std::size_t t = 9) {
  Rng rng(seed);
  ad::Tensor x({n, 1, t, 8});
  for (double& v : x.storage()) v = rng.Uniform();
  return x;
}

TEST(Alpha, UniformOverDefaultRange) {
  const MixSpec spec;
  Rng rng(21);
  double sum = 0.0, lo = 10.0, hi = -10.0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    const double a = SampleAlpha(spec, rng);
    sum += a;
    lo = std::min(lo, a);
    hi = std::max(hi, a);
  }
  EXPECT_NEAR(sum / n, 1.05, 0.02);
  EXPECT_GE(lo, 0.1);
  EXPECT_LE(hi, 2.0);
}

TEST(Alpha, InvalidRangeIsConfigError) {
  EXPECT_THROW((MixSpec{.alpha_min = 0.0, .alpha_max = 1.0}.Validate()), Error);
  EXPECT_THROW((MixSpec{.alpha_min = 2.0, .alpha_max = 1.0}.Validate()), Error);
  EXPECT_NO_THROW((MixSpec{.alpha_min = 1.0, .alpha_max = 1.0}.Validate()));
}

TEST(FitToLength, TilesCutsAndWraps) {
  const std::vector<double> n{1, 2, 3};
  EXPECT_EQ(FitToLength(n, 7), (std::vector<double>{1, 2, 3, 1, 2, 3, 1}));
  EXPECT_EQ(FitToLength(n, 2), (std::vector<double>{1, 2}));
  EXPECT_EQ(FitToLength(n, 4, 2), (std::vector<double>{3, 1, 2, 3}));
  EXPECT_EQ(FitToLength(n, 2, 5), (std::vector<double>{3, 1}));
}

TEST(FitToLength, EmptySourceIsRejected) {
  EXPECT_THROW(FitToLength({}, 4), Error);
}

TEST(Mix, AddsScaledInterference) {
  const dsp::Waveform x{{1.0, 1.0, 1.0, 1.0}, 16000};
  const dsp::Waveform n{{1.0, -1.0}, 16000};
  const dsp::Waveform y = Mix(x, n, 0.5, 1);
  EXPECT_EQ(y.samples, (std::vector<double>{0.5, 1.5, 0.5, 1.5}));
}

TEST(Mix, SampleRateMismatchIsRejected) {
  EXPECT_THROW(Mix(dsp::Waveform{{0.0}, 16000}, dsp::Waveform{{0.0}, 8000}, 1.0), Error);
}

TEST(SampleOffset, StaysWithinTheSource) {
  Rng rng(1);
  EXPECT_EQ(SampleOffset(100, 200, rng), 0u);
  for (int i = 0; i < 100; ++i) EXPECT_LE(SampleOffset(300, 200, rng), 100u);
}

TEST(Objectives, ActEqualsVanillaWhenAugmentedIsClean) {
  const model::SpeakerNet net(Small());
  const std::vector<int> labels{0, 1, 2, 1};
  for (uint64_t s = 0; s < 5; ++s) {
    const ad::Tensor x = RandomInput(100 + s);
    const LossResult v = VanillaDaLoss(net, x, x, labels);
    const LossResult a = ActDaLoss(net, x, x, labels);
    EXPECT_EQ(a.terms.distance, 0.0);
    EXPECT_EQ(a.terms.total, v.terms.total);
    ASSERT_EQ(a.grads.size(), v.grads.size());
    for (const auto& [name, g] : v.grads) EXPECT_EQ(a.grads.at(name), g) << name;
  }
}

TEST(Objectives, VanillaIsTwiceBaseOnCleanPairs) {
  const model::SpeakerNet net(Small());
  const ad::Tensor x = RandomInput(7);
  const std::vector<int> labels{2, 0, 1, 1};
  const LossResult b = BaseLoss(net, x, labels);
  const LossResult v = VanillaDaLoss(net, x, x, labels);
  EXPECT_NEAR(v.terms.total, 2.0 * b.terms.total, 1e-12);
  EXPECT_NEAR(v.terms.ce_clean, b.terms.ce_clean, 1e-12);
}

TEST(Objectives, DistanceIsPositiveForDifferentInputs) {
  const model::SpeakerNet net(Small());
  const std::vector<int> labels{0, 1, 2, 0};
  const LossResult a = ActDaLoss(net, RandomInput(1), RandomInput(2), labels);
  EXPECT_GT(a.terms.distance, 0.0);
  EXPECT_NEAR(a.terms.total, a.terms.ce_clean + a.terms.ce_augmented + a.terms.distance, 1e-12);
}

TEST(Objectives, MismatchedShapesAreRejected) {
  const model::SpeakerNet net(Small());
  EXPECT_THROW(VanillaDaLoss(net, RandomInput(1, 4, 9), RandomInput(2, 4, 10), {0, 1, 2, 0}),
               Error);
}

TEST(TrainMode, ParsesKnownNamesOnly) {
  EXPECT_EQ(ParseTrainMode("base"), TrainMode::kBase);
  EXPECT_EQ(ParseTrainMode("vanilla_da"), TrainMode::kVanillaDa);
  EXPECT_EQ(ParseTrainMode("act_da"), TrainMode::kActDa);
  EXPECT_FALSE(ParseTrainMode("act").has_value());
  EXPECT_EQ(ToString(TrainMode::kActDa), "act_da");
}

TEST(TrainConfig, DaWithoutInterferenceIsConfigError) {
  TrainConfig c;
  c.mode = TrainMode::kVanillaDa;
  try {
    c.Validate();
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kConfig);
  }
  c.interference = corpus::InterferenceType::kMusic;
  EXPECT_NO_THROW(c.Validate());
}

class TinyTraining : public ::testing::Test {
 protected:
  static corpus::CorpusConfig Config() {
    corpus::CorpusConfig c;
    c.n_speakers = 3;
    c.utterances_per_speaker = 4;
    c.utterance_seconds = 0.5;
    c.noise_clips = 4;
    c.music_clips = 4;
    c.speech_clips_per_profile = 1;
    c.interference_seconds = 0.6;
    c.ramp_utterances = 0;
    return c;
  }
  static TrainConfig Train(TrainMode mode) {
    TrainConfig t;
    t.mode = mode;
    if (mode != TrainMode::kBase) t.interference = corpus::InterferenceType::kNoise;
    t.epochs = 2;
    t.batch_size = 4;
    t.crop_frames = 16;
    t.features.fbank.n_mels = 8;
    return t;
  }
};

TEST_F(TinyTraining, BaseNeverReadsInterference) {
  corpus::Corpus data(corpus::BuildSyntheticManifest(Config()));
  std::vector<EpochLog> logs;
  const model::Checkpoint ck = augment::Train(data, Small(), Train(TrainMode::kBase),
                                              [&](const EpochLog& e) { logs.push_back(e); });
  EXPECT_EQ(data.interference_reads(), 0);
  ASSERT_EQ(logs.size(), 2u);
  EXPECT_EQ(logs[0].epoch, 1);
  EXPECT_EQ(logs[1].epoch, 2);
  EXPECT_EQ(ck.metadata.mode, "base");
  EXPECT_EQ(ck.metadata.epochs, 2);
}

TEST_F(TinyTraining, DaReadsOnlyItsOwnType) {
  corpus::Corpus data(corpus::BuildSyntheticManifest(Config()));
  augment::Train(data, Small(), Train(TrainMode::kActDa));
  EXPECT_GT(data.interference_reads(corpus::InterferenceType::kNoise), 0);
  EXPECT_EQ(data.interference_reads(corpus::InterferenceType::kSpeech), 0);
  EXPECT_EQ(data.interference_reads(corpus::InterferenceType::kMusic), 0);
}

TEST_F(TinyTraining, TrainingIsDeterministic) {
  corpus::Corpus a(corpus::BuildSyntheticManifest(Config()));
  corpus::Corpus b(corpus::BuildSyntheticManifest(Config()));
  const model::Checkpoint ca = augment::Train(a, Small(), Train(TrainMode::kVanillaDa));
  const model::Checkpoint cb = augment::Train(b, Small(), Train(TrainMode::kVanillaDa));
  EXPECT_EQ(ca.parameters, cb.parameters);
  EXPECT_EQ(ca.buffers, cb.buffers);
}

TEST(CropFrames, CopiesTheWindow) {
  dsp::FbankMatrix f;
  f.values = Grid(5, 2);
  for (std::size_t i = 0; i < 10; ++i) f.values.data()[i] = static_cast<double>(i);
  const dsp::FbankMatrix c = CropFrames(f, 1, 3);
  EXPECT_EQ(c.values.data(), (std::vector<double>{2, 3, 4, 5, 6, 7}));
  EXPECT_THROW(CropFrames(f, 3, 3), Error);
}

}  // namespace
}  // namespace lcam::augment
