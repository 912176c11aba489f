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

#include <cstdio>
#include <filesystem>

#include "base/error.h"
#include "base/rng.h"
#include "dsp/fbank.h"
#include "model/checkpoint.h"
#include "model/speaker_net.h"

namespace lcam::model {
namespace {

ModelConfig Small() {
  ModelConfig c;
  c.n_mels = 8;
  c.stage_channels = {2, 3, 4, 4};
  c.embedding_dim = 4;
  c.n_speakers = 5;
  c.se_reduction = 2;
  c.seed = 3;
  return c;
}

dsp::FbankMatrix RandomFeatures(std::size_t frames, std::size_t mels, uint64_t seed) {
  dsp::FbankMatrix f;
  f.values = Grid(frames, mels);
  Rng rng(seed);
  for (double& v : f.values.data()) v = rng.Uniform(f.FloorLog(), 0.0);
  return f;
}

std::string TempPath(const std::string& name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

TEST(PredictTopK, OrdersByDescendingLogit) {
  EXPECT_EQ(PredictTopK({0.1, 2.0, -1.0, 1.5}, 2), (std::vector<int>{1, 3}));
  EXPECT_EQ(PredictTopK({0.1, 2.0, -1.0, 1.5}, 4), (std::vector<int>{1, 3, 0, 2}));
}

TEST(PredictTopK, TiesGoToLowerId) {
  EXPECT_EQ(PredictTopK({1.0, 3.0, 3.0, 1.0}, 3), (std::vector<int>{1, 2, 0}));
}

TEST(PredictTopK, KOutOfRangeIsRejected) {
  EXPECT_THROW(PredictTopK({1.0, 2.0}, 3), Error);
  EXPECT_THROW(PredictTopK({1.0, 2.0}, 0), Error);
}

TEST(StageResolutions, HalveRoundingUp) {
  const auto r = StageResolutions(201, 40);
  EXPECT_EQ(r[0], std::make_pair(201, 40));
  EXPECT_EQ(r[1], std::make_pair(101, 20));
  EXPECT_EQ(r[2], std::make_pair(51, 10));
  EXPECT_EQ(r[3], std::make_pair(26, 5));
}

TEST(ModelConfig, ValidateNamesTheField) {
  ModelConfig c = Small();
  c.se_reduction = 0;
  try {
    c.Validate();
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kConfig);
    EXPECT_NE(std::string(e.what()).find("se_reduction"), std::string::npos) << e.what();
  }
}

TEST(SpeakerNet, ForwardShapesAndTaps) {
  const SpeakerNet net(Small());
  ad::Tape tape;
  const BoundParams b = net.Bind(tape);
  const ad::Var x = tape.Constant(ad::Tensor({3, 1, 13, 8}, 0.25));
  const ForwardResult r = net.Forward(b, x, Mode::kEval);
  EXPECT_EQ(r.logits.shape(), (ad::Shape{3, 5}));
  EXPECT_EQ(r.embedding.shape(), (ad::Shape{3, 4}));
  const auto res = StageResolutions(13, 8);
  for (int s = 0; s < kNumStages; ++s) {
    EXPECT_EQ(r.taps[s].shape(),
              (ad::Shape{3, std::size_t(Small().stage_channels[s]), std::size_t(res[s].first),
                         std::size_t(res[s].second)}));
  }
}

TEST(SpeakerNet, SameSeedSameWeights) {
  const SpeakerNet a(Small()), b(Small());
  EXPECT_EQ(a.parameters(), b.parameters());
  ModelConfig other = Small();
  other.seed = 4;
  EXPECT_NE(SpeakerNet(other).parameters(), a.parameters());
}

TEST(SpeakerNet, BatchedInferenceMatchesSingle) {
  const SpeakerNet net(Small());
  const dsp::FbankMatrix f1 = RandomFeatures(12, 8, 1), f2 = RandomFeatures(12, 8, 2);
  const auto batch = InferBatch(net, {&f1, &f2});
  const Inference single = Infer(net, f2);
  ASSERT_EQ(batch.size(), 2u);
  for (std::size_t i = 0; i < single.logits.size(); ++i) {
    EXPECT_NEAR(batch[1].logits[i], single.logits[i], 1e-12);
  }
}

TEST(SpeakerNet, FlooredCellsMapToZeroInput) {
  dsp::FbankMatrix f;
  f.values = Grid(2, 3, f.FloorLog());
  f.values(1, 2) = 0.0;
  const ad::Tensor t = FeaturesToInput(f);
  EXPECT_EQ(t.shape(), (ad::Shape{1, 1, 2, 3}));
  EXPECT_EQ(t[0], 0.0);
  EXPECT_DOUBLE_EQ(t[5], 1.0);
}

TEST(Checkpoint, RoundTripIsBitExact) {
  const SpeakerNet net(Small());
  const TrainingMetadata meta{.epochs = 3, .mode = "act_da", .interference = "speech", .seed = 9};
  const Checkpoint ck = MakeCheckpoint(net, meta);
  const std::string path = TempPath("lcam_net_test.ckpt");
  SaveCheckpoint(ck, path);
  const Checkpoint back = LoadCheckpoint(path);
  EXPECT_EQ(back.config, ck.config);
  EXPECT_EQ(back.metadata, meta);
  EXPECT_EQ(back.parameters, ck.parameters);
  EXPECT_EQ(back.buffers, ck.buffers);
  EXPECT_EQ(EncodeCheckpoint(back), EncodeCheckpoint(ck));
  std::filesystem::remove(path);

  const SpeakerNet restored = NetFromCheckpoint(back);
  const dsp::FbankMatrix f = RandomFeatures(10, 8, 5);
  EXPECT_EQ(Infer(restored, f).logits, Infer(net, f).logits);
}

std::string DecodeError(const std::vector<uint8_t>& bytes) {
  try {
    DecodeCheckpoint(bytes);
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kFormat);
    return e.what();
  }
  return "";
}

TEST(Checkpoint, CorruptionIsDiagnosedDistinctly) {
  const std::vector<uint8_t> good = EncodeCheckpoint(MakeCheckpoint(SpeakerNet(Small()), {}));

  std::vector<uint8_t> magic = good;
  magic[0] ^= 0xff;
  EXPECT_NE(DecodeError(magic).find("bad magic"), std::string::npos);

  std::vector<uint8_t> version = good;
  version[8] = 99;
  EXPECT_NE(DecodeError(version).find("unsupported checkpoint version 99"), std::string::npos);

  for (std::size_t keep : {good.size() / 2, good.size() - 5, std::size_t{20}}) {
    const std::vector<uint8_t> cut(good.begin(), good.begin() + keep);
    EXPECT_NE(DecodeError(cut).find("truncated"), std::string::npos) << keep;
  }

  std::vector<uint8_t> flipped = good;
  flipped[good.size() - 20] ^= 0x01;
  EXPECT_NE(DecodeError(flipped).find("checksum"), std::string::npos);
}

TEST(Checkpoint, MissingFileIsIoError) {
  try {
    LoadCheckpoint(TempPath("lcam_does_not_exist.ckpt"));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kIo);
  }
}

TEST(Checkpoint, IncompatibleShapeNamesEveryField) {
  ModelConfig c = Small();
  try {
    RequireCompatible(c, 40, 16);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kConfig);
    const std::string msg = e.what();
    EXPECT_NE(msg.find("n_mels"), std::string::npos) << msg;
    EXPECT_NE(msg.find("n_speakers"), std::string::npos) << msg;
  }
  EXPECT_NO_THROW(RequireCompatible(c, 8, -1));
}

TEST(Checkpoint, ParameterShapeMismatchIsRejected) {
  Checkpoint ck = MakeCheckpoint(SpeakerNet(Small()), {});
  ck.parameters["head.bias"] = ad::Tensor({7});
  EXPECT_THROW(NetFromCheckpoint(ck), Error);
}

}  // namespace
}  // namespace lcam::model
