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

#include "analysis/analysis.h"
#include "base/error.h"
#include "base/rng.h"
#include "model/speaker_net.h"

namespace lcam::analysis {
namespace {

using corpus::SegmentLabel;
constexpr SegmentLabel T = SegmentLabel::kTarget;
constexpr SegmentLabel I = SegmentLabel::kInterference;

// Frames whose row sums are the given values, spread over 4 mel bins.
Grid FramesWithSums(const std::vector<double>& sums) {
  Grid g(sums.size(), 4);
  for (std::size_t t = 0; t < sums.size(); ++t) {
    for (std::size_t m = 0; m < 4; ++m) g(t, m) = sums[t] / 4.0;
  }
  return g;
}

model::ModelConfig Small() {
  model::ModelConfig c;
  c.n_mels = 8;
  c.stage_channels = {2, 3, 4, 4};
  c.embedding_dim = 4;
  c.n_speakers = 3;
  c.se_reduction = 2;
  return c;
}

std::vector<dsp::FbankMatrix> RandomFeatures(int n, uint64_t seed) {
  Rng rng(seed);
  std::vector<dsp::FbankMatrix> out(n);
  for (auto& f : out) {
    f.values = Grid(10, 8);
    for (double& v : f.values.data()) v = rng.Uniform(f.FloorLog(), 0.0);
  }
  return out;
}

TEST(SprIpr, CountsFramesAboveThreshold) {
  const Grid map = FramesWithSums({8.0, 7.0, 7.6, 0.0, 7.5, 9.0, 1.0});
  const SprIpr r = ComputeSprIpr(map, {T, T, T, T, I, I, I}, 7.5);
  ASSERT_TRUE(r.spr && r.ipr);
  EXPECT_DOUBLE_EQ(*r.spr, 0.5);        // 8.0 and 7.6
  EXPECT_DOUBLE_EQ(*r.ipr, 1.0 / 3.0);  // 9.0; 7.5 is not above
}

TEST(SprIpr, MissingClassIsEmpty) {
  const SprIpr r = ComputeSprIpr(FramesWithSums({8.0, 8.0}), {T, T}, 1.0);
  EXPECT_EQ(r.spr, 1.0);
  EXPECT_FALSE(r.ipr.has_value());
}

TEST(SprIpr, PooledCountsAreRatiosOfTotals) {
  RetentionCounts a = CountRetention(FramesWithSums({9.0, 0.0, 0.0}), {T, T, T}, 1.0);
  a.Add(CountRetention(FramesWithSums({9.0}), {T}, 1.0));
  EXPECT_DOUBLE_EQ(*a.Spr(), 0.5);
}

TEST(SprIpr, LabelCountMismatchIsShapeError) {
  try {
    ComputeSprIpr(FramesWithSums({1.0, 2.0}), {T}, 1.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kShapeMismatch);
  }
}

TEST(SprIpr, DefaultThresholdScalesWithMelCount) {
  EXPECT_DOUBLE_EQ(DefaultFrameThreshold(40), 7.5);
  EXPECT_DOUBLE_EQ(DefaultFrameThreshold(64), 12.0);
}

TEST(TopK, HandComputed) {
  const std::vector<std::vector<double>> logits{{0.1, 0.9, 0.0}, {0.5, 0.2, 0.3}};
  EXPECT_EQ(TopKAccuracy(logits, {1, 2}, {1, 2, 3}), (std::vector<double>{0.5, 1.0, 1.0}));
}

TEST(TopK, RandomLogitsGiveChanceLevel) {
  Rng rng(5);
  const int n = 4000, classes = 16;
  std::vector<std::vector<double>> logits(n, std::vector<double>(classes));
  std::vector<int> labels(n);
  for (int i = 0; i < n; ++i) {
    for (double& v : logits[i]) v = rng.Normal();
    labels[i] = static_cast<int>(rng.Index(classes));
  }
  const std::vector<double> acc = TopKAccuracy(logits, labels, {1, 5, 10});
  // Binomial standard error at n = 4000 is below 0.008 for every k.
  EXPECT_NEAR(acc[0], 1.0 / 16, 0.025);
  EXPECT_NEAR(acc[1], 5.0 / 16, 0.025);
  EXPECT_NEAR(acc[2], 10.0 / 16, 0.025);
}

TEST(TopK, EmptySetIsRejected) {
  EXPECT_THROW(TopKAccuracy({}, {}, {1}), Error);
}

TEST(Area, ConstantCurveHasItsValue) {
  const std::vector<double> x = ThresholdGrid(21);
  EXPECT_NEAR(NormalizedTrapezoidArea(x, std::vector<double>(21, 0.37)), 0.37, 1e-15);
}

TEST(Area, LinearCurveHasMidpointValue) {
  EXPECT_NEAR(NormalizedTrapezoidArea({0.0, 0.5, 1.0}, {1.0, 0.5, 0.0}), 0.5, 1e-15);
  EXPECT_NEAR(NormalizedTrapezoidArea({0.0, 1.0}, {0.0, 1.0}), 0.5, 1e-15);
}

TEST(Area, UnorderedAbscissaeAreRejected) {
  EXPECT_THROW(NormalizedTrapezoidArea({0.0, 0.0}, {1.0, 1.0}), Error);
}

TEST(ThresholdGrid, EvenlySpacedIncludingEnds) {
  const std::vector<double> g = ThresholdGrid(5);
  EXPECT_EQ(g, (std::vector<double>{0.0, 0.25, 0.5, 0.75, 1.0}));
}

TEST(Deletion, StrictlyBelowThreshold) {
  Grid s(1, 3);
  s.data() = {0.2, 0.5, 0.8};
  EXPECT_EQ(DeletionSet(s, 0.5), (std::vector<bool>{true, false, false}));
  EXPECT_EQ(DeletionSet(s, 0.0), (std::vector<bool>{false, false, false}));
}

TEST(Deletion, SetsAreNestedOverAGrid) {
  Rng rng(3);
  Grid s(20, 8);
  for (double& v : s.data()) v = rng.Uniform();
  EXPECT_TRUE(DeletionSetsNested(s, ThresholdGrid(21)));
  EXPECT_THROW(DeletionSetsNested(s, {0.5, 0.5}), Error);
}

TEST(Deletion, DeletedCellsSitAtTheFloor) {
  dsp::FbankMatrix f;
  f.values = Grid(1, 3, -1.0);
  Grid s(1, 3);
  s.data() = {0.1, 0.9, 0.3};
  const dsp::FbankMatrix d = ApplyDeletion(f, s, 0.5);
  EXPECT_EQ(d.values.data(), (std::vector<double>{f.FloorLog(), -1.0, f.FloorLog()}));
  EXPECT_EQ(model::FeaturesToInput(d)[0], 0.0);
}

TEST(DeletionTest, ZeroThresholdEqualsUnmaskedAccuracy) {
  const model::SpeakerNet judge(Small());
  const auto feats = RandomFeatures(20, 8);
  Rng rng(9);
  std::vector<Grid> maps(feats.size(), Grid(10, 8));
  std::vector<DeletionItem> items;
  std::vector<const dsp::FbankMatrix*> ptrs;
  std::vector<int> labels;
  for (std::size_t i = 0; i < feats.size(); ++i) {
    for (double& v : maps[i].data()) v = rng.Uniform();
    labels.push_back(static_cast<int>(i % 3));
    items.push_back({&feats[i], &maps[i], labels.back()});
    ptrs.push_back(&feats[i]);
  }
  const DeletionCurve c = DeletionTest(judge, items, ThresholdGrid(11));
  const double unmasked = TopKAccuracy(ClassifyAll(judge, ptrs), labels, {1})[0];
  EXPECT_EQ(c.points[0].top1, unmasked);
  EXPECT_EQ(c.points[0].masked_fraction, 0.0);
  for (std::size_t i = 1; i < c.points.size(); ++i) {
    EXPECT_GE(c.points[i].masked_fraction, c.points[i - 1].masked_fraction);
  }
}

TEST(DeletionTest, FullSaliencyKeepsTheCurveFlat) {
  const model::SpeakerNet judge(Small());
  const auto feats = RandomFeatures(6, 2);
  const Grid ones(10, 8, 1.0);
  std::vector<DeletionItem> items;
  for (std::size_t i = 0; i < feats.size(); ++i) {
    items.push_back({&feats[i], &ones, static_cast<int>(i % 3)});
  }
  const DeletionCurve c = DeletionTest(judge, items, ThresholdGrid(21));
  for (const auto& p : c.points) {
    EXPECT_EQ(p.masked_fraction, 0.0);
    EXPECT_EQ(p.top1, c.points[0].top1);
  }
  EXPECT_NEAR(c.auc, c.points[0].top1, 1e-15);
}

TEST(DeletionTest, MisalignedSaliencyIsShapeError) {
  const model::SpeakerNet judge(Small());
  const auto feats = RandomFeatures(1, 2);
  const Grid wrong(9, 8, 1.0);
  try {
    DeletionTest(judge, {{&feats[0], &wrong, 0}}, ThresholdGrid(3));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kShapeMismatch);
  }
}

TEST(ClassifyAll, RepeatedEvaluationIsBitIdentical) {
  const model::SpeakerNet net(Small());
  const auto feats = RandomFeatures(37, 4);
  std::vector<const dsp::FbankMatrix*> ptrs;
  for (const auto& f : feats) ptrs.push_back(&f);
  EXPECT_EQ(ClassifyAll(net, ptrs), ClassifyAll(net, ptrs));
}

}  // namespace
}  // namespace lcam::analysis
