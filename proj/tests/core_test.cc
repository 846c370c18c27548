//
// Copyright 2026 The Shaky Ladder Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//

#include "shaky/core.h"

#include <cmath>
#include <cstdint>
#include <vector>

#include "gmock/gmock.h"
#include "gtest/gtest.h"
#include "shaky/audit.h"
#include "shaky/mechanisms.h"
#include "shaky/noise.h"

namespace shaky {
namespace {

using ::testing::ElementsAre;
using ::testing::Each;

TEST(HoldoutSampleTest, SameSeedSameLabels) {
  const HoldoutSample a = MakeRandomLabelSample(4, 17);
  const HoldoutSample b = MakeRandomLabelSample(4, 17);
  EXPECT_EQ(std::vector<uint8_t>(a.labels().begin(), a.labels().end()),
            std::vector<uint8_t>(b.labels().begin(), b.labels().end()));
  EXPECT_EQ(a.seed(), 17u);
}

TEST(HoldoutSampleTest, LabelsAreBalanced) {
  const HoldoutSample sample = MakeRandomLabelSample(1000000, 5);
  int64_t ones = 0;
  for (uint8_t y : sample.labels()) ones += y;
  // 3 * sqrt(0.25 / 1e6) < 0.002
  EXPECT_NEAR(static_cast<double>(ones) / 1e6, 0.5, 0.002);
}

TEST(HoldoutSampleTest, SinglePoint) {
  const HoldoutSample sample = MakeRandomLabelSample(1, 99);
  ASSERT_EQ(sample.size(), 1u);
  EXPECT_LE(sample.labels()[0], 1);
}

TEST(HoldoutSampleTest, RejectsEmpty) {
  EXPECT_THROW(MakeRandomLabelSample(0, 1), InvalidArgument);
  EXPECT_THROW(MakeRandomLabelSample(-3, 1), InvalidArgument);
  EXPECT_THROW(HoldoutSample({}, 1), InvalidArgument);
  EXPECT_THROW(HoldoutSample({0, 2}, 1), InvalidArgument);
}

TEST(ModelFromPredictionsTest, PerfectAndComplement) {
  const HoldoutSample sample = MakeRandomLabelSample(64, 3);
  std::vector<uint8_t> same(sample.labels().begin(), sample.labels().end());
  std::vector<uint8_t> flipped = same;
  for (uint8_t& y : flipped) y ^= 1;

  const SubmittedModel perfect = ModelFromPredictions(same, sample);
  EXPECT_THAT(std::vector<double>(perfect.losses().begin(),
                                  perfect.losses().end()),
              Each(0.0));
  EXPECT_EQ(EmpiricalRisk(perfect), 0.0);
  EXPECT_EQ(PopulationRisk(perfect), 0.5);

  const SubmittedModel wrong = ModelFromPredictions(flipped, sample);
  EXPECT_THAT(std::vector<double>(wrong.losses().begin(),
                                  wrong.losses().end()),
              Each(1.0));
}

TEST(ModelFromPredictionsTest, RandomPredictionsNearHalf) {
  const HoldoutSample sample = MakeRandomLabelSample(10000, 8);
  std::vector<uint8_t> guess(10000);
  Rng rng(1234);
  FillRandomBits(rng, guess);
  const SubmittedModel model = ModelFromPredictions(guess, sample);
  EXPECT_NEAR(EmpiricalRisk(model), 0.5, 0.015);
}

TEST(ModelFromPredictionsTest, LengthMismatch) {
  const HoldoutSample sample = MakeRandomLabelSample(5, 1);
  const std::vector<uint8_t> short_guess(4, 0);
  EXPECT_THROW(ModelFromPredictions(short_guess, sample), InvalidArgument);
}

TEST(EmpiricalRiskTest, Examples) {
  EXPECT_EQ(EmpiricalRisk(SubmittedModel({0, 0, 0, 0}, 0.5)), 0.0);
  EXPECT_EQ(EmpiricalRisk(SubmittedModel({1, 1}, 0.5)), 1.0);
  EXPECT_NEAR(EmpiricalRisk(SubmittedModel({0.2, 0.4, 0.6}, 0.5)), 0.4,
              1e-15);
}

TEST(EmpiricalRiskTest, Linear) {
  Rng rng(77);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + rng.NextU64() % 50;
    const double a = 0.5 * rng.NextOpenUnit();
    const double b = 0.5 * rng.NextOpenUnit();
    std::vector<double> u(n), v(n), mix(n);
    for (std::size_t i = 0; i < n; ++i) {
      u[i] = rng.NextOpenUnit();
      v[i] = rng.NextOpenUnit();
      mix[i] = a * u[i] + b * v[i];
    }
    EXPECT_NEAR(EmpiricalRisk(mix), a * EmpiricalRisk(u) + b * EmpiricalRisk(v),
                1e-14);
  }
}

TEST(SubmittedModelTest, RangeValidation) {
  EXPECT_THROW(SubmittedModel({}, 0.5), InvalidArgument);
  EXPECT_THROW(SubmittedModel({0.5, 1.1}, 0.5), InvalidArgument);
  EXPECT_THROW(SubmittedModel({-0.01}, 0.5), InvalidArgument);
  EXPECT_THROW(SubmittedModel({0.5}, 1.5), InvalidArgument);
  EXPECT_THROW(SubmittedModel({NAN}, 0.5), InvalidArgument);
  const SubmittedModel snapped({-1e-13, 1.0 + 1e-13}, 0.5);
  EXPECT_THAT(std::vector<double>(snapped.losses().begin(),
                                  snapped.losses().end()),
              ElementsAre(0.0, 1.0));
}

// Mechanisms see only the loss vector: changing the population risk must
// not change anything they release.
TEST(InformationBarrierTest, ReleasesIgnorePopulationRisk) {
  const int64_t n = 200;
  const MechanismParams params = ShakyParams(10000, 50, 0.1);
  Rng stream(5);
  ShakyLadder shaky_a(params, 11), shaky_b(params, 11);
  Ladder ladder_a(n, {0.02, Rounding::kNone});
  Ladder ladder_b(n, {0.02, Rounding::kNone});
  ParameterFreeLadder pf_a(n), pf_b(n);
  EmpiricalOracle emp_a(n), emp_b(n);
  NoisyEmpiricalOracle noisy_a(n, 0.01, 4), noisy_b(n, 0.01, 4);
  for (int t = 0; t < 50; ++t) {
    std::vector<double> losses(n);
    for (double& l : losses) l = stream.NextOpenUnit() * 0.9;
    const SubmittedModel lo(losses, 0.0);
    const SubmittedModel hi(losses, stream.NextOpenUnit());
    EXPECT_EQ(ladder_a.Submit(lo), ladder_b.Submit(hi));
    EXPECT_EQ(pf_a.Submit(lo), pf_b.Submit(hi));
    EXPECT_EQ(emp_a.Submit(lo), emp_b.Submit(hi));
    EXPECT_EQ(noisy_a.Submit(lo), noisy_b.Submit(hi));
    std::vector<double> wide(10000);
    for (std::size_t i = 0; i < wide.size(); ++i) wide[i] = losses[i % n];
    EXPECT_EQ(shaky_a.Submit(SubmittedModel(wide, 0.0)),
              shaky_b.Submit(SubmittedModel(wide, 1.0)));
  }
}

TEST(TraceTest, RoundsMustBeConsecutive) {
  Trace trace;
  RoundRecord r;
  r.round = 2;
  EXPECT_THROW(trace.Append(r), InvalidArgument);
  r.round = 1;
  trace.Append(r);
  EXPECT_THROW(trace.Append(r), InvalidArgument);
  r.round = 2;
  trace.Append(r);
  EXPECT_EQ(trace.size(), 2u);
}

TEST(TraceTest, MaxNoiseIncludesInitialDraw) {
  Trace trace;
  trace.SetInitialNoise(-0.7);
  RoundRecord r;
  r.round = 1;
  const double draws[] = {0.1, -0.3, 0.2};
  r.SetNoise(draws);
  trace.Append(r);
  EXPECT_EQ(trace.max_noise_magnitude(), 0.7);
  EXPECT_EQ(trace.noise_draw_count(), 4);
  EXPECT_THROW(trace.SetInitialNoise(0.1), InvalidArgument);
}

TEST(RoundRecordTest, AtMostThreeDraws) {
  RoundRecord r;
  const double draws[] = {1, 2, 3, 4};
  EXPECT_THROW(r.SetNoise(draws), InvalidArgument);
}

}  // namespace
}  // namespace shaky
