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

#include "shaky/reduction.h"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <sstream>
#include <vector>

#include "gtest/gtest.h"
#include "shaky/audit.h"
#include "shaky/mechanisms.h"
#include "shaky/noise.h"
#include "support/perturbed_oracle.h"

namespace shaky {
namespace {

using testing::PerturbedMinOracle;
using testing::Perturbation;

Query ConstantQuery(int64_t n, double mean) {
  return Query(std::vector<double>(static_cast<std::size_t>(n), mean), mean);
}

// Bernoulli-like values whose population mean is `mean`.
Query RandomQuery(Rng& rng, int64_t n, double mean) {
  std::vector<double> values(static_cast<std::size_t>(n));
  for (double& v : values) v = rng.NextOpenUnit() < mean ? 1.0 : 0.0;
  return Query(std::move(values), mean);
}

TEST(QueryTest, Validation) {
  EXPECT_THROW(Query({}, 0.5), InvalidArgument);
  EXPECT_THROW(Query({0.5, 1.5}, 0.5), InvalidArgument);
  EXPECT_THROW(Query({0.5}, -0.1), InvalidArgument);
}

TEST(AdaptiveEstimatorTest, TriggersAtOffsetEight) {
  PopulationMinOracle oracle(10);
  AdaptiveEstimator estimator(oracle, 0.1);
  const EstimatorAnswer a = estimator.Answer(ConstantQuery(10, 0.6));
  EXPECT_EQ(a.trigger_index, 8);
  EXPECT_NEAR(a.r_value, 0.40, 1e-12);
  EXPECT_NEAR(a.answer, 0.6, 1e-12);
  EXPECT_EQ(a.c_before, 0.5);
  EXPECT_NEAR(a.c_after, 0.40, 1e-12);
  EXPECT_EQ(a.submissions, 9);
  EXPECT_FALSE(a.clamped);
  EXPECT_FALSE(a.no_trigger);
}

TEST(AdaptiveEstimatorTest, TieAtCutoffDoesNotTrigger) {
  PopulationMinOracle oracle(10);
  AdaptiveEstimator estimator(oracle, 0.1);
  const EstimatorAnswer a = estimator.Answer(ConstantQuery(10, 0.0));
  // i = 1 gives exactly 0.45, which is not below 0.45.
  EXPECT_EQ(a.trigger_index, 2);
  EXPECT_NEAR(a.answer, 0.0, 1e-12);
}

TEST(AdaptiveEstimatorTest, FallbackWhenNothingTriggers) {
  PopulationMinOracle oracle(10);
  AdaptiveEstimator estimator(oracle, 0.1);
  const EstimatorAnswer a = estimator.Answer(ConstantQuery(10, 1.0));
  EXPECT_TRUE(a.no_trigger);
  EXPECT_EQ(a.trigger_index, -1);
  EXPECT_EQ(a.answer, 1.0);
  EXPECT_TRUE(std::isnan(a.r_value));
  EXPECT_EQ(a.submissions, 10);
}

TEST(AdaptiveEstimatorTest, LoopCountRoundsUp) {
  PopulationMinOracle oracle(4);
  EXPECT_EQ(AdaptiveEstimator(oracle, 0.3).offsets_per_query(), 4);
  EXPECT_EQ(AdaptiveEstimator(oracle, 0.1).offsets_per_query(), 10);
  EXPECT_EQ(AdaptiveEstimator(oracle, 0.05).offsets_per_query(), 20);
}

TEST(AdaptiveEstimatorTest, RejectsBadAlpha) {
  PopulationMinOracle oracle(4);
  EXPECT_THROW(AdaptiveEstimator(oracle, 0.6), InvalidArgument);
  EXPECT_THROW(AdaptiveEstimator(oracle, 0.0), InvalidArgument);
  EXPECT_THROW(AdaptiveEstimator(oracle, 0.5), InvalidArgument);
  const std::vector<Query> none;
  EXPECT_THROW(RunEstimatorSession(oracle, none, 0.6), InvalidArgument);
}

TEST(AdaptiveEstimatorTest, BudgetErrorCarriesState) {
  Ladder ladder(10, {0.01, Rounding::kNone}, 5);
  AdaptiveEstimator estimator(ladder, 0.1);
  try {
    estimator.Answer(ConstantQuery(10, 0.9));
    FAIL() << "expected EstimatorBudgetError";
  } catch (const EstimatorBudgetError& e) {
    EXPECT_EQ(e.query_index, 0);
    EXPECT_EQ(e.offset_index, 5);
    EXPECT_EQ(e.threshold, 0.5);
  }
}

TEST(AdaptiveEstimatorTest, LengthMismatch) {
  PopulationMinOracle oracle(4);
  AdaptiveEstimator estimator(oracle, 0.1);
  EXPECT_THROW(estimator.Answer(ConstantQuery(5, 0.5)), InvalidArgument);
}

TEST(AdaptiveEstimatorTest, NoClampingAtTheStart) {
  Rng rng(1);
  for (int trial = 0; trial < 50; ++trial) {
    PopulationMinOracle oracle(200);
    AdaptiveEstimator estimator(oracle, 0.05);
    std::vector<double> values(200);
    for (double& v : values) v = rng.NextOpenUnit();
    EXPECT_FALSE(estimator.Answer(Query(values, 0.5)).clamped);
  }
}

TEST(EstimatorSessionTest, ThreeQueryChain) {
  PopulationMinOracle oracle(10);
  const std::vector<Query> queries = {ConstantQuery(10, 0.6),
                                      ConstantQuery(10, 0.3),
                                      ConstantQuery(10, 0.5)};
  const SessionResult session = RunEstimatorSession(oracle, queries, 0.1);
  ASSERT_EQ(session.answers.size(), 3u);
  // c: 0.5 -> 0.4 -> 0.3 -> 0.2; triggers at i = 8, 5, 7.
  const int64_t expected_index[] = {8, 5, 7};
  const double expected_c[] = {0.4, 0.3, 0.2};
  for (std::size_t t = 0; t < 3; ++t) {
    EXPECT_EQ(session.answers[t].trigger_index, expected_index[t]);
    EXPECT_NEAR(session.answers[t].answer, queries[t].population_mean(), 1e-12);
    EXPECT_NEAR(session.answers[t].c_after, expected_c[t], 1e-12);
  }
  EXPECT_EQ(session.total_submissions, 9 + 6 + 8);
  EXPECT_NEAR(session.final_threshold, 0.2, 1e-12);
}

TEST(EstimatorSessionTest, QueryBudgetBoundary) {
  EXPECT_EQ(QueryBudget(0.1), 3);
  EXPECT_EQ(QueryBudget(0.05), 6);
  EXPECT_EQ(QueryBudget(1.0 / 30), 10);
  std::vector<Query> queries(3, ConstantQuery(10, 0.2));
  {
    PopulationMinOracle oracle(10);
    EXPECT_NO_THROW(RunEstimatorSession(oracle, queries, 0.1));
  }
  queries.push_back(ConstantQuery(10, 0.2));
  PopulationMinOracle oracle(10);
  EXPECT_THROW(RunEstimatorSession(oracle, queries, 0.1), BudgetExhausted);
  EXPECT_EQ(oracle.rounds(), 0);
}

TEST(EstimatorSessionTest, SubmissionsWithinInverseAlphaSquared) {
  Rng rng(3);
  for (double alpha : {0.3, 0.1, 0.05, 0.02}) {
    PopulationMinOracle oracle(20);
    std::vector<Query> queries;
    for (int64_t q = 0; q < QueryBudget(alpha); ++q) {
      queries.push_back(RandomQuery(rng, 20, rng.NextOpenUnit()));
    }
    const SessionResult session = RunEstimatorSession(oracle, queries, alpha);
    EXPECT_LE(session.total_submissions, 1.0 / (alpha * alpha));
    EXPECT_EQ(session.total_submissions, oracle.rounds());
  }
}

TEST(EstimatorPropertyTest, ExactWithPopulationMinOracle) {
  const double alpha = 0.05;
  Rng rng(11);
  int checked = 0;
  while (checked < 1000) {
    PopulationMinOracle oracle(50);
    std::vector<Query> queries;
    for (int64_t q = 0; q < QueryBudget(alpha); ++q) {
      queries.push_back(RandomQuery(rng, 50, (1 - 2 * alpha) * rng.NextOpenUnit()));
    }
    const SessionResult session = RunEstimatorSession(oracle, queries, alpha);
    double previous_c = 0.5;
    for (std::size_t t = 0; t < queries.size(); ++t) {
      const EstimatorAnswer& a = session.answers[t];
      ASSERT_FALSE(a.no_trigger);
      EXPECT_LE(a.c_after, previous_c);
      previous_c = a.c_after;
      if (a.clamped) continue;
      ASSERT_NEAR(a.answer, queries[t].population_mean(), 1e-12);
      ++checked;
    }
  }
}

TEST(EstimatorPropertyTest, AccuracyTransfersFromPerturbedOracle) {
  const double alpha = 0.05;
  Rng rng(12);
  const Perturbation kinds[] = {Perturbation::kUniform,
                                Perturbation::kRandomSign,
                                Perturbation::kAlternating};
  double worst = 0.0;
  for (int pattern = 0; pattern < 300; ++pattern) {
    PerturbedMinOracle oracle(30, alpha / 2, kinds[pattern % 3],
                              DeriveSeed(13, pattern));
    std::vector<Query> queries;
    for (int64_t q = 0; q < QueryBudget(alpha); ++q) {
      queries.push_back(
          RandomQuery(rng, 30, (1 - 2 * alpha) * rng.NextOpenUnit()));
    }
    const SessionResult session = RunEstimatorSession(oracle, queries, alpha);
    for (std::size_t t = 0; t < queries.size(); ++t) {
      const EstimatorAnswer& a = session.answers[t];
      if (a.no_trigger || a.clamped) continue;
      worst = std::max(worst,
                       std::fabs(a.answer - queries[t].population_mean()));
    }
    EXPECT_LE(LeaderboardError(oracle.trace()), alpha / 2 + 1e-12);
  }
  EXPECT_LE(worst, alpha + 1e-12);
  EXPECT_GT(worst, alpha / 2);
}

// With an alpha/2-accurate mechanism the threshold can fall by up to
// 2 alpha in one query, not only 3 alpha / 2.
TEST(EstimatorPropertyTest, DescentCanExceedThreeHalvesAlpha) {
  const double alpha = 0.1;
  PerturbedMinOracle oracle(10, alpha / 2, Perturbation::kScripted, 0,
                            {0, 0, 0, 0, 0, alpha / 2, -alpha / 2});
  AdaptiveEstimator estimator(oracle, alpha);
  // Offsets give risks 0.66 - 0.05 i. At i = 5 the release 0.41 + 0.05 sits
  // above the cutoff 0.45; at i = 6 it drops to 0.36 - 0.05.
  const EstimatorAnswer a = estimator.Answer(ConstantQuery(10, 0.32));
  EXPECT_EQ(a.trigger_index, 6);
  EXPECT_NEAR(a.c_before - a.c_after, 0.19, 1e-12);
  EXPECT_GT(a.c_before - a.c_after, 1.5 * alpha);
  EXPECT_NEAR(std::fabs(a.answer - 0.32), alpha, 1e-12);
}

TEST(EstimatorPropertyTest, DescentAtMostTwoAlpha) {
  const double alpha = 0.05;
  Rng rng(14);
  double worst = 0.0;
  for (int pattern = 0; pattern < 300; ++pattern) {
    PerturbedMinOracle oracle(30, alpha / 2,
                              pattern % 2 ? Perturbation::kRandomSign
                                          : Perturbation::kUniform,
                              DeriveSeed(15, pattern));
    std::vector<Query> queries;
    for (int64_t q = 0; q < QueryBudget(alpha); ++q) {
      queries.push_back(
          RandomQuery(rng, 30, (1 - 2 * alpha) * rng.NextOpenUnit()));
    }
    const SessionResult session = RunEstimatorSession(oracle, queries, alpha);
    for (const EstimatorAnswer& a : session.answers) {
      if (a.no_trigger) continue;
      worst = std::max(worst, a.c_before - a.c_after);
    }
  }
  EXPECT_LE(worst, 2 * alpha + 1e-12);
}

TEST(EstimatorSessionTest, CsvFormat) {
  PopulationMinOracle oracle(10);
  const std::vector<Query> queries = {ConstantQuery(10, 0.6),
                                      ConstantQuery(10, 1.0)};
  const SessionResult session = RunEstimatorSession(oracle, queries, 0.1);
  std::ostringstream out;
  WriteSessionCsv(session, out);
  std::istringstream lines(out.str());
  std::string header, first, second, extra;
  std::getline(lines, header);
  std::getline(lines, first);
  std::getline(lines, second);
  EXPECT_EQ(header,
            "query_index,i_triggered,r_value,a_value,c_after,clamped,"
            "no_trigger");
  EXPECT_EQ(first.substr(0, 4), "1,8,");
  EXPECT_EQ(second.substr(0, 6), "2,-1,,");
  EXPECT_EQ(second.substr(second.size() - 4), ",0,1");
  EXPECT_FALSE(std::getline(lines, extra));
}

}  // namespace
}  // namespace shaky
