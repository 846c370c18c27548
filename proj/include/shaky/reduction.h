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

#ifndef SHAKY_REDUCTION_H_
#define SHAKY_REDUCTION_H_

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "shaky/core.h"
#include "shaky/mechanisms.h"

namespace shaky {

// A bounded query g: X -> [0, 1], given by its values on the holdout and its
// population mean (oracle-only side channel).
class Query {
 public:
  // Throws InvalidArgument if any value or the mean is outside [0, 1].
  Query(std::vector<double> values, double population_mean);

  std::span<const double> values() const { return values_; }
  double population_mean() const { return population_mean_; }

 private:
  std::vector<double> values_;
  double population_mean_;
};

struct EstimatorAnswer {
  double answer = 0.0;
  // Offset index i that triggered, or -1 when the loop ran out.
  int64_t trigger_index = -1;
  // r_{t,i} at the trigger; NaN without a trigger.
  double r_value = 0.0;
  double c_before = 0.0;
  double c_after = 0.0;
  // Some constructed loss value had to be clamped into [0, 1].
  bool clamped = false;
  bool no_trigger = false;
  int64_t submissions = 0;
};

// Thrown when the underlying leaderboard runs out of rounds mid-query.
class EstimatorBudgetError : public BudgetExhausted {
 public:
  EstimatorBudgetError(const std::string& what, int64_t query_index,
                       int64_t offset_index, double threshold)
      : BudgetExhausted(what),
        query_index(query_index),
        offset_index(offset_index),
        threshold(threshold) {}

  int64_t query_index;
  int64_t offset_index;
  double threshold;
};

// Answers adaptive queries through a leaderboard. For a query g with
// threshold c (the last value the leaderboard released, capped into
// [0, 1/2], or 1/2 before any submission) it submits
//
//   f_i = c + (g - i alpha) / 2,   i = 0, 1, ..., ceil(1/alpha) - 1,
//
// and stops at the first i with r_i < c - alpha/2, answering
// a = 2 (r_i - c + i alpha / 2). Loss values are clamped into [0, 1] and
// the answer is flagged when that happens. Without a trigger the answer is
// 1 and flagged no_trigger. The side-channel population risk of f_i is
// c - i alpha/2 + E g / 2, clamped into [0, 1].
class AdaptiveEstimator {
 public:
  // Throws InvalidArgument unless alpha lies in (0, 1/2).
  AdaptiveEstimator(Leaderboard& leaderboard, double alpha);

  EstimatorAnswer Answer(const Query& query);

  double alpha() const { return alpha_; }
  double threshold() const;
  int64_t offsets_per_query() const { return offsets_per_query_; }
  int64_t queries_answered() const { return queries_answered_; }
  int64_t submissions() const { return submissions_; }

 private:
  Leaderboard& leaderboard_;
  double alpha_;
  int64_t offsets_per_query_;
  int64_t queries_answered_ = 0;
  int64_t submissions_ = 0;
};

// floor(1 / (3 alpha)) queries.
int64_t QueryBudget(double alpha);

struct SessionResult {
  std::vector<EstimatorAnswer> answers;
  int64_t total_submissions = 0;
  double final_threshold = 0.0;
};

// Throws BudgetExhausted when more than QueryBudget(alpha) queries are
// given.
SessionResult RunEstimatorSession(Leaderboard& leaderboard,
                                  std::span<const Query> queries, double alpha);

// query_index,i_triggered,r_value,a_value,c_after,clamped,no_trigger
void WriteSessionCsv(const SessionResult& session, std::ostream& out);

}  // namespace shaky

#endif  // SHAKY_REDUCTION_H_
