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
#include <limits>
#include <ostream>
#include <string>
#include <utility>

#include "shaky/noise.h"

namespace shaky {
namespace {

constexpr double kCountSlack = 1e-9;
// Releases this close to the cutoff count as ties, so exact-arithmetic
// ties are not broken by rounding in i * alpha.
constexpr double kTieSlack = 1e-12;

void CheckUnit(double value, const char* what) {
  if (!std::isfinite(value) || value < 0.0 || value > 1.0) {
    throw InvalidArgument(std::string(what) + " outside [0, 1]: " +
                          FormatDouble(value));
  }
}

}  // namespace

Query::Query(std::vector<double> values, double population_mean)
    : values_(std::move(values)), population_mean_(population_mean) {
  if (values_.empty()) throw InvalidArgument("empty query");
  for (double v : values_) CheckUnit(v, "query value");
  CheckUnit(population_mean_, "query population mean");
}

AdaptiveEstimator::AdaptiveEstimator(Leaderboard& leaderboard, double alpha)
    : leaderboard_(leaderboard), alpha_(alpha) {
  if (!(alpha > 0.0 && alpha < 0.5)) {
    throw InvalidArgument("alpha must lie in (0, 1/2), got " +
                          FormatDouble(alpha));
  }
  offsets_per_query_ =
      static_cast<int64_t>(std::ceil(1.0 / alpha - kCountSlack));
}

double AdaptiveEstimator::threshold() const {
  if (leaderboard_.rounds() == 0) return 0.5;
  return std::clamp(leaderboard_.last_released(), 0.0, 0.5);
}

EstimatorAnswer AdaptiveEstimator::Answer(const Query& query) {
  const auto g = query.values();
  if (static_cast<int64_t>(g.size()) != leaderboard_.holdout_size()) {
    throw InvalidArgument("query length does not match holdout size");
  }
  EstimatorAnswer result;
  result.r_value = std::numeric_limits<double>::quiet_NaN();
  const double c = threshold();
  result.c_before = c;
  const double cutoff = c - alpha_ / 2;

  for (int64_t i = 0; i < offsets_per_query_; ++i) {
    std::vector<double> losses(g.size());
    const double offset = static_cast<double>(i) * alpha_;
    bool clamped = false;
    for (std::size_t j = 0; j < g.size(); ++j) {
      const double v = c + 0.5 * (g[j] - offset);
      if (v < 0.0 || v > 1.0) {
        clamped = true;
        losses[j] = std::clamp(v, 0.0, 1.0);
      } else {
        losses[j] = v;
      }
    }
    result.clamped = result.clamped || clamped;
    const double population_risk = std::clamp(
        c - offset / 2 + query.population_mean() / 2, 0.0, 1.0);

    double r = 0.0;
    try {
      r = leaderboard_.Submit(
          SubmittedModel(std::move(losses), population_risk));
    } catch (const BudgetExhausted& e) {
      throw EstimatorBudgetError(
          std::string("estimator stopped mid-query: ") + e.what(),
          queries_answered_, i, c);
    }
    ++result.submissions;
    ++submissions_;
    if (r < cutoff - kTieSlack) {
      result.trigger_index = i;
      result.r_value = r;
      result.answer = 2 * (r - c + offset / 2);
      break;
    }
  }
  if (result.trigger_index < 0) {
    result.no_trigger = true;
    result.answer = 1.0;
  }
  result.c_after = threshold();
  ++queries_answered_;
  return result;
}

int64_t QueryBudget(double alpha) {
  if (!(alpha > 0.0 && alpha < 0.5)) {
    throw InvalidArgument("alpha must lie in (0, 1/2), got " +
                          FormatDouble(alpha));
  }
  return static_cast<int64_t>(std::floor(1.0 / (3.0 * alpha) + kCountSlack));
}

SessionResult RunEstimatorSession(Leaderboard& leaderboard,
                                  std::span<const Query> queries,
                                  double alpha) {
  const int64_t budget = QueryBudget(alpha);
  if (static_cast<int64_t>(queries.size()) > budget) {
    throw BudgetExhausted("estimator answers at most " +
                          std::to_string(budget) + " queries at alpha = " +
                          FormatDouble(alpha));
  }
  AdaptiveEstimator estimator(leaderboard, alpha);
  SessionResult session;
  session.answers.reserve(queries.size());
  for (const Query& q : queries) session.answers.push_back(estimator.Answer(q));
  session.total_submissions = estimator.submissions();
  session.final_threshold = estimator.threshold();
  if (static_cast<double>(session.total_submissions) >
      1.0 / (alpha * alpha) + kCountSlack) {
    throw std::logic_error("estimator exceeded 1/alpha^2 submissions");
  }
  return session;
}

void WriteSessionCsv(const SessionResult& session, std::ostream& out) {
  out << "query_index,i_triggered,r_value,a_value,c_after,clamped,"
         "no_trigger\n";
  for (std::size_t t = 0; t < session.answers.size(); ++t) {
    const EstimatorAnswer& a = session.answers[t];
    out << t + 1 << ',' << a.trigger_index << ',';
    if (!a.no_trigger) out << FormatDouble(a.r_value);
    out << ',' << FormatDouble(a.answer) << ',' << FormatDouble(a.c_after)
        << ',' << (a.clamped ? 1 : 0) << ',' << (a.no_trigger ? 1 : 0)
        << '\n';
  }
}

}  // namespace shaky
