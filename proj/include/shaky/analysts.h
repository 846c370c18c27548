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

#ifndef SHAKY_ANALYSTS_H_
#define SHAKY_ANALYSTS_H_

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "shaky/core.h"
#include "shaky/mechanisms.h"

namespace shaky {

struct AttackReport {
  // Fraction of holdout points the final model gets wrong, i.e. its
  // empirical risk.
  double final_error = 0.0;
  int64_t selected_count = 0;
  int64_t queries_issued = 0;
  // Queries whose submission changed the mechanism's release (for the
  // shifted attack: queries that triggered).
  int64_t feedback_received = 0;
  // Estimate the mechanism released for the final model, when one was
  // submitted.
  std::optional<double> final_released;
  double final_population_risk = 0.5;

  // True risk minus released estimate of the final model.
  double gap() const;
};

// Which answers count as "good" queries.
enum class SelectionMode {
  // Appendix-style port: keep answers that beat chance and negate the rest.
  kDirect,
  // Keep only answers below 1/2 - 1/sqrt(n); ignore the rest.
  kTheorem,
};

// Random +-1 instance of the direct attack, packed 64 coordinates per word
// (bit 1 means +1). Draw order: hidden vector words, then each query's
// words, then one standard normal per query when noise is requested.
struct PackedAttackInstance {
  int64_t n = 0;
  int64_t k = 0;
  int64_t words_per_vector = 0;
  std::vector<uint64_t> hidden;
  std::vector<uint64_t> queries;  // k rows of words_per_vector
  std::vector<double> standard_normals;  // empty without noise

  std::span<const uint64_t> query(int64_t i) const;
};

PackedAttackInstance GenerateAttackInstance(int64_t n, int64_t k,
                                            bool with_noise, uint64_t seed);

// answers_i = <query_i, hidden> / n (+ noise_stddev * z_i); queries with
// positive answers are added and the rest subtracted; final_j = +1 unless
// the weight is negative. Returns the fraction of mismatches with hidden.
double ResolveDirectAttack(const PackedAttackInstance& instance,
                           std::optional<double> noise_stddev,
                           int64_t* selected_count = nullptr);

// The majority attack on +-1 vectors, with no mechanism in between.
// Throws InvalidArgument for n < 1, k < 1 or a non-positive stddev.
AttackReport MajorityAttackDirect(int64_t n, int64_t k,
                                  std::optional<double> noise_stddev,
                                  uint64_t seed);

// Submits k random classifiers, selects by the released estimates, then
// submits the pointwise majority as round k + 1. The majority over an empty
// selection predicts label 0 (the +1 of the +-1 encoding) everywhere, as do
// ties. Throws InvalidArgument for k > n or k < 0.
AttackReport MajorityAttackVsMechanism(
    Leaderboard& mechanism, const HoldoutSample& sample, int64_t k,
    uint64_t seed, SelectionMode mode = SelectionMode::kTheorem);

// Like MajorityAttackVsMechanism, but every query (and the final majority)
// is asked through an AdaptiveEstimator at accuracy alpha, so each query
// keeps eliciting feedback. Needs k + 1 <= floor(1 / (3 alpha)) and enough
// mechanism rounds; BudgetExhausted propagates otherwise.
AttackReport ShiftedMajorityAttack(
    Leaderboard& mechanism, const HoldoutSample& sample, int64_t k,
    double alpha, uint64_t seed, SelectionMode mode = SelectionMode::kTheorem);

// Baseline: k random classifiers followed by one more random final model.
AttackReport RandomAnalyst(Leaderboard& mechanism, const HoldoutSample& sample,
                           int64_t k, uint64_t seed);

}  // namespace shaky

#endif  // SHAKY_ANALYSTS_H_
