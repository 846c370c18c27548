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

#ifndef SHAKY_AUDIT_H_
#define SHAKY_AUDIT_H_

#include <cstdint>
#include <iosfwd>
#include <optional>

#include "shaky/core.h"
#include "shaky/mechanisms.h"

namespace shaky {

// The evaluation oracle. Everything here may read population risks; nothing
// here is reachable from a HoldoutMechanism.

// Releases the running minimum of the population risks seen so far, starting
// from kInitialEstimate. The ideal leaderboard, used to exercise the
// reduction.
class PopulationMinOracle : public Leaderboard {
 public:
  explicit PopulationMinOracle(
      int64_t holdout_size, std::optional<int64_t> round_budget = std::nullopt);

  std::string_view name() const override { return "population-min"; }

 protected:
  double Decide(const SubmittedModel& model, RoundRecord& record) override;
};

// max_t |min_{i <= t} R_D(f_i) - R_t|. Throws InvalidArgument on an empty
// trace.
double LeaderboardError(const Trace& trace);

// Rounds with R_t < R_{t-1}, taking R_0 = kInitialEstimate.
int64_t CountUpdates(const Trace& trace);

// Max |noise| over the initial threshold noise and every per-round draw.
double MaxNoiseMagnitude(const Trace& trace);

struct FaithfulnessResult {
  int64_t violations = 0;
  double worst_deviation = 0.0;
};

// Over update rounds (R_t < R_{t-1}), counts |R_t - R_S(f_t)| > 1/(2 sqrt n).
// worst_deviation is the largest such gap over all update rounds.
FaithfulnessResult FaithfulnessAudit(const Trace& trace, int64_t n);

struct EvalReport {
  double lberr = 0.0;
  int64_t update_count = 0;
  double max_noise = 0.0;
  // 18 epsilon sqrt(B) + lambda + 2 L
  double envelope = 0.0;
  bool envelope_satisfied = false;
  FaithfulnessResult faithfulness;
};

double Envelope(const MechanismParams& params, int64_t update_count,
                double max_noise);

// Recomputes B and L from the trace rather than trusting mechanism
// counters. Throws InvalidArgument if the trace lacks the initial threshold
// noise or any round lacks its three draws.
EvalReport EnvelopeCheck(const Trace& trace, const MechanismParams& params);

// lberr / (ln(k/beta)^(2/5) ln(kn/beta)^(1/5) / n^(2/5)). Diagnostic only.
double TheoremUbRatio(const Trace& trace, const MechanismParams& params);

// One CSV row per run.
void WriteEvalCsvHeader(std::ostream& out);
void WriteEvalCsvRow(std::ostream& out, const EvalReport& report);

}  // namespace shaky

#endif  // SHAKY_AUDIT_H_
