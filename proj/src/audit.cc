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

#include "shaky/audit.h"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <string>

namespace shaky {

double PopulationRisk(const SubmittedModel& model) {
  return model.population_risk_;
}

PopulationMinOracle::PopulationMinOracle(int64_t holdout_size,
                                         std::optional<int64_t> round_budget)
    : Leaderboard(holdout_size, round_budget) {}

double PopulationMinOracle::Decide(const SubmittedModel& model,
                                   RoundRecord& /*record*/) {
  return std::min(last_released(), PopulationRisk(model));
}

double LeaderboardError(const Trace& trace) {
  if (trace.empty()) throw InvalidArgument("leaderboard error of empty trace");
  double running_min = trace.records().front().population_risk;
  double worst = 0.0;
  for (const RoundRecord& r : trace.records()) {
    running_min = std::min(running_min, r.population_risk);
    worst = std::max(worst, std::fabs(running_min - r.released));
  }
  return worst;
}

int64_t CountUpdates(const Trace& trace) {
  double previous = kInitialEstimate;
  int64_t updates = 0;
  for (const RoundRecord& r : trace.records()) {
    if (r.released < previous) ++updates;
    previous = r.released;
  }
  return updates;
}

double MaxNoiseMagnitude(const Trace& trace) {
  double max_noise = trace.initial_noise() ? std::fabs(*trace.initial_noise())
                                           : 0.0;
  for (const RoundRecord& r : trace.records()) {
    for (double draw : r.noise_draws()) {
      max_noise = std::max(max_noise, std::fabs(draw));
    }
  }
  return max_noise;
}

FaithfulnessResult FaithfulnessAudit(const Trace& trace, int64_t n) {
  if (n < 1) throw InvalidArgument("holdout size must be >= 1");
  const double bound = 1.0 / (2.0 * std::sqrt(static_cast<double>(n)));
  FaithfulnessResult result;
  double previous = kInitialEstimate;
  for (const RoundRecord& r : trace.records()) {
    if (r.released < previous) {
      const double deviation = std::fabs(r.released - r.empirical_risk);
      result.worst_deviation = std::max(result.worst_deviation, deviation);
      if (deviation > bound) ++result.violations;
    }
    previous = r.released;
  }
  return result;
}

double Envelope(const MechanismParams& params, int64_t update_count,
                double max_noise) {
  return 18.0 * params.epsilon * std::sqrt(static_cast<double>(update_count)) +
         params.lambda + 2.0 * max_noise;
}

EvalReport EnvelopeCheck(const Trace& trace, const MechanismParams& params) {
  if (!trace.initial_noise()) {
    throw InvalidArgument("envelope check needs the initial threshold noise");
  }
  for (const RoundRecord& r : trace.records()) {
    if (r.noise_count != 3) {
      throw InvalidArgument("envelope check needs three noise draws in round " +
                            std::to_string(r.round));
    }
  }
  EvalReport report;
  report.lberr = LeaderboardError(trace);
  report.update_count = CountUpdates(trace);
  report.max_noise = MaxNoiseMagnitude(trace);
  report.envelope = Envelope(params, report.update_count, report.max_noise);
  report.envelope_satisfied = report.lberr <= report.envelope;
  report.faithfulness = FaithfulnessAudit(trace, params.n);
  return report;
}

double TheoremUbRatio(const Trace& trace, const MechanismParams& params) {
  const double n = static_cast<double>(params.n);
  const double k = static_cast<double>(params.k);
  const double rate = std::pow(std::log(k / params.beta), 0.4) *
                      std::pow(std::log(k * n / params.beta), 0.2) /
                      std::pow(n, 0.4);
  return LeaderboardError(trace) / rate;
}

void WriteEvalCsvHeader(std::ostream& out) {
  out << "lberr,updates_B,max_noise_L,envelope,envelope_satisfied,"
         "faithfulness_violations,worst_deviation\n";
}

void WriteEvalCsvRow(std::ostream& out, const EvalReport& report) {
  out << FormatDouble(report.lberr) << ',' << report.update_count << ','
      << FormatDouble(report.max_noise) << ',' << FormatDouble(report.envelope)
      << ',' << (report.envelope_satisfied ? 1 : 0) << ','
      << report.faithfulness.violations << ','
      << FormatDouble(report.faithfulness.worst_deviation) << '\n';
}

}  // namespace shaky
