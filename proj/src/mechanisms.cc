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

#include "shaky/mechanisms.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <ostream>
#include <string>

namespace shaky {

MechanismParams ShakyParams(int64_t n, int64_t k, double beta) {
  if (n < 1 || k < 1) throw InvalidArgument("n and k must be >= 1");
  if (!(beta > 0.0 && beta < 1.0)) {
    throw InvalidArgument("beta must lie in (0, 1)");
  }
  const double nd = static_cast<double>(n);
  const double kd = static_cast<double>(k);

  MechanismParams p;
  p.n = n;
  p.k = k;
  p.beta = beta;
  p.delta = beta / (kd * nd);
  const double log_inv_delta = std::log(1.0 / p.delta);
  p.epsilon =
      std::pow(std::log(kd / beta) * std::sqrt(log_inv_delta) / nd, 3.0 / 5.0);
  p.sigma = std::sqrt(log_inv_delta) / (p.epsilon * nd);
  p.lambda = 4.0 * std::log(4.0 * kd / beta) * p.sigma;

  if (!(p.epsilon < 1.0 / 3.0)) {
    throw ParameterRegimeError("epsilon = " + FormatDouble(p.epsilon) +
                               " violates epsilon < 1/3");
  }
  if (!(p.delta < p.epsilon / 4.0)) {
    throw ParameterRegimeError("delta = " + FormatDouble(p.delta) +
                               " violates delta < epsilon/4");
  }
  p.meets_sample_size_condition =
      nd >= std::log(4.0 * p.epsilon / p.delta) / (p.epsilon * p.epsilon);
  return p;
}

Leaderboard::Leaderboard(int64_t holdout_size,
                         std::optional<int64_t> round_budget)
    : holdout_size_(holdout_size), round_budget_(round_budget) {
  if (holdout_size < 1) throw InvalidArgument("holdout size must be >= 1");
  if (round_budget && *round_budget < 0) {
    throw InvalidArgument("round budget must be >= 0");
  }
}

double Leaderboard::Submit(const SubmittedModel& model) {
  if (static_cast<int64_t>(model.size()) != holdout_size_) {
    throw InvalidArgument("loss vector length " + std::to_string(model.size()) +
                          " does not match holdout size " +
                          std::to_string(holdout_size_));
  }
  if (round_budget_ && rounds() >= *round_budget_) {
    throw BudgetExhausted(std::string(name()) + ": round budget of " +
                          std::to_string(*round_budget_) + " exhausted");
  }
  RoundRecord record;
  record.round = rounds() + 1;
  record.empirical_risk = model.empirical_risk();
  const double released = Decide(model, record);
  record.released = released;
  record.updated = released < last_released_;
  // Recorded for the evaluation oracle after the decision is made.
  record.population_risk = PopulationRisk(model);
  trace_.Append(record);
  if (record.updated) ++update_count_;
  last_released_ = released;
  return released;
}

ShakyLadder::ShakyLadder(const MechanismParams& params, uint64_t seed,
                         ShakyOptions options)
    : HoldoutMechanism(params.n, params.k),
      params_(params),
      rng_(seed),
      options_(options) {
  if (!(params.lambda > 0.0) || !(params.sigma > 0.0)) {
    throw InvalidArgument("Shaky Ladder needs lambda > 0 and sigma > 0");
  }
  mutable_trace().params = params;
  threshold_noise_ = Draw();
  mutable_trace().SetInitialNoise(threshold_noise_);
}

double ShakyLadder::Draw() {
  if (options_.zero_noise) return 0.0;
  return Laplace(rng_, params_.sigma);
}

double ShakyLadder::Release(std::span<const double> /*losses*/,
                            RoundRecord& record) {
  const double comparison_noise = Draw();
  const double release_noise = Draw();
  const double next_threshold_noise = Draw();
  const std::array<double, 3> draws = {comparison_noise, release_noise,
                                       next_threshold_noise};
  record.SetNoise(draws);

  const double best = last_released();
  if (record.empirical_risk + comparison_noise <
      best - params_.lambda + threshold_noise_) {
    threshold_noise_ = next_threshold_noise;
    return record.empirical_risk + release_noise;
  }
  return best;
}

double RoundToMultiple(double value, double step) {
  if (!(step > 0.0)) throw InvalidArgument("rounding step must be > 0");
  return std::round(value / step) * step;
}

Ladder::Ladder(int64_t holdout_size, LadderConfig config,
               std::optional<int64_t> round_budget)
    : HoldoutMechanism(holdout_size, round_budget), config_(config) {
  if (!(config.eta > 0.0)) throw InvalidArgument("Ladder eta must be > 0");
}

double Ladder::Release(std::span<const double> /*losses*/,
                       RoundRecord& record) {
  const double best = last_released();
  if (record.empirical_risk < best - config_.eta) {
    if (config_.rounding == Rounding::kMultiplesOfEta) {
      return RoundToMultiple(record.empirical_risk, config_.eta);
    }
    return record.empirical_risk;
  }
  return best;
}

ParameterFreeLadder::ParameterFreeLadder(int64_t holdout_size,
                                         std::optional<int64_t> round_budget)
    : HoldoutMechanism(holdout_size, round_budget) {}

double ParameterFreeLadder::Release(std::span<const double> losses,
                                    RoundRecord& record) {
  if (incumbent_.empty()) {
    incumbent_.assign(losses.begin(), losses.end());
    incumbent_risk_ = record.empirical_risk;
    return record.empirical_risk;
  }
  const std::size_t n = losses.size();
  double step = 0.0;
  if (n > 1) {
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean += losses[i] - incumbent_[i];
    mean /= static_cast<double>(n);
    double ss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double d = losses[i] - incumbent_[i] - mean;
      ss += d * d;
    }
    const double stddev = std::sqrt(ss / static_cast<double>(n - 1));
    step = stddev / std::sqrt(static_cast<double>(n));
  }
  last_step_ = step;

  const double best = last_released();
  if (!(record.empirical_risk < incumbent_risk_ - step)) return best;

  incumbent_.assign(losses.begin(), losses.end());
  incumbent_risk_ = record.empirical_risk;
  double released = record.empirical_risk;
  if (step > 0.0) {
    const double unit = std::pow(10.0, std::floor(std::log10(step)));
    released = RoundToMultiple(released, unit);
  }
  return std::min(released, best);
}

EmpiricalOracle::EmpiricalOracle(int64_t holdout_size,
                                 std::optional<int64_t> round_budget)
    : HoldoutMechanism(holdout_size, round_budget) {}

double EmpiricalOracle::Release(std::span<const double> /*losses*/,
                                RoundRecord& record) {
  return record.empirical_risk;
}

NoisyEmpiricalOracle::NoisyEmpiricalOracle(int64_t holdout_size,
                                           double stddev, uint64_t seed,
                                           std::optional<int64_t> round_budget)
    : HoldoutMechanism(holdout_size, round_budget),
      stddev_(stddev),
      rng_(seed) {
  if (!(stddev > 0.0)) throw InvalidArgument("noise stddev must be > 0");
}

double NoisyEmpiricalOracle::Release(std::span<const double> /*losses*/,
                                     RoundRecord& record) {
  const double noise = Gaussian(rng_, stddev_);
  record.SetNoise(std::span<const double>(&noise, 1));
  return record.empirical_risk + noise;
}

void WriteTraceCsv(const Trace& trace, std::ostream& out,
                   bool clamp_releases) {
  out << "round,empirical_risk,released,population_risk,updated,noise1,"
         "noise2,noise3\n";
  for (const RoundRecord& r : trace.records()) {
    const double released =
        clamp_releases ? std::clamp(r.released, 0.0, 1.0) : r.released;
    out << r.round << ',' << FormatDouble(r.empirical_risk) << ','
        << FormatDouble(released) << ',' << FormatDouble(r.population_risk)
        << ',' << (r.updated ? 1 : 0);
    for (int i = 0; i < 3; ++i) {
      out << ',';
      if (i < r.noise_count) out << FormatDouble(r.noise[static_cast<std::size_t>(i)]);
    }
    out << '\n';
  }
}

}  // namespace shaky
