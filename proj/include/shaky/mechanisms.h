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

#ifndef SHAKY_MECHANISMS_H_
#define SHAKY_MECHANISMS_H_

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "shaky/core.h"
#include "shaky/noise.h"

namespace shaky {

// Shaky Ladder parameters for holdout size n, round budget k and failure
// probability beta (natural logs throughout):
//
//   delta   = beta / (k n)
//   epsilon = (ln(k / beta) * sqrt(ln(1 / delta)) / n)^(3/5)
//   sigma   = sqrt(ln(1 / delta)) / (epsilon n)
//   lambda  = 4 ln(4 k / beta) sigma
//
// Throws ParameterRegimeError unless epsilon < 1/3 and delta < epsilon / 4,
// and InvalidArgument for n, k < 1 or beta outside (0, 1). The sample size
// condition n >= ln(4 epsilon / delta) / epsilon^2 is only reported.
MechanismParams ShakyParams(int64_t n, int64_t k, double beta);

// A leaderboard scores each submitted model against the holdout and releases
// an estimate. Subclasses decide the release; this class owns round
// accounting and the trace.
class Leaderboard {
 public:
  // `holdout_size` is the length every submission must have. Without a
  // round budget the mechanism accepts any number of submissions.
  Leaderboard(int64_t holdout_size, std::optional<int64_t> round_budget);
  virtual ~Leaderboard() = default;

  Leaderboard(const Leaderboard&) = delete;
  Leaderboard& operator=(const Leaderboard&) = delete;

  // Throws InvalidArgument on a length mismatch and BudgetExhausted once the
  // round budget is spent.
  double Submit(const SubmittedModel& model);

  virtual std::string_view name() const = 0;

  const Trace& trace() const { return trace_; }
  int64_t holdout_size() const { return holdout_size_; }
  int64_t rounds() const { return static_cast<int64_t>(trace_.size()); }
  std::optional<int64_t> round_budget() const { return round_budget_; }
  // R_{t-1}; kInitialEstimate before the first round.
  double last_released() const { return last_released_; }
  // Rounds whose release fell strictly below the previous release.
  int64_t update_count() const { return update_count_; }

 protected:
  // Chooses the release for the current round. `record` arrives with round
  // and empirical risk filled in; implementations may set its noise draws.
  virtual double Decide(const SubmittedModel& model, RoundRecord& record) = 0;

  Trace& mutable_trace() { return trace_; }

 private:
  int64_t holdout_size_;
  std::optional<int64_t> round_budget_;
  Trace trace_;
  double last_released_ = kInitialEstimate;
  int64_t update_count_ = 0;
};

// Base for every mechanism that only looks at the holdout. Release() receives
// the loss vector and nothing else, so population risk is out of reach.
class HoldoutMechanism : public Leaderboard {
 public:
  using Leaderboard::Leaderboard;

 protected:
  virtual double Release(std::span<const double> losses,
                         RoundRecord& record) = 0;

 private:
  double Decide(const SubmittedModel& model, RoundRecord& record) final {
    return Release(model.losses(), record);
  }
};

struct ShakyOptions {
  // Test hook: every Laplace draw becomes 0 and the generator is untouched.
  bool zero_noise = false;
};

// Each round draws xi_t, xi'_t, xi''_t ~ Laplace(sigma). If
// R_S(f_t) + xi_t < R_{t-1} - lambda + xi the release is R_S(f_t) + xi'_t
// and the threshold noise xi becomes xi''_t; otherwise R_{t-1} is repeated.
// xi is drawn once up front. Releases are not clamped.
class ShakyLadder : public HoldoutMechanism {
 public:
  ShakyLadder(const MechanismParams& params, uint64_t seed,
              ShakyOptions options = {});

  std::string_view name() const override { return "shaky"; }
  const MechanismParams& params() const { return params_; }
  double threshold_noise() const { return threshold_noise_; }

 protected:
  double Release(std::span<const double> losses, RoundRecord& record) override;

 private:
  double Draw();

  MechanismParams params_;
  Rng rng_;
  ShakyOptions options_;
  double threshold_noise_ = 0.0;
};

enum class Rounding { kNone, kMultiplesOfEta };

struct LadderConfig {
  double eta = 0.01;
  Rounding rounding = Rounding::kNone;
};

// Releases R_S(f_t) (optionally rounded to the nearest multiple of eta) when
// it is below the previous release by more than eta.
class Ladder : public HoldoutMechanism {
 public:
  Ladder(int64_t holdout_size, LadderConfig config,
         std::optional<int64_t> round_budget = std::nullopt);

  std::string_view name() const override { return "ladder"; }
  const LadderConfig& config() const { return config_; }

 protected:
  double Release(std::span<const double> losses, RoundRecord& record) override;

 private:
  LadderConfig config_;
};

// Parameter-free Ladder heuristic. The first submission becomes the
// incumbent and its empirical risk is released. Afterwards, with d the
// per-point loss difference to the incumbent and s = stddev(d) / sqrt(n)
// (sample stddev, s = 0 when n = 1), a submission replaces the incumbent iff
// R_S(f_t) < R_S(incumbent) - s. The release is R_S(f_t) rounded to the
// decimal position of the leading digit of s (unrounded when s = 0), capped
// at the previous release so releases never increase.
class ParameterFreeLadder : public HoldoutMechanism {
 public:
  explicit ParameterFreeLadder(
      int64_t holdout_size, std::optional<int64_t> round_budget = std::nullopt);

  std::string_view name() const override { return "pf-ladder"; }

  // Step size used in the most recent comparison; 0 before the second round.
  double last_step() const { return last_step_; }

 protected:
  double Release(std::span<const double> losses, RoundRecord& record) override;

 private:
  std::vector<double> incumbent_;
  double incumbent_risk_ = 0.0;
  double last_step_ = 0.0;
};

// Releases R_S(f_t) every round.
class EmpiricalOracle : public HoldoutMechanism {
 public:
  explicit EmpiricalOracle(int64_t holdout_size,
                           std::optional<int64_t> round_budget = std::nullopt);

  std::string_view name() const override { return "empirical"; }

 protected:
  double Release(std::span<const double> losses, RoundRecord& record) override;
};

// Releases R_S(f_t) + N(0, stddev^2) every round.
class NoisyEmpiricalOracle : public HoldoutMechanism {
 public:
  NoisyEmpiricalOracle(int64_t holdout_size, double stddev, uint64_t seed,
                       std::optional<int64_t> round_budget = std::nullopt);

  std::string_view name() const override { return "noisy"; }
  double stddev() const { return stddev_; }

 protected:
  double Release(std::span<const double> losses, RoundRecord& record) override;

 private:
  double stddev_;
  Rng rng_;
};

// Rounds a value to the nearest multiple of `step`.
double RoundToMultiple(double value, double step);

// Trace CSV: round,empirical_risk,released,population_risk,updated,
// noise1,noise2,noise3. Missing noise draws are empty fields. With
// `clamp_releases` the released column is clamped into [0, 1] for display.
void WriteTraceCsv(const Trace& trace, std::ostream& out,
                   bool clamp_releases = false);

}  // namespace shaky

#endif  // SHAKY_MECHANISMS_H_
