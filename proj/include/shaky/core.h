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

#ifndef SHAKY_CORE_H_
#define SHAKY_CORE_H_

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace shaky {

class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Raised when a mechanism or estimator is asked for more rounds than it was
// configured for.
class BudgetExhausted : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Raised by ShakyParams when the derived (epsilon, delta) fall outside the
// regime the Shaky Ladder analysis requires.
class ParameterRegimeError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Parameters of the Shaky Ladder. See ShakyParams() in mechanisms.h for the
// derivation from (n, k, beta).
struct MechanismParams {
  int64_t n = 0;
  int64_t k = 0;
  double beta = 0.0;
  double delta = 0.0;
  double epsilon = 0.0;
  double lambda = 0.0;
  double sigma = 0.0;
  // n >= ln(4 epsilon / delta) / epsilon^2. Reported, not enforced.
  bool meets_sample_size_condition = true;
};

class SubmittedModel;

// Oracle-only access to a model's population risk. Defined in audit.cc; no
// mechanism code path calls it.
double PopulationRisk(const SubmittedModel& model);

// A model as seen through the holdout: its per-point losses, plus the
// analytically known population risk kept behind PopulationRisk().
class SubmittedModel {
 public:
  // Throws InvalidArgument if the vector is empty or any loss (or the
  // population risk) lies outside [0, 1] by more than 1e-12. Values within
  // the tolerance are snapped into range.
  SubmittedModel(std::vector<double> losses, double population_risk);

  std::span<const double> losses() const { return losses_; }
  std::size_t size() const { return losses_.size(); }
  double empirical_risk() const { return empirical_risk_; }

 private:
  friend double PopulationRisk(const SubmittedModel& model);

  std::vector<double> losses_;
  double population_risk_;
  double empirical_risk_;
};

// Holdout with hidden binary labels drawn uniformly at random.
class HoldoutSample {
 public:
  HoldoutSample(std::vector<uint8_t> labels, uint64_t seed);

  std::size_t size() const { return labels_.size(); }
  std::span<const uint8_t> labels() const { return labels_; }
  uint64_t seed() const { return seed_; }

 private:
  std::vector<uint8_t> labels_;
  uint64_t seed_;
};

HoldoutSample MakeRandomLabelSample(int64_t n, uint64_t seed);

// 0/1 loss of `predictions` against the hidden labels. Under random labels
// every classifier has population risk 1/2.
SubmittedModel ModelFromPredictions(std::span<const uint8_t> predictions,
                                    const HoldoutSample& sample);

double EmpiricalRisk(std::span<const double> losses);
double EmpiricalRisk(const SubmittedModel& model);

struct RoundRecord {
  int64_t round = 0;
  double empirical_risk = 0.0;
  double released = 0.0;
  double population_risk = 0.0;
  bool updated = false;
  // Signed noise draws of the round, in draw order. Empty for noiseless
  // mechanisms.
  std::array<double, 3> noise{};
  int noise_count = 0;

  std::span<const double> noise_draws() const {
    return std::span<const double>(noise.data(),
                                   static_cast<std::size_t>(noise_count));
  }
  void SetNoise(std::span<const double> draws);
};

// Released value before the first round.
inline constexpr double kInitialEstimate = 1.0;

class Trace {
 public:
  std::optional<MechanismParams> params;

  // Throws InvalidArgument unless record.round == size() + 1.
  void Append(const RoundRecord& record);
  // Threshold noise drawn before round 1, when the mechanism has one.
  void SetInitialNoise(double value);
  std::optional<double> initial_noise() const { return initial_noise_; }

  const std::vector<RoundRecord>& records() const { return records_; }
  std::size_t size() const { return records_.size(); }
  bool empty() const { return records_.empty(); }
  // Running max of |noise| over all draws, including initial_noise.
  double max_noise_magnitude() const { return max_noise_magnitude_; }
  // Number of Laplace/Gaussian draws recorded, including initial_noise.
  int64_t noise_draw_count() const { return noise_draw_count_; }

 private:
  std::vector<RoundRecord> records_;
  std::optional<double> initial_noise_;
  double max_noise_magnitude_ = 0.0;
  int64_t noise_draw_count_ = 0;
};

}  // namespace shaky

#endif  // SHAKY_CORE_H_
