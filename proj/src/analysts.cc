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

#include "shaky/analysts.h"

#include <bit>
#include <cmath>
#include <limits>
#include <string>
#include <utility>

#include "shaky/noise.h"
#include "shaky/reduction.h"

namespace shaky {
namespace {

// Per-coordinate counts of set bits over many packed rows, kept as bit
// planes so that adding a row costs O(words) amortized.
class BitSlicedCounter {
 public:
  explicit BitSlicedCounter(int64_t words) : words_(words) {}

  void Add(std::span<const uint64_t> row) {
    for (int64_t w = 0; w < words_; ++w) {
      uint64_t carry = row[static_cast<std::size_t>(w)];
      for (std::size_t b = 0; carry != 0; ++b) {
        if (b == planes_.size()) {
          planes_.emplace_back(static_cast<std::size_t>(words_), 0);
        }
        uint64_t& cell = planes_[b][static_cast<std::size_t>(w)];
        const uint64_t next = cell & carry;
        cell ^= carry;
        carry = next;
      }
    }
    ++rows_;
  }

  int64_t Count(int64_t j) const {
    const auto w = static_cast<std::size_t>(j / 64);
    const int shift = static_cast<int>(j % 64);
    int64_t count = 0;
    for (std::size_t b = 0; b < planes_.size(); ++b) {
      count |= static_cast<int64_t>((planes_[b][w] >> shift) & 1) << b;
    }
    return count;
  }

  int64_t rows() const { return rows_; }

 private:
  int64_t words_;
  int64_t rows_ = 0;
  std::vector<std::vector<uint64_t>> planes_;
};

int BitAt(std::span<const uint64_t> words, int64_t j) {
  return static_cast<int>((words[static_cast<std::size_t>(j / 64)] >> (j % 64)) & 1);
}

std::vector<double> ZeroOneLosses(std::span<const uint8_t> predictions,
                                  std::span<const uint8_t> labels) {
  std::vector<double> losses(predictions.size());
  for (std::size_t j = 0; j < losses.size(); ++j) {
    losses[j] = predictions[j] != labels[j] ? 1.0 : 0.0;
  }
  return losses;
}

// Accumulates the +-1 votes of selected classifiers. Label 0 is the +1 of the
// +-1 encoding.
class MajorityVote {
 public:
  explicit MajorityVote(std::size_t n) : weights_(n, 0) {}

  void Add(std::span<const uint8_t> predictions, int sign) {
    for (std::size_t j = 0; j < weights_.size(); ++j) {
      weights_[j] += sign * (1 - 2 * static_cast<int64_t>(predictions[j]));
    }
  }

  // Nonnegative weights vote +1, i.e. label 0.
  std::vector<uint8_t> Labels() const {
    std::vector<uint8_t> labels(weights_.size());
    for (std::size_t j = 0; j < labels.size(); ++j) {
      labels[j] = weights_[j] < 0 ? 1 : 0;
    }
    return labels;
  }

 private:
  std::vector<int64_t> weights_;
};

struct Selection {
  SelectionMode mode;
  double theorem_cutoff;

  // +1 to add the classifier, -1 to add its negation, 0 to skip it.
  int Sign(double estimate) const {
    if (mode == SelectionMode::kDirect) return estimate < 0.5 ? 1 : -1;
    return estimate < theorem_cutoff ? 1 : 0;
  }
};

Selection MakeSelection(SelectionMode mode, std::size_t n) {
  return Selection{mode, 0.5 - 1.0 / std::sqrt(static_cast<double>(n))};
}

void CheckQueryCount(int64_t k, const HoldoutSample& sample) {
  if (k < 0 || k > static_cast<int64_t>(sample.size())) {
    throw InvalidArgument("majority attack needs 0 <= k <= n, got k = " +
                          std::to_string(k));
  }
}

}  // namespace

double AttackReport::gap() const {
  if (!final_released) return std::numeric_limits<double>::quiet_NaN();
  return final_population_risk - *final_released;
}

std::span<const uint64_t> PackedAttackInstance::query(int64_t i) const {
  return std::span<const uint64_t>(queries).subspan(
      static_cast<std::size_t>(i * words_per_vector),
      static_cast<std::size_t>(words_per_vector));
}

PackedAttackInstance GenerateAttackInstance(int64_t n, int64_t k,
                                            bool with_noise, uint64_t seed) {
  if (n < 1 || k < 1) throw InvalidArgument("direct attack needs n, k >= 1");
  PackedAttackInstance inst;
  inst.n = n;
  inst.k = k;
  inst.words_per_vector = (n + 63) / 64;
  const uint64_t tail_mask =
      (n % 64 == 0) ? ~uint64_t{0} : ((uint64_t{1} << (n % 64)) - 1);

  Rng rng(seed);
  auto fill = [&](std::vector<uint64_t>& out, std::size_t offset) {
    for (int64_t w = 0; w < inst.words_per_vector; ++w) {
      out[offset + static_cast<std::size_t>(w)] = rng.NextU64();
    }
    out[offset + static_cast<std::size_t>(inst.words_per_vector - 1)] &=
        tail_mask;
  };
  inst.hidden.resize(static_cast<std::size_t>(inst.words_per_vector));
  fill(inst.hidden, 0);
  inst.queries.resize(static_cast<std::size_t>(k * inst.words_per_vector));
  for (int64_t i = 0; i < k; ++i) {
    fill(inst.queries, static_cast<std::size_t>(i * inst.words_per_vector));
  }
  if (with_noise) {
    inst.standard_normals.resize(static_cast<std::size_t>(k));
    for (double& z : inst.standard_normals) z = Gaussian(rng, 1.0);
  }
  return inst;
}

double ResolveDirectAttack(const PackedAttackInstance& instance,
                           std::optional<double> noise_stddev,
                           int64_t* selected_count) {
  if (noise_stddev) {
    if (!(*noise_stddev > 0.0)) {
      throw InvalidArgument("noise stddev must be > 0");
    }
    if (instance.standard_normals.size() !=
        static_cast<std::size_t>(instance.k)) {
      throw InvalidArgument("instance was generated without noise draws");
    }
  }
  const double n = static_cast<double>(instance.n);
  BitSlicedCounter positives(instance.words_per_vector);
  BitSlicedCounter negatives(instance.words_per_vector);
  for (int64_t i = 0; i < instance.k; ++i) {
    const auto row = instance.query(i);
    int64_t disagreements = 0;
    for (std::size_t w = 0; w < row.size(); ++w) {
      disagreements += std::popcount(row[w] ^ instance.hidden[w]);
    }
    double answer =
        static_cast<double>(instance.n - 2 * disagreements) / n;
    if (noise_stddev) {
      answer += *noise_stddev *
                instance.standard_normals[static_cast<std::size_t>(i)];
    }
    (answer > 0.0 ? positives : negatives).Add(row);
  }
  if (selected_count != nullptr) *selected_count = positives.rows();

  // weight_j = sum over positives of (2 b - 1) minus the same over negatives.
  int64_t mismatches = 0;
  for (int64_t j = 0; j < instance.n; ++j) {
    const int64_t weight = (2 * positives.Count(j) - positives.rows()) -
                           (2 * negatives.Count(j) - negatives.rows());
    const int final_bit = weight < 0 ? 0 : 1;
    if (final_bit != BitAt(instance.hidden, j)) ++mismatches;
  }
  return static_cast<double>(mismatches) / n;
}

AttackReport MajorityAttackDirect(int64_t n, int64_t k,
                                  std::optional<double> noise_stddev,
                                  uint64_t seed) {
  if (noise_stddev && !(*noise_stddev > 0.0)) {
    throw InvalidArgument("noise stddev must be > 0");
  }
  const PackedAttackInstance instance =
      GenerateAttackInstance(n, k, noise_stddev.has_value(), seed);
  AttackReport report;
  report.final_error =
      ResolveDirectAttack(instance, noise_stddev, &report.selected_count);
  report.queries_issued = k;
  report.feedback_received = k;
  return report;
}

AttackReport MajorityAttackVsMechanism(Leaderboard& mechanism,
                                       const HoldoutSample& sample, int64_t k,
                                       uint64_t seed, SelectionMode mode) {
  CheckQueryCount(k, sample);
  const Selection selection = MakeSelection(mode, sample.size());
  Rng rng(seed);
  std::vector<uint8_t> predictions(sample.size());
  MajorityVote vote(sample.size());
  AttackReport report;

  for (int64_t i = 0; i < k; ++i) {
    FillRandomBits(rng, predictions);
    const double previous = mechanism.last_released();
    const double estimate =
        mechanism.Submit(ModelFromPredictions(predictions, sample));
    ++report.queries_issued;
    if (estimate != previous) ++report.feedback_received;
    const int sign = selection.Sign(estimate);
    if (sign != 0) {
      vote.Add(predictions, sign);
      if (sign > 0) ++report.selected_count;
    }
  }

  const SubmittedModel final_model = ModelFromPredictions(vote.Labels(), sample);
  report.final_released = mechanism.Submit(final_model);
  report.final_error = final_model.empirical_risk();
  return report;
}

AttackReport ShiftedMajorityAttack(Leaderboard& mechanism,
                                   const HoldoutSample& sample, int64_t k,
                                   double alpha, uint64_t seed,
                                   SelectionMode mode) {
  CheckQueryCount(k, sample);
  if (k + 1 > QueryBudget(alpha)) {
    throw BudgetExhausted("shifted attack with k = " + std::to_string(k) +
                          " needs alpha <= 1/(3(k+1))");
  }
  const Selection selection = MakeSelection(mode, sample.size());
  AdaptiveEstimator estimator(mechanism, alpha);
  Rng rng(seed);
  std::vector<uint8_t> predictions(sample.size());
  MajorityVote vote(sample.size());
  AttackReport report;

  for (int64_t i = 0; i < k; ++i) {
    FillRandomBits(rng, predictions);
    const EstimatorAnswer answer = estimator.Answer(
        Query(ZeroOneLosses(predictions, sample.labels()), 0.5));
    ++report.queries_issued;
    if (!answer.no_trigger) ++report.feedback_received;
    const int sign = selection.Sign(answer.answer);
    if (sign != 0) {
      vote.Add(predictions, sign);
      if (sign > 0) ++report.selected_count;
    }
  }

  const std::vector<uint8_t> final_labels = vote.Labels();
  const std::vector<double> final_losses =
      ZeroOneLosses(final_labels, sample.labels());
  report.final_error = EmpiricalRisk(final_losses);
  report.final_released = estimator.Answer(Query(final_losses, 0.5)).answer;
  return report;
}

AttackReport RandomAnalyst(Leaderboard& mechanism, const HoldoutSample& sample,
                           int64_t k, uint64_t seed) {
  CheckQueryCount(k, sample);
  Rng rng(seed);
  std::vector<uint8_t> predictions(sample.size());
  AttackReport report;
  for (int64_t i = 0; i < k; ++i) {
    FillRandomBits(rng, predictions);
    const double previous = mechanism.last_released();
    const double estimate =
        mechanism.Submit(ModelFromPredictions(predictions, sample));
    ++report.queries_issued;
    if (estimate != previous) ++report.feedback_received;
  }
  FillRandomBits(rng, predictions);
  const SubmittedModel final_model = ModelFromPredictions(predictions, sample);
  report.final_released = mechanism.Submit(final_model);
  report.final_error = final_model.empirical_risk();
  return report;
}

}  // namespace shaky
