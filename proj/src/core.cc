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

#include "shaky/core.h"

#include <cmath>
#include <string>
#include <utility>

#include "shaky/noise.h"

namespace shaky {
namespace {

constexpr double kRangeTolerance = 1e-12;

double SnapUnit(double value, const char* what) {
  if (!std::isfinite(value) || value < -kRangeTolerance ||
      value > 1.0 + kRangeTolerance) {
    throw InvalidArgument(std::string(what) + " outside [0, 1]: " +
                          FormatDouble(value));
  }
  return std::fmin(1.0, std::fmax(0.0, value));
}

}  // namespace

SubmittedModel::SubmittedModel(std::vector<double> losses,
                               double population_risk)
    : losses_(std::move(losses)),
      population_risk_(SnapUnit(population_risk, "population risk")) {
  if (losses_.empty()) throw InvalidArgument("empty loss vector");
  for (double& loss : losses_) {
    if (!(loss >= 0.0 && loss <= 1.0)) loss = SnapUnit(loss, "loss");
  }
  empirical_risk_ = EmpiricalRisk(losses_);
}

HoldoutSample::HoldoutSample(std::vector<uint8_t> labels, uint64_t seed)
    : labels_(std::move(labels)), seed_(seed) {
  if (labels_.empty()) throw InvalidArgument("holdout size must be >= 1");
  for (uint8_t y : labels_) {
    if (y > 1) throw InvalidArgument("labels must be 0 or 1");
  }
}

HoldoutSample MakeRandomLabelSample(int64_t n, uint64_t seed) {
  if (n < 1) throw InvalidArgument("holdout size must be >= 1");
  std::vector<uint8_t> labels(static_cast<std::size_t>(n));
  Rng rng(seed);
  FillRandomBits(rng, labels);
  return HoldoutSample(std::move(labels), seed);
}

SubmittedModel ModelFromPredictions(std::span<const uint8_t> predictions,
                                    const HoldoutSample& sample) {
  if (predictions.size() != sample.size()) {
    throw InvalidArgument("prediction length " +
                          std::to_string(predictions.size()) +
                          " does not match holdout size " +
                          std::to_string(sample.size()));
  }
  const auto labels = sample.labels();
  std::vector<double> losses(predictions.size());
  for (std::size_t i = 0; i < losses.size(); ++i) {
    losses[i] = predictions[i] != labels[i] ? 1.0 : 0.0;
  }
  return SubmittedModel(std::move(losses), 0.5);
}

double EmpiricalRisk(std::span<const double> losses) {
  if (losses.empty()) throw InvalidArgument("empty loss vector");
  double sum = 0.0;
  for (double loss : losses) sum += loss;
  return sum / static_cast<double>(losses.size());
}

double EmpiricalRisk(const SubmittedModel& model) {
  return model.empirical_risk();
}

void RoundRecord::SetNoise(std::span<const double> draws) {
  if (draws.size() > noise.size()) {
    throw InvalidArgument("at most three noise draws per round");
  }
  noise = {};
  for (std::size_t i = 0; i < draws.size(); ++i) noise[i] = draws[i];
  noise_count = static_cast<int>(draws.size());
}

void Trace::Append(const RoundRecord& record) {
  if (record.round != static_cast<int64_t>(records_.size()) + 1) {
    throw InvalidArgument("trace rounds must be consecutive from 1");
  }
  for (double draw : record.noise_draws()) {
    max_noise_magnitude_ = std::fmax(max_noise_magnitude_, std::fabs(draw));
  }
  noise_draw_count_ += record.noise_count;
  records_.push_back(record);
}

void Trace::SetInitialNoise(double value) {
  if (initial_noise_.has_value()) {
    throw InvalidArgument("initial noise already recorded");
  }
  initial_noise_ = value;
  max_noise_magnitude_ = std::fmax(max_noise_magnitude_, std::fabs(value));
  ++noise_draw_count_;
}

}  // namespace shaky
