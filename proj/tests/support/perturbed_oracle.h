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

#ifndef SHAKY_TESTS_SUPPORT_PERTURBED_ORACLE_H_
#define SHAKY_TESTS_SUPPORT_PERTURBED_ORACLE_H_

#include <cstdint>
#include <limits>
#include <optional>
#include <string_view>
#include <utility>
#include <vector>

#include "shaky/audit.h"
#include "shaky/mechanisms.h"
#include "shaky/noise.h"

namespace shaky::testing {

// How the offset attached to each new population minimum is chosen.
enum class Perturbation {
  kUniform,      // uniform on [-h, h]
  kRandomSign,   // +h or -h with equal probability
  kAlternating,  // +h, -h, +h, ...
  kScripted,     // the given sequence, then zeros
};

// Population-min oracle whose release moves only when a new population
// minimum arrives, and then lands at that minimum plus an offset of
// magnitude at most `half_width`. Its leaderboard error is therefore at
// most `half_width` on every trace.
class PerturbedMinOracle : public Leaderboard {
 public:
  PerturbedMinOracle(int64_t holdout_size, double half_width,
                     Perturbation kind, uint64_t seed,
                     std::vector<double> script = {})
      : Leaderboard(holdout_size, std::nullopt),
        half_width_(half_width),
        kind_(kind),
        rng_(seed),
        script_(std::move(script)) {}

  std::string_view name() const override { return "perturbed-min"; }

 protected:
  double Decide(const SubmittedModel& model, RoundRecord& /*record*/) override {
    const double risk = PopulationRisk(model);
    if (!(risk < best_)) return last_released();
    best_ = risk;
    return risk + NextOffset();
  }

 private:
  double NextOffset() {
    const std::size_t index = draws_++;
    switch (kind_) {
      case Perturbation::kUniform:
        return half_width_ * (2.0 * rng_.NextOpenUnit() - 1.0);
      case Perturbation::kRandomSign:
        return (rng_.NextU64() & 1) ? half_width_ : -half_width_;
      case Perturbation::kAlternating:
        return index % 2 == 0 ? half_width_ : -half_width_;
      case Perturbation::kScripted:
        return index < script_.size() ? script_[index] : 0.0;
    }
    return 0.0;
  }

  double half_width_;
  Perturbation kind_;
  Rng rng_;
  std::vector<double> script_;
  double best_ = std::numeric_limits<double>::infinity();
  std::size_t draws_ = 0;
};

}  // namespace shaky::testing

#endif  // SHAKY_TESTS_SUPPORT_PERTURBED_ORACLE_H_
