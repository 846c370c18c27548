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

#ifndef SHAKY_EXPERIMENTS_H_
#define SHAKY_EXPERIMENTS_H_

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "shaky/core.h"
#include "shaky/mechanisms.h"

namespace shaky {

enum class ExperimentKind {
  kVaryQueries,
  kVaryNoise,
  kEnvelope,
  kReductionOracle,
  kAttackVsMechanism,
};

enum class MechanismKind {
  kShaky,
  kLadder,
  kPfLadder,
  kEmpirical,
  kNoisy,
  kPopulationMin,
};

std::string_view ToString(ExperimentKind kind);
std::string_view ToString(MechanismKind kind);
std::optional<ExperimentKind> ParseExperimentKind(std::string_view text);
std::optional<MechanismKind> ParseMechanismKind(std::string_view text);

struct ExperimentConfig {
  ExperimentKind experiment = ExperimentKind::kVaryQueries;
  int64_t n = 0;
  // Empty grids fall back to DefaultKGrid / DefaultNoiseGrid.
  std::vector<int64_t> k_grid;
  // Noise levels in units of 1/sqrt(n).
  std::vector<double> noise_grid;
  int reps = 100;
  uint64_t seed = 1;
  MechanismKind mechanism = MechanismKind::kShaky;
  double beta = 0.1;
  // Ladder step; defaults to 1/sqrt(n).
  std::optional<double> eta;
  // Accuracy target of the reduction-oracle experiment.
  double alpha = 0.05;
  int threads = 1;
};

std::vector<int64_t> DefaultKGrid(ExperimentKind kind);
std::vector<double> DefaultNoiseGrid(ExperimentKind kind,
                                     MechanismKind mechanism);

struct RepResult {
  int rep = 0;
  // finalError for attack experiments, lberr for envelope, and the largest
  // |a_t - E g_t| over triggered answers for reduction-oracle.
  double error = 0.0;
  std::optional<double> lberr;
  std::optional<int64_t> updates;
  std::optional<double> max_noise;
};

struct CellResult {
  int64_t k = 0;
  double noise_multiplier = 0.0;
  double mean_error = 0.0;
  // Sample standard deviation across repetitions (0 for a single rep).
  double std_error = 0.0;
  std::vector<RepResult> reps;
};

struct ResultTable {
  ExperimentKind experiment = ExperimentKind::kVaryQueries;
  std::string mechanism;
  int64_t n = 0;
  std::vector<CellResult> cells;  // sorted by (k, noise_multiplier)
  // Trace of the first repetition of the first cell, for mechanism runs.
  std::optional<Trace> sample_trace;
};

// Seed of repetition `rep` in the cell with query count k. Independent of
// the noise level, so noise levels are paired on identical instances.
uint64_t RepSeed(uint64_t seed, int64_t k, int rep);

// Throws InvalidArgument on a malformed config.
void ValidateConfig(const ExperimentConfig& config);

ResultTable RunVaryQueries(const ExperimentConfig& config);
ResultTable RunVaryNoise(const ExperimentConfig& config);
ResultTable RunExperiment(const ExperimentConfig& config);

// Builds a fresh mechanism with room for `rounds` submissions.
std::unique_ptr<Leaderboard> MakeMechanism(MechanismKind kind, int64_t n,
                                           int64_t rounds, double beta,
                                           std::optional<double> eta,
                                           double noise_stddev, uint64_t seed);

// experiment,mechanism,n,k,noise_multiplier,rep_count,mean_error,std_error
// With `per_rep`, one row per repetition with the extra columns
// rep,final_error,lberr,updates_B,max_noise_L.
void WriteResultCsv(const ResultTable& table, bool per_rep, std::ostream& out);

struct MeanStd {
  double mean = 0.0;
  double stddev = 0.0;
};
MeanStd SampleMeanStd(std::span<const double> values);

// Exit codes of RunCli.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitGoldenMismatch = 3;

int RunCli(int argc, const char* const* argv, std::ostream& out,
           std::ostream& err);

}  // namespace shaky

#endif  // SHAKY_EXPERIMENTS_H_
