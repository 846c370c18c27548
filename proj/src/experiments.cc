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

#include "shaky/experiments.h"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <functional>
#include <ostream>
#include <sstream>
#include <thread>
#include <utility>

#include "CLI11.hpp"
#include "shaky/analysts.h"
#include "shaky/audit.h"
#include "shaky/noise.h"
#include "shaky/reduction.h"

namespace shaky {
namespace {

struct Task {
  std::size_t cell = 0;
  int rep = 0;
};

// Runs fn(cell, rep) for every task on `threads` workers. Results land in
// preassigned slots, so the output does not depend on scheduling.
void RunTasks(const std::vector<Task>& tasks, int threads,
              const std::function<void(const Task&)>& fn) {
  const int workers =
      std::max(1, std::min<int>(threads, static_cast<int>(tasks.size())));
  if (workers == 1) {
    for (const Task& t : tasks) fn(t);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::atomic<bool> failed{false};
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      while (!failed.load()) {
        const std::size_t i = next.fetch_add(1);
        if (i >= tasks.size()) return;
        try {
          fn(tasks[i]);
        } catch (...) {
          if (!failed.exchange(true)) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

ResultTable MakeTable(const ExperimentConfig& config, std::string mechanism,
                      const std::vector<std::pair<int64_t, double>>& cells) {
  ResultTable table;
  table.experiment = config.experiment;
  table.mechanism = std::move(mechanism);
  table.n = config.n;
  for (const auto& [k, noise] : cells) {
    CellResult cell;
    cell.k = k;
    cell.noise_multiplier = noise;
    cell.reps.resize(static_cast<std::size_t>(config.reps));
    table.cells.push_back(std::move(cell));
  }
  return table;
}

std::vector<Task> AllTasks(const ResultTable& table, int reps) {
  std::vector<Task> tasks;
  for (std::size_t c = 0; c < table.cells.size(); ++c) {
    for (int r = 0; r < reps; ++r) tasks.push_back({c, r});
  }
  return tasks;
}

void Summarize(ResultTable& table) {
  for (CellResult& cell : table.cells) {
    std::vector<double> errors;
    errors.reserve(cell.reps.size());
    for (const RepResult& r : cell.reps) errors.push_back(r.error);
    const MeanStd ms = SampleMeanStd(errors);
    cell.mean_error = ms.mean;
    cell.std_error = ms.stddev;
  }
}

std::vector<std::pair<int64_t, double>> Grid(
    const std::vector<int64_t>& ks, const std::vector<double>& noises) {
  std::vector<std::pair<int64_t, double>> cells;
  for (int64_t k : ks) {
    for (double noise : noises) cells.emplace_back(k, noise);
  }
  std::sort(cells.begin(), cells.end());
  return cells;
}

ExperimentConfig WithDefaults(ExperimentConfig config) {
  if (config.experiment == ExperimentKind::kReductionOracle &&
      config.alpha > 0.0 && config.alpha < 0.5) {
    config.k_grid = {QueryBudget(config.alpha)};
  }
  if (config.k_grid.empty()) config.k_grid = DefaultKGrid(config.experiment);
  if (config.noise_grid.empty()) {
    config.noise_grid = DefaultNoiseGrid(config.experiment, config.mechanism);
  }
  return config;
}

// Independent streams for the pieces of one repetition.
struct RepSeeds {
  uint64_t sample;
  uint64_t mechanism;
  uint64_t analyst;
};

RepSeeds SplitRepSeed(uint64_t rep_seed) {
  return {DeriveSeed(rep_seed, 0), DeriveSeed(rep_seed, 1),
          DeriveSeed(rep_seed, 2)};
}

ResultTable RunDirectGrid(const ExperimentConfig& raw) {
  const ExperimentConfig config = WithDefaults(raw);
  ValidateConfig(config);
  ResultTable table =
      MakeTable(config, "direct", Grid(config.k_grid, config.noise_grid));
  const double unit = 1.0 / std::sqrt(static_cast<double>(config.n));
  RunTasks(AllTasks(table, config.reps), config.threads, [&](const Task& t) {
    CellResult& cell = table.cells[t.cell];
    std::optional<double> stddev;
    if (cell.noise_multiplier > 0.0) stddev = cell.noise_multiplier * unit;
    const AttackReport report = MajorityAttackDirect(
        config.n, cell.k, stddev, RepSeed(config.seed, cell.k, t.rep));
    cell.reps[static_cast<std::size_t>(t.rep)] =
        RepResult{t.rep, report.final_error, std::nullopt, std::nullopt,
                  std::nullopt};
  });
  Summarize(table);
  return table;
}

ResultTable RunEnvelope(const ExperimentConfig& raw) {
  const ExperimentConfig config = WithDefaults(raw);
  ValidateConfig(config);
  ResultTable table = MakeTable(config, "shaky", Grid(config.k_grid, {0.0}));
  RunTasks(AllTasks(table, config.reps), config.threads, [&](const Task& t) {
    CellResult& cell = table.cells[t.cell];
    const RepSeeds seeds = SplitRepSeed(RepSeed(config.seed, cell.k, t.rep));
    const MechanismParams params = ShakyParams(config.n, cell.k, config.beta);
    ShakyLadder mechanism(params, seeds.mechanism);
    const HoldoutSample sample = MakeRandomLabelSample(config.n, seeds.sample);
    MajorityAttackVsMechanism(mechanism, sample, cell.k - 1, seeds.analyst,
                              SelectionMode::kTheorem);
    const EvalReport report = EnvelopeCheck(mechanism.trace(), params);
    cell.reps[static_cast<std::size_t>(t.rep)] =
        RepResult{t.rep, report.lberr, report.lberr, report.update_count,
                  report.max_noise};
    if (t.cell == 0 && t.rep == 0) table.sample_trace = mechanism.trace();
  });
  Summarize(table);
  return table;
}

ResultTable RunReductionOracle(const ExperimentConfig& raw) {
  const ExperimentConfig config = WithDefaults(raw);
  ValidateConfig(config);
  ResultTable table =
      MakeTable(config, "population-min", Grid(config.k_grid, {0.0}));
  RunTasks(AllTasks(table, config.reps), config.threads, [&](const Task& t) {
    CellResult& cell = table.cells[t.cell];
    Rng rng(RepSeed(config.seed, cell.k, t.rep));
    // Bernoulli(mu) queries have population mean exactly mu.
    std::vector<Query> queries;
    for (int64_t q = 0; q < cell.k; ++q) {
      const double mu = (1.0 - 2.0 * config.alpha) * rng.NextOpenUnit();
      std::vector<double> values(static_cast<std::size_t>(config.n));
      for (double& v : values) v = rng.NextOpenUnit() < mu ? 1.0 : 0.0;
      queries.emplace_back(std::move(values), mu);
    }
    PopulationMinOracle oracle(config.n);
    const SessionResult session =
        RunEstimatorSession(oracle, queries, config.alpha);
    double worst = 0.0;
    for (std::size_t q = 0; q < queries.size(); ++q) {
      const EstimatorAnswer& a = session.answers[q];
      if (a.no_trigger) continue;
      worst = std::max(worst,
                       std::fabs(a.answer - queries[q].population_mean()));
    }
    cell.reps[static_cast<std::size_t>(t.rep)] =
        RepResult{t.rep, worst, LeaderboardError(oracle.trace()),
                  oracle.update_count(), std::nullopt};
    if (t.cell == 0 && t.rep == 0) table.sample_trace = oracle.trace();
  });
  Summarize(table);
  return table;
}

ResultTable RunAttackVsMechanism(const ExperimentConfig& raw) {
  const ExperimentConfig config = WithDefaults(raw);
  ValidateConfig(config);
  ResultTable table =
      MakeTable(config, std::string(ToString(config.mechanism)),
                Grid(config.k_grid, config.noise_grid));
  const double unit = 1.0 / std::sqrt(static_cast<double>(config.n));
  RunTasks(AllTasks(table, config.reps), config.threads, [&](const Task& t) {
    CellResult& cell = table.cells[t.cell];
    const RepSeeds seeds = SplitRepSeed(RepSeed(config.seed, cell.k, t.rep));
    std::unique_ptr<Leaderboard> mechanism = MakeMechanism(
        config.mechanism, config.n, cell.k + 1, config.beta, config.eta,
        cell.noise_multiplier * unit, seeds.mechanism);
    const HoldoutSample sample = MakeRandomLabelSample(config.n, seeds.sample);
    const AttackReport report = MajorityAttackVsMechanism(
        *mechanism, sample, cell.k, seeds.analyst, SelectionMode::kTheorem);
    const Trace& trace = mechanism->trace();
    cell.reps[static_cast<std::size_t>(t.rep)] =
        RepResult{t.rep, report.final_error, LeaderboardError(trace),
                  CountUpdates(trace), MaxNoiseMagnitude(trace)};
    if (t.cell == 0 && t.rep == 0) table.sample_trace = trace;
  });
  Summarize(table);
  return table;
}

void WriteOptional(std::ostream& out, const std::optional<double>& value) {
  if (value) out << FormatDouble(*value);
}

}  // namespace

std::string_view ToString(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::kVaryQueries:
      return "vary-queries";
    case ExperimentKind::kVaryNoise:
      return "vary-noise";
    case ExperimentKind::kEnvelope:
      return "envelope";
    case ExperimentKind::kReductionOracle:
      return "reduction-oracle";
    case ExperimentKind::kAttackVsMechanism:
      return "attack-vs-mechanism";
  }
  return "unknown";
}

std::string_view ToString(MechanismKind kind) {
  switch (kind) {
    case MechanismKind::kShaky:
      return "shaky";
    case MechanismKind::kLadder:
      return "ladder";
    case MechanismKind::kPfLadder:
      return "pf-ladder";
    case MechanismKind::kEmpirical:
      return "empirical";
    case MechanismKind::kNoisy:
      return "noisy";
    case MechanismKind::kPopulationMin:
      return "population-min";
  }
  return "unknown";
}

std::optional<ExperimentKind> ParseExperimentKind(std::string_view text) {
  for (auto kind :
       {ExperimentKind::kVaryQueries, ExperimentKind::kVaryNoise,
        ExperimentKind::kEnvelope, ExperimentKind::kReductionOracle,
        ExperimentKind::kAttackVsMechanism}) {
    if (ToString(kind) == text) return kind;
  }
  return std::nullopt;
}

std::optional<MechanismKind> ParseMechanismKind(std::string_view text) {
  for (auto kind : {MechanismKind::kShaky, MechanismKind::kLadder,
                    MechanismKind::kPfLadder, MechanismKind::kEmpirical,
                    MechanismKind::kNoisy, MechanismKind::kPopulationMin}) {
    if (ToString(kind) == text) return kind;
  }
  return std::nullopt;
}

std::vector<int64_t> DefaultKGrid(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::kVaryQueries:
      return {50, 100, 150, 200, 250, 300};
    case ExperimentKind::kVaryNoise:
      return {100, 200, 300};
    case ExperimentKind::kEnvelope:
      return {1000};
    case ExperimentKind::kReductionOracle:
      return {};
    case ExperimentKind::kAttackVsMechanism:
      return {50, 200, 800};
  }
  return {};
}

std::vector<double> DefaultNoiseGrid(ExperimentKind kind,
                                     MechanismKind mechanism) {
  switch (kind) {
    case ExperimentKind::kVaryQueries:
      return {0.0, 1.0, 3.0};
    case ExperimentKind::kVaryNoise:
      return {0.0, 0.5, 1.0, 2.0, 3.0, 4.0, 5.0};
    case ExperimentKind::kAttackVsMechanism:
      if (mechanism == MechanismKind::kNoisy) return {1.0, 3.0};
      return {0.0};
    case ExperimentKind::kEnvelope:
    case ExperimentKind::kReductionOracle:
      return {0.0};
  }
  return {0.0};
}

uint64_t RepSeed(uint64_t seed, int64_t k, int rep) {
  return DeriveSeed(DeriveSeed(seed, static_cast<uint64_t>(k)),
                    static_cast<uint64_t>(rep));
}

void ValidateConfig(const ExperimentConfig& config) {
  if (config.n < 1) throw InvalidArgument("--n must be >= 1");
  if (config.reps < 1) throw InvalidArgument("--reps must be >= 1");
  if (config.threads < 1) throw InvalidArgument("--threads must be >= 1");
  if (config.k_grid.empty()) throw InvalidArgument("empty k grid");
  if (config.noise_grid.empty()) throw InvalidArgument("empty noise grid");
  for (int64_t k : config.k_grid) {
    if (k < 1) throw InvalidArgument("every k must be >= 1");
  }
  for (double noise : config.noise_grid) {
    if (!(noise >= 0.0) || !std::isfinite(noise)) {
      throw InvalidArgument("noise multipliers must be finite and >= 0");
    }
  }
  if (!(config.beta > 0.0 && config.beta < 1.0)) {
    throw InvalidArgument("--beta must lie in (0, 1)");
  }
  if (config.eta && !(*config.eta > 0.0)) {
    throw InvalidArgument("--eta must be > 0");
  }
  if (config.experiment == ExperimentKind::kReductionOracle &&
      !(config.alpha > 0.0 && config.alpha < 0.5)) {
    throw InvalidArgument("--alpha must lie in (0, 1/2)");
  }
  if (config.experiment == ExperimentKind::kAttackVsMechanism) {
    for (int64_t k : config.k_grid) {
      if (k > config.n) throw InvalidArgument("the attack needs k <= n");
    }
    if (config.mechanism == MechanismKind::kNoisy) {
      for (double noise : config.noise_grid) {
        if (!(noise > 0.0)) {
          throw InvalidArgument("the noisy mechanism needs noise > 0");
        }
      }
    }
  }
  if (config.experiment == ExperimentKind::kEnvelope) {
    for (int64_t k : config.k_grid) {
      if (k - 1 > config.n) throw InvalidArgument("the attack needs k <= n");
    }
  }
}

ResultTable RunVaryQueries(const ExperimentConfig& config) {
  ExperimentConfig c = config;
  c.experiment = ExperimentKind::kVaryQueries;
  return RunDirectGrid(c);
}

ResultTable RunVaryNoise(const ExperimentConfig& config) {
  ExperimentConfig c = config;
  c.experiment = ExperimentKind::kVaryNoise;
  return RunDirectGrid(c);
}

ResultTable RunExperiment(const ExperimentConfig& config) {
  switch (config.experiment) {
    case ExperimentKind::kVaryQueries:
      return RunVaryQueries(config);
    case ExperimentKind::kVaryNoise:
      return RunVaryNoise(config);
    case ExperimentKind::kEnvelope:
      return RunEnvelope(config);
    case ExperimentKind::kReductionOracle:
      return RunReductionOracle(config);
    case ExperimentKind::kAttackVsMechanism:
      return RunAttackVsMechanism(config);
  }
  throw InvalidArgument("unknown experiment");
}

std::unique_ptr<Leaderboard> MakeMechanism(MechanismKind kind, int64_t n,
                                           int64_t rounds, double beta,
                                           std::optional<double> eta,
                                           double noise_stddev, uint64_t seed) {
  switch (kind) {
    case MechanismKind::kShaky:
      return std::make_unique<ShakyLadder>(ShakyParams(n, rounds, beta), seed);
    case MechanismKind::kLadder: {
      LadderConfig config;
      config.eta = eta.value_or(1.0 / std::sqrt(static_cast<double>(n)));
      return std::make_unique<Ladder>(n, config, rounds);
    }
    case MechanismKind::kPfLadder:
      return std::make_unique<ParameterFreeLadder>(n, rounds);
    case MechanismKind::kEmpirical:
      return std::make_unique<EmpiricalOracle>(n, rounds);
    case MechanismKind::kNoisy:
      return std::make_unique<NoisyEmpiricalOracle>(n, noise_stddev, seed,
                                                    rounds);
    case MechanismKind::kPopulationMin:
      return std::make_unique<PopulationMinOracle>(n, rounds);
  }
  throw InvalidArgument("unknown mechanism");
}

MeanStd SampleMeanStd(std::span<const double> values) {
  MeanStd result;
  if (values.empty()) return result;
  double sum = 0.0;
  for (double v : values) sum += v;
  result.mean = sum / static_cast<double>(values.size());
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - result.mean) * (v - result.mean);
    result.stddev = std::sqrt(ss / static_cast<double>(values.size() - 1));
  }
  return result;
}

void WriteResultCsv(const ResultTable& table, bool per_rep,
                    std::ostream& out) {
  out << "experiment,mechanism,n,k,noise_multiplier,rep_count,mean_error,"
         "std_error";
  if (per_rep) out << ",rep,final_error,lberr,updates_B,max_noise_L";
  out << '\n';
  for (const CellResult& cell : table.cells) {
    std::ostringstream prefix;
    prefix << ToString(table.experiment) << ',' << table.mechanism << ','
           << table.n << ',' << cell.k << ','
           << FormatDouble(cell.noise_multiplier) << ',' << cell.reps.size()
           << ',' << FormatDouble(cell.mean_error) << ','
           << FormatDouble(cell.std_error);
    if (!per_rep) {
      out << prefix.str() << '\n';
      continue;
    }
    for (const RepResult& r : cell.reps) {
      out << prefix.str() << ',' << r.rep << ',' << FormatDouble(r.error)
          << ',';
      WriteOptional(out, r.lberr);
      out << ',';
      if (r.updates) out << *r.updates;
      out << ',';
      WriteOptional(out, r.max_noise);
      out << '\n';
    }
  }
}

int RunCli(int argc, const char* const* argv, std::ostream& out,
           std::ostream& err) {
  CLI::App app{"Leaderboard mechanism simulations and attack experiments",
               "shaky_ladder"};
  app.set_config("--config", "", "key=value file; flags override it");

  std::string experiment = "vary-queries";
  int64_t n = 0;
  std::vector<int64_t> k_grid;
  std::vector<double> noise_grid;
  int reps = 100;
  uint64_t seed = 1;
  std::string mechanism = "shaky";
  double beta = 0.1;
  double eta = 0.0;
  double alpha = 0.05;
  int threads = 1;
  std::string out_path;
  std::string golden_path;
  std::string trace_path;
  bool per_rep = false;
  bool clamp_releases = false;

  app.add_option("--experiment", experiment,
                 "vary-queries, vary-noise, envelope, reduction-oracle or "
                 "attack-vs-mechanism");
  app.add_option("--n", n, "holdout size")->required();
  app.add_option("--k", k_grid, "comma-separated query counts")
      ->delimiter(',');
  app.add_option("--noise", noise_grid,
                 "comma-separated noise levels in units of 1/sqrt(n)")
      ->delimiter(',');
  app.add_option("--reps", reps, "repetitions per cell");
  app.add_option("--seed", seed, "base seed");
  app.add_option("--mechanism", mechanism,
                 "shaky, ladder, pf-ladder, empirical, noisy or "
                 "population-min");
  app.add_option("--beta", beta, "Shaky Ladder failure probability");
  auto* eta_opt = app.add_option("--eta", eta, "Ladder step (default 1/sqrt(n))");
  app.add_option("--alpha", alpha, "reduction accuracy target");
  app.add_option("--threads", threads, "worker threads");
  app.add_option("--out", out_path, "output CSV (default stdout)");
  app.add_option("--golden", golden_path, "compare output with this file");
  app.add_option("--trace-out", trace_path,
                 "write the first repetition's trace as CSV");
  app.add_flag("--per-rep", per_rep, "one row per repetition");
  app.add_flag("--clamp-releases", clamp_releases,
               "clamp released values into [0, 1] in --trace-out");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kExitUsage;
  }

  ExperimentConfig config;
  try {
    const auto kind = ParseExperimentKind(experiment);
    if (!kind) throw InvalidArgument("unknown experiment: " + experiment);
    const auto mech = ParseMechanismKind(mechanism);
    if (!mech) throw InvalidArgument("unknown mechanism: " + mechanism);
    config.experiment = *kind;
    config.mechanism = *mech;
    config.n = n;
    config.k_grid = k_grid;
    config.noise_grid = noise_grid;
    config.reps = reps;
    config.seed = seed;
    config.beta = beta;
    if (eta_opt->count() > 0) config.eta = eta;
    config.alpha = alpha;
    config.threads = threads;
    ValidateConfig(WithDefaults(config));
  } catch (const InvalidArgument& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kExitUsage;
  }

  std::string csv;
  try {
    const ResultTable table = RunExperiment(config);
    std::ostringstream buffer;
    WriteResultCsv(table, per_rep, buffer);
    csv = buffer.str();
    if (!trace_path.empty()) {
      if (!table.sample_trace) {
        throw InvalidArgument("--trace-out needs a mechanism experiment");
      }
      std::ofstream trace_file(trace_path, std::ios::binary);
      if (!trace_file) {
        err << "error: cannot open " << trace_path << " for writing\n";
        return kExitFailure;
      }
      WriteTraceCsv(*table.sample_trace, trace_file, clamp_releases);
    }
  } catch (const InvalidArgument& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const ParameterRegimeError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }

  if (config.experiment == ExperimentKind::kEnvelope ||
      (config.experiment == ExperimentKind::kAttackVsMechanism &&
       config.mechanism == MechanismKind::kShaky)) {
    for (int64_t k : WithDefaults(config).k_grid) {
      const int64_t rounds =
          config.experiment == ExperimentKind::kEnvelope ? k : k + 1;
      if (!ShakyParams(config.n, rounds, config.beta)
               .meets_sample_size_condition) {
        err << "warning: n = " << config.n
            << " is below ln(4 eps/delta)/eps^2 for k = " << rounds << '\n';
      }
    }
  }

  if (out_path.empty()) {
    out << csv;
  } else {
    std::ofstream file(out_path, std::ios::binary);
    if (!(file << csv)) {
      err << "error: cannot write " << out_path << '\n';
      return kExitFailure;
    }
  }

  if (!golden_path.empty()) {
    std::ifstream golden(golden_path, std::ios::binary);
    if (!golden) {
      err << "error: cannot read golden file " << golden_path << '\n';
      return kExitFailure;
    }
    std::ostringstream expected;
    expected << golden.rdbuf();
    if (expected.str() != csv) {
      err << "golden mismatch: output differs from " << golden_path << '\n';
      return kExitGoldenMismatch;
    }
  }
  return kExitOk;
}

}  // namespace shaky
