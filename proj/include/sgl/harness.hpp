#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sgl/game.hpp"
#include "sgl/learner.hpp"
#include "sgl/schedule.hpp"

namespace sgl {

struct GeneratorSpec {
  std::string kind = "random-ergodic";  // random-ergodic | matching-pennies | zerosum-switching
  int states = 2;
  int players = 2;
  int actions = 2;
  double eps = 0.1;  // transition floor for random-ergodic
  double reward_lo = 0.0;
  double reward_hi = 1.0;
  std::uint64_t seed = 0;
};

struct GeneratedGame {
  StochasticGame game;
  nlohmann::json meta;  // kind, parameters and, for benchmarks, the known equilibrium
  std::optional<PolicyProfile> reference;
};

// random-ergodic: P[s'|s,a] = eps + (1 - |S| eps) u / sum(u) with u uniform,
// so every entry is at least eps; rewards uniform in [reward_lo, reward_hi].
// matching-pennies: one state, r_1 = +1 on a match and -1 otherwise,
// r_2 = -r_1. zerosum-switching: two states with action-independent
// transitions [[.5,.5],[.5,.5]]; state 0 plays matching pennies and state 1
// the same game with payoffs doubled. Throws ConfigError on bad parameters.
GeneratedGame generate(const GeneratorSpec& spec);

// Equilibrium stored under meta.reference by generate(), if any.
std::optional<PolicyProfile> reference_from_meta(const StochasticGame& game, const nlohmann::json& meta);

// Sampled mixing certificate over the default policy sample, seeded.
double certified_tau(const StochasticGame& game, std::uint64_t seed = 0);

struct GridPoint {
  Schedule schedule;
  bool explicit_horizon_param = false;
};

struct SweepConfig {
  std::filesystem::path game;
  std::vector<GridPoint> grid;
  std::vector<std::uint64_t> seeds;
  long long iters = 0;
  std::filesystem::path out;
  std::string mirror = "entropy";
  long long log_every = 1000;
  bool oracle = false;
};

// {game, grid: [{p, q, horizon, T0, gamma_scale?, delta_scale?}], seeds,
//  iters, out, mirror?, log_every?, oracle?}. Relative paths resolve
// against `base`. T0 defaults to 2 tau, delta_scale to a quarter of the
// smallest safety radius (both read off the game file).
SweepConfig parse_sweep_config(const nlohmann::json& doc, const std::filesystem::path& base);

struct Quartiles {
  double q1 = 0.0;
  double median = 0.0;
  double q3 = 0.0;
};

// Linear-interpolation quartiles; NaN entries are ignored.
Quartiles quartiles(std::vector<double> values);

struct AggregatePoint {
  long long t = 0;
  Quartiles dist_to_ref;  // ||pi - pi*||_2 over the profile
  Quartiles nash_gap;     // max over players
  Quartiles fenchel;      // sum over players
};

// Per-checkpoint quartiles across seeds; a pure function of the per-seed
// checkpoint series.
std::vector<AggregatePoint> aggregate(const std::vector<std::vector<Checkpoint>>& runs);

struct SweepEntry {
  GridPoint point;
  ScheduleReport conditions;
  std::vector<std::uint64_t> seeds_ok;
  std::vector<std::pair<std::uint64_t, std::string>> failures;
  std::vector<AggregatePoint> summary;
};

struct ExperimentResult {
  std::vector<SweepEntry> entries;
  nlohmann::json summary;
};

// Runs every (grid point, seed), writes out/grid_<k>/seed_<s>.csv and .json,
// then aggregates from the CSV files into out/summary.json and
// out/summary.csv. A failing run is recorded and the sweep goes on.
ExperimentResult sweep(const SweepConfig& config);

}  // namespace sgl
