#include "sgl/harness.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "sgl/chain.hpp"
#include "sgl/errors.hpp"
#include "sgl/game_io.hpp"
#include "sgl/spsa.hpp"

namespace sgl {

namespace {

using nlohmann::json;

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Two-player, two-action zero-sum stage game: player 0 wins `scale` on a
// match and loses it otherwise. Joint index = 2 * a_0 + a_1.
void add_pennies(std::vector<double>& p0, std::vector<double>& p1, double scale) {
  const double match[4] = {scale, -scale, -scale, scale};
  for (double v : match) {
    p0.push_back(v);
    p1.push_back(-v);
  }
}

GeneratedGame matching_pennies() {
  std::vector<double> p0, p1;
  add_pennies(p0, p1, 1.0);
  std::vector<double> rewards = p0;
  rewards.insert(rewards.end(), p1.begin(), p1.end());
  StochasticGame game(1, {2, 2}, std::move(rewards), std::vector<double>(4, 1.0));
  PolicyProfile ref = PolicyProfile::uniform(game);
  json meta = {{"kind", "matching-pennies"}, {"reference", tensor_to_json(ref.probs)}};
  return {std::move(game), std::move(meta), std::move(ref)};
}

GeneratedGame zerosum_switching() {
  std::vector<double> p0, p1;
  add_pennies(p0, p1, 1.0);
  add_pennies(p0, p1, 2.0);
  std::vector<double> rewards = p0;
  rewards.insert(rewards.end(), p1.begin(), p1.end());
  StochasticGame game(2, {2, 2}, std::move(rewards), std::vector<double>(2 * 4 * 2, 0.5));
  PolicyProfile ref = PolicyProfile::uniform(game);
  json meta = {{"kind", "zerosum-switching"}, {"reference", tensor_to_json(ref.probs)}};
  return {std::move(game), std::move(meta), std::move(ref)};
}

GeneratedGame random_ergodic(const GeneratorSpec& spec) {
  if (spec.states < 1 || spec.players < 1 || spec.actions < 1)
    throw ConfigError("random-ergodic needs positive states, players and actions");
  if (!(spec.eps >= 0.0) || spec.eps * spec.states >= 1.0) throw ConfigError("eps must satisfy 0 <= eps * |S| < 1");
  if (!(spec.reward_hi >= spec.reward_lo)) throw ConfigError("reward range is empty");
  Rng rng(spec.seed);
  int joint = 1;
  for (int i = 0; i < spec.players; ++i) joint *= spec.actions;
  std::vector<double> rewards;
  for (int i = 0; i < spec.players; ++i)
    for (int s = 0; s < spec.states; ++s)
      for (int a = 0; a < joint; ++a) rewards.push_back(spec.reward_lo + (spec.reward_hi - spec.reward_lo) * uniform01(rng));
  std::vector<double> transitions;
  const double free_mass = 1.0 - spec.states * spec.eps;
  for (int s = 0; s < spec.states; ++s) {
    for (int a = 0; a < joint; ++a) {
      std::vector<double> u(spec.states);
      double total = 0.0;
      for (double& v : u) {
        v = uniform01(rng) + 1e-12;
        total += v;
      }
      for (double v : u) transitions.push_back(spec.eps + free_mass * v / total);
    }
  }
  StochasticGame game(spec.states, std::vector<int>(spec.players, spec.actions), std::move(rewards), std::move(transitions));
  json meta = {{"kind", "random-ergodic"}, {"eps", spec.eps}, {"seed", spec.seed},
               {"reward_range", {spec.reward_lo, spec.reward_hi}}};
  return {std::move(game), std::move(meta), std::nullopt};
}

double interpolate(const std::vector<double>& sorted, double q) {
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

json quartiles_json(const Quartiles& q) { return {{"q1", q.q1}, {"median", q.median}, {"q3", q.q3}}; }

double number_or(const json& node, const char* key, double fallback) {
  if (!node.contains(key)) return fallback;
  if (!node.at(key).is_number()) throw ConfigError(std::string("grid entry field '") + key + "' must be a number");
  return node.at(key).get<double>();
}

}  // namespace

GeneratedGame generate(const GeneratorSpec& spec) {
  if (spec.kind == "matching-pennies") return matching_pennies();
  if (spec.kind == "zerosum-switching") return zerosum_switching();
  if (spec.kind == "random-ergodic") return random_ergodic(spec);
  throw ConfigError("unknown game kind '" + spec.kind + "' (expected random-ergodic, matching-pennies or zerosum-switching)");
}

std::optional<PolicyProfile> reference_from_meta(const StochasticGame& game, const json& meta) {
  if (!meta.is_object() || !meta.contains("reference")) return std::nullopt;
  return policy_from_json(game, meta.at("reference"));
}

double certified_tau(const StochasticGame& game, std::uint64_t seed) {
  Rng rng(seed);
  return certify_mixing(game, policy_sample(game, rng)).tau;
}

SweepConfig parse_sweep_config(const json& doc, const std::filesystem::path& base) {
  if (!doc.is_object()) throw ConfigError("sweep config must be a JSON object");
  for (const char* key : {"game", "grid", "seeds", "iters", "out"})
    if (!doc.contains(key)) throw ConfigError(std::string("sweep config is missing key '") + key + "'");
  SweepConfig config;
  auto resolve = [&](const std::string& p) {
    std::filesystem::path path(p);
    return path.is_absolute() ? path : base / path;
  };
  config.game = resolve(doc.at("game").get<std::string>());
  config.out = resolve(doc.at("out").get<std::string>());
  if (!doc.at("iters").is_number_integer() || doc.at("iters").get<long long>() < 0)
    throw ConfigError("iters must be a non-negative integer");
  config.iters = doc.at("iters").get<long long>();
  config.mirror = doc.value("mirror", std::string("entropy"));
  config.log_every = doc.value("log_every", 1000LL);
  config.oracle = doc.value("oracle", false);
  if (!doc.at("seeds").is_array() || doc.at("seeds").empty()) throw ConfigError("seeds must be a non-empty array");
  for (const auto& s : doc.at("seeds")) {
    if (!s.is_number_integer() || s.get<long long>() < 0) throw ConfigError("seeds must be non-negative integers");
    config.seeds.push_back(s.get<std::uint64_t>());
  }
  if (!doc.at("grid").is_array() || doc.at("grid").empty()) throw ConfigError("grid must be a non-empty array");

  const LoadedGame loaded = load_game(config.game);
  const double tau = certified_tau(loaded.game);
  const double radius = min_safety_radius(safety_nets(loaded.game));
  for (const auto& node : doc.at("grid")) {
    if (!node.is_object()) throw ConfigError("grid entries must be objects");
    GridPoint point;
    point.schedule = default_schedule(tau, radius);
    point.schedule.gamma_exp = number_or(node, "p", point.schedule.gamma_exp);
    point.schedule.delta_exp = number_or(node, "q", point.schedule.delta_exp);
    point.schedule.gamma_scale = number_or(node, "gamma_scale", point.schedule.gamma_scale);
    point.schedule.delta_scale = number_or(node, "delta_scale", point.schedule.delta_scale);
    if (node.contains("horizon")) point.schedule.horizon_mode = parse_horizon_mode(node.at("horizon").get<std::string>());
    point.explicit_horizon_param = node.contains("T0");
    point.schedule.horizon_param = number_or(node, "T0", point.schedule.horizon_param);
    config.grid.push_back(point);
  }
  return config;
}

Quartiles quartiles(std::vector<double> values) {
  values.erase(std::remove_if(values.begin(), values.end(), [](double v) { return std::isnan(v); }), values.end());
  if (values.empty()) return {kNaN, kNaN, kNaN};
  std::sort(values.begin(), values.end());
  return {interpolate(values, 0.25), interpolate(values, 0.5), interpolate(values, 0.75)};
}

std::vector<AggregatePoint> aggregate(const std::vector<std::vector<Checkpoint>>& runs) {
  std::vector<AggregatePoint> out;
  if (runs.empty()) return out;
  std::size_t length = runs.front().size();
  for (const auto& r : runs) length = std::min(length, r.size());
  for (std::size_t k = 0; k < length; ++k) {
    std::vector<double> dist, gap, fenchel;
    for (const auto& r : runs) {
      const Checkpoint& cp = r[k];
      dist.push_back(cp.profile_distance());
      double g = 0.0;
      for (const auto& p : cp.players) g = std::max(g, p.nash_gap);
      gap.push_back(g);
      fenchel.push_back(cp.total_fenchel());
    }
    out.push_back({runs.front()[k].t, quartiles(dist), quartiles(gap), quartiles(fenchel)});
  }
  return out;
}

ExperimentResult sweep(const SweepConfig& config) {
  const LoadedGame loaded = load_game(config.game);
  const StochasticGame& game = loaded.game;
  const std::optional<PolicyProfile> reference = reference_from_meta(game, loaded.meta);
  const double tau = certified_tau(game);
  std::filesystem::create_directories(config.out);

  ExperimentResult result;
  json entries = json::array();
  for (std::size_t k = 0; k < config.grid.size(); ++k) {
    SweepEntry entry;
    entry.point = config.grid[k];
    entry.conditions = validate_schedule(entry.point.schedule, tau);
    const std::filesystem::path dir = config.out / ("grid_" + std::to_string(k));
    std::filesystem::create_directories(dir);
    std::vector<std::filesystem::path> csvs;
    for (std::uint64_t seed : config.seeds) {
      const std::filesystem::path csv = dir / ("seed_" + std::to_string(seed) + ".csv");
      try {
        LearnerConfig lc;
        lc.schedule = entry.point.schedule;
        lc.regularizer = Regularizer::parse(config.mirror);
        lc.iters = config.iters;
        lc.seed = seed;
        lc.oracle = config.oracle;
        lc.reference = reference;
        lc.log_every = config.log_every;
        const RunResult run_result = run(game, lc);
        write_checkpoints_csv(csv, run_result.checkpoints);
        std::ofstream side(dir / ("seed_" + std::to_string(seed) + ".json"));
        side << run_metadata(game, lc, run_result).dump(2) << "\n";
        entry.seeds_ok.push_back(seed);
        csvs.push_back(csv);
      } catch (const std::exception& e) {
        entry.failures.emplace_back(seed, e.what());
      }
    }
    std::vector<std::vector<Checkpoint>> runs;
    for (const auto& csv : csvs) runs.push_back(read_checkpoints_csv(csv));
    entry.summary = aggregate(runs);

    const Schedule& s = entry.point.schedule;
    json conditions = json::object();
    for (const auto& c : entry.conditions.conditions) conditions[c.name] = {{"pass", c.pass}, {"detail", c.detail}};
    json failures = json::array();
    for (const auto& [seed, msg] : entry.failures) failures.push_back({{"seed", seed}, {"error", msg}});
    json series = json::array();
    for (const auto& a : entry.summary)
      series.push_back({{"t", a.t},
                        {"dist_to_ref", quartiles_json(a.dist_to_ref)},
                        {"nash_gap", quartiles_json(a.nash_gap)},
                        {"fenchel", quartiles_json(a.fenchel)}});
    entries.push_back({{"grid_index", k},
                       {"schedule",
                        {{"p", s.gamma_exp},
                         {"q", s.delta_exp},
                         {"gamma_scale", s.gamma_scale},
                         {"delta_scale", s.delta_scale},
                         {"horizon", to_string(s.horizon_mode)},
                         {"T0", s.horizon_param}}},
                       {"theorem-conditions", entry.conditions.all_pass() ? "pass" : "fail"},
                       {"conditions", conditions},
                       {"seeds_ok", entry.seeds_ok},
                       {"failures", failures},
                       {"series", series}});
    result.entries.push_back(std::move(entry));
  }
  result.summary = {{"game", config.game.string()},
                    {"game_hash", hex64(game_hash(game))},
                    {"tau", tau},
                    {"iters", config.iters},
                    {"mirror", config.mirror},
                    {"entries", entries}};
  std::ofstream(config.out / "summary.json") << result.summary.dump(2) << "\n";

  std::ofstream csv(config.out / "summary.csv");
  csv << "grid,t,dist_q1,dist_median,dist_q3,gap_q1,gap_median,gap_q3,fenchel_q1,fenchel_median,fenchel_q3\n";
  for (std::size_t k = 0; k < result.entries.size(); ++k) {
    for (const auto& a : result.entries[k].summary) {
      csv << k << ',' << a.t << ',' << a.dist_to_ref.q1 << ',' << a.dist_to_ref.median << ',' << a.dist_to_ref.q3 << ','
          << a.nash_gap.q1 << ',' << a.nash_gap.median << ',' << a.nash_gap.q3 << ',' << a.fenchel.q1 << ','
          << a.fenchel.median << ',' << a.fenchel.q3 << "\n";
    }
  }
  return result;
}

}  // namespace sgl
