#include "sgl/learner.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

#include "sgl/chain.hpp"
#include "sgl/errors.hpp"
#include "sgl/exact.hpp"
#include "sgl/game_io.hpp"

namespace sgl {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

DualScore zero_scores(const StochasticGame& game) { return zeros_like(game); }

}  // namespace

Decomposition decompose_step(const Eigen::MatrixXd& exact_reduced_gradient, const Eigen::MatrixXd& smoothed_reduced_gradient,
                             double exact_query_value, double sampled_value, const Eigen::MatrixXd& z, double delta) {
  Decomposition out;
  out.gradient = lift_direction(exact_reduced_gradient);
  const Eigen::MatrixXd smoothed = lift_direction(smoothed_reduced_gradient);
  out.bias = smoothed - out.gradient;
  const Eigen::MatrixXd oracle_estimate = estimate_gradient(exact_query_value, z, delta).lifted;
  out.noise = oracle_estimate - smoothed;
  out.horizon = estimate_gradient(sampled_value - exact_query_value, z, delta).lifted;
  return out;
}

double Checkpoint::total_fenchel() const {
  double total = 0.0;
  for (const auto& p : players) total += p.fenchel;
  return total;
}

double Checkpoint::profile_distance() const {
  double total = 0.0;
  for (const auto& p : players) total += p.dist_to_ref * p.dist_to_ref;
  return std::sqrt(total);
}

Learner::Learner(const StochasticGame& game, LearnerConfig config)
    : game_(&game),
      config_(std::move(config)),
      nets_(safety_nets(game)),
      delta_cap_(0.99 * min_safety_radius(nets_)),
      norm_constant_(estimator_norm_constant(game)),
      sim_(game, config_.start_state),
      rng_(config_.seed),
      oracle_rng_(derive_seed(config_.seed, 1)),
      last_norms_(game.num_players(), 0.0) {
  if (!(config_.schedule.gamma_scale > 0.0)) throw ConfigError("gamma scale must be positive");
  if (!(config_.schedule.delta_scale > 0.0)) throw ConfigError("delta scale must be positive");
  if (config_.iters < 0) throw ConfigError("iters must be non-negative");
  if (config_.reference) validate_policy(game, *config_.reference);
  if (config_.init_policy) {
    validate_policy(game, *config_.init_policy);
    state_.scores = dual_from_policy(config_.regularizer, *config_.init_policy);
  } else {
    state_.scores = zero_scores(game);
  }
  state_.policy = mirror_map(config_.regularizer, state_.scores);
  state_.reduced = reduce(state_.policy);
}

double Learner::effective_delta(long long t, bool* clamped) const {
  const double raw = config_.schedule.delta(t);
  const bool clamp = raw > delta_cap_;
  if (clamped != nullptr) *clamped = clamp;
  return clamp ? delta_cap_ : raw;
}

StepDiagnostics Learner::step() {
  const StochasticGame& game = *game_;
  const int n = game.num_players();
  StepDiagnostics diag;
  diag.t = state_.t;
  diag.gamma = config_.schedule.gamma(state_.t);
  diag.delta = effective_delta(state_.t, &diag.delta_clamped);
  diag.horizon = config_.schedule.horizon(state_.t);
  diag.players.resize(n);

  ProfileTensor directions;
  for (int i = 0; i < n; ++i) {
    const auto rows = state_.reduced[i].rows();
    const auto cols = state_.reduced[i].cols();
    directions.push_back(nets_[i].degenerate() ? Eigen::MatrixXd(rows, cols)
                                               : sample_sphere(static_cast<int>(rows), static_cast<int>(cols), rng_));
  }
  const PolicyProfile query = lift(perturb(state_.reduced, directions, diag.delta, nets_));

  // Play the fixed perturbed profile for T^t stages, then read one reward.
  std::vector<double> rewards;
  for (long long k = 0; k < diag.horizon; ++k) sim_.advance(query, rng_);
  sim_.advance(query, rng_, &rewards);
  stages_ += diag.horizon + 1;

  std::optional<Eigen::VectorXd> query_values;
  std::optional<SmoothedGradient> smoothed;
  std::optional<ProfileTensor> exact_reduced;
  if (config_.oracle) {
    try {
      query_values = exact_value(game, query).values;
      exact_reduced = reduced_gradient(exact_gradient(game, state_.policy));
      smoothed = smoothed_gradient(game, state_.policy, diag.delta, nets_, config_.smoothing_draws, oracle_rng_);
    } catch (const ErgodicityError&) {
      ++warnings_;
      query_values.reset();
    }
  }

  const double bound = norm_constant_ / diag.delta;
  for (int i = 0; i < n; ++i) {
    PlayerStep& p = diag.players[i];
    p.sampled_value = rewards[i];
    p.z = directions[i];
    p.estimate = estimate_gradient(rewards[i], directions[i], diag.delta).lifted;
    p.estimate_norm = p.estimate.norm();
    if (bound > 0.0) max_norm_ratio_ = std::max(max_norm_ratio_, p.estimate_norm / bound);
    if (p.estimate_norm > bound * (1.0 + 1e-9) + 1e-12) {
      std::ostringstream msg;
      msg << "estimate norm " << p.estimate_norm << " exceeds U/delta = " << bound << " at t = " << state_.t;
      throw ContractError(msg.str());
    }
    if (query_values && smoothed && exact_reduced) {
      p.exact_query_value = (*query_values)(i);
      p.split = decompose_step((*exact_reduced)[i], smoothed->reduced[i], (*query_values)(i), rewards[i], directions[i],
                               diag.delta);
    }
    last_norms_[i] = p.estimate_norm;
    state_.scores[i] += diag.gamma * p.estimate;
  }
  state_.policy = mirror_map(config_.regularizer, state_.scores);
  state_.reduced = reduce(state_.policy);
  ++state_.t;
  if (config_.on_step) config_.on_step(diag);
  return diag;
}

Checkpoint Learner::checkpoint() const {
  const StochasticGame& game = *game_;
  Checkpoint cp;
  cp.t = state_.t;
  cp.gamma = config_.schedule.gamma(state_.t);
  cp.delta = effective_delta(state_.t);
  cp.horizon = config_.schedule.horizon(state_.t);
  cp.players.resize(game.num_players());
  Eigen::VectorXd values = Eigen::VectorXd::Constant(game.num_players(), kNaN);
  Eigen::VectorXd gaps = Eigen::VectorXd::Constant(game.num_players(), kNaN);
  try {
    values = exact_value(game, state_.policy).values;
    if (config_.checkpoint_nash_gap) gaps = nash_gap(game, state_.policy).gaps;
  } catch (const ErgodicityError&) {
  }
  for (int i = 0; i < game.num_players(); ++i) {
    PlayerCheckpoint& p = cp.players[i];
    p.value = values(i);
    p.nash_gap = gaps(i);
    p.est_norm = last_norms_[i];
    if (config_.reference) {
      const Eigen::MatrixXd& ref = (*config_.reference)[i];
      p.dist_to_ref = (state_.policy[i] - ref).norm();
      PolicyProfile single;
      single.probs.push_back(ref);
      p.fenchel = fenchel_coupling(config_.regularizer, single, DualScore{state_.scores[i]}).coupling;
    } else {
      p.dist_to_ref = kNaN;
      p.fenchel = kNaN;
    }
  }
  return cp;
}

RunResult run(const StochasticGame& game, const LearnerConfig& config) {
  Learner learner(game, config);
  RunResult result;
  result.checkpoints.push_back(learner.checkpoint());
  for (long long k = 1; k <= config.iters; ++k) {
    const StepDiagnostics diag = learner.step();
    if (diag.delta_clamped) ++result.clamped_steps;
    if ((config.log_every > 0 && k % config.log_every == 0) || k == config.iters)
      result.checkpoints.push_back(learner.checkpoint());
  }
  result.final_state = learner.state();
  result.stages_played = learner.stages_played();
  result.warnings = learner.warnings();
  result.max_norm_ratio = learner.max_norm_ratio();
  return result;
}

PolicyProfile oracle_gradient_reference(const StochasticGame& game, const Regularizer& reg, long long iters, double step) {
  DualScore scores = zeros_like(game);
  PolicyProfile policy = mirror_map(reg, scores);
  for (long long t = 0; t < iters; ++t) {
    const ProfileTensor grad = reduced_gradient(exact_gradient(game, policy));
    const double rate = step / std::sqrt(static_cast<double>(t + 1));
    for (int i = 0; i < game.num_players(); ++i) scores[i] += rate * lift_direction(grad[i]);
    policy = mirror_map(reg, scores);
  }
  return policy;
}

HorizonBias horizon_bias_check(const StochasticGame& game, const PolicyProfile& policy, int player, long long horizon,
                               int n_draws, double tau, int start_state, Rng& rng) {
  if (n_draws < 2) throw ContractError("horizon_bias_check needs at least two rollouts");
  if (horizon < 0) throw ContractError("horizon must be non-negative");
  HorizonBias out;
  const ValueReport report = exact_value(game, policy);
  out.value = report.values(player);
  const Eigen::MatrixXd transition = induced_transition_matrix(game, policy);
  Eigen::RowVectorXd dist = Eigen::RowVectorXd::Zero(game.num_states());
  dist(start_state) = 1.0;
  for (long long k = 0; k < horizon; ++k) dist = dist * transition;
  out.exact_expectation = dist.dot(report.expected_reward[player]);

  double sum = 0.0;
  double sum_sq = 0.0;
  std::vector<double> rewards;
  for (int k = 0; k < n_draws; ++k) {
    Simulator sim(game, start_state);
    for (long long s = 0; s < horizon; ++s) sim.advance(policy, rng);
    sim.advance(policy, rng, &rewards);
    sum += rewards[player];
    sum_sq += rewards[player] * rewards[player];
  }
  const double mean = sum / n_draws;
  const double var = std::max(0.0, (sum_sq - n_draws * mean * mean) / (n_draws - 1.0));
  out.measured = std::abs(mean - out.value);
  out.standard_error = std::sqrt(var / n_draws);
  out.bound = game.num_states() * game.max_abs_reward(player) * mixing_decay(static_cast<double>(horizon), tau);
  out.holds = out.measured <= out.bound + 3.0 * out.standard_error;
  return out;
}

void write_checkpoints_csv(const std::filesystem::path& path, const std::vector<Checkpoint>& checkpoints) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << kCsvHeader << "\n" << std::setprecision(12);
  for (const auto& cp : checkpoints) {
    for (std::size_t i = 0; i < cp.players.size(); ++i) {
      const PlayerCheckpoint& p = cp.players[i];
      out << cp.t << ',' << cp.gamma << ',' << cp.delta << ',' << cp.horizon << ',' << i << ',' << p.value << ','
          << p.fenchel << ',' << p.nash_gap << ',' << p.dist_to_ref << ',' << p.est_norm << "\n";
    }
  }
}

std::vector<Checkpoint> read_checkpoints_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path.string());
  std::string line;
  std::getline(in, line);
  if (line != kCsvHeader) throw ConfigError(path.string() + ": unexpected CSV header");
  std::vector<Checkpoint> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() != 10) throw ConfigError(path.string() + ": malformed row '" + line + "'");
    const long long t = std::stoll(cells[0]);
    const std::size_t player = std::stoul(cells[4]);
    if (out.empty() || out.back().t != t || player == 0) {
      Checkpoint cp;
      cp.t = t;
      cp.gamma = std::stod(cells[1]);
      cp.delta = std::stod(cells[2]);
      cp.horizon = std::stoll(cells[3]);
      out.push_back(std::move(cp));
    }
    PlayerCheckpoint p;
    p.value = std::stod(cells[5]);
    p.fenchel = std::stod(cells[6]);
    p.nash_gap = std::stod(cells[7]);
    p.dist_to_ref = std::stod(cells[8]);
    p.est_norm = std::stod(cells[9]);
    out.back().players.push_back(p);
  }
  return out;
}

nlohmann::json run_metadata(const StochasticGame& game, const LearnerConfig& config, const RunResult& result) {
  const Schedule& s = config.schedule;
  nlohmann::json meta;
  meta["schedule"] = {{"gamma_exp", s.gamma_exp},
                      {"delta_exp", s.delta_exp},
                      {"gamma_scale", s.gamma_scale},
                      {"delta_scale", s.delta_scale},
                      {"horizon", to_string(s.horizon_mode)},
                      {"T0", s.horizon_param}};
  meta["seed"] = config.seed;
  meta["game_hash"] = hex64(game_hash(game));
  meta["mirror"] = config.regularizer.name();
  meta["iters"] = config.iters;
  meta["oracle"] = config.oracle;
  meta["start_state"] = config.start_state;
  meta["log_every"] = config.log_every;
  meta["delta_cap"] = 0.99 * min_safety_radius(safety_nets(game));
  meta["clamped_steps"] = result.clamped_steps;
  meta["stages_played"] = result.stages_played;
  meta["oracle_warnings"] = result.warnings;
  meta["max_norm_ratio"] = result.max_norm_ratio;
  meta["final_policy"] = tensor_to_json(result.final_state.policy.probs);
  if (config.reference) meta["reference"] = tensor_to_json(config.reference->probs);
  return meta;
}

}  // namespace sgl
