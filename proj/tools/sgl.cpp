// Command-line harness: validate, analyse, estimate gradients, learn,
// generate benchmark games and run seed sweeps.
//
// Exit codes: 0 success, 1 validation / usage error, 2 runtime error.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "sgl/chain.hpp"
#include "sgl/errors.hpp"
#include "sgl/exact.hpp"
#include "sgl/game_io.hpp"
#include "sgl/harness.hpp"
#include "sgl/learner.hpp"
#include "sgl/mirror.hpp"
#include "sgl/schedule.hpp"
#include "sgl/spsa.hpp"

namespace {

using nlohmann::json;
using namespace sgl;

std::uint64_t default_seed() {
  const char* env = std::getenv("SGL_SEED");
  if (env == nullptr || *env == '\0') return 0;
  try {
    std::size_t used = 0;
    const unsigned long long v = std::stoull(env, &used);
    if (used != std::string(env).size()) throw std::invalid_argument(env);
    return v;
  } catch (const std::exception&) {
    throw ConfigError(std::string("SGL_SEED must be a non-negative integer, got '") + env + "'");
  }
}

json vector_json(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

json certificate_json(const MixingCertificate& cert) {
  json out = {{"label", cert.label()},
              {"certified", cert.certified},
              {"contraction", cert.contraction},
              {"tau", cert.tau},
              {"instant_mixing", cert.instant_mixing},
              {"vertices_exhaustive", cert.vertices_exhaustive},
              {"epsilon_floor", cert.epsilon_floor},
              {"offending_samples", cert.offending}};
  if (cert.floor_bound) out["floor_bound"] = *cert.floor_bound;
  return out;
}

json schedule_report_json(const ScheduleReport& report) {
  json out = json::object();
  for (const auto& c : report.conditions) out[c.name] = {{"pass", c.pass}, {"detail", c.detail}};
  return out;
}

// ---- validate ---------------------------------------------------------

int cmd_validate(const std::string& path) {
  const LoadedGame loaded = load_game(path);
  const StochasticGame& g = loaded.game;
  Rng rng(0);
  const MixingCertificate cert = certify_mixing(g, policy_sample(g, rng));
  std::cout << "ok: " << g.num_states() << " states, " << g.num_players() << " players, actions [";
  for (int i = 0; i < g.num_players(); ++i) std::cout << (i ? "," : "") << g.num_actions(i);
  std::cout << "], hash " << hex64(game_hash(g)) << "\n";
  std::cout << "mixing: " << cert.label() << ", contraction " << cert.contraction << ", tau " << cert.tau << "\n";
  return 0;
}

// ---- analyze ----------------------------------------------------------

struct AnalyzeArgs {
  std::string game;
  std::string policy;
  std::uint64_t seed = 0;
  int lipschitz_pairs = 64;
};

int cmd_analyze(const AnalyzeArgs& args) {
  const LoadedGame loaded = load_game(args.game);
  const StochasticGame& g = loaded.game;
  const PolicyProfile policy = args.policy.empty() ? PolicyProfile::uniform(g) : load_policy(g, args.policy);
  Rng rng(args.seed);
  const std::vector<PolicyProfile> sample = policy_sample(g, rng);
  const MixingCertificate cert = certify_mixing(g, sample);

  json doc;
  doc["game_hash"] = hex64(game_hash(g));
  doc["policy"] = tensor_to_json(policy.probs);
  doc["mixing"] = certificate_json(cert);
  const ChainAnalysis chain = analyze_chain(g, policy);
  doc["stationary"] = vector_json(chain.stationary);
  doc["policy_contraction"] = chain.contraction;

  const ValueReport values = exact_value(g, policy);
  doc["values"] = vector_json(values.values);
  json rewards = json::array();
  for (const auto& r : values.expected_reward) rewards.push_back(vector_json(r));
  doc["expected_reward"] = rewards;
  doc["gradient"] = tensor_to_json(exact_gradient(g, policy));

  const NashGapReport gap = nash_gap(g, policy);
  json brs = json::array();
  for (const auto& br : gap.best_responses)
    brs.push_back({{"value", br.value}, {"choice", br.choice}, {"method", br.method}});
  doc["nash_gap"] = {{"gaps", vector_json(gap.gaps)}, {"max", gap.max_gap}, {"flagged", gap.flagged}, {"best_responses", brs}};
  doc["first_order_residual"] = first_order_residual(g, policy);

  const MismatchEstimate cg = estimate_mismatch(g, sample);
  doc["mismatch"] = {{"value", cg.value}, {"label", MismatchEstimate::kLabel}, {"skipped", cg.skipped}};
  doc["lipschitz_probe"] = {{"value", lipschitz_probe(g, args.lipschitz_pairs, rng)},
                            {"pairs", args.lipschitz_pairs},
                            {"label", "empirical constant"}};
  json bounds = json::array();
  for (int i = 0; i < g.num_players(); ++i) bounds.push_back(advantage_bound(g, i, cert.tau));
  doc["advantage_bound"] = bounds;
  std::cout << doc.dump(2) << "\n";
  return 0;
}

// ---- gradient ---------------------------------------------------------

struct GradientArgs {
  std::string game;
  std::string policy;
  std::string method = "exact";
  double delta = 0.0;
  int draws = 10000;
  std::uint64_t seed = 0;
};

int cmd_gradient(const GradientArgs& args) {
  const LoadedGame loaded = load_game(args.game);
  const StochasticGame& g = loaded.game;
  const PolicyProfile policy = args.policy.empty() ? PolicyProfile::uniform(g) : load_policy(g, args.policy);
  const ProfileTensor exact = reduced_gradient(exact_gradient(g, policy));

  ProfileTensor estimate;
  json extra = json::object();
  if (args.method == "exact") {
    estimate = exact;
  } else if (args.method == "fd") {
    estimate = finite_difference_reduced_gradient(g, policy);
  } else if (args.method == "spsa") {
    const std::vector<SafetyNet> nets = safety_nets(g);
    const double delta = args.delta > 0.0 ? args.delta : 0.25 * min_safety_radius(nets);
    if (args.draws < 1) throw ConfigError("--draws must be positive");
    Rng rng(args.seed);
    const ProfileTensor x = reduce(policy);
    estimate = zeros_like(g);
    for (auto& block : estimate) block = reduce(block);
    for (int k = 0; k < args.draws; ++k) {
      ProfileTensor z;
      for (int i = 0; i < g.num_players(); ++i)
        z.push_back(nets[i].degenerate() ? Eigen::MatrixXd(x[i].rows(), 0)
                                         : sample_sphere(static_cast<int>(x[i].rows()), static_cast<int>(x[i].cols()), rng));
      const Eigen::VectorXd v = exact_value(g, lift(perturb(x, z, delta, nets))).values;
      for (int i = 0; i < g.num_players(); ++i) estimate[i] += estimate_gradient(v(i), z[i], delta).reduced / args.draws;
    }
    extra = {{"delta", delta}, {"draws", args.draws}, {"seed", args.seed},
             {"note", "mean of the payoff-only estimator with exact payoffs; it targets the smoothed gradient"}};
  } else {
    throw ConfigError("unknown --method '" + args.method + "' (expected exact, fd or spsa)");
  }
  double diff = 0.0;
  for (std::size_t i = 0; i < exact.size(); ++i)
    if (exact[i].size() > 0) diff = std::max(diff, (estimate[i] - exact[i]).cwiseAbs().maxCoeff());
  json doc = {{"method", args.method}, {"coordinates", "reduced"}, {"gradient", tensor_to_json(estimate)},
              {"max_abs_diff_vs_exact", diff}};
  doc.update(extra);
  std::cout << doc.dump(2) << "\n";
  std::cout << "max abs difference vs exact: " << std::setprecision(6) << std::scientific << diff << "\n";
  return 0;
}

// ---- learn ------------------------------------------------------------

struct LearnArgs {
  std::string game;
  long long iters = 0;
  std::uint64_t seed = 0;
  std::string mirror = "entropy";
  std::string preset = "default";
  double gamma_exp = 1.0;
  double delta_exp = 1.0 / 3.0;
  double gamma_scale = 1.0;
  double delta_scale = 0.0;
  std::string horizon = "log";
  double horizon_param = 0.0;
  bool oracle = false;
  std::string ref;
  std::string init_policy;
  long long log_every = 1000;
  int start_state = 0;
  std::string out = "run";
};

int cmd_learn(const LearnArgs& args, const CLI::App& sub) {
  const LoadedGame loaded = load_game(args.game);
  const StochasticGame& g = loaded.game;
  const double tau = certified_tau(g);
  const double radius = min_safety_radius(safety_nets(g));

  LearnerConfig config;
  config.schedule = preset_schedule(args.preset, tau, radius);
  if (sub.count("--gamma-exp")) config.schedule.gamma_exp = args.gamma_exp;
  if (sub.count("--delta-exp")) config.schedule.delta_exp = args.delta_exp;
  if (sub.count("--gamma-scale")) config.schedule.gamma_scale = args.gamma_scale;
  if (sub.count("--delta-scale")) config.schedule.delta_scale = args.delta_scale;
  if (sub.count("--horizon")) config.schedule.horizon_mode = parse_horizon_mode(args.horizon);
  if (sub.count("--horizon-param")) config.schedule.horizon_param = args.horizon_param;
  config.regularizer = Regularizer::parse(args.mirror);
  config.iters = args.iters;
  config.seed = args.seed;
  config.oracle = args.oracle;
  config.log_every = args.log_every;
  config.start_state = args.start_state;
  if (!args.init_policy.empty()) config.init_policy = load_policy(g, args.init_policy);
  std::string reference_source = "none";
  if (!args.ref.empty()) {
    config.reference = load_policy(g, args.ref);
    reference_source = args.ref;
  } else if (auto ref = reference_from_meta(g, loaded.meta)) {
    config.reference = std::move(ref);
    reference_source = "game meta";
  } else {
    std::cerr << "warning: no reference policy; using the final iterate of an exact-gradient run\n";
    config.reference = oracle_gradient_reference(g, config.regularizer);
    reference_source = "exact-gradient run";
  }

  const ScheduleReport report = validate_schedule(config.schedule, tau);
  if (!report.all_pass()) {
    std::cerr << "warning: schedule violates the convergence conditions:";
    for (const auto& c : report.conditions)
      if (!c.pass) std::cerr << " " << c.name << " (" << c.detail << ")";
    std::cerr << "\n";
  }

  const RunResult result = run(g, config);
  const std::filesystem::path out(args.out);
  std::filesystem::create_directories(out);
  write_checkpoints_csv(out / "run.csv", result.checkpoints);
  json meta = run_metadata(g, config, result);
  meta["preset"] = args.preset;
  meta["tau"] = tau;
  meta["reference_source"] = reference_source;
  meta["schedule_conditions"] = schedule_report_json(report);
  std::ofstream(out / "run.json") << meta.dump(2) << "\n";

  const Checkpoint& last = result.checkpoints.back();
  double gap = 0.0;
  for (const auto& p : last.players) gap = std::max(gap, p.nash_gap);
  std::cout << "done: t=" << last.t << " dist_to_ref=" << last.profile_distance() << " fenchel=" << last.total_fenchel()
            << " nash_gap=" << gap << " stages=" << result.stages_played << " clamped=" << result.clamped_steps
            << " csv=" << (out / "run.csv").string() << "\n";
  return 0;
}

// ---- generate ---------------------------------------------------------

int cmd_generate(const GeneratorSpec& spec, const std::string& out) {
  const GeneratedGame gen = generate(spec);
  save_game(out, gen.game, gen.meta);
  std::cout << "wrote " << out << " (" << spec.kind << ", hash " << hex64(game_hash(gen.game)) << ")\n";
  return 0;
}

// ---- sweep ------------------------------------------------------------

int cmd_sweep(const std::string& path) {
  const std::filesystem::path config_path(path);
  const SweepConfig config = parse_sweep_config(read_json_file(config_path), config_path.parent_path());
  const ExperimentResult result = sweep(config);
  for (std::size_t k = 0; k < result.entries.size(); ++k) {
    const SweepEntry& e = result.entries[k];
    std::cout << "grid " << k << ": theorem-conditions " << (e.conditions.all_pass() ? "pass" : "fail") << ", "
              << e.seeds_ok.size() << " runs ok, " << e.failures.size() << " failed";
    if (!e.summary.empty()) std::cout << ", final median dist " << e.summary.back().dist_to_ref.median;
    std::cout << "\n";
  }
  std::cout << "summary: " << (config.out / "summary.json").string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Payoff-only learning in average-reward stochastic games"};
  app.require_subcommand(1);

  std::uint64_t seed = 0;
  try {
    seed = default_seed();
  } catch (const sgl::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }

  std::string validate_path;
  auto* validate = app.add_subcommand("validate", "Check a game file and its mixing certificate");
  validate->add_option("game", validate_path, "Game JSON file")->required();

  AnalyzeArgs analyze_args;
  analyze_args.seed = seed;
  auto* analyze = app.add_subcommand("analyze", "Exact analysis of a policy profile (JSON report)");
  analyze->alias("report");
  analyze->add_option("--game", analyze_args.game, "Game JSON file")->required();
  analyze->add_option("--policy", analyze_args.policy, "Policy JSON file (default: uniform)");
  analyze->add_option("--seed", analyze_args.seed, "Seed for policy samples");
  analyze->add_option("--lipschitz-pairs", analyze_args.lipschitz_pairs, "Pairs for the Lipschitz probe");

  GradientArgs gradient_args;
  gradient_args.seed = seed;
  auto* gradient = app.add_subcommand("gradient", "Policy gradient in reduced coordinates");
  gradient->add_option("--game", gradient_args.game, "Game JSON file")->required();
  gradient->add_option("--policy", gradient_args.policy, "Policy JSON file (default: uniform)");
  gradient->add_option("--method", gradient_args.method, "exact, fd or spsa")
      ->check(CLI::IsMember({"exact", "fd", "spsa"}));
  gradient->add_option("--delta", gradient_args.delta, "Query radius for spsa (default: quarter safety radius)");
  gradient->add_option("--draws", gradient_args.draws, "Directions averaged for spsa");
  gradient->add_option("--seed", gradient_args.seed, "Seed");

  LearnArgs learn_args;
  learn_args.seed = seed;
  auto* learn = app.add_subcommand("learn", "Run the payoff-only learner");
  learn->add_option("--game", learn_args.game, "Game JSON file")->required();
  learn->add_option("--iters", learn_args.iters, "Outer iterations")->required();
  learn->add_option("--seed", learn_args.seed, "Seed (default: $SGL_SEED or 0)");
  learn->add_option("--mirror", learn_args.mirror, "entropy or euclidean")->check(CLI::IsMember({"entropy", "euclidean"}));
  learn->add_option("--preset", learn_args.preset, "default or paper-suitable")
      ->check(CLI::IsMember({"default", "paper-suitable"}));
  learn->add_option("--gamma-exp", learn_args.gamma_exp, "Step-size exponent p");
  learn->add_option("--delta-exp", learn_args.delta_exp, "Query-radius exponent q");
  learn->add_option("--gamma-scale", learn_args.gamma_scale, "Step-size scale");
  learn->add_option("--delta-scale", learn_args.delta_scale, "Query-radius scale");
  learn->add_option("--horizon", learn_args.horizon, "log or power")->check(CLI::IsMember({"log", "power"}));
  learn->add_option("--horizon-param", learn_args.horizon_param, "Horizon parameter T0");
  learn->add_flag("--oracle", learn_args.oracle, "Exact payoffs and estimate decomposition");
  learn->add_option("--ref", learn_args.ref, "Reference policy JSON for distance and Fenchel tracking");
  learn->add_option("--init-policy", learn_args.init_policy, "Initial policy JSON (dual score back-solved)");
  learn->add_option("--log-every", learn_args.log_every, "Checkpoint period");
  learn->add_option("--start-state", learn_args.start_state, "Initial game state");
  learn->add_option("--out", learn_args.out, "Output directory");

  GeneratorSpec gen_spec;
  gen_spec.seed = seed;
  std::string gen_out;
  auto* gen = app.add_subcommand("generate", "Write a benchmark or random game");
  gen->add_option("--kind", gen_spec.kind, "random-ergodic, matching-pennies or zerosum-switching")->required();
  gen->add_option("--states", gen_spec.states, "States (random-ergodic)");
  gen->add_option("--players", gen_spec.players, "Players (random-ergodic)");
  gen->add_option("--actions", gen_spec.actions, "Actions per player (random-ergodic)");
  gen->add_option("--eps", gen_spec.eps, "Transition floor (random-ergodic)");
  gen->add_option("--reward-lo", gen_spec.reward_lo, "Lower reward bound (random-ergodic)");
  gen->add_option("--reward-hi", gen_spec.reward_hi, "Upper reward bound (random-ergodic)");
  gen->add_option("--seed", gen_spec.seed, "Seed");
  gen->add_option("--out", gen_out, "Output game file")->required();

  std::string sweep_config;
  auto* sweep_cmd = app.add_subcommand("sweep", "Run a schedule grid over seeds");
  sweep_cmd->add_option("--config", sweep_config, "Sweep config JSON")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return 1;
  }

  try {
    if (*validate) return cmd_validate(validate_path);
    if (*analyze) return cmd_analyze(analyze_args);
    if (*gradient) return cmd_gradient(gradient_args);
    if (*learn) return cmd_learn(learn_args, *learn);
    if (*gen) return cmd_generate(gen_spec, gen_out);
    if (*sweep_cmd) return cmd_sweep(sweep_config);
  } catch (const sgl::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
