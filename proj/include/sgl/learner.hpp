#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "sgl/game.hpp"
#include "sgl/mirror.hpp"
#include "sgl/random.hpp"
#include "sgl/schedule.hpp"
#include "sgl/simulate.hpp"
#include "sgl/spsa.hpp"

namespace sgl {

struct LearnerConfig {
  Schedule schedule;
  Regularizer regularizer = Regularizer::entropic();
  long long iters = 0;
  std::uint64_t seed = 0;
  int start_state = 0;
  // Oracle mode: exact payoffs at every query and the b / U / eps split of
  // each estimate. Bandit players never see these quantities.
  bool oracle = false;
  std::optional<PolicyProfile> reference;
  // Starting policy; Y^0 is back-solved from it. Empty means Y^0 = 0.
  std::optional<PolicyProfile> init_policy;
  // Checkpoint every log_every updates (plus t = 0 and t = iters); 0 keeps
  // only those two.
  long long log_every = 1000;
  bool checkpoint_nash_gap = true;
  // Monte Carlo draws for the smoothed gradient when payoffs are not
  // multilinear (oracle mode only).
  int smoothing_draws = 256;
  // Optional per-step observer.
  std::function<void(const struct StepDiagnostics&)> on_step;
};

// Loop variables of the learning dynamics.
struct LearnerState {
  DualScore scores;       // Y_i
  PolicyProfile policy;   // pi_i = Q(Y_i)
  ProfileTensor reduced;  // x_i = reduce(pi_i)
  long long t = 0;        // completed updates
};

// Split of one estimate v_hat = v + b + U + eps, all lifted to (state, action):
//   v   = F grad_x V(x)                         (exact gradient)
//   b   = F grad V^delta(x_delta) - v           (smoothing and safety-net bias)
//   U   = F (d/delta) V(x_hat) z - F grad V^delta(x_delta)   (zero-mean noise)
//   eps = F (d/delta) (V_hat - V(x_hat)) z     (finite-horizon bias)
struct Decomposition {
  Eigen::MatrixXd gradient;
  Eigen::MatrixXd bias;
  Eigen::MatrixXd noise;
  Eigen::MatrixXd horizon;
};

Decomposition decompose_step(const Eigen::MatrixXd& exact_reduced_gradient, const Eigen::MatrixXd& smoothed_reduced_gradient,
                             double exact_query_value, double sampled_value, const Eigen::MatrixXd& z, double delta);

struct PlayerStep {
  double sampled_value = 0.0;         // V_hat_i
  Eigen::MatrixXd z;                  // direction, reduced shape
  Eigen::MatrixXd estimate;           // lifted v_hat_i
  double estimate_norm = 0.0;
  std::optional<double> exact_query_value;  // V_i(x_hat), oracle mode
  std::optional<Decomposition> split;       // oracle mode
};

struct StepDiagnostics {
  long long t = 0;
  double gamma = 0.0;
  double delta = 0.0;
  bool delta_clamped = false;
  long long horizon = 0;
  std::vector<PlayerStep> players;
};

struct PlayerCheckpoint {
  double value = 0.0;  // exact V_i(pi^t); NaN when the chain is not ergodic
  double fenchel = 0.0;  // F(pi*_i, Y_i); NaN without a reference
  double nash_gap = 0.0;
  double dist_to_ref = 0.0;  // ||pi_i - pi*_i||_2
  double est_norm = 0.0;     // ||v_hat_i|| at the last update
};

struct Checkpoint {
  long long t = 0;
  double gamma = 0.0;
  double delta = 0.0;
  long long horizon = 0;
  std::vector<PlayerCheckpoint> players;

  double total_fenchel() const;
  double profile_distance() const;  // ||pi - pi*||_2 over the whole profile
};

struct RunResult {
  LearnerState final_state;
  std::vector<Checkpoint> checkpoints;
  long long stages_played = 0;
  long long clamped_steps = 0;
  long long warnings = 0;  // oracle evaluations that failed the ergodicity check
  double max_norm_ratio = 0.0;  // max_t ||v_hat^t|| delta^t / U
};

// One learner on one shared trajectory. The game is never reset between
// updates.
class Learner {
 public:
  Learner(const StochasticGame& game, LearnerConfig config);

  const LearnerState& state() const { return state_; }
  const std::vector<SafetyNet>& nets() const { return nets_; }
  int game_state() const { return sim_.state(); }
  double effective_delta(long long t, bool* clamped = nullptr) const;

  // One outer iteration: perturb, play T^t stages, read the reward at stage
  // T^t + 1, estimate, take the dual step, map back.
  StepDiagnostics step();
  Checkpoint checkpoint() const;

  long long stages_played() const { return stages_; }
  double max_norm_ratio() const { return max_norm_ratio_; }
  long long warnings() const { return warnings_; }

 private:
  const StochasticGame* game_;
  LearnerConfig config_;
  std::vector<SafetyNet> nets_;
  double delta_cap_;
  double norm_constant_;
  LearnerState state_;
  Simulator sim_;
  Rng rng_;
  Rng oracle_rng_;
  std::vector<double> last_norms_;
  long long stages_ = 0;
  long long warnings_ = 0;
  double max_norm_ratio_ = 0.0;
};

RunResult run(const StochasticGame& game, const LearnerConfig& config);

// Reference policy when no equilibrium is known: final iterate of mirror
// ascent driven by exact gradients.
PolicyProfile oracle_gradient_reference(const StochasticGame& game, const Regularizer& reg, long long iters = 20000,
                                        double step = 0.5);

struct HorizonBias {
  double measured = 0.0;        // |mean(V_hat) - V|
  double standard_error = 0.0;
  double bound = 0.0;           // |S| max|r_i| e^{-T/tau}
  double exact_expectation = 0.0;  // e_s P^T R
  double value = 0.0;           // V_i
  bool holds = false;           // measured <= bound + 3 SE
};

// n_draws independent rollouts of T + 1 stages from `start_state`; V_hat is
// the reward at the last stage.
HorizonBias horizon_bias_check(const StochasticGame& game, const PolicyProfile& policy, int player, long long horizon,
                               int n_draws, double tau, int start_state, Rng& rng);

inline const char* kCsvHeader = "t,gamma,delta,horizon,player,value,fenchel,nash_gap,dist_to_ref,est_norm";

void write_checkpoints_csv(const std::filesystem::path& path, const std::vector<Checkpoint>& checkpoints);
std::vector<Checkpoint> read_checkpoints_csv(const std::filesystem::path& path);
nlohmann::json run_metadata(const StochasticGame& game, const LearnerConfig& config, const RunResult& result);

}  // namespace sgl
