#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "sgl/chain.hpp"
#include "sgl/game.hpp"

namespace sgl {

// Long-run average payoffs V_i = p_pi . R_i^pi.
struct ValueReport {
  Eigen::VectorXd values;                       // V_i per player
  std::vector<Eigen::VectorXd> expected_reward;  // R_i^pi(s) per player
  Eigen::VectorXd stationary;                   // p_pi
};

ValueReport exact_value(const StochasticGame& game, const PolicyProfile& policy);

// R_i^pi(s) = sum_a pi(a|s) r_i(s,a).
Eigen::VectorXd expected_reward_vector(const StochasticGame& game, const PolicyProfile& policy, int player);

struct AdvantageTable {
  std::vector<Eigen::MatrixXd> adv;  // [player] (state, joint action)
  ProfileTensor avg_adv;             // [player] (state, own action)
  std::vector<Eigen::VectorXd> bias;  // [player] h_i with p_pi . h_i = 0
  Eigen::VectorXd stationary;
  Eigen::VectorXd values;
};

// Advantages through the average-reward Poisson equation:
//   (I - P + 1 p^T) h_i = R_i - V_i 1,
//   adv_i(s,a) = r_i(s,a) - V_i + sum_s' P[s'|s,a] h_i(s').
AdvantageTable advantages(const StochasticGame& game, const PolicyProfile& policy);

// dV_i / dpi_i(a_i|s) = p_pi(s) * avg_adv_i(s, a_i), one block per player.
ProfileTensor exact_gradient(const StochasticGame& game, const PolicyProfile& policy);

// Central differences of V_i along pi_i(.|s) + h (e_k - e_last), i.e. the
// gradient in reduced coordinates; blocks are (state, |A_i| - 1). Falls back
// to a one-sided difference when the central stencil leaves the simplex.
ProfileTensor finite_difference_reduced_gradient(const StochasticGame& game, const PolicyProfile& policy,
                                                 double step = 1e-5);

// 2 * max|r_i| * sum_{t>=0} e^{-t/tau}.
double advantage_bound(const StochasticGame& game, int player, double tau);

struct DominanceCheck {
  double lhs = 0.0;  // V_i(pi'_i, pi_-i) - V_i(pi)
  double rhs = 0.0;  // C_G <grad_i V_i(pi), pi'_i - pi_i>
  bool holds = true;
  int player = -1;   // -1 when the deviation is trivial
};

// Throws ContractError when `deviation` differs from `policy` in more than
// one player's block.
DominanceCheck check_gradient_dominance(const StochasticGame& game, const PolicyProfile& policy,
                                        const PolicyProfile& deviation, double mismatch);

struct MismatchEstimate {
  double value = 1.0;  // max over sampled pairs of max_s p_pi(s) / p_pi'(s)
  std::size_t numerator = 0;
  std::size_t denominator = 0;
  std::size_t skipped = 0;  // samples whose chain failed the ergodicity check
  static constexpr const char* kLabel = "sampled lower bound";
};

MismatchEstimate estimate_mismatch(const StochasticGame& game, const std::vector<PolicyProfile>& samples);

// Player i's single-agent MDP with every opponent frozen at pi_-i.
struct FrozenMdp {
  Eigen::MatrixXd reward;                   // (state, own action)
  std::vector<Eigen::MatrixXd> transition;  // [own action] (state, next state)
};

FrozenMdp frozen_opponent_mdp(const StochasticGame& game, const PolicyProfile& policy, int player);

struct BestResponse {
  double value = 0.0;
  std::vector<int> choice;  // deterministic action per state
  std::string method;       // "policy-iteration" or "enumeration"
  int skipped_candidates = 0;  // multichain candidates left out of enumeration
};

BestResponse best_response(const StochasticGame& game, const PolicyProfile& policy, int player);
// Exhaustive search over the |A_i|^|S| deterministic policies.
BestResponse best_response_by_enumeration(const StochasticGame& game, const PolicyProfile& policy, int player);

struct NashGapReport {
  Eigen::VectorXd gaps;
  double max_gap = 0.0;
  std::vector<BestResponse> best_responses;
  bool flagged = false;  // some best-response candidate failed certification
};

NashGapReport nash_gap(const StochasticGame& game, const PolicyProfile& policy);

// max_{pi' in Pi} <v(pi), pi' - pi>, evaluated per (player, state) at the
// best vertex. Returns the per-player terms; the residual is their sum.
Eigen::VectorXd first_order_residual_terms(const StochasticGame& game, const PolicyProfile& policy);
double first_order_residual(const StochasticGame& game, const PolicyProfile& policy);

// max ||v(pi) - v(pi')||_inf / ||pi - pi'||_inf over the given pairs. Pairs
// with pi == pi' are skipped; throws ContractError if nothing remains.
double lipschitz_probe(const StochasticGame& game, const std::vector<std::pair<PolicyProfile, PolicyProfile>>& pairs);
// Same over n_pairs random pairs (half of them local perturbations).
double lipschitz_probe(const StochasticGame& game, int n_pairs, Rng& rng);

}  // namespace sgl
