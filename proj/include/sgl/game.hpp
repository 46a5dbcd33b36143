#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>

#include "sgl/random.hpp"

namespace sgl {

// Per-player tensor indexed by (state, own action). Policies, gradients and
// dual scores all share this layout.
using ProfileTensor = std::vector<Eigen::MatrixXd>;

// Finite stochastic game (S, N, (A_i), P, (r_i)).
//
// Joint actions are flattened row-major over (a_1, ..., a_n) with the last
// player's action varying fastest. Rewards are stored [player][state][joint]
// and transitions [state][joint][next_state], both contiguous.
class StochasticGame {
 public:
  // Validates every invariant and throws ConfigError / DimensionError
  // naming the first offending index.
  StochasticGame(int num_states, std::vector<int> action_counts, std::vector<double> rewards,
                 std::vector<double> transitions);

  int num_states() const { return num_states_; }
  int num_players() const { return static_cast<int>(action_counts_.size()); }
  int num_actions(int player) const { return action_counts_[player]; }
  const std::vector<int>& action_counts() const { return action_counts_; }
  int num_joint_actions() const { return num_joint_; }

  double reward(int player, int state, int joint) const {
    return rewards_[(static_cast<std::size_t>(player) * num_states_ + state) * num_joint_ + joint];
  }
  double transition(int state, int joint, int next) const {
    return transitions_[(static_cast<std::size_t>(state) * num_joint_ + joint) * num_states_ + next];
  }
  std::span<const double> transition_row(int state, int joint) const {
    return {transitions_.data() + (static_cast<std::size_t>(state) * num_joint_ + joint) * num_states_,
            static_cast<std::size_t>(num_states_)};
  }

  // Action of `player` inside flattened joint action `joint`.
  int action_of(int joint, int player) const { return decoded_[static_cast<std::size_t>(joint) * num_players() + player]; }
  int encode(std::span<const int> actions) const;

  const std::vector<double>& rewards() const { return rewards_; }
  const std::vector<double>& transitions() const { return transitions_; }

  double max_abs_reward(int player) const;
  double min_transition() const;
  // True when P[s'|s,a] does not depend on a, which makes p_pi constant.
  bool action_independent_transitions() const;

 private:
  int num_states_;
  std::vector<int> action_counts_;
  int num_joint_;
  std::vector<double> rewards_;
  std::vector<double> transitions_;
  std::vector<int> decoded_;
};

// Stationary policy profile: probs[i](s, a_i) = pi_i(a_i | s).
struct PolicyProfile {
  ProfileTensor probs;

  int num_players() const { return static_cast<int>(probs.size()); }
  const Eigen::MatrixXd& operator[](int player) const { return probs[player]; }
  Eigen::MatrixXd& operator[](int player) { return probs[player]; }

  static PolicyProfile uniform(const StochasticGame& game);
  // Deterministic profile; choice[i][s] is player i's action in state s.
  static PolicyProfile deterministic(const StochasticGame& game, const std::vector<std::vector<int>>& choice);
};

// Throws DimensionError on shape mismatch and ConfigError when a row is not
// a probability vector (tolerance 1e-12).
void validate_policy(const StochasticGame& game, const PolicyProfile& policy);

// prod_i pi_i(a_i | s) for every joint action a.
Eigen::VectorXd joint_action_distribution(const StochasticGame& game, const PolicyProfile& policy, int state);

// Same, with player `skip` treated as if it played each of its actions with
// weight one (the opponent marginal pi_{-i}(a_{-i} | s)).
Eigen::VectorXd opponent_weights(const StochasticGame& game, const PolicyProfile& policy, int state, int skip);

PolicyProfile with_player(const PolicyProfile& policy, int player, Eigen::MatrixXd block);

// Dirichlet(1) draw in every (player, state) simplex.
PolicyProfile random_policy(const StochasticGame& game, Rng& rng);
// Random policy mixed with uniform so every entry is at least `floor`.
PolicyProfile random_interior_policy(const StochasticGame& game, Rng& rng, double floor = 0.05);

ProfileTensor zeros_like(const StochasticGame& game);
double inner(const ProfileTensor& a, const ProfileTensor& b);
double sup_norm(const ProfileTensor& a);
double l2_norm(const ProfileTensor& a);
ProfileTensor difference(const ProfileTensor& a, const ProfileTensor& b);

}  // namespace sgl
