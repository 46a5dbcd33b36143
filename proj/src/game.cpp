#include "sgl/game.hpp"

#include <cmath>
#include <sstream>

#include "sgl/errors.hpp"

namespace sgl {

namespace {

constexpr double kProbTolerance = 1e-12;

}  // namespace

StochasticGame::StochasticGame(int num_states, std::vector<int> action_counts, std::vector<double> rewards,
                               std::vector<double> transitions)
    : num_states_(num_states),
      action_counts_(std::move(action_counts)),
      num_joint_(1),
      rewards_(std::move(rewards)),
      transitions_(std::move(transitions)) {
  if (num_states_ < 1) throw ConfigError("n_states must be positive");
  if (action_counts_.empty()) throw ConfigError("game needs at least one player");
  for (std::size_t i = 0; i < action_counts_.size(); ++i) {
    if (action_counts_[i] < 1) {
      std::ostringstream msg;
      msg << "player " << i << " has " << action_counts_[i] << " actions; need at least 1";
      throw ConfigError(msg.str());
    }
    num_joint_ *= action_counts_[i];
  }
  const std::size_t n_players = action_counts_.size();
  const std::size_t expected_rewards = n_players * num_states_ * num_joint_;
  const std::size_t expected_transitions = static_cast<std::size_t>(num_states_) * num_joint_ * num_states_;
  if (rewards_.size() != expected_rewards) {
    std::ostringstream msg;
    msg << "rewards has " << rewards_.size() << " entries, expected " << expected_rewards;
    throw DimensionError(msg.str());
  }
  if (transitions_.size() != expected_transitions) {
    std::ostringstream msg;
    msg << "transitions has " << transitions_.size() << " entries, expected " << expected_transitions;
    throw DimensionError(msg.str());
  }
  for (std::size_t i = 0; i < n_players; ++i) {
    for (int s = 0; s < num_states_; ++s) {
      for (int a = 0; a < num_joint_; ++a) {
        if (!std::isfinite(reward(static_cast<int>(i), s, a))) {
          std::ostringstream msg;
          msg << "reward (player " << i << ", state " << s << ", joint action " << a << ") is not finite";
          throw ConfigError(msg.str());
        }
      }
    }
  }
  for (int s = 0; s < num_states_; ++s) {
    for (int a = 0; a < num_joint_; ++a) {
      double total = 0.0;
      for (int n = 0; n < num_states_; ++n) {
        const double p = transition(s, a, n);
        if (!(p >= 0.0) || !std::isfinite(p)) {
          std::ostringstream msg;
          msg << "transition (state " << s << ", joint action " << a << ", next state " << n
              << ") = " << p << " is not a probability";
          throw ConfigError(msg.str());
        }
        total += p;
      }
      if (std::abs(total - 1.0) > kProbTolerance) {
        std::ostringstream msg;
        msg.precision(17);
        msg << "transition row (state " << s << ", joint action " << a << ") sums to " << total;
        throw ConfigError(msg.str());
      }
    }
  }

  decoded_.resize(static_cast<std::size_t>(num_joint_) * n_players);
  for (int joint = 0; joint < num_joint_; ++joint) {
    int rest = joint;
    for (int i = static_cast<int>(n_players) - 1; i >= 0; --i) {
      decoded_[static_cast<std::size_t>(joint) * n_players + i] = rest % action_counts_[i];
      rest /= action_counts_[i];
    }
  }
}

int StochasticGame::encode(std::span<const int> actions) const {
  if (actions.size() != action_counts_.size()) throw DimensionError("joint action has wrong arity");
  int joint = 0;
  for (std::size_t i = 0; i < actions.size(); ++i) {
    if (actions[i] < 0 || actions[i] >= action_counts_[i]) throw DimensionError("action index out of range");
    joint = joint * action_counts_[i] + actions[i];
  }
  return joint;
}

double StochasticGame::max_abs_reward(int player) const {
  double m = 0.0;
  for (int s = 0; s < num_states_; ++s)
    for (int a = 0; a < num_joint_; ++a) m = std::max(m, std::abs(reward(player, s, a)));
  return m;
}

double StochasticGame::min_transition() const {
  double m = 1.0;
  for (double p : transitions_) m = std::min(m, p);
  return m;
}

bool StochasticGame::action_independent_transitions() const {
  for (int s = 0; s < num_states_; ++s)
    for (int a = 1; a < num_joint_; ++a)
      for (int n = 0; n < num_states_; ++n)
        if (transition(s, a, n) != transition(s, 0, n)) return false;
  return true;
}

PolicyProfile PolicyProfile::uniform(const StochasticGame& game) {
  PolicyProfile out;
  for (int i = 0; i < game.num_players(); ++i) {
    const int m = game.num_actions(i);
    out.probs.push_back(Eigen::MatrixXd::Constant(game.num_states(), m, 1.0 / m));
  }
  return out;
}

PolicyProfile PolicyProfile::deterministic(const StochasticGame& game, const std::vector<std::vector<int>>& choice) {
  if (static_cast<int>(choice.size()) != game.num_players()) throw DimensionError("choice has wrong player count");
  PolicyProfile out;
  for (int i = 0; i < game.num_players(); ++i) {
    if (static_cast<int>(choice[i].size()) != game.num_states()) throw DimensionError("choice has wrong state count");
    Eigen::MatrixXd block = Eigen::MatrixXd::Zero(game.num_states(), game.num_actions(i));
    for (int s = 0; s < game.num_states(); ++s) block(s, choice[i][s]) = 1.0;
    out.probs.push_back(std::move(block));
  }
  return out;
}

void validate_policy(const StochasticGame& game, const PolicyProfile& policy) {
  if (policy.num_players() != game.num_players()) {
    std::ostringstream msg;
    msg << "policy has " << policy.num_players() << " players, game has " << game.num_players();
    throw DimensionError(msg.str());
  }
  for (int i = 0; i < game.num_players(); ++i) {
    const auto& block = policy[i];
    if (block.rows() != game.num_states() || block.cols() != game.num_actions(i)) {
      std::ostringstream msg;
      msg << "policy block of player " << i << " is " << block.rows() << "x" << block.cols() << ", expected "
          << game.num_states() << "x" << game.num_actions(i);
      throw DimensionError(msg.str());
    }
    for (int s = 0; s < game.num_states(); ++s) {
      double total = 0.0;
      for (int a = 0; a < block.cols(); ++a) {
        if (!(block(s, a) >= 0.0) || !std::isfinite(block(s, a))) {
          std::ostringstream msg;
          msg << "policy entry (player " << i << ", state " << s << ", action " << a << ") = " << block(s, a)
              << " is not a probability";
          throw ConfigError(msg.str());
        }
        total += block(s, a);
      }
      if (std::abs(total - 1.0) > kProbTolerance) {
        std::ostringstream msg;
        msg.precision(17);
        msg << "policy row (player " << i << ", state " << s << ") sums to " << total;
        throw ConfigError(msg.str());
      }
    }
  }
}

Eigen::VectorXd joint_action_distribution(const StochasticGame& game, const PolicyProfile& policy, int state) {
  return opponent_weights(game, policy, state, -1);
}

Eigen::VectorXd opponent_weights(const StochasticGame& game, const PolicyProfile& policy, int state, int skip) {
  const int n = game.num_players();
  Eigen::VectorXd w(game.num_joint_actions());
  for (int joint = 0; joint < game.num_joint_actions(); ++joint) {
    double prod = 1.0;
    for (int i = 0; i < n; ++i) {
      if (i == skip) continue;
      prod *= policy[i](state, game.action_of(joint, i));
    }
    w(joint) = prod;
  }
  return w;
}

PolicyProfile with_player(const PolicyProfile& policy, int player, Eigen::MatrixXd block) {
  PolicyProfile out = policy;
  out[player] = std::move(block);
  return out;
}

PolicyProfile random_policy(const StochasticGame& game, Rng& rng) {
  PolicyProfile out;
  std::exponential_distribution<double> expo(1.0);
  for (int i = 0; i < game.num_players(); ++i) {
    Eigen::MatrixXd block(game.num_states(), game.num_actions(i));
    for (int s = 0; s < game.num_states(); ++s) {
      for (int a = 0; a < block.cols(); ++a) block(s, a) = expo(rng);
      block.row(s) /= block.row(s).sum();
    }
    out.probs.push_back(std::move(block));
  }
  return out;
}

PolicyProfile random_interior_policy(const StochasticGame& game, Rng& rng, double floor) {
  PolicyProfile out = random_policy(game, rng);
  for (int i = 0; i < game.num_players(); ++i) {
    const int m = game.num_actions(i);
    const double mix = std::min(1.0, floor * m);
    out[i] = (1.0 - mix) * out[i] + Eigen::MatrixXd::Constant(out[i].rows(), m, mix / m);
  }
  return out;
}

ProfileTensor zeros_like(const StochasticGame& game) {
  ProfileTensor out;
  for (int i = 0; i < game.num_players(); ++i) out.push_back(Eigen::MatrixXd::Zero(game.num_states(), game.num_actions(i)));
  return out;
}

double inner(const ProfileTensor& a, const ProfileTensor& b) {
  double total = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) total += (a[i].array() * b[i].array()).sum();
  return total;
}

double sup_norm(const ProfileTensor& a) {
  double m = 0.0;
  for (const auto& block : a)
    if (block.size() > 0) m = std::max(m, block.cwiseAbs().maxCoeff());
  return m;
}

double l2_norm(const ProfileTensor& a) {
  double total = 0.0;
  for (const auto& block : a) total += block.squaredNorm();
  return std::sqrt(total);
}

ProfileTensor difference(const ProfileTensor& a, const ProfileTensor& b) {
  ProfileTensor out;
  for (std::size_t i = 0; i < a.size(); ++i) out.push_back(a[i] - b[i]);
  return out;
}

}  // namespace sgl
