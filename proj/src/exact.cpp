#include "sgl/exact.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "sgl/errors.hpp"

namespace sgl {

namespace {

// Gain and bias (h(0) = 0) of a unichain Markov reward process, from
//   g + h(s) - sum_s' P(s,s') h(s') = r(s).
std::optional<std::pair<double, Eigen::VectorXd>> evaluate_gain(const Eigen::MatrixXd& transition,
                                                                const Eigen::VectorXd& reward) {
  const auto n = transition.rows();
  Eigen::MatrixXd system = Eigen::MatrixXd::Zero(n + 1, n + 1);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n + 1);
  system.block(0, 1, n, n) = Eigen::MatrixXd::Identity(n, n) - transition;
  system.block(0, 0, n, 1).setOnes();
  rhs.head(n) = reward;
  system(n, 1) = 1.0;
  Eigen::FullPivLU<Eigen::MatrixXd> lu(system);
  lu.setThreshold(1e-11);
  if (!lu.isInvertible()) return std::nullopt;
  const Eigen::VectorXd x = lu.solve(rhs);
  return std::make_pair(x(0), Eigen::VectorXd(x.tail(n)));
}

Eigen::MatrixXd policy_transition(const FrozenMdp& mdp, const std::vector<int>& choice) {
  const auto n = mdp.reward.rows();
  Eigen::MatrixXd out(n, n);
  for (Eigen::Index s = 0; s < n; ++s) out.row(s) = mdp.transition[choice[s]].row(s);
  return out;
}

Eigen::VectorXd policy_reward(const FrozenMdp& mdp, const std::vector<int>& choice) {
  const auto n = mdp.reward.rows();
  Eigen::VectorXd out(n);
  for (Eigen::Index s = 0; s < n; ++s) out(s) = mdp.reward(s, choice[s]);
  return out;
}

std::size_t ipow(std::size_t base, int exp) {
  std::size_t out = 1;
  for (int k = 0; k < exp; ++k) {
    if (out > std::numeric_limits<std::size_t>::max() / base) return std::numeric_limits<std::size_t>::max();
    out *= base;
  }
  return out;
}

double value_of(const StochasticGame& game, const PolicyProfile& policy, int player) {
  return exact_value(game, policy).values(player);
}

}  // namespace

Eigen::VectorXd expected_reward_vector(const StochasticGame& game, const PolicyProfile& policy, int player) {
  Eigen::VectorXd out(game.num_states());
  for (int s = 0; s < game.num_states(); ++s) {
    const Eigen::VectorXd w = joint_action_distribution(game, policy, s);
    double total = 0.0;
    for (int a = 0; a < game.num_joint_actions(); ++a) total += w(a) * game.reward(player, s, a);
    out(s) = total;
  }
  return out;
}

ValueReport exact_value(const StochasticGame& game, const PolicyProfile& policy) {
  ValueReport out;
  out.stationary = stationary_distribution(induced_transition_matrix(game, policy));
  out.values.resize(game.num_players());
  for (int i = 0; i < game.num_players(); ++i) {
    out.expected_reward.push_back(expected_reward_vector(game, policy, i));
    out.values(i) = out.stationary.dot(out.expected_reward.back());
  }
  return out;
}

AdvantageTable advantages(const StochasticGame& game, const PolicyProfile& policy) {
  const int n = game.num_states();
  const Eigen::MatrixXd transition = induced_transition_matrix(game, policy);
  AdvantageTable out;
  out.stationary = stationary_distribution(transition);
  out.values.resize(game.num_players());

  Eigen::MatrixXd fundamental = Eigen::MatrixXd::Identity(n, n) - transition;
  fundamental.rowwise() += out.stationary.transpose();
  Eigen::FullPivLU<Eigen::MatrixXd> lu(fundamental);
  if (!lu.isInvertible()) throw ErgodicityError("fundamental matrix I - P + 1 p^T is singular");

  for (int i = 0; i < game.num_players(); ++i) {
    const Eigen::VectorXd reward = expected_reward_vector(game, policy, i);
    const double value = out.stationary.dot(reward);
    out.values(i) = value;
    Eigen::VectorXd h = lu.solve((reward.array() - value).matrix());
    Eigen::MatrixXd adv(n, game.num_joint_actions());
    for (int s = 0; s < n; ++s) {
      for (int a = 0; a < game.num_joint_actions(); ++a) {
        const auto row = game.transition_row(s, a);
        double continuation = 0.0;
        for (int next = 0; next < n; ++next) continuation += row[next] * h(next);
        adv(s, a) = game.reward(i, s, a) - value + continuation;
      }
    }
    Eigen::MatrixXd avg = Eigen::MatrixXd::Zero(n, game.num_actions(i));
    for (int s = 0; s < n; ++s) {
      const Eigen::VectorXd w = opponent_weights(game, policy, s, i);
      for (int a = 0; a < game.num_joint_actions(); ++a) avg(s, game.action_of(a, i)) += w(a) * adv(s, a);
    }
    out.adv.push_back(std::move(adv));
    out.avg_adv.push_back(std::move(avg));
    out.bias.push_back(std::move(h));
  }
  return out;
}

ProfileTensor exact_gradient(const StochasticGame& game, const PolicyProfile& policy) {
  AdvantageTable table = advantages(game, policy);
  ProfileTensor out;
  for (int i = 0; i < game.num_players(); ++i) out.push_back(table.stationary.asDiagonal() * table.avg_adv[i]);
  return out;
}

ProfileTensor finite_difference_reduced_gradient(const StochasticGame& game, const PolicyProfile& policy, double step) {
  validate_policy(game, policy);
  ProfileTensor out;
  const Eigen::VectorXd base = exact_value(game, policy).values;
  for (int i = 0; i < game.num_players(); ++i) {
    const int m = game.num_actions(i);
    const int last = m - 1;
    Eigen::MatrixXd block(game.num_states(), std::max(0, m - 1));
    for (int s = 0; s < game.num_states(); ++s) {
      for (int k = 0; k < last; ++k) {
        auto shifted = [&](double h) {
          Eigen::MatrixXd moved = policy[i];
          moved(s, k) += h;
          moved(s, last) -= h;
          return value_of(game, with_player(policy, i, std::move(moved)), i);
        };
        const bool up = policy[i](s, last) >= step;
        const bool down = policy[i](s, k) >= step;
        if (up && down) {
          block(s, k) = (shifted(step) - shifted(-step)) / (2.0 * step);
        } else if (up) {
          block(s, k) = (shifted(step) - base(i)) / step;
        } else if (down) {
          block(s, k) = (base(i) - shifted(-step)) / step;
        } else {
          block(s, k) = std::numeric_limits<double>::quiet_NaN();
        }
      }
    }
    out.push_back(std::move(block));
  }
  return out;
}

double advantage_bound(const StochasticGame& game, int player, double tau) {
  const double decay = mixing_decay(1.0, tau);
  return 2.0 * game.max_abs_reward(player) / (1.0 - decay);
}

DominanceCheck check_gradient_dominance(const StochasticGame& game, const PolicyProfile& policy,
                                        const PolicyProfile& deviation, double mismatch) {
  validate_policy(game, policy);
  validate_policy(game, deviation);
  DominanceCheck out;
  for (int i = 0; i < game.num_players(); ++i) {
    if ((policy[i] - deviation[i]).cwiseAbs().maxCoeff() > 0.0) {
      if (out.player >= 0) throw ContractError("deviation changes more than one player's policy");
      out.player = i;
    }
  }
  if (out.player < 0) return out;
  const int i = out.player;
  out.lhs = exact_value(game, deviation).values(i) - exact_value(game, policy).values(i);
  const ProfileTensor grad = exact_gradient(game, policy);
  out.rhs = mismatch * (grad[i].array() * (deviation[i] - policy[i]).array()).sum();
  out.holds = out.lhs <= out.rhs + 1e-8;
  return out;
}

MismatchEstimate estimate_mismatch(const StochasticGame& game, const std::vector<PolicyProfile>& samples) {
  if (samples.size() < 2) throw ContractError("estimate_mismatch needs at least two policies");
  std::vector<Eigen::VectorXd> stationary;
  std::vector<std::size_t> index;
  MismatchEstimate out;
  for (std::size_t k = 0; k < samples.size(); ++k) {
    try {
      stationary.push_back(stationary_distribution(induced_transition_matrix(game, samples[k])));
      index.push_back(k);
    } catch (const ErgodicityError&) {
      ++out.skipped;
    }
  }
  for (std::size_t a = 0; a < stationary.size(); ++a) {
    for (std::size_t b = 0; b < stationary.size(); ++b) {
      if (a == b) continue;
      const double ratio = (stationary[a].array() / stationary[b].array()).maxCoeff();
      if (ratio > out.value) {
        out.value = ratio;
        out.numerator = index[a];
        out.denominator = index[b];
      }
    }
  }
  return out;
}

FrozenMdp frozen_opponent_mdp(const StochasticGame& game, const PolicyProfile& policy, int player) {
  validate_policy(game, policy);
  const int n = game.num_states();
  const int m = game.num_actions(player);
  FrozenMdp mdp;
  mdp.reward = Eigen::MatrixXd::Zero(n, m);
  mdp.transition.assign(m, Eigen::MatrixXd::Zero(n, n));
  for (int s = 0; s < n; ++s) {
    const Eigen::VectorXd w = opponent_weights(game, policy, s, player);
    for (int a = 0; a < game.num_joint_actions(); ++a) {
      const int own = game.action_of(a, player);
      mdp.reward(s, own) += w(a) * game.reward(player, s, a);
      const auto row = game.transition_row(s, a);
      for (int next = 0; next < n; ++next) mdp.transition[own](s, next) += w(a) * row[next];
    }
  }
  return mdp;
}

BestResponse best_response_by_enumeration(const StochasticGame& game, const PolicyProfile& policy, int player) {
  const FrozenMdp mdp = frozen_opponent_mdp(game, policy, player);
  const int n = game.num_states();
  const int m = game.num_actions(player);
  const std::size_t total = ipow(static_cast<std::size_t>(m), n);
  BestResponse best;
  best.method = "enumeration";
  best.value = -std::numeric_limits<double>::infinity();
  std::vector<int> choice(n, 0);
  for (std::size_t code = 0; code < total; ++code) {
    std::size_t rest = code;
    for (int s = n - 1; s >= 0; --s) {
      choice[s] = static_cast<int>(rest % m);
      rest /= m;
    }
    const auto gain = evaluate_gain(policy_transition(mdp, choice), policy_reward(mdp, choice));
    if (!gain) {
      ++best.skipped_candidates;
      continue;
    }
    if (gain->first > best.value) {
      best.value = gain->first;
      best.choice = choice;
    }
  }
  if (best.choice.empty()) throw ErgodicityError("no deterministic best-response candidate is unichain");
  return best;
}

BestResponse best_response(const StochasticGame& game, const PolicyProfile& policy, int player) {
  const FrozenMdp mdp = frozen_opponent_mdp(game, policy, player);
  const int n = game.num_states();
  const int m = game.num_actions(player);
  std::vector<int> choice(n);
  for (int s = 0; s < n; ++s) {
    Eigen::Index arg;
    mdp.reward.row(s).maxCoeff(&arg);
    choice[s] = static_cast<int>(arg);
  }
  constexpr int kMaxIterations = 1000;
  for (int it = 0; it < kMaxIterations; ++it) {
    const auto gain = evaluate_gain(policy_transition(mdp, choice), policy_reward(mdp, choice));
    if (!gain) return best_response_by_enumeration(game, policy, player);
    const Eigen::VectorXd& h = gain->second;
    bool changed = false;
    for (int s = 0; s < n; ++s) {
      auto q = [&](int a) { return mdp.reward(s, a) + mdp.transition[a].row(s).dot(h); };
      const double current = q(choice[s]);
      int best_action = choice[s];
      double best_q = current;
      for (int a = 0; a < m; ++a) {
        const double value = q(a);
        if (value > best_q + 1e-12) {
          best_q = value;
          best_action = a;
        }
      }
      if (best_action != choice[s]) {
        choice[s] = best_action;
        changed = true;
      }
    }
    if (!changed) {
      BestResponse out;
      out.value = gain->first;
      out.choice = choice;
      out.method = "policy-iteration";
      return out;
    }
  }
  return best_response_by_enumeration(game, policy, player);
}

NashGapReport nash_gap(const StochasticGame& game, const PolicyProfile& policy) {
  const ValueReport values = exact_value(game, policy);
  NashGapReport out;
  out.gaps.resize(game.num_players());
  for (int i = 0; i < game.num_players(); ++i) {
    BestResponse br = best_response(game, policy, i);
    if (ipow(static_cast<std::size_t>(game.num_actions(i)), game.num_states()) <= 64) {
      const BestResponse check = best_response_by_enumeration(game, policy, i);
      if (check.skipped_candidates > 0) out.flagged = true;
      if (std::abs(check.value - br.value) > 1e-9) {
        out.flagged = true;
        if (check.value > br.value) br = check;
      }
    }
    if (br.skipped_candidates > 0) out.flagged = true;
    out.gaps(i) = std::max(0.0, br.value - values.values(i));
    out.best_responses.push_back(std::move(br));
  }
  out.max_gap = out.gaps.maxCoeff();
  return out;
}

Eigen::VectorXd first_order_residual_terms(const StochasticGame& game, const PolicyProfile& policy) {
  const ProfileTensor grad = exact_gradient(game, policy);
  Eigen::VectorXd out(game.num_players());
  for (int i = 0; i < game.num_players(); ++i) {
    double total = 0.0;
    for (int s = 0; s < game.num_states(); ++s)
      total += grad[i].row(s).maxCoeff() - grad[i].row(s).dot(policy[i].row(s));
    out(i) = total;
  }
  return out;
}

double first_order_residual(const StochasticGame& game, const PolicyProfile& policy) {
  return first_order_residual_terms(game, policy).sum();
}

double lipschitz_probe(const StochasticGame& game, const std::vector<std::pair<PolicyProfile, PolicyProfile>>& pairs) {
  double best = 0.0;
  std::size_t used = 0;
  for (const auto& [a, b] : pairs) {
    const double dist = sup_norm(difference(a.probs, b.probs));
    if (dist == 0.0) continue;
    try {
      const double change = sup_norm(difference(exact_gradient(game, a), exact_gradient(game, b)));
      best = std::max(best, change / dist);
      ++used;
    } catch (const ErgodicityError&) {
    }
  }
  if (used == 0) throw ContractError("lipschitz_probe: degenerate pair (no pair with pi != pi')");
  return best;
}

double lipschitz_probe(const StochasticGame& game, int n_pairs, Rng& rng) {
  if (n_pairs < 1) throw ContractError("lipschitz_probe needs n_pairs >= 1");
  std::vector<std::pair<PolicyProfile, PolicyProfile>> pairs;
  pairs.reserve(n_pairs);
  for (int k = 0; k < n_pairs; ++k) {
    PolicyProfile a = random_policy(game, rng);
    PolicyProfile b = random_policy(game, rng);
    if (k % 2 == 1) {
      const double weight = std::pow(10.0, -3.0 * uniform01(rng));
      for (int i = 0; i < game.num_players(); ++i) b[i] = (1.0 - weight) * a[i] + weight * b[i];
    }
    pairs.emplace_back(std::move(a), std::move(b));
  }
  return lipschitz_probe(game, pairs);
}

}  // namespace sgl
