#include "sgl/chain.hpp"

#include <cmath>
#include <limits>
#include <set>
#include <sstream>

#include "sgl/errors.hpp"

namespace sgl {

namespace {

constexpr double kResidualTolerance = 1e-10;
constexpr double kMassFloor = 1e-14;
constexpr double kRoundingFloor = 1e-13;

double residual_l1(const Eigen::MatrixXd& transition, const Eigen::VectorXd& p) {
  return (transition.transpose() * p - p).lpNorm<1>();
}

// Index of a deterministic profile in mixed radix, or nullopt if `policy`
// is not deterministic.
std::optional<std::size_t> vertex_index(const StochasticGame& game, const PolicyProfile& policy) {
  std::size_t index = 0;
  for (int i = 0; i < game.num_players(); ++i) {
    for (int s = 0; s < game.num_states(); ++s) {
      int chosen = -1;
      for (int a = 0; a < game.num_actions(i); ++a) {
        const double v = policy[i](s, a);
        if (v == 1.0) {
          chosen = a;
        } else if (v != 0.0) {
          return std::nullopt;
        }
      }
      if (chosen < 0) return std::nullopt;
      index = index * static_cast<std::size_t>(game.num_actions(i)) + static_cast<std::size_t>(chosen);
    }
  }
  return index;
}

PolicyProfile vertex_from_index(const StochasticGame& game, std::size_t index) {
  std::vector<std::vector<int>> choice(game.num_players(), std::vector<int>(game.num_states()));
  for (int i = game.num_players() - 1; i >= 0; --i) {
    for (int s = game.num_states() - 1; s >= 0; --s) {
      choice[i][s] = static_cast<int>(index % game.num_actions(i));
      index /= game.num_actions(i);
    }
  }
  return PolicyProfile::deterministic(game, choice);
}

}  // namespace

Eigen::MatrixXd induced_transition_matrix(const StochasticGame& game, const PolicyProfile& policy) {
  validate_policy(game, policy);
  const int n = game.num_states();
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n, n);
  for (int s = 0; s < n; ++s) {
    const Eigen::VectorXd weights = joint_action_distribution(game, policy, s);
    for (int joint = 0; joint < game.num_joint_actions(); ++joint) {
      const double w = weights(joint);
      if (w == 0.0) continue;
      const auto row = game.transition_row(s, joint);
      for (int next = 0; next < n; ++next) out(s, next) += w * row[next];
    }
  }
  return out;
}

PowerIterationResult stationary_by_power_iteration(const Eigen::MatrixXd& transition, double tol,
                                                   int max_iterations) {
  const auto n = transition.rows();
  PowerIterationResult result;
  Eigen::RowVectorXd p = Eigen::RowVectorXd::Constant(n, 1.0 / static_cast<double>(n));
  for (int it = 1; it <= max_iterations; ++it) {
    Eigen::RowVectorXd next = p * transition;
    next /= next.sum();
    const double change = (next - p).lpNorm<1>();
    p = std::move(next);
    if (change <= tol) {
      result.iterations = it;
      result.converged = true;
      break;
    }
    result.iterations = it;
  }
  result.distribution = p.transpose();
  return result;
}

Eigen::VectorXd stationary_distribution(const Eigen::MatrixXd& transition) {
  const auto n = transition.rows();
  if (transition.cols() != n || n == 0) throw DimensionError("transition matrix must be square and non-empty");

  Eigen::MatrixXd system(n + 1, n);
  system.topRows(n) = transition.transpose() - Eigen::MatrixXd::Identity(n, n);
  system.row(n).setOnes();
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n + 1);
  rhs(n) = 1.0;

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(system);
  qr.setThreshold(1e-10);
  if (qr.rank() < n) {
    std::ostringstream msg;
    msg << "stationary distribution is not unique: balance system has rank " << qr.rank() << " < " << n
        << " (chain is reducible)";
    throw ErgodicityError(msg.str());
  }
  Eigen::VectorXd p = qr.solve(rhs);

  if (residual_l1(transition, p) > kResidualTolerance || std::abs(p.sum() - 1.0) > kResidualTolerance) {
    const auto power = stationary_by_power_iteration(transition);
    if (!power.converged) throw ErgodicityError("direct solve inaccurate and power iteration did not converge");
    p = power.distribution;
  }
  for (Eigen::Index s = 0; s < n; ++s) {
    if (p(s) <= kMassFloor) {
      std::ostringstream msg;
      msg << "state " << s << " has stationary mass " << p(s) << " (chain is not irreducible)";
      throw ErgodicityError(msg.str());
    }
  }
  p /= p.sum();
  if (residual_l1(transition, p) > kResidualTolerance) {
    throw ErgodicityError("stationary residual exceeds 1e-10");
  }
  return p;
}

double dobrushin_coefficient(const Eigen::MatrixXd& transition) {
  double worst = 0.0;
  for (Eigen::Index s = 0; s < transition.rows(); ++s)
    for (Eigen::Index t = s + 1; t < transition.rows(); ++t)
      worst = std::max(worst, 0.5 * (transition.row(s) - transition.row(t)).lpNorm<1>());
  // Rows built from identical kernels can differ by a few ulps after mixing
  // over joint actions; that residue is not a contraction.
  return worst < kRoundingFloor ? 0.0 : worst;
}

double tau_from_contraction(double contraction) {
  if (contraction <= 0.0) return 0.0;
  if (contraction >= 1.0) return std::numeric_limits<double>::infinity();
  return -1.0 / std::log(contraction);
}

double mixing_decay(double t, double tau) {
  if (tau <= 0.0) return t <= 0.0 ? 1.0 : 0.0;
  return std::exp(-t / tau);
}

ChainAnalysis analyze_chain(const StochasticGame& game, const PolicyProfile& policy) {
  ChainAnalysis out;
  out.transition_matrix = induced_transition_matrix(game, policy);
  out.stationary = stationary_distribution(out.transition_matrix);
  out.contraction = dobrushin_coefficient(out.transition_matrix);
  out.tau = tau_from_contraction(out.contraction);
  return out;
}

std::string MixingCertificate::label() const {
  std::ostringstream out;
  if (!certified) {
    out << "assumption violated: " << offending.size() << " sampled profile(s) with contraction >= 1";
    return out.str();
  }
  out << (vertices_exhaustive ? "vertex-exhaustive certificate" : "sampled certificate");
  if (instant_mixing) out << " (instant mixing, tau = 0+)";
  if (floor_bound) out << "; eps-floor " << epsilon_floor << " gives contraction <= " << *floor_bound;
  return out.str();
}

MixingCertificate certify_mixing(const StochasticGame& game, const std::vector<PolicyProfile>& sample_policies) {
  if (sample_policies.empty()) throw ContractError("certify_mixing needs at least one policy");
  MixingCertificate cert;
  std::set<std::size_t> vertices;
  for (std::size_t k = 0; k < sample_policies.size(); ++k) {
    const double c = dobrushin_coefficient(induced_transition_matrix(game, sample_policies[k]));
    if (k == 0 || c > cert.contraction) {
      cert.contraction = c;
      cert.worst_policy = k;
    }
    if (c >= 1.0 - 1e-15) cert.offending.push_back(k);
    if (auto v = vertex_index(game, sample_policies[k])) vertices.insert(*v);
  }
  cert.certified = cert.offending.empty();
  cert.tau = cert.certified ? tau_from_contraction(cert.contraction) : std::numeric_limits<double>::infinity();
  cert.instant_mixing = cert.certified && cert.contraction == 0.0;
  cert.vertices_exhaustive = vertices.size() == count_deterministic_profiles(game);
  cert.epsilon_floor = game.min_transition();
  if (cert.epsilon_floor > 0.0) cert.floor_bound = 1.0 - game.num_states() * cert.epsilon_floor;
  return cert;
}

std::size_t count_deterministic_profiles(const StochasticGame& game) {
  std::size_t count = 1;
  constexpr std::size_t kMax = std::numeric_limits<std::size_t>::max();
  for (int i = 0; i < game.num_players(); ++i) {
    for (int s = 0; s < game.num_states(); ++s) {
      const auto m = static_cast<std::size_t>(game.num_actions(i));
      if (count > kMax / m) return kMax;
      count *= m;
    }
  }
  return count;
}

std::vector<PolicyProfile> policy_sample(const StochasticGame& game, Rng& rng, int n_random, std::size_t max_vertices) {
  std::vector<PolicyProfile> out;
  out.push_back(PolicyProfile::uniform(game));
  const std::size_t n_vertices = count_deterministic_profiles(game);
  if (n_vertices <= max_vertices) {
    for (std::size_t v = 0; v < n_vertices; ++v) out.push_back(vertex_from_index(game, v));
  } else {
    std::uniform_int_distribution<std::size_t> pick(0, n_vertices - 1);
    for (std::size_t k = 0; k < max_vertices; ++k) out.push_back(vertex_from_index(game, pick(rng)));
  }
  for (int k = 0; k < n_random; ++k) out.push_back(random_policy(game, rng));
  return out;
}

}  // namespace sgl
