#include "sgl/spsa.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "sgl/errors.hpp"
#include "sgl/exact.hpp"

namespace sgl {

Eigen::MatrixXd reduce(const Eigen::MatrixXd& block) { return block.leftCols(block.cols() - 1); }

Eigen::MatrixXd lift(const Eigen::MatrixXd& reduced) {
  Eigen::MatrixXd out(reduced.rows(), reduced.cols() + 1);
  for (Eigen::Index s = 0; s < reduced.rows(); ++s) {
    double total = 0.0;
    for (Eigen::Index k = 0; k < reduced.cols(); ++k) {
      const double v = reduced(s, k);
      if (!(v >= -1e-12)) {
        std::ostringstream msg;
        msg << "reduced policy entry (state " << s << ", action " << k << ") is " << v;
        throw DomainError(msg.str());
      }
      out(s, k) = std::max(v, 0.0);
      total += out(s, k);
    }
    if (total > 1.0 + 1e-12) {
      std::ostringstream msg;
      msg << "reduced policy row " << s << " sums to " << total << " > 1";
      throw DomainError(msg.str());
    }
    out(s, reduced.cols()) = std::max(0.0, 1.0 - total);
  }
  return out;
}

ProfileTensor reduce(const PolicyProfile& policy) {
  ProfileTensor out;
  for (const auto& block : policy.probs) out.push_back(reduce(block));
  return out;
}

PolicyProfile lift(const ProfileTensor& reduced) {
  PolicyProfile out;
  for (const auto& block : reduced) out.probs.push_back(lift(block));
  return out;
}

SafetyNet safety_net_for(int num_states, int num_actions) {
  if (num_states < 1 || num_actions < 1) throw DimensionError("safety net needs positive state and action counts");
  SafetyNet net;
  net.center = Eigen::MatrixXd::Constant(num_states, num_actions - 1, 1.0 / num_actions);
  net.dimension = num_states * (num_actions - 1);
  if (num_actions >= 2) net.radius = (1.0 / num_actions) / std::sqrt(static_cast<double>(num_actions - 1));
  return net;
}

std::vector<SafetyNet> safety_nets(const StochasticGame& game) {
  std::vector<SafetyNet> out;
  for (int i = 0; i < game.num_players(); ++i) out.push_back(safety_net_for(game.num_states(), game.num_actions(i)));
  return out;
}

double min_safety_radius(const std::vector<SafetyNet>& nets) {
  double out = std::numeric_limits<double>::infinity();
  for (const auto& net : nets)
    if (!net.degenerate()) out = std::min(out, net.radius);
  return out;
}

Eigen::MatrixXd lifting_block(int num_actions) {
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(num_actions, num_actions - 1);
  g.topRows(num_actions - 1).setIdentity();
  g.row(num_actions - 1).setConstant(-1.0);
  return g;
}

Eigen::MatrixXd lifting_matrix(int num_states, int num_actions) {
  const Eigen::MatrixXd g = lifting_block(num_actions);
  Eigen::MatrixXd f = Eigen::MatrixXd::Zero(num_states * num_actions, num_states * (num_actions - 1));
  for (int s = 0; s < num_states; ++s) f.block(s * num_actions, s * (num_actions - 1), num_actions, num_actions - 1) = g;
  return f;
}

Eigen::MatrixXd lift_direction(const Eigen::MatrixXd& reduced) {
  Eigen::MatrixXd out(reduced.rows(), reduced.cols() + 1);
  out.leftCols(reduced.cols()) = reduced;
  out.col(reduced.cols()) = -reduced.rowwise().sum();
  return out;
}

double lifting_norm(int num_actions) { return std::sqrt(static_cast<double>(num_actions)); }

Eigen::MatrixXd perturb(const Eigen::MatrixXd& x, const Eigen::MatrixXd& z, double delta, const SafetyNet& net) {
  if (net.degenerate()) return x;
  if (x.rows() != net.center.rows() || x.cols() != net.center.cols() || z.rows() != x.rows() || z.cols() != x.cols())
    throw DimensionError("perturb: shapes of x, z and the safety net differ");
  if (std::abs(z.norm() - 1.0) > 1e-12) throw ContractError("perturb: direction z must have unit norm");
  if (!(delta >= 0.0) || delta >= net.radius) {
    std::ostringstream msg;
    msg << "query radius exceeds safety radius (delta " << delta << ", radius " << net.radius << ")";
    throw ScheduleError(msg.str());
  }
  const double mix = delta / net.radius;
  return (1.0 - mix) * x + mix * (net.center + net.radius * z);
}

ProfileTensor perturb(const ProfileTensor& x, const ProfileTensor& z, double delta, const std::vector<SafetyNet>& nets) {
  ProfileTensor out;
  for (std::size_t i = 0; i < x.size(); ++i) out.push_back(perturb(x[i], z[i], delta, nets[i]));
  return out;
}

ProfileTensor shifted_center(const ProfileTensor& x, double delta, const std::vector<SafetyNet>& nets) {
  ProfileTensor out;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (nets[i].degenerate()) {
      out.push_back(x[i]);
      continue;
    }
    const double mix = delta / nets[i].radius;
    out.push_back((1.0 - mix) * x[i] + mix * nets[i].center);
  }
  return out;
}

Eigen::VectorXd sample_sphere(int dimension, Rng& rng) {
  if (dimension < 1) throw DimensionError("sample_sphere needs dimension >= 1");
  Eigen::VectorXd v(dimension);
  double norm = 0.0;
  while (norm == 0.0) {
    for (int k = 0; k < dimension; ++k) v(k) = standard_normal(rng);
    norm = v.norm();
  }
  return v / norm;
}

Eigen::MatrixXd sample_sphere(int rows, int cols, Rng& rng) {
  const Eigen::VectorXd v = sample_sphere(rows * cols, rng);
  return Eigen::Map<const Eigen::MatrixXd>(v.data(), rows, cols);
}

Eigen::MatrixXd sample_ball(int rows, int cols, Rng& rng) {
  const double radius = std::pow(uniform01(rng), 1.0 / (rows * cols));
  return radius * sample_sphere(rows, cols, rng);
}

const char* to_string(GradientSource source) {
  switch (source) {
    case GradientSource::Exact:
      return "exact";
    case GradientSource::FiniteDifference:
      return "fd";
    case GradientSource::Spsa:
      return "spsa";
  }
  return "unknown";
}

PlayerEstimate estimate_gradient(double value, const Eigen::MatrixXd& z, double delta) {
  if (!(delta > 0.0)) throw ContractError("estimate_gradient needs delta > 0");
  PlayerEstimate out;
  out.reduced = (static_cast<double>(z.size()) / delta * value) * z;
  out.lifted = lift_direction(out.reduced);
  return out;
}

Eigen::MatrixXd reduced_gradient(const Eigen::MatrixXd& full) {
  const auto last = full.cols() - 1;
  return full.leftCols(last).colwise() - full.col(last);
}

ProfileTensor reduced_gradient(const ProfileTensor& full) {
  ProfileTensor out;
  for (const auto& block : full) out.push_back(reduced_gradient(block));
  return out;
}

double estimator_norm_constant(const StochasticGame& game) {
  double out = 0.0;
  for (int i = 0; i < game.num_players(); ++i) {
    const int d = game.num_states() * (game.num_actions(i) - 1);
    out = std::max(out, d * game.max_abs_reward(i) * lifting_norm(game.num_actions(i)));
  }
  return out;
}

bool multilinear_payoffs(const StochasticGame& game) {
  return game.num_states() == 1 || game.action_independent_transitions();
}

SmoothedGradient smoothed_gradient(const StochasticGame& game, const PolicyProfile& policy, double delta,
                                   const std::vector<SafetyNet>& nets, int draws, Rng& rng) {
  const ProfileTensor center = shifted_center(reduce(policy), delta, nets);
  SmoothedGradient out;
  if (multilinear_payoffs(game)) {
    // Own payoff is linear in the own block and the other blocks enter
    // linearly, so ball and sphere averages collapse to the centre.
    out.closed_form = true;
    out.reduced = reduced_gradient(exact_gradient(game, lift(center)));
    for (const auto& block : out.reduced) out.standard_error.push_back(Eigen::MatrixXd::Zero(block.rows(), block.cols()));
    return out;
  }
  if (draws < 2) throw ContractError("smoothed_gradient needs at least two draws");
  for (int i = 0; i < game.num_players(); ++i) {
    const auto rows = center[i].rows();
    const auto cols = center[i].cols();
    Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(rows, cols);
    Eigen::MatrixXd sum_sq = Eigen::MatrixXd::Zero(rows, cols);
    if (!nets[i].degenerate()) {
      for (int k = 0; k < draws; ++k) {
        ProfileTensor point = center;
        for (int j = 0; j < game.num_players(); ++j) {
          if (nets[j].degenerate()) continue;
          const auto r = center[j].rows();
          const auto c = center[j].cols();
          point[j] += delta * (j == i ? sample_ball(r, c, rng) : sample_sphere(r, c, rng));
        }
        const Eigen::MatrixXd g = reduced_gradient(exact_gradient(game, lift(point))[i]);
        sum += g;
        sum_sq += g.cwiseProduct(g);
      }
    }
    const Eigen::MatrixXd mean = sum / draws;
    const Eigen::MatrixXd var = ((sum_sq / draws - mean.cwiseProduct(mean)) * draws / (draws - 1.0)).cwiseMax(0.0);
    out.reduced.push_back(mean);
    out.standard_error.push_back((var / draws).cwiseSqrt());
  }
  return out;
}

BiasProbe bias_probe(const StochasticGame& game, const PolicyProfile& policy, double delta, int draws, Rng& rng) {
  const std::vector<SafetyNet> nets = safety_nets(game);
  if (!(delta > 0.0) || delta >= min_safety_radius(nets)) throw ScheduleError("bias_probe needs 0 < delta < safety radius");
  const SmoothedGradient smooth = smoothed_gradient(game, policy, delta, nets, draws, rng);
  const ProfileTensor exact = reduced_gradient(exact_gradient(game, policy));
  const ProfileTensor x = reduce(policy);
  const ProfileTensor shifted = shifted_center(x, delta, nets);
  BiasProbe out;
  int active = 0;
  double shift_sq = 0.0;
  for (int i = 0; i < game.num_players(); ++i) {
    if (nets[i].degenerate()) continue;
    ++active;
    out.bias = std::max(out.bias, (smooth.reduced[i] - exact[i]).cwiseAbs().maxCoeff());
    out.standard_error = std::max(out.standard_error, smooth.standard_error[i].maxCoeff());
    shift_sq += (shifted[i] - x[i]).squaredNorm();
  }
  out.displacement = delta * std::sqrt(static_cast<double>(active)) + std::sqrt(shift_sq);
  return out;
}

}  // namespace sgl
