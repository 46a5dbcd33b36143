#pragma once

#include <vector>

#include <Eigen/Dense>

#include "sgl/game.hpp"
#include "sgl/random.hpp"

namespace sgl {

// Reduced coordinates: x_i(s, k) = pi_i(k|s) for every action but the last,
// blocks are (state, |A_i| - 1). The last action's probability is
// 1 - sum_k x_i(s, k).
Eigen::MatrixXd reduce(const Eigen::MatrixXd& block);
// Throws DomainError when a row has a negative entry or sums above 1 + 1e-12.
Eigen::MatrixXd lift(const Eigen::MatrixXd& reduced);
ProfileTensor reduce(const PolicyProfile& policy);
PolicyProfile lift(const ProfileTensor& reduced);

// Ball around the reduced uniform policy that stays inside the reduced
// policy set. The radius is the distance from the centre to the nearest
// facet: 1/|A| for x >= 0 and (1/|A|)/sqrt(|A| - 1) for sum x <= 1; the
// second is never larger.
struct SafetyNet {
  Eigen::MatrixXd center;  // (state, |A| - 1)
  double radius = 0.0;
  int dimension = 0;       // |S| (|A| - 1); 0 marks a player with one action
  bool degenerate() const { return dimension == 0; }
};

SafetyNet safety_net_for(int num_states, int num_actions);
std::vector<SafetyNet> safety_nets(const StochasticGame& game);
// Smallest radius over non-degenerate players; +inf when there are none.
double min_safety_radius(const std::vector<SafetyNet>& nets);

// G = [I; -1^T], shape |A| x (|A| - 1); its columns sum to zero.
Eigen::MatrixXd lifting_block(int num_actions);
// Block-diagonal F = diag(G, ..., G) acting on the state-major vec of a
// reduced block.
Eigen::MatrixXd lifting_matrix(int num_states, int num_actions);
// F z without forming F: appends -sum of each row as the last column.
Eigen::MatrixXd lift_direction(const Eigen::MatrixXd& reduced);
// Operator norm of F, sqrt(|A|).
double lifting_norm(int num_actions);

// x_hat = (1 - delta/rho) x + (delta/rho)(p + rho z). Requires ||z||_2 = 1
// within 1e-12 and throws ScheduleError when delta >= rho.
Eigen::MatrixXd perturb(const Eigen::MatrixXd& x, const Eigen::MatrixXd& z, double delta, const SafetyNet& net);
// The same map applied to every player; degenerate players are untouched.
ProfileTensor perturb(const ProfileTensor& x, const ProfileTensor& z, double delta, const std::vector<SafetyNet>& nets);
// (1 - delta/rho) x + (delta/rho) p: the point whose delta-sphere the
// perturbed queries cover.
ProfileTensor shifted_center(const ProfileTensor& x, double delta, const std::vector<SafetyNet>& nets);

// Uniform direction on the unit sphere in R^d by Gaussian normalisation.
Eigen::VectorXd sample_sphere(int dimension, Rng& rng);
// Same, shaped as a (rows, cols) block with unit Frobenius norm.
Eigen::MatrixXd sample_sphere(int rows, int cols, Rng& rng);
// Uniform point in the unit ball.
Eigen::MatrixXd sample_ball(int rows, int cols, Rng& rng);

enum class GradientSource { Exact, FiniteDifference, Spsa };
const char* to_string(GradientSource source);

struct GradientEstimate {
  ProfileTensor reduced;  // (state, |A_i| - 1) per player
  ProfileTensor lifted;   // (state, |A_i|) per player; rows sum to zero
  GradientSource source = GradientSource::Spsa;
};

struct PlayerEstimate {
  Eigen::MatrixXd reduced;
  Eigen::MatrixXd lifted;
};

// (d/delta) * value * z with d the number of entries of z, and its lift.
PlayerEstimate estimate_gradient(double value, const Eigen::MatrixXd& z, double delta);

// Gradient in reduced coordinates from the full policy gradient:
// dV/dx(s, k) = dV/dpi(k|s) - dV/dpi(last|s).
Eigen::MatrixXd reduced_gradient(const Eigen::MatrixXd& full);
ProfileTensor reduced_gradient(const ProfileTensor& full);

// U = max_i d_i * max|r_i| * ||F_i||; every estimate has norm <= U / delta.
double estimator_norm_constant(const StochasticGame& game);

// Payoffs are multilinear in the players' policies when the game has one
// state or its transitions ignore actions; smoothing then has closed form.
bool multilinear_payoffs(const StochasticGame& game);

struct SmoothedGradient {
  ProfileTensor reduced;             // grad_i V_i^delta at the shifted centre
  ProfileTensor standard_error;      // per entry; zero when computed in closed form
  bool closed_form = false;
};

// Mean of the payoff-only estimator, i.e. the gradient of the delta-averaged
// payoff (own policy over the delta-ball, opponents over delta-spheres)
// evaluated at the safety-shifted centre. Closed form for multilinear
// payoffs, otherwise Monte Carlo over exact gradients with `draws` samples.
SmoothedGradient smoothed_gradient(const StochasticGame& game, const PolicyProfile& policy, double delta,
                                   const std::vector<SafetyNet>& nets, int draws, Rng& rng);

struct BiasProbe {
  double bias = 0.0;            // || E[estimate] - grad_x V(x) ||_inf
  double standard_error = 0.0;  // largest per-entry standard error
  double displacement = 0.0;    // delta sqrt(N) + ||x_delta - x||_2, the l2 reach of the queries
};

// Bias of the payoff-only estimator in reduced coordinates. It is bounded by
// L_red * displacement, where L_red <= 2 sqrt(max|A_i| - 1) L converts the
// sup-norm Lipschitz constant of the policy gradient.
BiasProbe bias_probe(const StochasticGame& game, const PolicyProfile& policy, double delta, int draws, Rng& rng);

}  // namespace sgl
