#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sgl/game.hpp"

namespace sgl {

// P_pi(s'|s) = sum_a P[s'|s,a] prod_i pi_i(a_i|s).
Eigen::MatrixXd induced_transition_matrix(const StochasticGame& game, const PolicyProfile& policy);

// Unique stationary distribution of a row-stochastic matrix, by a direct
// solve of [P^T - I; 1^T] p = [0; 1]. Power iteration is the fallback when
// the direct residual is not below 1e-10. Throws ErgodicityError when the
// solution is not unique or some state carries no stationary mass.
Eigen::VectorXd stationary_distribution(const Eigen::MatrixXd& transition);

struct PowerIterationResult {
  Eigen::VectorXd distribution;
  int iterations = 0;
  bool converged = false;
};

// p <- p P from the uniform vector until ||p P - p||_1 <= tol.
PowerIterationResult stationary_by_power_iteration(const Eigen::MatrixXd& transition, double tol = 1e-12,
                                                   int max_iterations = 1'000'000);

// Dobrushin ergodicity coefficient: 1/2 max_{s,s''} ||P(.|s) - P(.|s'')||_1.
// It bounds ||(w - w') P||_1 <= c ||w - w'||_1 for distributions w, w'.
// Values below 1e-13 are rounding residue and reported as 0.
double dobrushin_coefficient(const Eigen::MatrixXd& transition);

struct ChainAnalysis {
  Eigen::MatrixXd transition_matrix;
  Eigen::VectorXd stationary;
  double contraction = 0.0;
  double tau = 0.0;
};

ChainAnalysis analyze_chain(const StochasticGame& game, const PolicyProfile& policy);

// tau = -1/ln(contraction); 0 stands for "instant mixing" (contraction 0).
double tau_from_contraction(double contraction);
// e^{-t/tau} with the tau = 0 convention e^{-t/0+} = [t == 0].
double mixing_decay(double t, double tau);

struct MixingCertificate {
  bool certified = false;
  double contraction = 0.0;  // max over the sample
  double tau = 0.0;
  std::size_t worst_policy = 0;
  std::vector<std::size_t> offending;  // sample indices with contraction >= 1
  bool instant_mixing = false;
  // Every deterministic profile was in the sample. The coefficient is convex
  // in each (player, state) block, so its maximum over all of Pi sits at a
  // deterministic profile and the bound then covers the whole policy set.
  bool vertices_exhaustive = false;
  // Sufficient condition P[s'|s,a] >= eps for all entries; when eps > 0 the
  // bound contraction <= 1 - |S| eps holds for every policy.
  double epsilon_floor = 0.0;
  std::optional<double> floor_bound;

  std::string label() const;
};

MixingCertificate certify_mixing(const StochasticGame& game, const std::vector<PolicyProfile>& sample_policies);

// Uniform profile, every deterministic profile when there are at most
// `max_vertices` of them (otherwise that many random vertices), and
// `n_random` Dirichlet draws.
std::vector<PolicyProfile> policy_sample(const StochasticGame& game, Rng& rng, int n_random = 32,
                                         std::size_t max_vertices = 512);

// Number of deterministic profiles prod_i |A_i|^{|S|}, saturating at SIZE_MAX.
std::size_t count_deterministic_profiles(const StochasticGame& game);

}  // namespace sgl
