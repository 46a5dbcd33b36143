#pragma once

#include <optional>
#include <string>

#include <Eigen/Dense>

#include "sgl/game.hpp"

namespace sgl {

// Dual scores Y_i share the (state, action) layout of policies.
using DualScore = ProfileTensor;

enum class RegularizerKind { Entropic, Euclidean };

// Separable regularizer h_i(pi_i) = sum_s h(pi_i(.|s)) on the product of
// per-state simplices.
//   entropic:  h(x) = sum_a x_a log x_a   (0 log 0 = 0)
//   euclidean: h(x) = 1/2 ||x||_2^2
// Both are 1-strongly convex in l2 on the simplex, so modulus K = 1.
struct Regularizer {
  RegularizerKind kind = RegularizerKind::Entropic;
  double modulus = 1.0;

  static Regularizer entropic() { return {RegularizerKind::Entropic, 1.0}; }
  static Regularizer euclidean() { return {RegularizerKind::Euclidean, 1.0}; }
  // "entropy" / "euclidean"; throws ConfigError otherwise.
  static Regularizer parse(const std::string& name);
  std::string name() const;
};

// h over one player's block (states x actions). +inf when some row is not a
// probability vector.
double regularizer_value(const Regularizer& reg, const Eigen::MatrixXd& block);
double regularizer_value(const Regularizer& reg, const PolicyProfile& policy);

// Exact Euclidean projection onto the probability simplex (sort-based).
Eigen::VectorXd project_to_simplex(const Eigen::VectorXd& y);

// Q(Y) = argmax_x <Y, x> - h(x), row by row.
Eigen::MatrixXd mirror_map(const Regularizer& reg, const Eigen::MatrixXd& scores);
PolicyProfile mirror_map(const Regularizer& reg, const DualScore& scores);

// h*(Y) = max_x <Y, x> - h(x); log-sum-exp per state for the entropic kind.
double conjugate(const Regularizer& reg, const Eigen::MatrixXd& scores);
double conjugate(const Regularizer& reg, const DualScore& scores);

struct FenchelReport {
  double coupling = 0.0;            // F(p, Y) = h(p) + h*(Y) - <Y, p>
  std::optional<double> bregman;    // D(p, Q(Y)); empty when Q(Y) is on the boundary
  bool boundary = false;
  double conjugate = 0.0;           // h*(Y)
};

FenchelReport fenchel_coupling(const Regularizer& reg, const PolicyProfile& p, const DualScore& scores);

struct StepBound {
  double lhs = 0.0;  // F(p, Y')
  double rhs = 0.0;  // F(p, Y) + <Y' - Y, Q(Y) - p> + ||Y' - Y||^2 / (2K)
  bool holds = true;
};

// Three-point bound on the coupling after a dual step, slack 1e-9.
StepBound fenchel_step_bound_check(const Regularizer& reg, const PolicyProfile& p, const DualScore& before,
                                   const DualScore& after);

// A dual score with Q(Y) = policy, normalised so each state's row has zero
// mean (the additive constant is free). Entropic needs a strictly positive
// policy; throws DomainError otherwise.
DualScore dual_from_policy(const Regularizer& reg, const PolicyProfile& policy);

}  // namespace sgl
