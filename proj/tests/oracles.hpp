#pragma once

// Independent reference computations for the test suites. Everything here
// is written with plain loops over the game tensors and deliberately avoids
// the library's chain, exact-analysis and estimator routines, so agreement
// between the two is evidence rather than tautology.

#include <cmath>
#include <vector>

#include "sgl/game.hpp"
#include "sgl/random.hpp"

namespace oracle {

using Matrix = std::vector<std::vector<double>>;
using Vector = std::vector<double>;

// Actions of every player inside a joint index (last player fastest),
// decoded by hand.
inline std::vector<int> decode(const sgl::StochasticGame& g, int joint) {
  std::vector<int> out(g.num_players());
  for (int i = g.num_players() - 1; i >= 0; --i) {
    out[i] = joint % g.num_actions(i);
    joint /= g.num_actions(i);
  }
  return out;
}

inline double joint_prob(const sgl::StochasticGame& g, const sgl::PolicyProfile& pi, int s, int joint) {
  const auto acts = decode(g, joint);
  double w = 1.0;
  for (int i = 0; i < g.num_players(); ++i) w *= pi.probs[i](s, acts[i]);
  return w;
}

inline Matrix induced(const sgl::StochasticGame& g, const sgl::PolicyProfile& pi) {
  const int n = g.num_states();
  Matrix P(n, Vector(n, 0.0));
  for (int s = 0; s < n; ++s)
    for (int a = 0; a < g.num_joint_actions(); ++a) {
      const double w = joint_prob(g, pi, s, a);
      for (int t = 0; t < n; ++t) P[s][t] += w * g.transition(s, a, t);
    }
  return P;
}

inline Vector row_times(const Vector& v, const Matrix& P) {
  Vector out(P.size(), 0.0);
  for (std::size_t s = 0; s < P.size(); ++s)
    for (std::size_t t = 0; t < P.size(); ++t) out[t] += v[s] * P[s][t];
  return out;
}

inline Matrix matmul(const Matrix& A, const Matrix& B) {
  const std::size_t n = A.size();
  Matrix C(n, Vector(n, 0.0));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < n; ++k)
      for (std::size_t j = 0; j < n; ++j) C[i][j] += A[i][k] * B[k][j];
  return C;
}

// Stationary distribution by iterating the lazy chain (I + P)/2, which has
// the same fixed point and is aperiodic.
inline Vector stationary(const Matrix& P) {
  const std::size_t n = P.size();
  Vector p(n, 1.0 / n);
  for (int it = 0; it < 200000; ++it) {
    Vector q = row_times(p, P);
    double total = 0.0;
    for (std::size_t s = 0; s < n; ++s) total += (q[s] = 0.5 * (q[s] + p[s]));
    double change = 0.0;
    for (std::size_t s = 0; s < n; ++s) {
      q[s] /= total;
      change += std::abs(q[s] - p[s]);
    }
    p = q;
    if (change < 1e-15) break;
  }
  return p;
}

inline Vector expected_reward(const sgl::StochasticGame& g, const sgl::PolicyProfile& pi, int player) {
  Vector R(g.num_states(), 0.0);
  for (int s = 0; s < g.num_states(); ++s)
    for (int a = 0; a < g.num_joint_actions(); ++a) R[s] += joint_prob(g, pi, s, a) * g.reward(player, s, a);
  return R;
}

inline double value(const sgl::StochasticGame& g, const sgl::PolicyProfile& pi, int player) {
  const Vector p = stationary(induced(g, pi));
  const Vector R = expected_reward(g, pi, player);
  double v = 0.0;
  for (std::size_t s = 0; s < p.size(); ++s) v += p[s] * R[s];
  return v;
}

// sum_{t=0}^{horizon} E[r_i(s^t, a^t) - V_i | s^0 = s, a^0 = a] by exact
// forward recursion of the state distribution.
inline double series_advantage(const sgl::StochasticGame& g, const sgl::PolicyProfile& pi, int player, int s, int a,
                               int horizon) {
  const Matrix P = induced(g, pi);
  const Vector R = expected_reward(g, pi, player);
  const Vector p = stationary(P);
  double V = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) V += p[k] * R[k];
  double total = g.reward(player, s, a) - V;
  Vector dist(g.num_states());
  for (int t = 0; t < g.num_states(); ++t) dist[t] = g.transition(s, a, t);
  for (int step = 1; step <= horizon; ++step) {
    for (int t = 0; t < g.num_states(); ++t) total += dist[t] * (R[t] - V);
    dist = row_times(dist, P);
  }
  return total;
}

// Central differences of V_i along e_k - e_last in state s; blocks are
// (state, |A_i| - 1).
inline std::vector<Matrix> tangent_fd(const sgl::StochasticGame& g, const sgl::PolicyProfile& pi, double h) {
  std::vector<Matrix> out;
  for (int i = 0; i < g.num_players(); ++i) {
    const int last = g.num_actions(i) - 1;
    Matrix block(g.num_states(), Vector(last, 0.0));
    for (int s = 0; s < g.num_states(); ++s)
      for (int k = 0; k < last; ++k) {
        sgl::PolicyProfile up = pi, down = pi;
        up.probs[i](s, k) += h;
        up.probs[i](s, last) -= h;
        down.probs[i](s, k) -= h;
        down.probs[i](s, last) += h;
        block[s][k] = (value(g, up, i) - value(g, down, i)) / (2.0 * h);
      }
    out.push_back(block);
  }
  return out;
}

// max over player i's deterministic stationary policies of V_i, others fixed.
inline double best_response_value(const sgl::StochasticGame& g, const sgl::PolicyProfile& pi, int player) {
  const int m = g.num_actions(player);
  const int n = g.num_states();
  long total = 1;
  for (int s = 0; s < n; ++s) total *= m;
  double best = -1e300;
  for (long code = 0; code < total; ++code) {
    sgl::PolicyProfile dev = pi;
    long rest = code;
    dev.probs[player].setZero();
    for (int s = 0; s < n; ++s) {
      dev.probs[player](s, rest % m) = 1.0;
      rest /= m;
    }
    best = std::max(best, value(g, dev, player));
  }
  return best;
}

inline double l1(const Vector& v) {
  double t = 0.0;
  for (double x : v) t += std::abs(x);
  return t;
}

// Random game whose transitions are at least `eps` everywhere.
inline sgl::StochasticGame random_game(sgl::Rng& rng, int states, std::vector<int> actions, double eps,
                                       bool action_independent = false) {
  int joint = 1;
  for (int a : actions) joint *= a;
  const int players = static_cast<int>(actions.size());
  std::vector<double> rewards;
  for (int i = 0; i < players; ++i)
    for (int s = 0; s < states; ++s)
      for (int a = 0; a < joint; ++a) rewards.push_back(sgl::uniform01(rng));
  std::vector<double> transitions;
  Matrix kernel(states, Vector(states));
  for (int s = 0; s < states; ++s) {
    for (int a = 0; a < joint; ++a) {
      if (a == 0 || !action_independent) {
        double tot = 0.0;
        for (auto& v : kernel[s]) tot += (v = sgl::uniform01(rng) + 1e-9);
        for (auto& v : kernel[s]) v = eps + (1.0 - states * eps) * v / tot;
      }
      for (double v : kernel[s]) transitions.push_back(v);
    }
  }
  return sgl::StochasticGame(states, std::move(actions), std::move(rewards), std::move(transitions));
}

// Single-state game from two payoff tables r_0(a_0, a_1), r_1(a_0, a_1).
inline sgl::StochasticGame matrix_game(const Matrix& r0, const Matrix& r1) {
  const int m0 = static_cast<int>(r0.size());
  const int m1 = static_cast<int>(r0[0].size());
  std::vector<double> rewards;
  for (const Matrix* r : {&r0, &r1})
    for (int a = 0; a < m0; ++a)
      for (int b = 0; b < m1; ++b) rewards.push_back((*r)[a][b]);
  return sgl::StochasticGame(1, {m0, m1}, std::move(rewards), std::vector<double>(m0 * m1, 1.0));
}

}  // namespace oracle
