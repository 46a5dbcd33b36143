#pragma once

#include <vector>

#include "sgl/game.hpp"
#include "sgl/random.hpp"

namespace sgl {

struct TrajectoryStep {
  long long t = 0;
  int state = 0;
  std::vector<int> joint_action;  // one action per player
  std::vector<double> rewards;    // r_i(state, joint_action)
};

// Continuous play on a single trajectory. The current state persists across
// calls so callers can switch policies without resetting the game.
class Simulator {
 public:
  Simulator(const StochasticGame& game, int start_state);

  int state() const { return state_; }
  long long time() const { return t_; }

  // Draws a_i ~ pi_i(.|s) independently, pays r(s, a), moves to s' ~ P[.|s,a].
  TrajectoryStep step(const PolicyProfile& policy, Rng& rng);
  // Same as step() without materialising the step record; writes rewards.
  void advance(const PolicyProfile& policy, Rng& rng, std::vector<double>* rewards = nullptr);

 private:
  const StochasticGame* game_;
  int state_;
  long long t_ = 0;
  std::vector<int> actions_;
};

std::vector<TrajectoryStep> simulate(const StochasticGame& game, const PolicyProfile& policy, int start_state,
                                     long long horizon, Rng& rng);

}  // namespace sgl
