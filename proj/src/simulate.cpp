#include "sgl/simulate.hpp"

#include "sgl/errors.hpp"

namespace sgl {

namespace {

int sample_row(const Eigen::MatrixXd& block, int row, Rng& rng) {
  const double u = uniform01(rng);
  double acc = 0.0;
  const auto last = block.cols() - 1;
  for (Eigen::Index a = 0; a < last; ++a) {
    acc += block(row, a);
    if (u < acc) return static_cast<int>(a);
  }
  return static_cast<int>(last);
}

}  // namespace

Simulator::Simulator(const StochasticGame& game, int start_state)
    : game_(&game), state_(start_state), actions_(game.num_players()) {
  if (start_state < 0 || start_state >= game.num_states()) throw DimensionError("start state out of range");
}

void Simulator::advance(const PolicyProfile& policy, Rng& rng, std::vector<double>* rewards) {
  const int n = game_->num_players();
  for (int i = 0; i < n; ++i) actions_[i] = sample_row(policy[i], state_, rng);
  const int joint = game_->encode(actions_);
  if (rewards != nullptr) {
    rewards->resize(n);
    for (int i = 0; i < n; ++i) (*rewards)[i] = game_->reward(i, state_, joint);
  }
  state_ = sample_index(game_->transition_row(state_, joint), rng);
  ++t_;
}

TrajectoryStep Simulator::step(const PolicyProfile& policy, Rng& rng) {
  TrajectoryStep out;
  out.t = t_;
  out.state = state_;
  advance(policy, rng, &out.rewards);
  out.joint_action = actions_;
  return out;
}

std::vector<TrajectoryStep> simulate(const StochasticGame& game, const PolicyProfile& policy, int start_state,
                                     long long horizon, Rng& rng) {
  if (horizon < 1) throw ContractError("horizon must be at least 1");
  validate_policy(game, policy);
  Simulator sim(game, start_state);
  std::vector<TrajectoryStep> out;
  out.reserve(static_cast<std::size_t>(horizon));
  for (long long t = 0; t < horizon; ++t) out.push_back(sim.step(policy, rng));
  return out;
}

}  // namespace sgl
