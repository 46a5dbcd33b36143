#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "sgl/chain.hpp"
#include "sgl/errors.hpp"
#include "sgl/exact.hpp"
#include "sgl/game_io.hpp"
#include "sgl/harness.hpp"
#include "sgl/simulate.hpp"

using namespace sgl;

namespace {

// Two states, two players with two actions each.
StochasticGame two_state_game() {
  std::vector<double> rewards;
  for (int i = 0; i < 2; ++i)
    for (int s = 0; s < 2; ++s)
      for (int a = 0; a < 4; ++a) rewards.push_back(0.1 * (i + 1) * (s + 1) + 0.05 * a);
  const double rows[8][2] = {{0.9, 0.1}, {0.5, 0.5}, {0.3, 0.7}, {0.2, 0.8},
                             {0.6, 0.4}, {0.1, 0.9}, {0.4, 0.6}, {0.7, 0.3}};
  std::vector<double> transitions;
  for (const auto& r : rows) transitions.insert(transitions.end(), r, r + 2);
  return StochasticGame(2, {2, 2}, std::move(rewards), std::move(transitions));
}

}  // namespace

TEST_CASE("joint actions are flattened with the last player fastest") {
  const StochasticGame g(1, {2, 3}, std::vector<double>(12, 0.0), std::vector<double>(6, 1.0));
  CHECK(g.num_joint_actions() == 6);
  CHECK(g.action_of(4, 0) == 1);
  CHECK(g.action_of(4, 1) == 1);
  const int acts[2] = {1, 2};
  CHECK(g.encode(acts) == 5);
}

TEST_CASE("game constructor rejects malformed tensors with indices") {
  CHECK_THROWS_AS(StochasticGame(1, {2}, {0.0}, {1.0, 1.0}), DimensionError);
  CHECK_THROWS_AS(StochasticGame(1, {0}, {}, {}), ConfigError);
  try {
    StochasticGame(2, {1}, {0.0, 0.0}, {0.5, 0.5, 0.6, 0.3});
    FAIL("expected a validation error");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("state 1, joint action 0") != std::string::npos);
  }
  CHECK_THROWS_AS(StochasticGame(1, {1}, {NAN}, {1.0}), ConfigError);
  CHECK_THROWS_AS(StochasticGame(2, {1}, {0.0, 0.0}, {1.2, -0.2, 0.5, 0.5}), ConfigError);
}

TEST_CASE("policy validation") {
  const StochasticGame g = two_state_game();
  PolicyProfile p = PolicyProfile::uniform(g);
  CHECK_NOTHROW(validate_policy(g, p));
  p[0](1, 0) = 0.7;
  CHECK_THROWS_AS(validate_policy(g, p), ConfigError);
  p.probs.pop_back();
  CHECK_THROWS_AS(validate_policy(g, p), DimensionError);
}

TEST_CASE("induced transition matrix") {
  const StochasticGame g = two_state_game();
  SUBCASE("uniform policies average the four joint rows") {
    const Eigen::MatrixXd P = induced_transition_matrix(g, PolicyProfile::uniform(g));
    CHECK(P(0, 0) == doctest::Approx((0.9 + 0.5 + 0.3 + 0.2) / 4).epsilon(1e-15));
    CHECK(P(1, 1) == doctest::Approx((0.4 + 0.9 + 0.6 + 0.3) / 4).epsilon(1e-15));
  }
  SUBCASE("single state gives [1]") {
    const GeneratedGame mp = generate({.kind = "matching-pennies"});
    const Eigen::MatrixXd P = induced_transition_matrix(mp.game, PolicyProfile::uniform(mp.game));
    CHECK(P.rows() == 1);
    CHECK(P(0, 0) == doctest::Approx(1.0));
  }
  SUBCASE("action-independent transitions give the kernel for every policy") {
    Rng rng(3);
    const StochasticGame h = oracle::random_game(rng, 3, {2, 3}, 0.05, true);
    for (int k = 0; k < 20; ++k) {
      const Eigen::MatrixXd P = induced_transition_matrix(h, random_policy(h, rng));
      for (int s = 0; s < 3; ++s)
        for (int t = 0; t < 3; ++t) CHECK(P(s, t) == doctest::Approx(h.transition(s, 0, t)).epsilon(1e-14));
    }
  }
  SUBCASE("rows are stochastic on 1000 random pairs") {
    Rng rng(4);
    double worst = 0.0;
    for (int k = 0; k < 1000; ++k) {
      const int states = 1 + static_cast<int>(rng() % 4);
      const StochasticGame h = oracle::random_game(rng, states, {2, 3, 2}, 0.0);
      const Eigen::MatrixXd P = induced_transition_matrix(h, random_policy(h, rng));
      worst = std::max(worst, (P.rowwise().sum().array() - 1.0).abs().maxCoeff());
      CHECK(P.minCoeff() >= 0.0);
    }
    CHECK(worst <= 1e-12);
  }
}

TEST_CASE("stationary distribution") {
  Eigen::MatrixXd P(2, 2);
  P << 0.9, 0.1, 0.2, 0.8;
  const Eigen::VectorXd p = stationary_distribution(P);
  CHECK(p(0) == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
  CHECK(p(1) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));

  Eigen::MatrixXd D(3, 3);
  D << 0.2, 0.5, 0.3, 0.5, 0.1, 0.4, 0.3, 0.4, 0.3;
  const Eigen::VectorXd u = stationary_distribution(D);
  for (int s = 0; s < 3; ++s) CHECK(u(s) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));

  CHECK_THROWS_AS(stationary_distribution(Eigen::MatrixXd::Identity(3, 3)), ErgodicityError);

  Eigen::MatrixXd periodic(2, 2);
  periodic << 0, 1, 1, 0;
  const Eigen::VectorXd q = stationary_distribution(periodic);
  CHECK(q(0) == doctest::Approx(0.5));

  const PowerIterationResult power = stationary_by_power_iteration(P);
  CHECK(power.converged);
  CHECK((power.distribution - p).lpNorm<1>() <= 1e-10);
}

TEST_CASE("stationary distribution is a fixed point of the induced chain") {
  Rng rng(5);
  for (int k = 0; k < 200; ++k) {
    const StochasticGame g = oracle::random_game(rng, 1 + static_cast<int>(rng() % 4), {2, 2}, 0.02);
    const Eigen::MatrixXd P = induced_transition_matrix(g, random_policy(g, rng));
    const Eigen::VectorXd p = stationary_distribution(P);
    CHECK((P.transpose() * p - p).lpNorm<1>() <= 1e-10);
    CHECK(p.sum() == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("mixing certificate") {
  SUBCASE("identical rows mix instantly") {
    const GeneratedGame zs = generate({.kind = "zerosum-switching"});
    Rng rng(1);
    const MixingCertificate cert = certify_mixing(zs.game, policy_sample(zs.game, rng));
    CHECK(cert.certified);
    CHECK(cert.contraction == 0.0);
    CHECK(cert.tau == 0.0);
    CHECK(cert.instant_mixing);
    CHECK(cert.label().find("instant mixing") != std::string::npos);
  }
  SUBCASE("eps floor bounds the coefficient by 1 - |S| eps") {
    Rng rng(6);
    for (int k = 0; k < 50; ++k) {
      const StochasticGame g = oracle::random_game(rng, 2, {2, 2}, 0.1);
      const MixingCertificate cert = certify_mixing(g, policy_sample(g, rng));
      CHECK(cert.certified);
      CHECK(cert.vertices_exhaustive);
      REQUIRE(cert.floor_bound.has_value());
      CHECK(*cert.floor_bound == doctest::Approx(1.0 - 2 * g.min_transition()));
      CHECK(cert.contraction <= 0.8 + 1e-12);
    }
  }
  SUBCASE("identity transitions fail and name the offending sample") {
    const StochasticGame g(2, {2}, std::vector<double>(4, 0.0), {1, 0, 1, 0, 0, 1, 0, 1});
    Rng rng(2);
    const MixingCertificate cert = certify_mixing(g, policy_sample(g, rng));
    CHECK_FALSE(cert.certified);
    CHECK_FALSE(cert.offending.empty());
    CHECK(std::isinf(cert.tau));
  }
  SUBCASE("empty sample is a contract error") {
    const GeneratedGame mp = generate({.kind = "matching-pennies"});
    CHECK_THROWS_AS(certify_mixing(mp.game, {}), ContractError);
  }
  SUBCASE("tau conventions") {
    CHECK(tau_from_contraction(0.0) == 0.0);
    CHECK(std::isinf(tau_from_contraction(1.0)));
    CHECK(tau_from_contraction(std::exp(-0.5)) == doctest::Approx(2.0));
    CHECK(mixing_decay(0.0, 0.0) == 1.0);
    CHECK(mixing_decay(3.0, 0.0) == 0.0);
    CHECK(mixing_decay(2.0, 2.0) == doctest::Approx(std::exp(-1.0)));
  }
}

TEST_CASE("simulation") {
  SUBCASE("deterministic policy and transitions give the unique path") {
    // 3-state cycle driven by action 0, single player.
    std::vector<double> trans = {0, 1, 0, 1, 0, 0, 0, 0, 1, 0, 1, 0, 1, 0, 0, 0, 0, 1};
    const StochasticGame g(3, {2}, {1, 2, 3, 4, 5, 6}, trans);
    const PolicyProfile pi = PolicyProfile::deterministic(g, {{0, 0, 0}});
    Rng rng(9);
    const auto path = simulate(g, pi, 0, 6, rng);
    const int expect[6] = {0, 1, 2, 0, 1, 2};
    for (int t = 0; t < 6; ++t) {
      CHECK(path[t].state == expect[t]);
      CHECK(path[t].t == t);
      CHECK(path[t].rewards[0] == g.reward(0, path[t].state, 0));
    }
  }
  SUBCASE("single-state game stays in state 0") {
    const GeneratedGame mp = generate({.kind = "matching-pennies"});
    Rng rng(1);
    for (const auto& step : simulate(mp.game, PolicyProfile::uniform(mp.game), 0, 100, rng)) CHECK(step.state == 0);
  }
  SUBCASE("same seed, same trajectory") {
    Rng grng(11);
    const StochasticGame g = oracle::random_game(grng, 3, {2, 2}, 0.05);
    const PolicyProfile pi = random_policy(g, grng);
    Rng a(42), b(42);
    const auto pa = simulate(g, pi, 1, 500, a);
    const auto pb = simulate(g, pi, 1, 500, b);
    for (int t = 0; t < 500; ++t) {
      CHECK(pa[t].state == pb[t].state);
      CHECK(pa[t].joint_action == pb[t].joint_action);
    }
  }
  SUBCASE("rewards match the tensor entry") {
    Rng grng(12);
    const StochasticGame g = oracle::random_game(grng, 2, {3, 2}, 0.05);
    Rng rng(1);
    for (const auto& step : simulate(g, random_policy(g, grng), 0, 200, rng)) {
      const int joint = g.encode(step.joint_action);
      for (int i = 0; i < 2; ++i) CHECK(step.rewards[i] == g.reward(i, step.state, joint));
    }
  }
  SUBCASE("long-run empirical average matches the exact value") {
    Rng grng(13);
    const StochasticGame g = oracle::random_game(grng, 3, {2, 2}, 0.1);
    const PolicyProfile pi = random_interior_policy(g, grng);
    const double exact = exact_value(g, pi).values(0);
    // Batch means over 10^6 steps for the standard error of a correlated chain.
    Simulator sim(g, 0);
    Rng rng(77);
    std::vector<double> rewards;
    const int batches = 100, per = 10000;
    double total = 0.0, total_sq = 0.0;
    for (int b = 0; b < batches; ++b) {
      double acc = 0.0;
      for (int k = 0; k < per; ++k) {
        sim.advance(pi, rng, &rewards);
        acc += rewards[0];
      }
      acc /= per;
      total += acc;
      total_sq += acc * acc;
    }
    const double mean = total / batches;
    const double se = std::sqrt((total_sq / batches - mean * mean) / (batches - 1));
    CHECK(std::abs(mean - exact) <= 3.0 * se);
  }
  SUBCASE("bad arguments") {
    const GeneratedGame mp = generate({.kind = "matching-pennies"});
    Rng rng(1);
    CHECK_THROWS_AS(simulate(mp.game, PolicyProfile::uniform(mp.game), 0, 0, rng), ContractError);
    CHECK_THROWS_AS(simulate(mp.game, PolicyProfile::uniform(mp.game), 3, 5, rng), DimensionError);
  }
}

TEST_CASE("game file round trip and errors") {
  Rng rng(21);
  const StochasticGame g = oracle::random_game(rng, 2, {2, 3}, 0.1);
  const nlohmann::json doc = game_to_json(g, {{"note", "x"}});
  const StochasticGame back = game_from_json(doc);
  CHECK(back.rewards() == g.rewards());
  CHECK(back.transitions() == g.transitions());
  CHECK(game_hash(back) == game_hash(g));

  nlohmann::json bad = doc;
  bad["transitions"][1][4] = {0.5, 0.4};
  try {
    game_from_json(bad);
    FAIL("expected a validation error");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("state 1, joint action 4") != std::string::npos);
  }
  nlohmann::json missing = doc;
  missing.erase("rewards");
  CHECK_THROWS_AS(game_from_json(missing), ConfigError);
  nlohmann::json short_rows = doc;
  short_rows["rewards"][0][0].erase(0);
  CHECK_THROWS_AS(game_from_json(short_rows), DimensionError);

  const PolicyProfile pi = random_policy(g, rng);
  const PolicyProfile pb = policy_from_json(g, policy_to_json(pi));
  CHECK(sup_norm(difference(pi.probs, pb.probs)) == 0.0);
  CHECK_NOTHROW(policy_from_json(g, tensor_to_json(pi.probs)));
}
