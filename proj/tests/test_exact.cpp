#include <doctest.h>

#include <array>
#include <cmath>

#include "oracles.hpp"
#include "sgl/chain.hpp"
#include "sgl/errors.hpp"
#include "sgl/exact.hpp"
#include "sgl/harness.hpp"

using namespace sgl;

namespace {

PolicyProfile two_by_two(const StochasticGame& g, double x, double y) {
  PolicyProfile pi = PolicyProfile::uniform(g);
  pi[0](0, 0) = x;
  pi[0](0, 1) = 1.0 - x;
  pi[1](0, 0) = y;
  pi[1](0, 1) = 1.0 - y;
  return pi;
}

StochasticGame zero_reward_game() {
  Rng rng(1);
  const StochasticGame g = oracle::random_game(rng, 2, {2, 2}, 0.1);
  return StochasticGame(2, {2, 2}, std::vector<double>(g.rewards().size(), 0.0), g.transitions());
}

}  // namespace

TEST_CASE("exact value") {
  SUBCASE("single state is the matrix-game payoff") {
    const StochasticGame g = oracle::matrix_game({{1, -0.5}, {0.25, 0.75}}, {{0.2, 0.9}, {-0.4, 0.6}});
    const PolicyProfile pi = two_by_two(g, 0.7, 0.35);
    const ValueReport v = exact_value(g, pi);
    const double v0 = 0.7 * 0.35 * 1 + 0.7 * 0.65 * -0.5 + 0.3 * 0.35 * 0.25 + 0.3 * 0.65 * 0.75;
    const double v1 = 0.7 * 0.35 * 0.2 + 0.7 * 0.65 * 0.9 + 0.3 * 0.35 * -0.4 + 0.3 * 0.65 * 0.6;
    CHECK(v.values(0) == doctest::Approx(v0).epsilon(1e-13));
    CHECK(v.values(1) == doctest::Approx(v1).epsilon(1e-13));
  }
  SUBCASE("action-independent transitions with stationary (0.5, 0.5)") {
    // Stage 0 is matching pennies, stage 1 a coordination game; kernel rows
    // (0.3, 0.7) and (0.7, 0.3) have stationary distribution (0.5, 0.5).
    const double stage[2][2][4] = {{{1, -1, -1, 1}, {-1, 1, 1, -1}}, {{2, 0, 0, 1}, {2, 0, 0, 1}}};
    std::vector<double> rewards;
    for (int i = 0; i < 2; ++i)
      for (int s = 0; s < 2; ++s)
        for (int a = 0; a < 4; ++a) rewards.push_back(stage[s][i][a]);
    std::vector<double> trans;
    for (int a = 0; a < 4; ++a) trans.insert(trans.end(), {0.3, 0.7});
    for (int a = 0; a < 4; ++a) trans.insert(trans.end(), {0.7, 0.3});
    const StochasticGame g(2, {2, 2}, rewards, trans);
    PolicyProfile pi = PolicyProfile::uniform(g);
    pi[0].row(0) << 0.8, 0.2;
    pi[1].row(0) << 0.4, 0.6;
    pi[0].row(1) << 0.6, 0.4;
    pi[1].row(1) << 0.1, 0.9;
    const auto stage_payoff = [&](int s, int i) {
      double v = 0.0;
      for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b) v += pi[0](s, a) * pi[1](s, b) * stage[s][i][2 * a + b];
      return v;
    };
    const ValueReport v = exact_value(g, pi);
    for (int i = 0; i < 2; ++i)
      CHECK(v.values(i) == doctest::Approx(0.5 * stage_payoff(0, i) + 0.5 * stage_payoff(1, i)).epsilon(1e-12));
  }
  SUBCASE("value equals p . R and agrees with the oracle") {
    Rng rng(2);
    for (int k = 0; k < 100; ++k) {
      const StochasticGame g = oracle::random_game(rng, 3, {2, 3}, 0.02);
      const PolicyProfile pi = random_policy(g, rng);
      const ValueReport v = exact_value(g, pi);
      for (int i = 0; i < 2; ++i) {
        CHECK(v.values(i) == doctest::Approx(v.stationary.dot(v.expected_reward[i])).epsilon(1e-12));
        CHECK(std::abs(v.values(i) - oracle::value(g, pi, i)) <= 1e-10);
      }
    }
  }
  SUBCASE("non-ergodic chain propagates the error") {
    const StochasticGame g(2, {1}, {0.0, 0.0}, {1, 0, 0, 1});
    CHECK_THROWS_AS(exact_value(g, PolicyProfile::uniform(g)), ErgodicityError);
  }
}

TEST_CASE("advantages") {
  SUBCASE("single state: adv = r - V") {
    const StochasticGame g = oracle::matrix_game({{3, 0}, {5, 1}}, {{3, 5}, {0, 1}});
    const PolicyProfile pi = two_by_two(g, 0.25, 0.6);
    const AdvantageTable t = advantages(g, pi);
    for (int i = 0; i < 2; ++i)
      for (int a = 0; a < 4; ++a) CHECK(t.adv[i](0, a) == doctest::Approx(g.reward(i, 0, a) - t.values(i)).epsilon(1e-12));
  }
  SUBCASE("invariants, series oracle and the advantage bound on random games") {
    Rng rng(3);
    double worst_series = 0.0, worst_mean = 0.0, worst_bound_ratio = 0.0;
    for (int k = 0; k < 60; ++k) {
      const StochasticGame g = oracle::random_game(rng, 3, {2, 2}, 0.05);
      const PolicyProfile pi = random_policy(g, rng);
      const AdvantageTable t = advantages(g, pi);
      Rng crng(k);
      const double tau = certify_mixing(g, policy_sample(g, crng)).tau;
      for (int i = 0; i < 2; ++i) {
        double mean = 0.0;
        for (int s = 0; s < 3; ++s) {
          for (int a = 0; a < 2; ++a) {
            double avg = 0.0;
            for (int joint = 0; joint < 4; ++joint)
              if (g.action_of(joint, i) == a) avg += pi[1 - i](s, g.action_of(joint, 1 - i)) * t.adv[i](s, joint);
            CHECK(std::abs(avg - t.avg_adv[i](s, a)) <= 1e-10);
            mean += t.stationary(s) * pi[i](s, a) * t.avg_adv[i](s, a);
          }
          for (int joint = 0; joint < 4; ++joint) {
            worst_series =
                std::max(worst_series, std::abs(oracle::series_advantage(g, pi, i, s, joint, 200) - t.adv[i](s, joint)));
            worst_bound_ratio = std::max(worst_bound_ratio, std::abs(t.adv[i](s, joint)) / advantage_bound(g, i, tau));
          }
        }
        worst_mean = std::max(worst_mean, std::abs(mean));
      }
    }
    CHECK(worst_series <= 1e-6);
    CHECK(worst_mean <= 1e-8);
    CHECK(worst_bound_ratio <= 1.0);
  }
}

TEST_CASE("exact gradient") {
  SUBCASE("single-state entries are the conditional payoff minus V") {
    const StochasticGame g = oracle::matrix_game({{1, -0.5}, {0.25, 0.75}}, {{0.2, 0.9}, {-0.4, 0.6}});
    const PolicyProfile pi = two_by_two(g, 0.7, 0.35);
    const ProfileTensor grad = exact_gradient(g, pi);
    const double V0 = exact_value(g, pi).values(0);
    CHECK(grad[0](0, 0) == doctest::Approx(0.35 * 1 + 0.65 * -0.5 - V0).epsilon(1e-12));
    CHECK(grad[0](0, 1) == doctest::Approx(0.35 * 0.25 + 0.65 * 0.75 - V0).epsilon(1e-12));
  }
  SUBCASE("indifference gives equal entries") {
    const GeneratedGame mp = generate({.kind = "matching-pennies"});
    const ProfileTensor grad = exact_gradient(mp.game, PolicyProfile::uniform(mp.game));
    CHECK(grad[0](0, 0) == doctest::Approx(grad[0](0, 1)));
    CHECK(grad[1](0, 0) == doctest::Approx(grad[1](0, 1)));
  }
  SUBCASE("random 2-state games match the finite-difference oracle") {
    Rng rng(4);
    for (int k = 0; k < 30; ++k) {
      const StochasticGame g = oracle::random_game(rng, 2, {2, 3}, 0.05);
      const PolicyProfile pi = random_interior_policy(g, rng);
      const ProfileTensor grad = exact_gradient(g, pi);
      const auto fd = oracle::tangent_fd(g, pi, 1e-5);
      double err = 0.0, scale = 0.0;
      for (int i = 0; i < 2; ++i) {
        const int last = g.num_actions(i) - 1;
        for (int s = 0; s < 2; ++s)
          for (int a = 0; a < last; ++a) {
            err = std::max(err, std::abs(grad[i](s, a) - grad[i](s, last) - fd[i][s][a]));
            scale = std::max(scale, std::abs(fd[i][s][a]));
          }
      }
      CHECK(err <= 1e-4 * scale);
    }
  }
  SUBCASE("library finite differences agree with the exact reduced gradient") {
    Rng rng(5);
    const StochasticGame g = oracle::random_game(rng, 2, {3, 2}, 0.05);
    const PolicyProfile pi = random_interior_policy(g, rng);
    const ProfileTensor fd = finite_difference_reduced_gradient(g, pi);
    const ProfileTensor grad = exact_gradient(g, pi);
    for (int i = 0; i < 2; ++i) {
      const int last = g.num_actions(i) - 1;
      for (int s = 0; s < 2; ++s)
        for (int a = 0; a < last; ++a) CHECK(std::abs(fd[i](s, a) - (grad[i](s, a) - grad[i](s, last))) <= 1e-7);
    }
  }
}

TEST_CASE("gradient dominance") {
  SUBCASE("zero deviation") {
    Rng rng(6);
    const StochasticGame g = oracle::random_game(rng, 2, {2, 2}, 0.1);
    const PolicyProfile pi = random_policy(g, rng);
    const DominanceCheck d = check_gradient_dominance(g, pi, pi, 1.0);
    CHECK(d.lhs == 0.0);
    CHECK(d.rhs == 0.0);
    CHECK(d.holds);
  }
  SUBCASE("zero-reward game") {
    const StochasticGame g = zero_reward_game();
    Rng rng(7);
    const PolicyProfile pi = random_policy(g, rng);
    const PolicyProfile dev = with_player(pi, 0, random_policy(g, rng)[0]);
    const DominanceCheck d = check_gradient_dominance(g, pi, dev, 1.0);
    CHECK(d.lhs == doctest::Approx(0.0));
    CHECK(d.rhs == doctest::Approx(0.0));
    CHECK(d.holds);
  }
  SUBCASE("multi-player deviation is a contract error") {
    Rng rng(8);
    const StochasticGame g = oracle::random_game(rng, 2, {2, 2}, 0.1);
    CHECK_THROWS_AS(check_gradient_dominance(g, random_policy(g, rng), random_policy(g, rng), 1.0), ContractError);
  }
  SUBCASE("holds on action-independent games; general games are logged") {
    Rng rng(9);
    int violations_general = 0, trials = 0, improving = 0, improving_violations = 0;
    for (int k = 0; k < 200; ++k) {
      const bool independent = k % 2 == 0;
      const StochasticGame g = oracle::random_game(rng, 2, {2, 2}, 0.1, independent);
      const PolicyProfile pi = random_policy(g, rng);
      const int player = k % 2 == 0 ? 0 : 1;
      const PolicyProfile dev = with_player(pi, player, random_policy(g, rng)[player]);
      std::vector<PolicyProfile> sample = {pi, dev};
      for (int j = 0; j < 30; ++j) sample.push_back(random_policy(g, rng));
      const double cg = estimate_mismatch(g, sample).value;
      const DominanceCheck d = check_gradient_dominance(g, pi, dev, cg);
      if (independent) {
        CHECK(cg == doctest::Approx(1.0));
        CHECK(d.holds);
      } else {
        ++trials;
        if (!d.holds) ++violations_general;
        if (d.lhs > 0.0) {
          ++improving;
          if (d.lhs > d.rhs + 1e-8) ++improving_violations;
        }
      }
    }
    MESSAGE("general-transition deviations violating the sampled-C_G inequality: " << violations_general << "/" << trials
                                                                                  << "; improving deviations violating it: "
                                                                                  << improving_violations << "/" << improving);
    CHECK(improving_violations == 0);
  }
}

TEST_CASE("mismatch coefficient") {
  Rng rng(10);
  SUBCASE("action-independent transitions give 1") {
    const StochasticGame g = oracle::random_game(rng, 3, {2, 2}, 0.05, true);
    std::vector<PolicyProfile> sample;
    for (int k = 0; k < 20; ++k) sample.push_back(random_policy(g, rng));
    CHECK(estimate_mismatch(g, sample).value == doctest::Approx(1.0).epsilon(1e-10));
  }
  SUBCASE("single state gives 1") {
    const GeneratedGame mp = generate({.kind = "matching-pennies"});
    std::vector<PolicyProfile> sample;
    for (int k = 0; k < 20; ++k) sample.push_back(random_policy(mp.game, rng));
    CHECK(estimate_mismatch(mp.game, sample).value == doctest::Approx(1.0));
  }
  SUBCASE("eps floor 0.1 bounds the 2-state estimate by 9") {
    for (int k = 0; k < 20; ++k) {
      const StochasticGame g = oracle::random_game(rng, 2, {2, 2}, 0.1);
      std::vector<PolicyProfile> sample;
      for (int j = 0; j < 40; ++j) sample.push_back(random_policy(g, rng));
      CHECK(estimate_mismatch(g, sample).value <= 9.0 + 1e-9);
    }
  }
  SUBCASE("needs two samples") {
    const GeneratedGame mp = generate({.kind = "matching-pennies"});
    CHECK_THROWS_AS(estimate_mismatch(mp.game, {PolicyProfile::uniform(mp.game)}), ContractError);
  }
}

TEST_CASE("best response and Nash gap") {
  SUBCASE("matching pennies uniform is an exact equilibrium") {
    const GeneratedGame mp = generate({.kind = "matching-pennies"});
    CHECK(nash_gap(mp.game, PolicyProfile::uniform(mp.game)).max_gap <= 1e-8);
  }
  SUBCASE("strictly dominant action played with probability one") {
    const StochasticGame g = oracle::matrix_game({{2, 3}, {0, 1}}, {{0, 0}, {0, 0}});
    const PolicyProfile pi = two_by_two(g, 1.0, 0.4);
    CHECK(nash_gap(g, pi).gaps(0) == doctest::Approx(0.0).scale(1.0).epsilon(1e-12));
  }
  SUBCASE("random 2-state games match the enumeration oracle") {
    Rng rng(11);
    for (int k = 0; k < 50; ++k) {
      const StochasticGame g = oracle::random_game(rng, 2, {3, 2}, 0.05);
      const PolicyProfile pi = random_policy(g, rng);
      const NashGapReport report = nash_gap(g, pi);
      CHECK_FALSE(report.flagged);
      for (int i = 0; i < 2; ++i) {
        const double expect = oracle::best_response_value(g, pi, i) - oracle::value(g, pi, i);
        CHECK(std::abs(report.gaps(i) - std::max(0.0, expect)) <= 1e-9);
        CHECK(std::abs(best_response(g, pi, i).value - oracle::best_response_value(g, pi, i)) <= 1e-9);
      }
    }
  }
  SUBCASE("frozen-opponent MDP rows are stochastic") {
    Rng rng(12);
    const StochasticGame g = oracle::random_game(rng, 3, {2, 2, 2}, 0.05);
    const FrozenMdp mdp = frozen_opponent_mdp(g, random_policy(g, rng), 1);
    for (const auto& P : mdp.transition) CHECK((P.rowwise().sum().array() - 1.0).abs().maxCoeff() <= 1e-12);
  }
}

TEST_CASE("first-order residual vanishes exactly at equilibria of single-state games") {
  Rng rng(13);
  int equilibria = 0, non_equilibria = 0;
  for (int k = 0; k < 100; ++k) {
    oracle::Matrix r0(2, oracle::Vector(2)), r1(2, oracle::Vector(2));
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b) {
        r0[a][b] = uniform01(rng);
        r1[a][b] = uniform01(rng);
      }
    const StochasticGame g = oracle::matrix_game(r0, r1);
    // Pure profiles, fully enumerable, plus one random mixed profile.
    std::vector<PolicyProfile> candidates;
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b) candidates.push_back(two_by_two(g, a == 0 ? 1.0 : 0.0, b == 0 ? 1.0 : 0.0));
    candidates.push_back(random_policy(g, rng));
    // Interior equilibrium by indifference when it exists.
    const double dx = r1[0][0] - r1[0][1] - r1[1][0] + r1[1][1];
    const double dy = r0[0][0] - r0[0][1] - r0[1][0] + r0[1][1];
    if (std::abs(dx) > 1e-3 && std::abs(dy) > 1e-3) {
      const double x = (r1[1][1] - r1[1][0]) / dx;
      const double y = (r0[1][1] - r0[0][1]) / dy;
      if (x > 0 && x < 1 && y > 0 && y < 1) candidates.push_back(two_by_two(g, x, y));
    }
    for (const PolicyProfile& pi : candidates) {
      const bool stationary = first_order_residual(g, pi) <= 1e-8;
      const bool nash = nash_gap(g, pi).max_gap <= 1e-6;
      CHECK(stationary == nash);
      (nash ? equilibria : non_equilibria)++;
    }
  }
  CHECK(equilibria > 0);
  CHECK(non_equilibria > 0);
}

TEST_CASE("Lipschitz probe") {
  SUBCASE("zero-reward game gives 0") {
    Rng rng(14);
    CHECK(lipschitz_probe(zero_reward_game(), 50, rng) == 0.0);
  }
  SUBCASE("identical pair is degenerate") {
    const GeneratedGame mp = generate({.kind = "matching-pennies"});
    const PolicyProfile u = PolicyProfile::uniform(mp.game);
    try {
      lipschitz_probe(mp.game, {{u, u}});
      FAIL("expected an error");
    } catch (const ContractError& e) {
      CHECK(std::string(e.what()).find("degenerate pair") != std::string::npos);
    }
  }
  SUBCASE("single-state 2x2 game matches a 50x50 grid search") {
    const oracle::Matrix r0 = {{0.9, 0.1}, {0.3, 0.6}}, r1 = {{0.2, 0.8}, {0.7, 0.05}};
    const StochasticGame g = oracle::matrix_game(r0, r1);
    // Hand-derived gradient of the bilinear values on the grid.
    const int n = 50;
    std::vector<std::array<double, 6>> pts;
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b) {
        const double x = a / double(n - 1), y = b / double(n - 1);
        const double u0 = y * r0[0][0] + (1 - y) * r0[0][1], u1 = y * r0[1][0] + (1 - y) * r0[1][1];
        const double w0 = x * r1[0][0] + (1 - x) * r1[1][0], w1 = x * r1[0][1] + (1 - x) * r1[1][1];
        const double V0 = x * u0 + (1 - x) * u1, V1 = y * w0 + (1 - y) * w1;
        pts.push_back({x, y, u0 - V0, u1 - V0, w0 - V1, w1 - V1});
      }
    double grid = 0.0;
    for (std::size_t p = 0; p < pts.size(); ++p)
      for (std::size_t q = p + 1; q < pts.size(); ++q) {
        const double dpi = std::max(std::abs(pts[p][0] - pts[q][0]), std::abs(pts[p][1] - pts[q][1]));
        double dv = 0.0;
        for (int c = 2; c < 6; ++c) dv = std::max(dv, std::abs(pts[p][c] - pts[q][c]));
        grid = std::max(grid, dv / dpi);
      }
    Rng rng(15);
    const double probe = lipschitz_probe(g, 4000, rng);
    CHECK(probe <= grid * 1.05);
    CHECK(probe >= grid * 0.8);
  }
}
