#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "mgrid/mgrid.hpp"

using namespace mgrid;

namespace {

struct Arc {
  double reward;
  std::vector<Transition> next;
};

/// Hand-built MDP: arcs[s] lists the actions of state s.
EnumeratedMDP hand_mdp(const std::vector<std::vector<Arc>>& arcs) {
  EnumeratedMDP m;
  m.action_offset.push_back(0);
  m.transition_offset.push_back(0);
  for (std::size_t s = 0; s < arcs.size(); ++s) {
    m.states.push_back({1, static_cast<int>(s), 0, {}});
    for (const auto& arc : arcs[s]) {
      m.actions.push_back({0, 0});
      m.rewards.push_back(arc.reward);
      for (const auto& t : arc.next) m.transitions.push_back(t);
      m.transition_offset.push_back(m.transitions.size());
    }
    m.action_offset.push_back(m.actions.size());
  }
  return m;
}

OracleProblem degenerate_problem(std::vector<int> prices = {10}) {
  GridParams p;
  p.battery_capacity = 0;
  p.max_grid_buy = 4;
  p.penalty = 5;
  p.slots_per_day = 1;
  const std::size_t n = prices.size();
  return {p, Variant::AdlSharing, FiniteMarkovChain({3}, {{1.0}}),
          FiniteMarkovChain(std::move(prices), Matrix(n, std::vector<double>(n, 1.0 / static_cast<double>(n)))),
          RenewableSource{RenewableKind::None, {0.0}, 0}};
}

}  // namespace

TEST(Enumerate, DegenerateClosureIsOneSelfLoop) {
  const auto mdp = enumerate_mdp(degenerate_problem());
  ASSERT_EQ(mdp.state_count(), 1u);
  for (std::size_t k = 0; k < mdp.pair_count(); ++k) {
    const auto ts = mdp.transitions_of(k);
    ASSERT_EQ(ts.size(), 1u);
    EXPECT_EQ(ts[0].next, 0u);
    EXPECT_DOUBLE_EQ(ts[0].probability, 1.0);
  }
}

TEST(Enumerate, SecondPriceDoublesStates) {
  EXPECT_EQ(enumerate_mdp(degenerate_problem({5, 10})).state_count(),
            2 * enumerate_mdp(degenerate_problem({10})).state_count());
  const auto tiny = tiny_scenario();
  auto one_price = tiny.oracle_problem(0, Variant::AdlSharing, 5.0);
  one_price.price = FiniteMarkovChain({10}, {{1.0}});
  EXPECT_EQ(enumerate_mdp(tiny.oracle_problem(0, Variant::AdlSharing, 5.0)).state_count(),
            2 * enumerate_mdp(one_price).state_count());
}

TEST(Enumerate, RowsAreDistributions) {
  const auto tiny = tiny_scenario();
  for (Variant v : {Variant::AdlSharing, Variant::GreedyAdl, Variant::NonAdl}) {
    const auto mdp = enumerate_mdp(tiny.oracle_problem(0, v, 5.0));
    EXPECT_GT(mdp.state_count(), 1u);
    for (std::size_t k = 0; k < mdp.pair_count(); ++k) {
      double sum = 0.0;
      for (const auto& t : mdp.transitions_of(k)) {
        ASSERT_LT(t.next, mdp.state_count());
        sum += t.probability;
      }
      ASSERT_NEAR(sum, 1.0, 1e-10);
    }
    // Stored rewards are the domain rewards of the stored actions.
    for (std::size_t s = 0; s < mdp.state_count(); ++s)
      for (std::size_t a = 0; a < mdp.action_count(s); ++a)
        ASSERT_DOUBLE_EQ(mdp.rewards[mdp.action_offset[s] + a],
                         reward(mdp.states[s], mdp.actions_of(s)[a], tiny.grid_params(0, 5.0), v));
  }
}

TEST(Enumerate, MemoryDemandAddsHiddenIndex) {
  auto cfg = tiny_scenario();
  cfg.demand.memoryless = false;
  const auto mdp = enumerate_mdp(cfg.oracle_problem(0, Variant::AdlSharing, 5.0));
  EXPECT_FALSE(mdp.demand_observed);
  for (int h : mdp.hidden_demand) EXPECT_GE(h, 0);
}

TEST(Enumerate, SizeBoundReportsEstimate) {
  const auto cfg = default_scenario();
  try {
    enumerate_mdp(cfg.oracle_problem(0, Variant::AdlSharing, 0.0), 1000);
    FAIL() << "expected SizeError";
  } catch (const SizeError& e) {
    EXPECT_GT(e.estimate(), 1000u);
  }
}

TEST(Rvi, ConstantChain) {
  const auto m = hand_mdp({{{7.0, {{0, 1.0}}}}});
  const auto r = relative_value_iteration(m);
  EXPECT_TRUE(r.converged);
  EXPECT_NEAR(r.gain, 7.0, 1e-8);
}

TEST(Rvi, TwoStateCycle) {
  const auto m = hand_mdp({{{0.0, {{1, 1.0}}}}, {{10.0, {{0, 1.0}}}}});
  const auto r = relative_value_iteration(m);
  EXPECT_TRUE(r.converged);
  EXPECT_NEAR(r.gain, 5.0, 1e-8);
  EXPECT_NEAR(evaluate_policy(m, std::vector<std::size_t>{0, 0}).gain, 5.0, 1e-12);
}

TEST(EvaluatePolicy, WorsePolicyHasLowerGain) {
  // State 1 may return for 10 or for 4.
  const auto m = hand_mdp({{{0.0, {{1, 1.0}}}}, {{4.0, {{0, 1.0}}}, {10.0, {{0, 1.0}}}}});
  const auto r = relative_value_iteration(m);
  EXPECT_EQ(r.policy[1], 1u);
  EXPECT_NEAR(r.gain, 5.0, 1e-8);
  EXPECT_NEAR(evaluate_policy(m, std::vector<std::size_t>{0, 0}).gain, 2.0, 1e-12);
}

TEST(EvaluatePolicy, MultichainFlagged) {
  const auto m = hand_mdp({{{1.0, {{0, 1.0}}}}, {{2.0, {{1, 1.0}}}}});
  const auto e = evaluate_policy(m, std::vector<std::size_t>{0, 0});
  EXPECT_TRUE(e.multichain);
  EXPECT_THROW(evaluate_policy(m, std::vector<std::size_t>{0}), ConfigError);
  EXPECT_THROW(evaluate_policy(m, std::vector<std::size_t>{1, 0}), ConfigError);
}

TEST(Rvi, TinyInstanceSelfConsistent) {
  const auto cfg = tiny_scenario();
  const auto mdp = enumerate_mdp(cfg.oracle_problem(0, Variant::AdlSharing, 5.0));
  const auto r = relative_value_iteration(mdp);
  ASSERT_TRUE(r.converged);
  const auto e = evaluate_policy(mdp, r.policy);
  EXPECT_FALSE(e.multichain);
  EXPECT_NEAR(e.gain, r.gain, 1e-7);
  EXPECT_NEAR(std::accumulate(e.stationary.begin(), e.stationary.end(), 0.0), 1.0, 1e-9);
}

TEST(Rvi, NoDeterministicPolicyBeatsOptimal) {
  const auto cfg = tiny_scenario();
  for (Variant v : {Variant::AdlSharing, Variant::GreedyAdl, Variant::NonAdl}) {
    const auto mdp = enumerate_mdp(cfg.oracle_problem(0, v, 5.0));
    const auto r = relative_value_iteration(mdp);
    Rng rng(21);
    for (int k = 0; k < 100; ++k) {
      std::vector<std::size_t> policy(mdp.state_count());
      for (std::size_t s = 0; s < policy.size(); ++s) policy[s] = uniform_index(rng, mdp.action_count(s));
      const auto e = evaluate_policy(mdp, policy);
      if (e.multichain) continue;
      ASSERT_LE(e.gain, r.gain + 1e-7);
    }
  }
}

TEST(Rvi, IndependentOfInitialization) {
  const auto cfg = tiny_scenario();
  const auto mdp = enumerate_mdp(cfg.oracle_problem(0, Variant::AdlSharing, 5.0));
  Rng rng(22);
  std::vector<double> gains;
  for (int k = 0; k < 2; ++k) {
    RviOptions opt;
    opt.initial_values.resize(mdp.state_count());
    for (auto& x : opt.initial_values) x = 100.0 * (uniform01(rng) - 0.5);
    gains.push_back(relative_value_iteration(mdp, opt).gain);
  }
  EXPECT_NEAR(gains[0], gains[1], 2 * RviOptions{}.tol);
  EXPECT_NEAR(gains[0], relative_value_iteration(mdp).gain, 2 * RviOptions{}.tol);
}

TEST(Rvi, SimulationReproducesGain) {
  const auto cfg = tiny_scenario();
  const auto problem = cfg.oracle_problem(0, Variant::AdlSharing, 5.0);
  const auto mdp = enumerate_mdp(problem);
  const auto r = relative_value_iteration(mdp);
  const double simulated = simulate_policy_gain(problem, mdp, r.policy, 10'000'000, 31);
  EXPECT_LE(std::abs(simulated - r.gain), 0.005 * std::abs(r.gain));
}
