#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "mgrid/learner.hpp"
#include "mgrid/oracle.hpp"

namespace mgrid {

/// How far a trained table is from the exact solution of the same model.
struct OracleComparison {
  std::size_t states = 0;
  std::size_t pairs = 0;
  bool rvi_converged = false;
  double oracle_gain = 0.0;
  double learner_f = 0.0;  // f(Q) = max_u Q(s_ref, u)
  double relative_error = 0.0;
  double learner_policy_gain = 0.0;  // exact gain of the learner's greedy policy

  std::size_t compared_states = 0;  // learner states with at least min_visits visits
  std::size_t exact_matches = 0;    // greedy action in the oracle's optimal set
  std::size_t near_optimal = 0;     // greedy action's regret within regret_tolerance
  double regret_tolerance = 0.0;
  double max_regret = 0.0;          // worst oracle action-value shortfall of a greedy action
};

/// Compares the learner's greedy choices with the oracle's action values on
/// every state visited at least `min_visits` times. An action's regret is
/// max_b q*(s,b) - q*(s,a) with q* the oracle's r + P h.
inline OracleComparison compare_with_oracle(const EnumeratedMDP& mdp, const RviResult& rvi, const QTable& table,
                                            std::uint64_t min_visits, double regret_tolerance) {
  OracleComparison out;
  out.states = mdp.state_count();
  out.pairs = mdp.pair_count();
  out.rvi_converged = rvi.converged;
  out.oracle_gain = rvi.gain;
  out.learner_f = table.reference_value();
  out.relative_error = std::abs(out.learner_f - out.oracle_gain) / std::max(std::abs(out.oracle_gain), 1e-300);
  out.regret_tolerance = regret_tolerance;

  // Learner's greedy policy over the whole enumerated model; states it never
  // saw get its zero-row tie-break, action 0.
  std::vector<std::size_t> policy(mdp.state_count(), 0);
  for (std::size_t m = 0; m < mdp.state_count(); ++m)
    if (auto s = table.find(mdp.states[m])) policy[m] = table.greedy(*s);
  out.learner_policy_gain = evaluate_policy(mdp, policy).gain;

  for (std::size_t s = 0; s < table.state_count(); ++s) {
    std::uint64_t visits = 0;
    for (auto n : table.visits(s)) visits += n;
    if (visits < min_visits) continue;
    const std::size_t a = table.greedy(s);
    bool exact = true;
    double regret = 0.0;
    bool seen = false;
    for (std::size_t m = 0; m < mdp.state_count(); ++m) {
      if (!(mdp.states[m] == table.state(s))) continue;
      seen = true;
      const auto& opt = rvi.optimal_actions[m];
      exact = exact && std::find(opt.begin(), opt.end(), a) != opt.end();
      const std::size_t first = mdp.action_offset[m];
      const double best = rvi.action_values[first + rvi.policy[m]];
      regret = std::max(regret, best - rvi.action_values[first + a]);
      if (mdp.demand_observed) break;
    }
    if (!seen) continue;
    ++out.compared_states;
    if (exact) ++out.exact_matches;
    if (regret <= regret_tolerance) ++out.near_optimal;
    out.max_regret = std::max(out.max_regret, regret);
  }
  return out;
}

}  // namespace mgrid
