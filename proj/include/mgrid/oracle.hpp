#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "mgrid/domain.hpp"
#include "mgrid/environment.hpp"
#include "mgrid/errors.hpp"
#include "mgrid/processes.hpp"
#include "mgrid/random.hpp"

namespace mgrid {

/// Single-microgrid model with every exogenous law known exactly.
struct OracleProblem {
  GridParams params;
  Variant variant = Variant::AdlSharing;
  FiniteMarkovChain demand;
  FiniteMarkovChain price;
  RenewableSource renewable;
};

inline constexpr std::size_t kDefaultPairBound = 2'000'000;

struct Transition {
  std::size_t next = 0;
  double probability = 0.0;
};

/// Exact finite MDP reachable from the start-of-day states.
///
/// Net demand aliases the current demand value, and the demand chain's next
/// value depends on it. When the chain is memoryless the agent-visible state
/// is Markov and is used as is; otherwise each state also carries the hidden
/// demand index (`hidden_demand`), making the model exact at the cost of a
/// richer state than the learner sees.
struct EnumeratedMDP {
  std::vector<MicrogridState> states;
  std::vector<int> hidden_demand;  // -1 when the demand chain is memoryless
  bool demand_observed = true;

  std::vector<std::size_t> action_offset;  // states.size() + 1 entries
  std::vector<JointAction> actions;
  std::vector<double> rewards;               // per flattened action
  std::vector<std::size_t> transition_offset;  // actions.size() + 1 entries
  std::vector<Transition> transitions;

  std::vector<std::size_t> initial_states;
  std::vector<double> initial_probability;

  std::size_t state_count() const noexcept { return states.size(); }
  std::size_t pair_count() const noexcept { return actions.size(); }
  std::size_t action_count(std::size_t s) const { return action_offset[s + 1] - action_offset[s]; }

  std::span<const JointAction> actions_of(std::size_t s) const {
    return {actions.data() + action_offset[s], action_count(s)};
  }
  std::span<const Transition> transitions_of(std::size_t flat_action) const {
    return {transitions.data() + transition_offset[flat_action],
            transition_offset[flat_action + 1] - transition_offset[flat_action]};
  }

  std::optional<std::size_t> find(const MicrogridState& s, int hidden = -1) const {
    auto it = index_.find(Key{s, demand_observed ? -1 : hidden});
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  struct Key {
    MicrogridState state;
    int hidden = -1;
    bool operator==(const Key&) const = default;
  };
  struct KeyHash {
    std::size_t operator()(const Key& k) const noexcept {
      return MicrogridStateHash{}(k.state) * 31 + static_cast<std::size_t>(k.hidden + 1);
    }
  };
  std::unordered_map<Key, std::size_t, KeyHash> index_;
};

/// Breadth-first closure from every start-of-day state (slot 1, empty battery,
/// fresh jobs, any renewable draw, uniform demand and price) under every
/// feasible action, with transition probabilities multiplied out from the
/// renewable mass function and the two chain rows.
inline EnumeratedMDP enumerate_mdp(const OracleProblem& problem,
                                   std::size_t max_pairs = kDefaultPairBound) {
  const auto& params = problem.params;
  params.validate();
  problem.renewable.validate(params.slots_per_day);
  const auto& demand = problem.demand;
  const auto& price = problem.price;
  const Variant variant = problem.variant;

  EnumeratedMDP mdp;
  mdp.demand_observed = demand.memoryless();

  std::vector<AdlJob> arrivals;
  if (variant != Variant::NonAdl) {
    arrivals = params.daily_jobs;
    canonicalize(arrivals);
  }
  const int first_slot_extra = variant == Variant::NonAdl ? params.daily_job_energy() : 0;

  auto intern = [&](MicrogridState s, int hidden) {
    EnumeratedMDP::Key key{std::move(s), mdp.demand_observed ? -1 : hidden};
    auto [it, inserted] = mdp.index_.try_emplace(key, mdp.states.size());
    if (inserted) {
      mdp.states.push_back(key.state);
      mdp.hidden_demand.push_back(key.hidden);
    }
    return it->second;
  };

  // Start-of-day distribution.
  {
    const auto r_pmf = problem.renewable.pmf(1);
    std::vector<std::pair<std::size_t, double>> init;
    for (std::size_t r = 0; r < r_pmf.size(); ++r) {
      if (r_pmf[r] <= 0.0) continue;
      for (std::size_t d = 0; d < demand.size(); ++d) {
        for (std::size_t p = 0; p < price.size(); ++p) {
          MicrogridState s{1, static_cast<int>(r) - demand.alphabet()[d] - first_slot_extra,
                           price.alphabet()[p], arrivals};
          const double prob = r_pmf[r] / static_cast<double>(demand.size() * price.size());
          init.emplace_back(intern(std::move(s), static_cast<int>(d)), prob);
        }
      }
    }
    std::sort(init.begin(), init.end());
    for (const auto& [idx, prob] : init) {
      if (!mdp.initial_states.empty() && mdp.initial_states.back() == idx) {
        mdp.initial_probability.back() += prob;
      } else {
        mdp.initial_states.push_back(idx);
        mdp.initial_probability.push_back(prob);
      }
    }
  }

  std::vector<std::vector<double>> renewable_pmf(static_cast<std::size_t>(params.slots_per_day) + 1);
  for (int t = 1; t <= params.slots_per_day; ++t) renewable_pmf[t] = problem.renewable.pmf(t);

  mdp.action_offset.push_back(0);
  mdp.transition_offset.push_back(0);
  std::vector<std::pair<std::size_t, double>> row;
  for (std::size_t s = 0; s < mdp.states.size(); ++s) {
    // Copies: intern() below may reallocate the state vectors.
    const MicrogridState state = mdp.states[s];
    const int hidden = mdp.hidden_demand[s];
    const std::size_t p_idx = *price.index_of(state.price);
    const std::size_t d_row = mdp.demand_observed ? 0 : static_cast<std::size_t>(hidden);

    auto acts = feasible_actions(state, params, variant);
    if (mdp.actions.size() + acts.size() > max_pairs)
      throw SizeError("enumerate_mdp: more than " + std::to_string(max_pairs) +
                          " state-action pairs (reached " +
                          std::to_string(mdp.actions.size() + acts.size()) + " after " +
                          std::to_string(s + 1) + " states)",
                      mdp.actions.size() + acts.size());

    const int next_slot = state.slot % params.slots_per_day + 1;
    const auto& r_pmf = renewable_pmf[next_slot];
    for (const auto& action : acts) {
      mdp.actions.push_back(action);
      mdp.rewards.push_back(reward(state, action, params, variant));

      const int battery = std::min(params.battery_capacity, std::max(0, state.net_demand - action.trade));
      std::vector<AdlJob> jobs = next_slot == 1 ? arrivals : std::vector<AdlJob>{};
      for (std::size_t i = 0; i < state.jobs.size(); ++i)
        if (!(action.subset & (1u << i)) && state.jobs[i].deadline > 0)
          jobs.push_back({state.jobs[i].energy, state.jobs[i].deadline - 1});
      canonicalize(jobs);
      const int extra = next_slot == 1 ? first_slot_extra : 0;

      row.clear();
      for (std::size_t r = 0; r < r_pmf.size(); ++r) {
        if (r_pmf[r] <= 0.0) continue;
        for (std::size_t d = 0; d < demand.size(); ++d) {
          const double pd = demand.row(d_row)[d];
          if (pd <= 0.0) continue;
          for (std::size_t p = 0; p < price.size(); ++p) {
            const double pp = price.row(p_idx)[p];
            if (pp <= 0.0) continue;
            MicrogridState next{next_slot,
                                static_cast<int>(r) + battery - demand.alphabet()[d] - extra,
                                price.alphabet()[p], jobs};
            row.emplace_back(intern(std::move(next), static_cast<int>(d)), r_pmf[r] * pd * pp);
          }
        }
      }
      std::sort(row.begin(), row.end());
      for (std::size_t k = 0; k < row.size();) {
        Transition t{row[k].first, 0.0};
        for (; k < row.size() && row[k].first == t.next; ++k) t.probability += row[k].second;
        mdp.transitions.push_back(t);
      }
      mdp.transition_offset.push_back(mdp.transitions.size());
    }
    mdp.action_offset.push_back(mdp.actions.size());
  }
  return mdp;
}

struct RviOptions {
  double tol = 1e-8;
  std::size_t max_sweeps = 1'000'000;
  /// Self-loop weight of the aperiodicity transform P' = (1-tau) I + tau P.
  /// Gain and optimal policies are unchanged; the slot cycle would otherwise
  /// make plain value iteration oscillate.
  double tau = 0.5;
  /// Actions within this distance of the best action value count as optimal.
  double tie_tolerance = 1e-6;
  std::vector<double> initial_values;  // empty = zeros
  std::size_t reference_state = 0;
};

struct RviResult {
  double gain = 0.0;
  std::vector<std::size_t> policy;  // local action index per state
  std::vector<std::vector<std::size_t>> optimal_actions;
  std::vector<double> bias;           // relative values, zero at the reference state
  std::vector<double> action_values;  // r(s,a) + sum P h, per flattened action
  std::size_t sweeps = 0;
  double span = 0.0;
  bool converged = false;
};

/// Relative value iteration with the span-seminorm stopping rule
/// span(V_{k+1} - V_k) < tol. The gain is the midpoint of that difference.
inline RviResult relative_value_iteration(const EnumeratedMDP& mdp, const RviOptions& options = {}) {
  const std::size_t n = mdp.state_count();
  RviResult out;
  if (n == 0) return out;
  const double tau = options.tau;
  std::vector<double> v = options.initial_values;
  if (v.empty()) v.assign(n, 0.0);
  if (v.size() != n) throw ConfigError("relative_value_iteration: initial_values has wrong size");
  std::vector<double> next(n);
  const std::size_t ref = options.reference_state;

  auto backup = [&](std::size_t flat, const std::vector<double>& values) {
    double expect = 0.0;
    for (const auto& t : mdp.transitions_of(flat)) expect += t.probability * values[t.next];
    return mdp.rewards[flat] + tau * expect;
  };

  for (out.sweeps = 1; out.sweeps <= options.max_sweeps; ++out.sweeps) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (std::size_t s = 0; s < n; ++s) {
      double best = -std::numeric_limits<double>::infinity();
      for (std::size_t k = mdp.action_offset[s]; k < mdp.action_offset[s + 1]; ++k)
        best = std::max(best, backup(k, v));
      next[s] = best + (1.0 - tau) * v[s];
      const double diff = next[s] - v[s];
      lo = std::min(lo, diff);
      hi = std::max(hi, diff);
    }
    out.gain = 0.5 * (lo + hi);
    out.span = hi - lo;
    const double shift = next[ref];
    for (std::size_t s = 0; s < n; ++s) v[s] = next[s] - shift;
    if (out.span < options.tol) {
      out.converged = true;
      break;
    }
  }
  if (!out.converged) out.sweeps = options.max_sweeps;

  // v approximates h / tau for the original bias h.
  out.bias.resize(n);
  for (std::size_t s = 0; s < n; ++s) out.bias[s] = tau * v[s];
  out.action_values.resize(mdp.pair_count());
  out.policy.resize(n);
  out.optimal_actions.resize(n);
  for (std::size_t s = 0; s < n; ++s) {
    const std::size_t first = mdp.action_offset[s];
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t k = first; k < mdp.action_offset[s + 1]; ++k) {
      double expect = 0.0;
      for (const auto& t : mdp.transitions_of(k)) expect += t.probability * out.bias[t.next];
      out.action_values[k] = mdp.rewards[k] + expect;
      if (out.action_values[k] > best) {
        best = out.action_values[k];
        out.policy[s] = k - first;
      }
    }
    for (std::size_t k = first; k < mdp.action_offset[s + 1]; ++k)
      if (out.action_values[k] >= best - options.tie_tolerance) out.optimal_actions[s].push_back(k - first);
  }
  return out;
}

struct PolicyEvaluation {
  double gain = 0.0;
  bool multichain = false;
  std::vector<double> stationary;
};

/// Exact long-run average reward of a deterministic policy, from the
/// stationary distribution of the induced chain. A singular system means more
/// than one recurrent class and sets `multichain`.
inline PolicyEvaluation evaluate_policy(const EnumeratedMDP& mdp, std::span<const std::size_t> policy) {
  const std::size_t n = mdp.state_count();
  if (policy.size() != n) throw ConfigError("evaluate_policy: policy must cover every state");
  // Solve x^T (P - I) = 0 with sum(x) = 1 as A x = b, A = (P - I)^T with the
  // last row replaced by ones.
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  Eigen::VectorXd r(static_cast<Eigen::Index>(n));
  for (std::size_t s = 0; s < n; ++s) {
    if (policy[s] >= mdp.action_count(s))
      throw ConfigError("evaluate_policy: action index out of range at state " + std::to_string(s));
    const std::size_t flat = mdp.action_offset[s] + policy[s];
    r(static_cast<Eigen::Index>(s)) = mdp.rewards[flat];
    for (const auto& t : mdp.transitions_of(flat))
      a(static_cast<Eigen::Index>(t.next), static_cast<Eigen::Index>(s)) += t.probability;
    a(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(s)) -= 1.0;
  }
  const auto last = static_cast<Eigen::Index>(n - 1);
  a.row(last).setOnes();
  Eigen::VectorXd b = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
  b(last) = 1.0;

  PolicyEvaluation out;
  Eigen::FullPivLU<Eigen::MatrixXd> lu(a);
  lu.setThreshold(1e-10);
  if (!lu.isInvertible()) {
    out.multichain = true;
    out.gain = std::numeric_limits<double>::quiet_NaN();
    return out;
  }
  const Eigen::VectorXd x = lu.solve(b);
  out.gain = x.dot(r);
  out.stationary.assign(x.data(), x.data() + n);
  return out;
}

/// Average reward of `policy` measured by running the simulator itself for
/// `steps` slots. Independent of the enumerated transition table.
inline double simulate_policy_gain(const OracleProblem& problem, const EnumeratedMDP& mdp,
                                   std::span<const std::size_t> policy, std::uint64_t steps,
                                   std::uint64_t seed) {
  MicrogridEnv env(problem.params, problem.variant, problem.demand, problem.renewable,
                   derive_seed(seed, {stream::kEnvironment}));
  Rng price_rng(derive_seed(seed, {stream::kPrice}));
  FiniteMarkovChain price = problem.price;
  price.set_state(uniform_index(price_rng, price.size()));
  env.reset(uniform_index(env.rng(), problem.demand.size()), price.value());
  double total = 0.0;
  for (std::uint64_t t = 0; t < steps; ++t) {
    const auto s = mdp.find(env.state(), static_cast<int>(env.demand_index()));
    if (!s) throw SizeError("simulate_policy_gain: simulator left the enumerated state space", 0);
    const auto action = mdp.actions_of(*s)[policy[*s]];
    total += env.advance(action, price.sample(price_rng)).reward;
  }
  return steps ? total / static_cast<double>(steps) : 0.0;
}

}  // namespace mgrid
