#pragma once

// Random instances and invariant sweeps shared by the unit tests and the
// acceptance binary. Each sweep returns the number of violations found.

#include <algorithm>
#include <cstdint>
#include <string>
#include <vector>

#include "mgrid/mgrid.hpp"

namespace mgrid::fixtures {

inline int uniform_int(Rng& rng, int lo, int hi) {
  return lo + static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(hi - lo + 1)));
}

inline Variant random_variant(Rng& rng) {
  return static_cast<Variant>(uniform_index(rng, 3));
}

inline GridParams random_params(Rng& rng) {
  GridParams p;
  p.battery_capacity = uniform_int(rng, 0, 10);
  p.max_grid_buy = uniform_int(rng, 0, 15);
  p.penalty = static_cast<double>(uniform_int(rng, 0, 30));
  p.slots_per_day = uniform_int(rng, 1, 6);
  const int jobs = uniform_int(rng, 0, 4);
  for (int j = 0; j < jobs; ++j)
    p.daily_jobs.push_back({uniform_int(rng, 1, 4), uniform_int(rng, 0, p.slots_per_day - 1)});
  p.penalize_scheduled_at_deadline = uniform_index(rng, 4) == 0;
  return p;
}

/// A state that could occur under `params`: net demand between the worst
/// demand and a full battery plus full renewable, and up to five jobs.
inline MicrogridState random_state(Rng& rng, const GridParams& p, Variant v) {
  MicrogridState s;
  s.slot = uniform_int(rng, 1, p.slots_per_day);
  s.net_demand = uniform_int(rng, -12, p.battery_capacity + 8);
  s.price = uniform_int(rng, 1, 20);
  if (v != Variant::NonAdl) {
    const int jobs = uniform_int(rng, 0, 5);
    for (int j = 0; j < jobs; ++j) s.jobs.push_back({uniform_int(rng, 1, 4), uniform_int(rng, 0, 3)});
    canonicalize(s.jobs);
  }
  return s;
}

inline JointAction random_feasible_action(Rng& rng, const MicrogridState& s, const GridParams& p, Variant v) {
  const auto actions = feasible_actions(s, p, v);
  return actions[uniform_index(rng, actions.size())];
}

/// Reward written out term by term from the model definition, without the
/// library's helpers.
inline double reference_reward(const MicrogridState& s, const JointAction& a, const GridParams& p) {
  int scheduled = 0, expiring = 0;
  for (std::size_t i = 0; i < s.jobs.size(); ++i) {
    const bool picked = (a.subset >> i) & 1u;
    if (picked) scheduled += s.jobs[i].energy;
    if (s.jobs[i].deadline == 0 && (!picked || p.penalize_scheduled_at_deadline)) expiring += s.jobs[i].energy;
  }
  const double sale = s.price * static_cast<double>(a.trade - scheduled);
  const int shortfall = a.trade > s.net_demand ? s.net_demand - a.trade : 0;
  return sale + p.penalty * shortfall - p.penalty * expiring;
}

/// Every state has at least one feasible action, and every listed action is feasible.
inline std::size_t sweep_feasibility(std::size_t draws, std::uint64_t seed) {
  Rng rng(seed);
  std::size_t bad = 0;
  for (std::size_t k = 0; k < draws; ++k) {
    const auto p = random_params(rng);
    const auto v = random_variant(rng);
    const auto s = random_state(rng, p, v);
    const auto actions = feasible_actions(s, p, v);
    if (actions.empty()) ++bad;
    for (const auto& a : actions)
      if (!is_feasible(s, a, p, v)) ++bad;
  }
  return bad;
}

/// Library reward against reference_reward on random (state, action) pairs.
inline std::size_t sweep_rewards(std::size_t draws, std::uint64_t seed) {
  Rng rng(seed);
  std::size_t bad = 0;
  for (std::size_t k = 0; k < draws; ++k) {
    const auto p = random_params(rng);
    const auto v = random_variant(rng);
    const auto s = random_state(rng, p, v);
    const auto a = random_feasible_action(rng, s, p, v);
    if (std::abs(reward(s, a, p, v) - reference_reward(s, a, p)) > 1e-9) ++bad;
  }
  return bad;
}

struct TrajectoryViolations {
  std::size_t battery = 0;       // battery outside [0, B]
  std::size_t conservation = 0;  // arrived energy != scheduled + expired + pending
  std::size_t deadlines = 0;     // a carried job's deadline did not drop by one
  std::size_t slot = 0;          // slot did not advance cyclically

  std::size_t total() const { return battery + conservation + deadlines + slot; }
};

/// Random policies through the simulator, checking per-step invariants and
/// that every job that arrived is eventually scheduled, expired or pending.
inline TrajectoryViolations sweep_trajectories(std::size_t episodes, std::size_t steps, std::uint64_t seed) {
  Rng rng(seed);
  TrajectoryViolations out;
  for (std::size_t e = 0; e < episodes; ++e) {
    auto params = random_params(rng);
    const auto v = random_variant(rng);
    FiniteMarkovChain demand({1, 3, 5}, random_stochastic_matrix(3, rng()));
    auto renewable = RenewableSource::with_default_profile(
        static_cast<RenewableKind>(uniform_index(rng, 3)), params.slots_per_day, 8);
    MicrogridEnv env(params, v, demand, renewable, rng());
    env.reset(uniform_index(rng, 3), 10);
    long arrived = 0, scheduled = 0, expired = 0;
    for (const auto& j : env.state().jobs) arrived += j.energy;
    for (std::size_t t = 0; t < steps; ++t) {
      const auto before = env.snapshot();
      const auto a = random_feasible_action(rng, before.state, params, v);
      const auto res = env.advance(a, uniform_int(rng, 1, 20));
      const auto& next = res.next;
      if (next.battery < 0 || next.battery > params.battery_capacity) ++out.battery;
      if (next.state.slot != before.state.slot % params.slots_per_day + 1) ++out.slot;
      scheduled += res.scheduled_energy;
      expired += res.expired_energy;
      std::vector<AdlJob> carried;
      for (std::size_t i = 0; i < before.state.jobs.size(); ++i)
        if (!((a.subset >> i) & 1u) && before.state.jobs[i].deadline > 0)
          carried.push_back({before.state.jobs[i].energy, before.state.jobs[i].deadline - 1});
      if (next.state.slot == 1 && v != Variant::NonAdl)
        for (const auto& j : params.daily_jobs) {
          carried.push_back(j);
          arrived += j.energy;
        }
      canonicalize(carried);
      if (carried != next.state.jobs) ++out.deadlines;
      long pending = 0;
      for (const auto& j : next.state.jobs) pending += j.energy;
      if (arrived != scheduled + expired + pending) ++out.conservation;
    }
  }
  return out;
}

struct SettlementViolations {
  std::size_t net_flow = 0;   // a microgrid's ledger net differs from its trade
  std::size_t rounding = 0;   // a peer share is not the floor or ceiling of its proportional value
  std::size_t volume = 0;     // peer volume != min(total sold, total bought)
  std::size_t self_flow = 0;  // a flow with equal endpoints or non-positive units

  std::size_t total() const { return net_flow + rounding + volume + self_flow; }
};

inline SettlementViolations sweep_settlement(std::size_t draws, std::uint64_t seed) {
  Rng rng(seed);
  SettlementViolations out;
  for (std::size_t k = 0; k < draws; ++k) {
    const int n = uniform_int(rng, 1, 8);
    std::vector<int> trades(static_cast<std::size_t>(n));
    for (auto& t : trades) t = uniform_int(rng, -15, 15);
    const auto rec = settle(trades, 1, 10.0);
    long sold = 0, bought = 0;
    for (int t : trades) (t > 0 ? sold : bought) += std::abs(t);
    if (rec.peer_volume != std::min(sold, bought)) ++out.volume;
    for (int i = 0; i < n; ++i)
      if (rec.net_flow(i) != trades[static_cast<std::size_t>(i)]) ++out.net_flow;
    for (const auto& f : rec.flows)
      if (f.seller == f.buyer || f.units <= 0) ++out.self_flow;
    for (int i = 0; i < n; ++i) {
      const int t = trades[static_cast<std::size_t>(i)];
      if (t == 0) continue;
      int peer = 0;
      for (const auto& f : rec.flows)
        if (f.seller != kMainGrid && f.buyer != kMainGrid && (f.seller == i || f.buyer == i)) peer += f.units;
      const double exact =
          static_cast<double>(rec.peer_volume) * std::abs(t) / static_cast<double>(t > 0 ? sold : bought);
      if (peer < std::floor(exact) - 1e-9 || peer > std::ceil(exact) + 1e-9) ++out.rounding;
    }
  }
  return out;
}

}  // namespace mgrid::fixtures
