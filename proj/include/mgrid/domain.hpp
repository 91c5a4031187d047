#pragma once

#include <algorithm>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "mgrid/errors.hpp"

namespace mgrid {

/// Which model is being solved. AdlSharing is the joint trading + deferrable
/// load model; GreedyAdl may only sell what exceeds a full battery; NonAdl
/// folds the deferrable energy into ordinary demand at the first slot.
enum class Variant { AdlSharing, GreedyAdl, NonAdl };

inline std::string_view to_string(Variant v) {
  switch (v) {
    case Variant::AdlSharing: return "adl-sharing";
    case Variant::GreedyAdl: return "greedy-adl";
    case Variant::NonAdl: return "non-adl";
  }
  return "adl-sharing";
}

inline Variant parse_variant(std::string_view name) {
  if (name == "adl-sharing") return Variant::AdlSharing;
  if (name == "greedy-adl") return Variant::GreedyAdl;
  if (name == "non-adl") return Variant::NonAdl;
  throw ConfigError("unknown variant '" + std::string(name) + "'");
}

/// A deferrable load. `deadline` counts the future slots still available
/// without penalty; a job at deadline 0 is scheduled now or expires.
struct AdlJob {
  int energy = 1;
  int deadline = 0;

  auto operator<=>(const AdlJob&) const = default;
};

/// Agent-visible state. Battery is folded into net_demand.
struct MicrogridState {
  int slot = 1;
  int net_demand = 0;
  int price = 0;
  std::vector<AdlJob> jobs;  // canonical: sorted by (energy, deadline)

  bool operator==(const MicrogridState&) const = default;
};

struct MicrogridStateHash {
  std::size_t operator()(const MicrogridState& s) const noexcept {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    auto mix = [&h](std::int64_t v) {
      h ^= static_cast<std::uint64_t>(v) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    };
    mix(s.slot);
    mix(s.net_demand);
    mix(s.price);
    for (const auto& j : s.jobs) mix((static_cast<std::int64_t>(j.energy) << 32) ^ j.deadline);
    return static_cast<std::size_t>(h);
  }
};

/// Trade u (positive sells, negative buys) plus the bitmask of scheduled jobs.
/// Bit i refers to jobs[i] of the state the action was chosen in.
struct JointAction {
  int trade = 0;
  std::uint32_t subset = 0;

  bool operator==(const JointAction&) const = default;
};

struct GridParams {
  int battery_capacity = 8;
  int max_grid_buy = 14;
  double penalty = 0.0;
  int slots_per_day = 4;
  std::vector<AdlJob> daily_jobs;
  /// Literal expiry rule: penalize every deadline-0 job, scheduled or not.
  bool penalize_scheduled_at_deadline = false;

  void validate() const {
    if (battery_capacity < 0) throw ConfigError("battery_capacity: must be >= 0");
    if (max_grid_buy < 0) throw ConfigError("max_grid_buy: must be >= 0");
    if (!(penalty >= 0.0)) throw ConfigError("penalty: must be >= 0");
    if (slots_per_day < 1) throw ConfigError("slots_per_day: must be >= 1");
    for (std::size_t i = 0; i < daily_jobs.size(); ++i) {
      if (daily_jobs[i].energy < 1)
        throw ConfigError("daily_jobs[" + std::to_string(i) + "].energy: must be >= 1");
      if (daily_jobs[i].deadline < 0)
        throw ConfigError("daily_jobs[" + std::to_string(i) + "].deadline: must be >= 0");
    }
  }

  int daily_job_energy() const {
    int total = 0;
    for (const auto& j : daily_jobs) total += j.energy;
    return total;
  }
};

/// Simulator-side view: the agent state plus the quantities folded into it.
struct EnvSnapshot {
  MicrogridState state;
  int battery = 0;
  int renewable = 0;
  int non_adl_demand = 0;
};

inline constexpr std::size_t kMaxSubsetJobs = 16;

inline void canonicalize(std::vector<AdlJob>& jobs) { std::sort(jobs.begin(), jobs.end()); }

struct SubsetChoice {
  std::uint32_t mask = 0;
  int energy = 0;

  bool operator==(const SubsetChoice&) const = default;
};

/// The full power set of `jobs` in ascending bitmask order with each
/// subset's total energy.
inline std::vector<SubsetChoice> enumerate_adl_subsets(std::span<const AdlJob> jobs) {
  if (jobs.size() > kMaxSubsetJobs)
    throw CapacityError("enumerate_adl_subsets: " + std::to_string(jobs.size()) +
                        " jobs exceeds the cap of " + std::to_string(kMaxSubsetJobs));
  const std::uint32_t count = 1u << jobs.size();
  std::vector<SubsetChoice> out(count);
  for (std::uint32_t mask = 0; mask < count; ++mask) {
    int energy = 0;
    for (std::size_t i = 0; i < jobs.size(); ++i)
      if (mask & (1u << i)) energy += jobs[i].energy;
    out[mask] = {mask, energy};
  }
  return out;
}

inline int subset_energy(std::span<const AdlJob> jobs, std::uint32_t mask) {
  int energy = 0;
  for (std::size_t i = 0; i < jobs.size(); ++i)
    if (mask & (1u << i)) energy += jobs[i].energy;
  return energy;
}

/// Among identical jobs only the lowest-indexed ones may be picked, so each
/// distinct multiset choice has exactly one mask.
inline bool is_canonical_subset(std::span<const AdlJob> jobs, std::uint32_t mask) {
  for (std::size_t i = 1; i < jobs.size(); ++i) {
    if (jobs[i] == jobs[i - 1] && (mask & (1u << i)) && !(mask & (1u << (i - 1)))) return false;
  }
  return true;
}

struct TradeInterval {
  int lo = 0;
  int hi = 0;

  bool contains(int u) const noexcept { return lo <= u && u <= hi; }
  int size() const noexcept { return hi - lo + 1; }
};

/// Range of the trade u once `chosen_energy` units of jobs are scheduled.
/// The bound applies to u + v with v = -chosen_energy:
///   L = -min(M, B - nd + maxA)
///   U = max(0, nd)        (GreedyAdl: max(0, nd - B))
inline TradeInterval feasible_trade_interval(const MicrogridState& state, const GridParams& params,
                                             int chosen_energy, Variant variant) {
  int max_energy = 0;
  if (variant != Variant::NonAdl)
    for (const auto& j : state.jobs) max_energy += j.energy;
  const int nd = state.net_demand;
  const int lower = -std::min(params.max_grid_buy, params.battery_capacity - nd + max_energy);
  const int upper = variant == Variant::GreedyAdl ? std::max(0, nd - params.battery_capacity)
                                                  : std::max(0, nd);
  return {lower + chosen_energy, upper + chosen_energy};
}

inline bool is_feasible(const MicrogridState& state, const JointAction& action,
                        const GridParams& params, Variant variant) {
  if (variant == Variant::NonAdl && action.subset != 0) return false;
  if (state.jobs.size() < 32 && (action.subset >> state.jobs.size()) != 0) return false;
  const int energy = subset_energy(state.jobs, action.subset);
  return feasible_trade_interval(state, params, energy, variant).contains(action.trade);
}

/// All feasible actions ordered by (subset mask, trade), the stable action
/// indexing used by the learner and the oracle.
inline std::vector<JointAction> feasible_actions(const MicrogridState& state, const GridParams& params,
                                                 Variant variant) {
  std::vector<JointAction> out;
  const auto subsets = variant == Variant::NonAdl
                           ? std::vector<SubsetChoice>{{0, 0}}
                           : enumerate_adl_subsets(state.jobs);
  for (const auto& choice : subsets) {
    if (!is_canonical_subset(state.jobs, choice.mask)) continue;
    const auto range = feasible_trade_interval(state, params, choice.energy, variant);
    for (int u = range.lo; u <= range.hi; ++u) out.push_back({u, choice.mask});
  }
  return out;
}

inline void require_feasible(const MicrogridState& state, const JointAction& action,
                             const GridParams& params, Variant variant) {
  if (!is_feasible(state, action, params, variant))
    throw FeasibilityError("action (trade " + std::to_string(action.trade) + ", subset " +
                           std::to_string(action.subset) + ") infeasible at slot " +
                           std::to_string(state.slot) + ", net demand " +
                           std::to_string(state.net_demand));
}

/// Energy of jobs at deadline 0 that incur the expiry penalty under `action`.
inline int expiring_energy(const MicrogridState& state, const JointAction& action,
                           const GridParams& params) {
  int energy = 0;
  for (std::size_t i = 0; i < state.jobs.size(); ++i) {
    const bool scheduled = action.subset & (1u << i);
    if (state.jobs[i].deadline == 0 && (!scheduled || params.penalize_scheduled_at_deadline))
      energy += state.jobs[i].energy;
  }
  return energy;
}

/// Single-stage profit p(u+v) + c min(0, nd-u) - c (expiring energy), without
/// the feasibility check.
inline double reward_unchecked(const MicrogridState& state, const JointAction& action, const GridParams& params) {
  const int v = -subset_energy(state.jobs, action.subset);
  const double c = params.penalty;
  return static_cast<double>(state.price) * (action.trade + v) +
         c * std::min(0, state.net_demand - action.trade) -
         c * expiring_energy(state, action, params);
}

inline double reward(const MicrogridState& state, const JointAction& action, const GridParams& params,
                     Variant variant) {
  require_feasible(state, action, params, variant);
  return reward_unchecked(state, action, params);
}

/// Exogenous draws for the next slot.
struct Exogenous {
  int renewable = 0;
  int demand = 0;
  int price = 0;
  std::vector<AdlJob> new_jobs;
};

struct StepResult {
  EnvSnapshot next;
  double reward = 0.0;
  int scheduled_energy = 0;
  int expired_energy = 0;  // unscheduled deadline-0 jobs dropped this step
};

inline StepResult step(const EnvSnapshot& snap, const JointAction& action, const Exogenous& exo,
                       const GridParams& params, Variant variant) {
  const auto& s = snap.state;
  StepResult out;
  out.reward = reward(s, action, params, variant);

  const int next_slot = s.slot % params.slots_per_day + 1;
  if (!exo.new_jobs.empty() && (next_slot != 1 || variant == Variant::NonAdl))
    throw FeasibilityError("step: job arrivals are only allowed at slot 1 (and never in non-adl)");

  auto& next = out.next;
  next.battery = std::min(params.battery_capacity, std::max(0, s.net_demand - action.trade));
  next.renewable = exo.renewable;
  next.non_adl_demand = exo.demand;
  next.state.slot = next_slot;
  next.state.price = exo.price;
  next.state.net_demand = exo.renewable + next.battery - exo.demand;

  next.state.jobs = exo.new_jobs;
  for (std::size_t i = 0; i < s.jobs.size(); ++i) {
    const auto& job = s.jobs[i];
    if (action.subset & (1u << i)) {
      out.scheduled_energy += job.energy;
    } else if (job.deadline > 0) {
      next.state.jobs.push_back({job.energy, job.deadline - 1});
    } else {
      out.expired_energy += job.energy;
    }
  }
  canonicalize(next.state.jobs);
  return out;
}

/// Dense interning of states, append-only. Job lists are canonicalized on
/// entry so permuted job orders share an index.
class StateInterner {
 public:
  std::size_t index(const MicrogridState& s) {
    if (!std::is_sorted(s.jobs.begin(), s.jobs.end())) return index(canonical(s));
    auto [it, inserted] = map_.try_emplace(s, states_.size());
    if (inserted) states_.push_back(s);
    return it->second;
  }

  std::optional<std::size_t> find(const MicrogridState& s) const {
    if (!std::is_sorted(s.jobs.begin(), s.jobs.end())) return find(canonical(s));
    auto it = map_.find(s);
    if (it == map_.end()) return std::nullopt;
    return it->second;
  }

  const MicrogridState& state(std::size_t i) const { return states_.at(i); }
  std::size_t size() const noexcept { return states_.size(); }

 private:
  static MicrogridState canonical(MicrogridState s) {
    canonicalize(s.jobs);
    return s;
  }

  std::unordered_map<MicrogridState, std::size_t, MicrogridStateHash> map_;
  std::vector<MicrogridState> states_;
};

}  // namespace mgrid
