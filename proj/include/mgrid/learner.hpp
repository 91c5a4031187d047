#pragma once

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cstring>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mgrid/domain.hpp"
#include "mgrid/environment.hpp"
#include "mgrid/errors.hpp"
#include "mgrid/processes.hpp"
#include "mgrid/random.hpp"

namespace mgrid {

/// Step size and exploration rate.
///
/// Harmonic: alpha = c0 / (c1 + n) with n the prior visits of the pair.
/// Constant: alpha = c0.
/// Exploration decays linearly from `epsilon` to `epsilon_final` over the run.
struct LearningSchedule {
  enum class StepRule { Harmonic, Constant };

  StepRule rule = StepRule::Harmonic;
  double c0 = 1.0;
  double c1 = 10.0;
  double epsilon = 0.1;
  double epsilon_final = 0.1;

  static LearningSchedule constant(double alpha, double epsilon = 0.0) {
    LearningSchedule s;
    s.rule = StepRule::Constant;
    s.c0 = alpha;
    s.epsilon = s.epsilon_final = epsilon;
    return s;
  }

  static LearningSchedule harmonic(double c0, double c1, double epsilon = 0.1) {
    LearningSchedule s;
    s.c0 = c0;
    s.c1 = c1;
    s.epsilon = s.epsilon_final = epsilon;
    return s;
  }

  void validate() const {
    if (rule == StepRule::Constant) {
      if (!(c0 > 0.0 && c0 <= 1.0)) throw ConfigError("schedule.alpha: must lie in (0, 1]");
    } else {
      if (!(c0 > 0.0)) throw ConfigError("schedule.c0: must be > 0");
      if (!(c1 >= c0)) throw ConfigError("schedule.c1: must be >= c0 so that alpha <= 1");
    }
    if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw ConfigError("schedule.epsilon: must lie in [0, 1]");
    if (!(epsilon_final >= 0.0 && epsilon_final <= 1.0))
      throw ConfigError("schedule.epsilon_final: must lie in [0, 1]");
  }

  double step_size(std::uint64_t /*iteration*/, std::uint64_t visits) const {
    if (rule == StepRule::Constant) return c0;
    return c0 / (c1 + static_cast<double>(visits));
  }

  double exploration(std::uint64_t iteration, std::uint64_t total) const {
    if (total <= 1 || epsilon == epsilon_final) return epsilon;
    const double frac = static_cast<double>(iteration) / static_cast<double>(total - 1);
    return epsilon + (epsilon_final - epsilon) * frac;
  }
};

/// Tabular action values over interned states. A state's row is allocated on
/// first interning, with its actions in feasible_actions order and all values
/// zero.
class QTable {
 public:
  QTable(GridParams params, Variant variant) : params_(std::move(params)), variant_(variant) {}

  std::size_t intern(const MicrogridState& s) {
    const std::size_t before = states_.size();
    const std::size_t idx = states_.index(s);
    if (idx == before) {
      actions_.push_back(feasible_actions(states_.state(idx), params_, variant_));
      values_.emplace_back(actions_.back().size(), 0.0);
      visits_.emplace_back(actions_.back().size(), 0);
    }
    return idx;
  }

  std::optional<std::size_t> find(const MicrogridState& s) const { return states_.find(s); }

  std::size_t state_count() const noexcept { return states_.size(); }
  const MicrogridState& state(std::size_t s) const { return states_.state(s); }

  std::span<const JointAction> actions(std::size_t s) const { return row(actions_, s); }
  std::span<const double> values(std::size_t s) const { return row(values_, s); }
  std::span<const std::uint64_t> visits(std::size_t s) const { return row(visits_, s); }

  double& value(std::size_t s, std::size_t a) { return checked(values_, s, a); }
  double value(std::size_t s, std::size_t a) const { return values(s)[a]; }
  std::uint64_t& visit_count(std::size_t s, std::size_t a) { return checked(visits_, s, a); }

  double max_value(std::size_t s) const {
    const auto v = values(s);
    return *std::max_element(v.begin(), v.end());
  }

  /// Lowest action index attaining the row maximum.
  std::size_t greedy(std::size_t s) const {
    const auto v = values(s);
    return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
  }

  std::optional<std::size_t> reference_state() const noexcept { return reference_; }

  /// Fixes the reference state. Later calls are ignored.
  void set_reference_state(std::size_t s) {
    check_state(s);
    if (!reference_) reference_ = s;
  }

  /// f(Q) = max_u Q(s_ref, u); zero before a reference is set.
  double reference_value() const { return reference_ ? max_value(*reference_) : 0.0; }

  /// FNV-1a over every value's bit pattern and every visit counter.
  std::uint64_t checksum() const {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    auto feed = [&h](std::uint64_t x) {
      for (int i = 0; i < 8; ++i) {
        h ^= (x >> (8 * i)) & 0xff;
        h *= 0x100000001b3ULL;
      }
    };
    for (std::size_t s = 0; s < values_.size(); ++s) {
      for (double v : values_[s]) feed(std::bit_cast<std::uint64_t>(v));
      for (auto n : visits_[s]) feed(n);
    }
    return h;
  }

  const GridParams& params() const noexcept { return params_; }
  Variant variant() const noexcept { return variant_; }

  void check_state(std::size_t s) const {
    if (s >= states_.size()) throw UnknownStateError("unknown state index " + std::to_string(s));
  }

 private:
  template <class T>
  std::span<const T> row(const std::vector<std::vector<T>>& rows, std::size_t s) const {
    check_state(s);
    return rows[s];
  }

  template <class T>
  T& checked(std::vector<std::vector<T>>& rows, std::size_t s, std::size_t a) {
    check_state(s);
    if (a >= rows[s].size())
      throw UnknownStateError("action index " + std::to_string(a) + " out of range in state " +
                              std::to_string(s));
    return rows[s][a];
  }

  GridParams params_;
  Variant variant_;
  StateInterner states_;
  std::vector<std::vector<JointAction>> actions_;
  std::vector<std::vector<double>> values_;
  std::vector<std::vector<std::uint64_t>> visits_;
  std::optional<std::size_t> reference_;
};

/// Relative value iteration Q-learning update:
///   Q(s,a) += alpha (g + max_u Q(s',u) - max_u Q(s_ref,u) - Q(s,a))
/// All terms on the right are read before the write.
inline void q_update(QTable& table, std::size_t s, std::size_t a, double g, std::size_t s_next,
                     const LearningSchedule& schedule, std::uint64_t iteration) {
  table.check_state(s);
  table.check_state(s_next);
  const double target = g + table.max_value(s_next) - table.reference_value();
  auto& visits = table.visit_count(s, a);
  double& q = table.value(s, a);
  q += schedule.step_size(iteration, visits) * (target - q);
  ++visits;
}

/// Epsilon-greedy over the listed feasible action indices. Exploitation picks
/// the highest value, lowest index among ties. Consumes one uniform, plus one
/// index draw when exploring.
inline std::size_t select_action(const QTable& table, std::size_t s, std::span<const std::size_t> feasible,
                                 double epsilon, Rng& rng) {
  if (feasible.empty()) throw FeasibilityError("select_action: empty feasible set");
  const double u = uniform01(rng);
  if (u < epsilon) return feasible[uniform_index(rng, feasible.size())];
  const auto values = table.values(s);
  std::size_t best = feasible.front();
  for (auto a : feasible) {
    if (values[a] > values[best] || (values[a] == values[best] && a < best)) best = a;
  }
  return best;
}

/// Epsilon-greedy over every action of state `s`.
inline std::size_t select_action(const QTable& table, std::size_t s, double epsilon, Rng& rng) {
  const std::size_t n = table.actions(s).size();
  if (n == 0) throw FeasibilityError("select_action: empty feasible set");
  if (uniform01(rng) < epsilon) return uniform_index(rng, n);
  return table.greedy(s);
}

/// Greedy policy, indexed by interned state.
inline std::vector<std::size_t> extract_policy(const QTable& table) {
  std::vector<std::size_t> policy(table.state_count());
  for (std::size_t s = 0; s < policy.size(); ++s) policy[s] = table.greedy(s);
  return policy;
}

/// Frozen greedy action for an arbitrary state. States never seen in training
/// fall back to the first feasible action, the tie-break of an all-zero row.
inline JointAction greedy_action(const QTable& table, const MicrogridState& state) {
  if (auto s = table.find(state)) return table.actions(*s)[table.greedy(*s)];
  auto actions = feasible_actions(state, table.params(), table.variant());
  return actions.front();
}

struct TracePoint {
  std::uint64_t iteration = 0;
  double f_of_q = 0.0;
  double cumulative_mean_reward = 0.0;
};

/// Everything one agent needs to train: its own model and processes, the
/// shared price chain, and its seeds.
struct AgentSetup {
  GridParams params;
  Variant variant = Variant::AdlSharing;
  FiniteMarkovChain demand;
  FiniteMarkovChain price;
  RenewableSource renewable;
  LearningSchedule schedule;
  std::uint64_t seed = 0;        // agent stream: environment and exploration
  std::uint64_t price_seed = 0;  // shared by every agent of a run
  std::uint64_t trace_stride = 1000;
};

struct TrainResult {
  QTable table;
  std::vector<TracePoint> trace;
  double mean_reward = 0.0;
};

/// Simulate-select-update loop for `cycles` steps. The price path depends on
/// `price_seed` only, so agents trained separately still share one price
/// realization.
inline TrainResult train(const AgentSetup& setup, std::uint64_t cycles) {
  setup.schedule.validate();
  if (setup.trace_stride == 0) throw ConfigError("trace_stride: must be >= 1");

  MicrogridEnv env(setup.params, setup.variant, setup.demand, setup.renewable,
                   derive_seed(setup.seed, {stream::kEnvironment}));
  Rng explore(derive_seed(setup.seed, {stream::kExploration}));
  Rng price_rng(setup.price_seed);
  FiniteMarkovChain price = setup.price;
  price.set_state(uniform_index(price_rng, price.size()));
  env.reset(uniform_index(env.rng(), setup.demand.size()), price.value());

  TrainResult result{QTable(setup.params, setup.variant), {}, 0.0};
  auto& table = result.table;
  std::size_t s = table.intern(env.state());
  table.set_reference_state(s);

  double total = 0.0;
  for (std::uint64_t t = 0; t < cycles; ++t) {
    const double eps = setup.schedule.exploration(t, cycles);
    const std::size_t a = select_action(table, s, eps, explore);
    const JointAction action = table.actions(s)[a];
    const int next_price = price.sample(price_rng);
    const auto out = env.advance(action, next_price);
    const std::size_t s_next = table.intern(out.next.state);
    q_update(table, s, a, out.reward, s_next, setup.schedule, t);
    total += out.reward;
    if ((t + 1) % setup.trace_stride == 0)
      result.trace.push_back({t + 1, table.reference_value(), total / static_cast<double>(t + 1)});
    s = s_next;
  }
  result.mean_reward = cycles ? total / static_cast<double>(cycles) : 0.0;
  return result;
}

}  // namespace mgrid
