#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <mutex>
#include <numeric>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "mgrid/config.hpp"
#include "mgrid/domain.hpp"
#include "mgrid/environment.hpp"
#include "mgrid/learner.hpp"
#include "mgrid/market.hpp"
#include "mgrid/random.hpp"

#ifndef MGRID_BUILD_ID
#define MGRID_BUILD_ID "unknown"
#endif

namespace mgrid {

/// One (variant, penalty, seed) combination.
struct CellSpec {
  Variant variant = Variant::AdlSharing;
  double penalty = 0.0;
  std::uint64_t seed = 0;
};

struct AgentOutcome {
  std::vector<TracePoint> trace;
  MicrogridState reference_state;
  std::size_t states_visited = 0;
  double training_mean_reward = 0.0;
  std::vector<double> run_profits;  // average reward per slot, one per evaluation run
  double mean_profit = 0.0;
  double std_error = 0.0;
  bool frozen = true;  // table checksum unchanged by evaluation
};

struct DayFlows {
  std::uint64_t day = 0;  // run * days_per_run + day within run
  SettlementRecord record;
};

struct CellResult {
  CellSpec spec;
  std::vector<AgentOutcome> agents;
  std::vector<DayFlows> flows;
};

struct EvaluationReport {
  std::string scenario;
  std::string build_id = MGRID_BUILD_ID;
  std::vector<std::string> agent_names;
  std::uint64_t cycles = 0;
  std::uint64_t runs = 0;
  std::vector<CellResult> cells;

  const CellResult* find(Variant v, double penalty, std::uint64_t seed) const {
    for (const auto& c : cells)
      if (c.spec.variant == v && c.spec.penalty == penalty && c.spec.seed == seed) return &c;
    return nullptr;
  }
};

struct RunOptions {
  std::vector<Variant> variants;
  std::vector<double> penalties;
  std::vector<std::uint64_t> seeds;
  std::uint64_t cycles = 0;
  unsigned parallel = 1;
  bool settlement = true;

  static RunOptions from(const ScenarioConfig& cfg) {
    return {cfg.variants, cfg.penalties, {cfg.master_seed}, cfg.training.cycles, 1, cfg.settlement};
  }
};

inline AgentSetup agent_setup(const ScenarioConfig& cfg, std::size_t agent, const CellSpec& cell) {
  AgentSetup s{cfg.grid_params(agent, cell.penalty),
               cell.variant,
               cfg.demand_chain(agent),
               cfg.price_chain(),
               cfg.microgrids.at(agent).renewable,
               cfg.training.schedule,
               derive_seed(cell.seed, {stream::kTraining, agent}),
               derive_seed(cell.seed, {stream::kPrice}),
               cfg.training.trace_stride};
  return s;
}

inline double mean_of(const std::vector<double>& xs) {
  if (xs.empty()) return 0.0;
  return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

inline double std_error_of(const std::vector<double>& xs) {
  if (xs.size() < 2) return 0.0;
  const double m = mean_of(xs);
  double ss = 0.0;
  for (double x : xs) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(xs.size() - 1) / static_cast<double>(xs.size()));
}

/// Evaluates frozen greedy policies of all agents together. Each run starts a
/// fresh day (slot 1, empty battery, demand and price drawn uniformly) from
/// seeds that depend on the run number only, so every variant faces the same
/// exogenous draws.
inline void evaluate_cell(const ScenarioConfig& cfg, const CellSpec& cell, const std::vector<QTable>& tables,
                          bool settlement, CellResult& out) {
  const std::size_t n = tables.size();
  std::vector<std::uint64_t> before(n);
  for (std::size_t i = 0; i < n; ++i) before[i] = tables[i].checksum();
  const int steps = cfg.slots_per_day * cfg.evaluation.days_per_run;
  std::vector<int> trades(n);
  for (std::uint64_t run = 0; run < cfg.evaluation.runs; ++run) {
    const std::uint64_t run_seed = derive_seed(cell.seed, {stream::kEvaluation, run});
    Rng price_rng(derive_seed(run_seed, {stream::kPrice}));
    FiniteMarkovChain price = cfg.price_chain();
    price.set_state(uniform_index(price_rng, price.size()));
    std::vector<MicrogridEnv> envs;
    envs.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      envs.emplace_back(cfg.grid_params(i, cell.penalty), cell.variant, cfg.demand_chain(i),
                        cfg.microgrids[i].renewable, derive_seed(run_seed, {stream::kEnvironment, i}));
      envs[i].reset(uniform_index(envs[i].rng(), envs[i].demand_chain().size()), price.value());
    }
    std::vector<double> totals(n, 0.0);
    for (int t = 0; t < steps; ++t) {
      const int price_now = price.value();
      const int slot = envs.front().state().slot;
      const int next_price = price.sample(price_rng);
      for (std::size_t i = 0; i < n; ++i) {
        const auto action = greedy_action(tables[i], envs[i].state());
        trades[i] = action.trade - subset_energy(envs[i].state().jobs, action.subset);
        totals[i] += envs[i].advance(action, next_price).reward;
      }
      if (settlement) {
        const std::uint64_t day = run * static_cast<std::uint64_t>(cfg.evaluation.days_per_run) +
                                  static_cast<std::uint64_t>(t / cfg.slots_per_day);
        out.flows.push_back({day, settle(trades, slot, price_now)});
      }
    }
    for (std::size_t i = 0; i < n; ++i) out.agents[i].run_profits.push_back(totals[i] / steps);
  }
  for (std::size_t i = 0; i < n; ++i) {
    auto& a = out.agents[i];
    a.mean_profit = mean_of(a.run_profits);
    a.std_error = std_error_of(a.run_profits);
    a.frozen = tables[i].checksum() == before[i];
  }
}

inline CellResult run_cell(const ScenarioConfig& cfg, const CellSpec& cell, std::uint64_t cycles, bool settlement) {
  CellResult out;
  out.spec = cell;
  const std::size_t n = cfg.microgrids.size();
  out.agents.resize(n);
  std::vector<QTable> tables;
  tables.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto trained = train(agent_setup(cfg, i, cell), cycles);
    auto& a = out.agents[i];
    a.trace = std::move(trained.trace);
    a.reference_state = trained.table.state(*trained.table.reference_state());
    a.states_visited = trained.table.state_count();
    a.training_mean_reward = trained.mean_reward;
    tables.push_back(std::move(trained.table));
  }
  evaluate_cell(cfg, cell, tables, settlement, out);
  return out;
}

/// Trains and evaluates every (variant, penalty, seed) cell. Cells are
/// independent and may run on `parallel` worker threads; results are stored
/// in a fixed order so output does not depend on scheduling.
inline EvaluationReport run_experiment(const ScenarioConfig& cfg, const RunOptions& opts) {
  cfg.validate();
  EvaluationReport report;
  report.scenario = cfg.name;
  report.cycles = opts.cycles;
  report.runs = cfg.evaluation.runs;
  for (const auto& mg : cfg.microgrids) report.agent_names.push_back(mg.name);

  std::vector<CellSpec> specs;
  for (auto seed : opts.seeds)
    for (auto v : opts.variants)
      for (double c : opts.penalties) specs.push_back({v, c, seed});
  report.cells.resize(specs.size());

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::size_t k = next++; k < specs.size(); k = next++) {
      try {
        report.cells[k] = run_cell(cfg, specs[k], opts.cycles, opts.settlement);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  const unsigned threads = std::max(1u, std::min<unsigned>(opts.parallel, static_cast<unsigned>(specs.size())));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);
  return report;
}

/// Per-penalty, per-microgrid difference of mean profits between two
/// variants, averaged across seeds.
struct GapRow {
  Variant baseline = Variant::NonAdl;
  double penalty = 0.0;
  std::size_t agent = 0;
  std::vector<double> per_seed;
  double mean = 0.0;
  double std_error = 0.0;
};

struct GapReport {
  std::vector<GapRow> rows;
  std::vector<std::string> flags;  // expected orderings that did not hold
  std::vector<std::string> verdicts;  // one per microgrid: gap growth pass/flag

  const GapRow* find(Variant baseline, double penalty, std::size_t agent) const {
    for (const auto& r : rows)
      if (r.baseline == baseline && r.penalty == penalty && r.agent == agent) return &r;
    return nullptr;
  }
};

inline std::string penalty_label(double c) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", c);
  return buf;
}

/// Gaps of AdlSharing over NonAdl and over GreedyAdl. Orderings expected from
/// the model (AdlSharing above GreedyAdl at the smallest penalty, the NonAdl
/// gap larger at the largest penalty than at the smallest) are checked and
/// reported as flags rather than errors.
inline GapReport compare_models(const EvaluationReport& report, const std::vector<double>& penalties,
                                const std::vector<std::uint64_t>& seeds, Variant subject = Variant::AdlSharing) {
  GapReport out;
  const std::size_t n = report.agent_names.size();
  for (Variant baseline : {Variant::NonAdl, Variant::GreedyAdl}) {
    bool have = true;
    for (double c : penalties)
      for (auto seed : seeds) have = have && report.find(baseline, c, seed) && report.find(subject, c, seed);
    if (!have) {
      if (baseline == Variant::NonAdl || subject == baseline)
        throw ConfigError("compare: missing reports for variant " + std::string(to_string(baseline)) + " or " +
                          std::string(to_string(subject)));
      continue;
    }
    for (double c : penalties) {
      for (std::size_t i = 0; i < n; ++i) {
        GapRow row{baseline, c, i, {}, 0.0, 0.0};
        for (auto seed : seeds)
          row.per_seed.push_back(report.find(subject, c, seed)->agents[i].mean_profit -
                                 report.find(baseline, c, seed)->agents[i].mean_profit);
        row.mean = mean_of(row.per_seed);
        row.std_error = std_error_of(row.per_seed);
        out.rows.push_back(std::move(row));
      }
    }
  }
  if (penalties.empty()) return out;
  const auto [cmin, cmax] = std::minmax_element(penalties.begin(), penalties.end());
  for (std::size_t i = 0; i < n; ++i) {
    const auto& name = report.agent_names[i];
    if (const auto* g = out.find(Variant::GreedyAdl, *cmin, i); g && !(g->mean > 0.0))
      out.flags.push_back(name + ": " + std::string(to_string(subject)) + " does not beat greedy-adl at c=" +
                          penalty_label(*cmin));
    const auto* lo = out.find(Variant::NonAdl, *cmin, i);
    const auto* hi = out.find(Variant::NonAdl, *cmax, i);
    const bool grows = hi->mean > lo->mean;
    out.verdicts.push_back(name + ": " + (grows ? "pass" : "flag"));
    if (!grows) out.flags.push_back(name + ": non-adl gap does not grow from c=" + penalty_label(*cmin) + " to c=" +
                                    penalty_label(*cmax));
    std::vector<double> sorted(penalties.begin(), penalties.end());
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t k = 1; k < sorted.size(); ++k) {
      const auto* a = out.find(Variant::NonAdl, sorted[k - 1], i);
      const auto* b = out.find(Variant::NonAdl, sorted[k], i);
      if (b->mean < a->mean)
        out.flags.push_back(name + ": non-adl gap dips between c=" + penalty_label(sorted[k - 1]) + " and c=" +
                            penalty_label(sorted[k]));
    }
  }
  return out;
}

}  // namespace mgrid
