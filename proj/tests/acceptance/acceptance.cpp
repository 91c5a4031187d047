// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// nonzero if any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "mgrid/mgrid.hpp"
#include "support/generators.hpp"

using namespace mgrid;

namespace {

struct Verdict {
  int id;
  const char* name;
  bool pass;
  std::string detail;
  double seconds;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double relative_tail_sd(const std::vector<TracePoint>& trace) {
  const std::size_t start = trace.size() - trace.size() / 10;
  const auto n = static_cast<double>(trace.size() - start);
  double mean = 0.0;
  for (std::size_t i = start; i < trace.size(); ++i) mean += trace[i].f_of_q;
  mean /= n;
  double ss = 0.0;
  for (std::size_t i = start; i < trace.size(); ++i) ss += (trace[i].f_of_q - mean) * (trace[i].f_of_q - mean);
  return std::sqrt(ss / (n - 1.0)) / std::abs(mean);
}

template <class F>
Verdict timed(int id, const char* name, F&& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Verdict v{id, name, false, {}, 0.0};
  try {
    body(v);
  } catch (const std::exception& e) {
    v.pass = false;
    v.detail = std::string("exception: ") + e.what();
  }
  v.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::printf("[%s] %d %s: %s (%.1fs)\n", v.pass ? "PASS" : "FAIL", v.id, v.name, v.detail.c_str(), v.seconds);
  std::fflush(stdout);
  return v;
}

void oracle_equivalence(Verdict& v) {
  const auto cfg = tiny_scenario();
  const auto problem = cfg.oracle_problem(0, Variant::AdlSharing, 5.0);
  const auto mdp = enumerate_mdp(problem);
  const auto rvi = relative_value_iteration(mdp);
  const auto trained = train(agent_setup(cfg, 0, {Variant::AdlSharing, 5.0, cfg.master_seed}), 1'000'000);
  const auto cmp = compare_with_oracle(mdp, rvi, trained.table, 100, 0.05 * std::abs(rvi.gain));
  const bool gain_ok = rvi.converged && cmp.relative_error <= 0.05;
  const bool policy_ok = cmp.exact_matches == cmp.compared_states;
  v.pass = gain_ok && policy_ok;
  v.detail = fmt(
      "oracle gain %.4f, f(Q) %.4f, error %.2f%% (%s); greedy action optimal on %zu/%zu states with >=100 visits "
      "(%s); max action-value shortfall %.4f, %zu/%zu within 5%% of |gain|; exact gain of greedy policy %.4f",
      rvi.gain, cmp.learner_f, 100.0 * cmp.relative_error, gain_ok ? "ok" : "too far", cmp.exact_matches,
      cmp.compared_states, policy_ok ? "ok" : "mismatch", cmp.max_regret, cmp.near_optimal, cmp.compared_states,
      cmp.learner_policy_gain);
}

struct Sweep {
  ScenarioConfig cfg;
  std::vector<std::uint64_t> seeds;
  EvaluationReport report;
};

Sweep run_sweep() {
  Sweep s{default_scenario(), {}, {}};
  s.cfg.training.cycles = 1'000'000;
  s.cfg.evaluation.runs = 1000;
  s.seeds = s.cfg.replicate_seeds();
  auto opts = RunOptions::from(s.cfg);
  opts.seeds = s.seeds;
  opts.parallel = std::max(1u, std::thread::hardware_concurrency());
  s.report = run_experiment(s.cfg, opts);
  return s;
}

void convergence_shape(Verdict& v, const Sweep& s) {
  v.pass = true;
  std::ostringstream d;
  d << "last-decile sd/|mean| of f(Q), c=0, seed " << s.seeds.front() << ":";
  for (Variant var : s.cfg.variants) {
    const auto* cell = s.report.find(var, 0.0, s.seeds.front());
    d << ' ' << to_string(var) << " [";
    for (std::size_t i = 0; i < cell->agents.size(); ++i) {
      const double r = relative_tail_sd(cell->agents[i].trace);
      const double mean = cell->agents[i].trace.back().f_of_q;
      v.pass = v.pass && r <= 0.02;
      d << (i ? " " : "") << s.report.agent_names[i] << ' ' << fmt("%.2f%%", 100.0 * r) << fmt(" (f=%.3f)", mean)
        << (r <= 0.02 ? "" : "!");
    }
    d << ']';
  }
  v.detail = d.str();
}

void model_ordering(Verdict& v, const Sweep& s) {
  int passing = 0;
  std::ostringstream d;
  d << "seeds where adl-sharing and non-adl both beat greedy-adl for every microgrid:";
  for (auto seed : s.seeds) {
    const auto* sharing = s.report.find(Variant::AdlSharing, 0.0, seed);
    const auto* greedy = s.report.find(Variant::GreedyAdl, 0.0, seed);
    const auto* plain = s.report.find(Variant::NonAdl, 0.0, seed);
    bool ok = true;
    for (std::size_t i = 0; i < greedy->agents.size(); ++i)
      ok = ok && sharing->agents[i].mean_profit > greedy->agents[i].mean_profit &&
           plain->agents[i].mean_profit > greedy->agents[i].mean_profit;
    passing += ok;
    d << ' ' << (ok ? "yes" : "no");
  }
  v.pass = 2 * passing > static_cast<int>(s.seeds.size());
  d << fmt(" (%d/%zu)", passing, s.seeds.size());
  v.detail = d.str();
}

void gap_growth(Verdict& v, const Sweep& s) {
  const auto gaps = compare_models(s.report, s.cfg.penalties, s.seeds);
  v.pass = true;
  std::ostringstream d;
  d << "mean gap adl-sharing - non-adl, c=0 -> c=30:";
  for (std::size_t i = 0; i < s.report.agent_names.size(); ++i) {
    const auto* lo = gaps.find(Variant::NonAdl, 0.0, i);
    const auto* hi = gaps.find(Variant::NonAdl, 30.0, i);
    const bool ok = hi->mean > lo->mean;
    v.pass = v.pass && ok;
    d << ' ' << s.report.agent_names[i] << fmt(" %.3f -> %.3f", lo->mean, hi->mean) << (ok ? "" : "!");
  }
  for (const auto& f : gaps.flags) d << "; flag " << f;
  v.detail = d.str();
}

void table_one(Verdict& v) {
  const auto t = table1_regression();
  v.pass = t.passed();
  v.detail = fmt("MG-1 profit scenario 3 %.1f vs scenario 2 %.1f; scenario 1 unmet MG-2/t1 %d, MG-1/t2 %d", t.profit[2][0],
                 t.profit[1][0], t.unmet[0][1][0], t.unmet[0][0][1]);
}

std::string csv_bytes(const EvaluationReport& r) {
  std::ostringstream o;
  write_convergence_csv(r, o);
  write_profits_csv(r, o);
  write_runs_csv(r, o);
  write_flows_csv(r, o);
  return o.str();
}

void invariants(Verdict& v) {
  const std::size_t feasibility = fixtures::sweep_feasibility(100'000, 101);
  const auto traj = fixtures::sweep_trajectories(500, 200, 102);
  const std::size_t rewards = fixtures::sweep_rewards(100'000, 103);
  const auto settlement = fixtures::sweep_settlement(100'000, 104);

  auto cfg = default_scenario();
  cfg.training.cycles = 50'000;
  cfg.evaluation.runs = 200;
  cfg.penalties = {0.0, 30.0};
  auto opts = RunOptions::from(cfg);
  const auto with = run_experiment(cfg, opts);
  const auto again = run_experiment(cfg, opts);
  opts.settlement = false;
  const auto without = run_experiment(cfg, opts);
  std::size_t neutrality = 0, frozen = 0;
  for (std::size_t k = 0; k < with.cells.size(); ++k)
    for (std::size_t i = 0; i < with.cells[k].agents.size(); ++i) {
      neutrality += with.cells[k].agents[i].run_profits != without.cells[k].agents[i].run_profits;
      frozen += !with.cells[k].agents[i].frozen;
    }
  const bool deterministic = csv_bytes(with) == csv_bytes(again);

  v.pass = feasibility == 0 && traj.total() == 0 && rewards == 0 && settlement.total() == 0 && neutrality == 0 &&
           frozen == 0 && deterministic;
  v.detail = fmt(
      "violations: feasibility %zu, battery %zu, job conservation %zu, deadlines %zu, reward recomputation %zu, "
      "settlement %zu, reward neutrality %zu, frozen policies %zu; CSVs byte-identical: %s",
      feasibility, traj.battery, traj.conservation, traj.deadlines, rewards, settlement.total(), neutrality, frozen,
      deterministic ? "yes" : "no");
}

}  // namespace

int main() {
  std::vector<Verdict> verdicts;
  verdicts.push_back(timed(1, "oracle equivalence", oracle_equivalence));

  Sweep sweep;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    sweep = run_sweep();
  } catch (const std::exception& e) {
    std::printf("sweep failed: %s\n", e.what());
    return 1;
  }
  std::printf("       default scenario: 3 variants x 4 penalties x 5 seeds, 1e6 cycles, 1000 runs (%.1fs)\n",
              std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  verdicts.push_back(timed(2, "convergence shape", [&](Verdict& v) { convergence_shape(v, sweep); }));
  verdicts.push_back(timed(3, "model ordering at c=0", [&](Verdict& v) { model_ordering(v, sweep); }));
  verdicts.push_back(timed(4, "gap growth with penalty", [&](Verdict& v) { gap_growth(v, sweep); }));
  verdicts.push_back(timed(5, "two-interval regression", table_one));
  verdicts.push_back(timed(6, "invariant suite", invariants));

  int failed = 0;
  for (const auto& v : verdicts) failed += !v.pass;
  std::printf("%zu/%zu criteria passed\n", verdicts.size() - failed, verdicts.size());
  return failed ? 1 : 0;
}
