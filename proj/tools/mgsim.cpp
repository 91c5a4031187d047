// mgsim: train, evaluate and compare microgrid energy-sharing agents.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mgrid/mgrid.hpp"
#include "mgrid/oracle_check.hpp"

namespace fs = std::filesystem;
using namespace mgrid;

namespace {

enum Exit { kOk = 0, kFailure = 1, kBadConfig = 2, kTooLarge = 3, kCheckFailed = 4 };

struct Common {
  std::string config;
  std::string out = ".";
  std::uint64_t seed = 0;
  bool has_seed = false;
  long long cycles = -1;
  std::vector<std::string> variants;
  unsigned parallel = 1;
  bool tiny = false;
};

ScenarioConfig load(const Common& c) {
  ScenarioConfig cfg = c.config.empty() ? (c.tiny ? tiny_scenario() : default_scenario()) : load_scenario(c.config);
  if (c.has_seed) cfg.master_seed = c.seed;
  if (c.cycles >= 0) cfg.training.cycles = static_cast<std::uint64_t>(c.cycles);
  if (!c.variants.empty()) {
    cfg.variants.clear();
    for (const auto& v : c.variants) cfg.variants.push_back(parse_variant(v));
  }
  cfg.validate();
  return cfg;
}

// Variant names are literals, so the view is null-terminated.
const char* name(Variant v) { return to_string(v).data(); }

template <class Writer>
void emit(const fs::path& dir, const char* name, Writer&& w) {
  std::ostringstream s;
  w(s);
  write_file(dir / name, s.str());
}

void write_report(const fs::path& dir, const EvaluationReport& r, const GapReport* gaps) {
  fs::create_directories(dir);
  emit(dir, "convergence.csv", [&](std::ostream& o) { write_convergence_csv(r, o); });
  emit(dir, "profits.csv", [&](std::ostream& o) { write_profits_csv(r, o); });
  emit(dir, "runs.csv", [&](std::ostream& o) { write_runs_csv(r, o); });
  emit(dir, "flows.csv", [&](std::ostream& o) { write_flows_csv(r, o); });
  if (gaps) emit(dir, "gaps.csv", [&](std::ostream& o) { write_gaps_csv(r, *gaps, o); });
  write_file(dir / "report.json", report_json(r, gaps).dump(2) + "\n");
}

void print_profits(const EvaluationReport& r) {
  for (const auto& cell : r.cells)
    for (std::size_t i = 0; i < cell.agents.size(); ++i)
      std::printf("%-12s c=%-5s seed=%-20llu %-6s profit %9.4f +- %.4f\n", name(cell.spec.variant),
                  format_number(cell.spec.penalty).c_str(), static_cast<unsigned long long>(cell.spec.seed),
                  r.agent_names[i].c_str(), cell.agents[i].mean_profit, cell.agents[i].std_error);
}

int gen_config(const Common& c) {
  const auto cfg = c.tiny ? tiny_scenario() : default_scenario();
  const std::string text = to_json(cfg).dump(2) + "\n";
  if (c.out == "-") {
    std::cout << text;
  } else {
    fs::path path = c.out;
    if (fs::is_directory(path)) path /= "scenario.json";
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    write_file(path, text);
    std::printf("wrote %s\n", path.string().c_str());
  }
  return kOk;
}

int train_cmd(const Common& c) {
  const auto cfg = load(c);
  EvaluationReport report;
  report.scenario = cfg.name;
  report.cycles = cfg.training.cycles;
  for (const auto& mg : cfg.microgrids) report.agent_names.push_back(mg.name);
  for (Variant v : cfg.variants)
    for (double pen : cfg.penalties) {
      CellResult cell;
      cell.spec = {v, pen, cfg.master_seed};
      for (std::size_t i = 0; i < cfg.microgrids.size(); ++i) {
        auto trained = train(agent_setup(cfg, i, cell.spec), cfg.training.cycles);
        AgentOutcome a;
        a.trace = std::move(trained.trace);
        a.states_visited = trained.table.state_count();
        a.training_mean_reward = trained.mean_reward;
        std::printf("%-12s c=%-5s %-6s states %6zu  f(Q) %9.4f  mean reward %9.4f\n", name(v),
                    format_number(pen).c_str(), report.agent_names[i].c_str(), a.states_visited,
                    trained.table.reference_value(), a.training_mean_reward);
        cell.agents.push_back(std::move(a));
      }
      report.cells.push_back(std::move(cell));
    }
  fs::create_directories(c.out);
  emit(c.out, "convergence.csv", [&](std::ostream& o) { write_convergence_csv(report, o); });
  return kOk;
}

int evaluate_cmd(const Common& c) {
  const auto cfg = load(c);
  auto opts = RunOptions::from(cfg);
  opts.parallel = c.parallel;
  const auto report = run_experiment(cfg, opts);
  write_report(c.out, report, nullptr);
  print_profits(report);
  return kOk;
}

int compare_cmd(const Common& c) {
  auto cfg = load(c);
  cfg.variants = {Variant::AdlSharing, Variant::GreedyAdl, Variant::NonAdl};
  auto opts = RunOptions::from(cfg);
  opts.seeds = cfg.replicate_seeds();
  opts.parallel = c.parallel;
  const auto report = run_experiment(cfg, opts);
  const auto gaps = compare_models(report, cfg.penalties, opts.seeds);
  write_report(c.out, report, &gaps);
  for (const auto& row : gaps.rows)
    std::printf("adl-sharing - %-10s c=%-5s %-6s gap %9.4f +- %.4f\n", name(row.baseline),
                format_number(row.penalty).c_str(), report.agent_names[row.agent].c_str(), row.mean, row.std_error);
  for (const auto& v : gaps.verdicts) std::printf("verdict %s\n", v.c_str());
  for (const auto& f : gaps.flags) std::printf("flag %s\n", f.c_str());
  return kOk;
}

int oracle_cmd(const Common& c, std::size_t max_pairs, double tolerance) {
  const auto cfg = load(c);
  fs::create_directories(c.out);
  std::ostringstream csv;
  csv << "variant,penalty,agent,states,pairs,oracle_gain,learner_f,relative_error,learner_policy_gain,"
         "compared_states,exact_matches,near_optimal\n";
  bool ok = true;
  for (Variant v : cfg.variants)
    for (double pen : cfg.penalties)
      for (std::size_t i = 0; i < cfg.microgrids.size(); ++i) {
        const auto problem = cfg.oracle_problem(i, v, pen);
        const auto mdp = enumerate_mdp(problem, max_pairs);
        const auto rvi = relative_value_iteration(mdp);
        const CellSpec spec{v, pen, cfg.master_seed};
        auto setup = agent_setup(cfg, i, spec);
        const auto trained = train(setup, cfg.training.cycles);
        const auto cmp = compare_with_oracle(mdp, rvi, trained.table, 100, tolerance * std::abs(rvi.gain));
        const bool pass = rvi.converged && cmp.relative_error <= tolerance;
        ok = ok && pass;
        std::printf("%-12s c=%-5s %-6s states %6zu pairs %8zu  oracle %9.4f  learner %9.4f  err %6.2f%%  "
                    "policy %zu/%zu optimal, %zu/%zu within tolerance  %s\n",
                    name(v), format_number(pen).c_str(), cfg.microgrids[i].name.c_str(), cmp.states, cmp.pairs,
                    cmp.oracle_gain, cmp.learner_f, 100.0 * cmp.relative_error, cmp.exact_matches,
                    cmp.compared_states, cmp.near_optimal, cmp.compared_states, pass ? "ok" : "MISMATCH");
        csv << to_string(v) << ',' << format_number(pen) << ',' << cfg.microgrids[i].name << ',' << cmp.states << ','
            << cmp.pairs << ',' << format_number(cmp.oracle_gain) << ',' << format_number(cmp.learner_f) << ','
            << format_number(cmp.relative_error) << ',' << format_number(cmp.learner_policy_gain) << ','
            << cmp.compared_states << ',' << cmp.exact_matches << ',' << cmp.near_optimal << '\n';
      }
  write_file(fs::path(c.out) / "oracle.csv", csv.str());
  return ok ? kOk : kCheckFailed;
}

int table1_cmd(double penalty) {
  const auto t = table1_regression(penalty);
  const char* names[3] = {"no sharing", "sharing A", "sharing B"};
  for (int sc = 0; sc < 3; ++sc) {
    std::printf("%-10s", names[sc]);
    for (int mg = 0; mg < 3; ++mg)
      std::printf("  MG-%d unmet %d,%d profit %6.2f", mg + 1, t.unmet[sc][mg][0], t.unmet[sc][mg][1],
                  t.profit[sc][mg]);
    std::printf("  main grid %d\n", t.main_grid_units[sc]);
  }
  std::printf("%s\n", t.passed() ? "table1 ok" : "table1 MISMATCH");
  return t.passed() ? kOk : kCheckFailed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Microgrid energy sharing with deferrable loads"};
  app.set_version_flag("--version", std::string(MGRID_BUILD_ID));
  app.require_subcommand(1);

  Common common;
  std::size_t max_pairs = kDefaultPairBound;
  double tolerance = 0.05;
  double table_penalty = 5.0;

  auto add_common = [&](CLI::App* sub, bool run_flags) {
    sub->add_option("--config", common.config, "scenario JSON (defaults to the built-in scenario)");
    sub->add_option("--out", common.out, "output directory");
    sub->add_flag("--tiny", common.tiny, "use the built-in single-microgrid instance");
    if (!run_flags) return;
    sub->add_option_function<std::uint64_t>(
        "--seed", [&](std::uint64_t s) { common.seed = s, common.has_seed = true; }, "master seed");
    sub->add_option("--cycles", common.cycles, "training cycles per agent")->check(CLI::NonNegativeNumber);
    sub->add_option("--variant", common.variants, "adl-sharing, greedy-adl or non-adl (repeatable)");
    sub->add_option("--parallel", common.parallel, "worker threads")->check(CLI::PositiveNumber);
  };

  auto* gen = app.add_subcommand("gen-config", "write a scenario JSON ('--out -' prints it)");
  add_common(gen, false);
  auto* tr = app.add_subcommand("train", "train agents and write convergence.csv");
  add_common(tr, true);
  auto* ev = app.add_subcommand("evaluate", "train, evaluate frozen policies and write all outputs");
  add_common(ev, true);
  auto* cmp = app.add_subcommand("compare", "run every variant over the replicate seeds and write gaps.csv");
  add_common(cmp, true);
  auto* orc = app.add_subcommand("oracle-check", "solve each agent's model exactly and compare with the learner");
  add_common(orc, true);
  orc->add_option("--max-pairs", max_pairs, "state-action pair bound");
  orc->add_option("--tolerance", tolerance, "relative gain tolerance");
  auto* t1 = app.add_subcommand("table1", "replay the two-interval three-microgrid example");
  t1->add_option("--penalty", table_penalty, "unmet-demand penalty");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) return gen_config(common);
    if (*tr) return train_cmd(common);
    if (*ev) return evaluate_cmd(common);
    if (*cmp) return compare_cmd(common);
    if (*orc) return oracle_cmd(common, max_pairs, tolerance);
    if (*t1) return table1_cmd(table_penalty);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kBadConfig;
  } catch (const SizeError& e) {
    std::fprintf(stderr, "too large: %s\n", e.what());
    return kTooLarge;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kFailure;
  }
  return kOk;
}
