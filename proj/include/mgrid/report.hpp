#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <string>

#include <json.hpp>

#include "mgrid/errors.hpp"
#include "mgrid/experiment.hpp"

// CSV schemas (version 1). Every file starts with its header row.
//
//   convergence.csv  variant,penalty,seed,iteration,agent,f_of_Q,cumulative_mean_reward
//   profits.csv      variant,penalty,seed,agent,mean_profit,std_error,runs
//   runs.csv         variant,penalty,seed,agent,run,profit
//   flows.csv        variant,penalty,seed,day,slot,seller,buyer,units,price
//   gaps.csv         baseline,penalty,agent,mean_gap,std_error,seeds

namespace mgrid {

/// Shortest round-trip representation, so identical doubles print identically.
inline std::string format_number(double x) {
  char buf[32];
  double back = 0.0;
  for (int precision = 1; precision <= 17; ++precision) {
    std::snprintf(buf, sizeof buf, "%.*g", precision, x);
    std::sscanf(buf, "%lf", &back);
    if (back == x) break;
  }
  return buf;
}

namespace detail {

inline std::string cell_prefix(const CellSpec& c) {
  return std::string(to_string(c.variant)) + "," + format_number(c.penalty) + "," + std::to_string(c.seed);
}

inline std::string party(const EvaluationReport& r, int id) {
  return id == kMainGrid ? std::string("maingrid") : r.agent_names.at(static_cast<std::size_t>(id));
}

}  // namespace detail

inline void write_convergence_csv(const EvaluationReport& r, std::ostream& out) {
  out << "variant,penalty,seed,iteration,agent,f_of_Q,cumulative_mean_reward\n";
  for (const auto& cell : r.cells)
    for (std::size_t i = 0; i < cell.agents.size(); ++i)
      for (const auto& p : cell.agents[i].trace)
        out << detail::cell_prefix(cell.spec) << ',' << p.iteration << ',' << r.agent_names[i] << ','
            << format_number(p.f_of_q) << ',' << format_number(p.cumulative_mean_reward) << '\n';
}

inline void write_profits_csv(const EvaluationReport& r, std::ostream& out) {
  out << "variant,penalty,seed,agent,mean_profit,std_error,runs\n";
  for (const auto& cell : r.cells)
    for (std::size_t i = 0; i < cell.agents.size(); ++i)
      out << detail::cell_prefix(cell.spec) << ',' << r.agent_names[i] << ','
          << format_number(cell.agents[i].mean_profit) << ',' << format_number(cell.agents[i].std_error) << ','
          << cell.agents[i].run_profits.size() << '\n';
}

inline void write_runs_csv(const EvaluationReport& r, std::ostream& out) {
  out << "variant,penalty,seed,agent,run,profit\n";
  for (const auto& cell : r.cells)
    for (std::size_t i = 0; i < cell.agents.size(); ++i)
      for (std::size_t k = 0; k < cell.agents[i].run_profits.size(); ++k)
        out << detail::cell_prefix(cell.spec) << ',' << r.agent_names[i] << ',' << k << ','
            << format_number(cell.agents[i].run_profits[k]) << '\n';
}

inline void write_flows_csv(const EvaluationReport& r, std::ostream& out) {
  out << "variant,penalty,seed,day,slot,seller,buyer,units,price\n";
  for (const auto& cell : r.cells)
    for (const auto& d : cell.flows)
      for (const auto& f : d.record.flows)
        out << detail::cell_prefix(cell.spec) << ',' << d.day << ',' << d.record.slot << ','
            << detail::party(r, f.seller) << ',' << detail::party(r, f.buyer) << ',' << f.units << ','
            << format_number(d.record.price) << '\n';
}

inline void write_gaps_csv(const EvaluationReport& r, const GapReport& g, std::ostream& out) {
  out << "baseline,penalty,agent,mean_gap,std_error,seeds\n";
  for (const auto& row : g.rows)
    out << to_string(row.baseline) << ',' << format_number(row.penalty) << ',' << r.agent_names[row.agent] << ','
        << format_number(row.mean) << ',' << format_number(row.std_error) << ',' << row.per_seed.size() << '\n';
}

inline nlohmann::json report_json(const EvaluationReport& r, const GapReport* gaps = nullptr) {
  using nlohmann::json;
  json cells = json::array();
  for (const auto& cell : r.cells) {
    json agents = json::array();
    for (std::size_t i = 0; i < cell.agents.size(); ++i) {
      const auto& a = cell.agents[i];
      json ref_jobs = json::array();
      for (const auto& j : a.reference_state.jobs) ref_jobs.push_back({j.energy, j.deadline});
      agents.push_back({{"agent", r.agent_names[i]},
                        {"mean_profit", a.mean_profit},
                        {"std_error", a.std_error},
                        {"runs", a.run_profits.size()},
                        {"training_mean_reward", a.training_mean_reward},
                        {"states_visited", a.states_visited},
                        {"frozen", a.frozen},
                        {"reference_state",
                         {{"slot", a.reference_state.slot},
                          {"net_demand", a.reference_state.net_demand},
                          {"price", a.reference_state.price},
                          {"jobs", ref_jobs}}}});
    }
    int peer = 0, absorbed = 0, supplied = 0;
    for (const auto& d : cell.flows) {
      peer += d.record.peer_volume;
      absorbed += d.record.main_grid_absorbed();
      supplied += d.record.main_grid_sold();
    }
    cells.push_back({{"variant", std::string(to_string(cell.spec.variant))},
                     {"penalty", cell.spec.penalty},
                     {"seed", cell.spec.seed},
                     {"agents", agents},
                     {"settlement",
                      {{"peer_units", peer}, {"to_main_grid", absorbed}, {"from_main_grid", supplied}}}});
  }
  json out{{"schema", 1},
           {"scenario", r.scenario},
           {"build_id", r.build_id},
           {"cycles", r.cycles},
           {"evaluation_runs", r.runs},
           {"cells", cells}};
  if (gaps) {
    out["flags"] = gaps->flags;
    out["verdicts"] = gaps->verdicts;
  }
  return out;
}

inline void write_file(const std::filesystem::path& path, const std::string& contents) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error(path.string() + ": cannot write");
  f << contents;
}

}  // namespace mgrid
