#pragma once

#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "mgrid/domain.hpp"
#include "mgrid/errors.hpp"
#include "mgrid/learner.hpp"
#include "mgrid/oracle.hpp"
#include "mgrid/processes.hpp"
#include "mgrid/random.hpp"

namespace mgrid {

struct MicrogridConfig {
  std::string name;
  int battery_capacity = 8;
  int max_grid_buy = 14;
  RenewableSource renewable;
  std::vector<AdlJob> daily_jobs;
  std::optional<Matrix> demand_matrix;  // overrides the seeded random matrix
};

/// A finite alphabet with either an explicit matrix or a seed for
/// random_stochastic_matrix. `memoryless` draws one random row and repeats it.
struct ChainConfig {
  std::vector<int> alphabet;
  std::uint64_t seed = 0;
  std::optional<Matrix> matrix;
  bool memoryless = false;
};

struct TrainingConfig {
  std::uint64_t cycles = 1'000'000;
  LearningSchedule schedule;
  std::uint64_t trace_stride = 1000;
};

struct EvaluationConfig {
  std::uint64_t runs = 1000;
  int days_per_run = 1;
};

struct ScenarioConfig {
  std::string name = "scenario";
  int slots_per_day = 4;
  std::vector<MicrogridConfig> microgrids;
  ChainConfig demand;
  ChainConfig price;
  std::vector<Variant> variants{Variant::AdlSharing, Variant::GreedyAdl, Variant::NonAdl};
  std::vector<double> penalties{0.0};
  TrainingConfig training;
  EvaluationConfig evaluation;
  std::uint64_t master_seed = 1;
  std::uint64_t replicates = 5;  // seeds used by compare
  bool penalize_scheduled_at_deadline = false;
  bool settlement = true;

  void validate() const;

  GridParams grid_params(std::size_t agent, double penalty) const {
    const auto& mg = microgrids.at(agent);
    GridParams p;
    p.battery_capacity = mg.battery_capacity;
    p.max_grid_buy = mg.max_grid_buy;
    p.penalty = penalty;
    p.slots_per_day = slots_per_day;
    p.daily_jobs = mg.daily_jobs;
    p.penalize_scheduled_at_deadline = penalize_scheduled_at_deadline;
    return p;
  }

  FiniteMarkovChain demand_chain(std::size_t agent) const {
    const auto& mg = microgrids.at(agent);
    if (mg.demand_matrix) return {demand.alphabet, *mg.demand_matrix};
    return {demand.alphabet, chain_matrix(demand, derive_seed(demand.seed, {stream::kDemandMatrix, agent}))};
  }

  FiniteMarkovChain price_chain() const {
    if (price.matrix) return {price.alphabet, *price.matrix};
    return {price.alphabet, chain_matrix(price, price.seed)};
  }

  OracleProblem oracle_problem(std::size_t agent, Variant variant, double penalty) const {
    return {grid_params(agent, penalty), variant, demand_chain(agent), price_chain(), microgrids.at(agent).renewable};
  }

  /// Seeds of the replicate runs: derive_seed(master_seed, {replicate, k}).
  std::vector<std::uint64_t> replicate_seeds() const {
    std::vector<std::uint64_t> out;
    for (std::uint64_t k = 0; k < replicates; ++k) out.push_back(derive_seed(master_seed, {stream::kReplicate, k}));
    return out;
  }

 private:
  static Matrix chain_matrix(const ChainConfig& chain, std::uint64_t seed) {
    if (!chain.memoryless) return random_stochastic_matrix(chain.alphabet.size(), seed);
    auto row = random_stochastic_matrix(chain.alphabet.size(), seed).front();
    return Matrix(chain.alphabet.size(), row);
  }
};

namespace detail {

inline std::string at(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

inline void check_matrix(const Matrix& m, std::size_t n, const std::string& path) {
  if (m.size() != n) throw ConfigError(path + ": expected " + std::to_string(n) + " rows");
  validate_stochastic(m, path);
}

}  // namespace detail

inline void ScenarioConfig::validate() const {
  if (slots_per_day < 1) throw ConfigError("slots_per_day: must be >= 1");
  if (microgrids.empty()) throw ConfigError("microgrids: at least one microgrid required");
  for (std::size_t i = 0; i < microgrids.size(); ++i) {
    const std::string path = "microgrids[" + std::to_string(i) + "]";
    const auto& mg = microgrids[i];
    try {
      grid_params(i, 0.0).validate();
      mg.renewable.validate(slots_per_day);
    } catch (const ConfigError& e) {
      throw ConfigError(path + "." + e.what());
    }
    if (mg.daily_jobs.size() > kMaxSubsetJobs)
      throw ConfigError(path + ".daily_jobs: more than " + std::to_string(kMaxSubsetJobs) + " jobs");
    if (mg.demand_matrix) detail::check_matrix(*mg.demand_matrix, demand.alphabet.size(), path + ".demand_matrix");
  }
  auto check_chain = [](const ChainConfig& c, const std::string& path) {
    if (c.alphabet.empty()) throw ConfigError(path + ".alphabet: must not be empty");
    try {
      FiniteMarkovChain probe(c.alphabet, Matrix(c.alphabet.size(), std::vector<double>(c.alphabet.size(),
                                                                                         1.0 / c.alphabet.size())));
    } catch (const ConfigError& e) {
      throw ConfigError(path + ".alphabet: " + e.what());
    }
    if (c.matrix) detail::check_matrix(*c.matrix, c.alphabet.size(), path + ".matrix");
  };
  check_chain(demand, "demand");
  check_chain(price, "price");
  if (variants.empty()) throw ConfigError("variants: at least one variant required");
  if (penalties.empty()) throw ConfigError("penalties: at least one value required");
  for (std::size_t i = 0; i < penalties.size(); ++i)
    if (!(penalties[i] >= 0.0)) throw ConfigError("penalties[" + std::to_string(i) + "]: must be >= 0");
  try {
    training.schedule.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(std::string("training.") + e.what());
  }
  if (training.trace_stride == 0) throw ConfigError("training.trace_stride: must be >= 1");
  if (evaluation.runs == 0) throw ConfigError("evaluation.runs: must be >= 1");
  if (evaluation.days_per_run < 1) throw ConfigError("evaluation.days_per_run: must be >= 1");
  if (replicates == 0) throw ConfigError("replicates: must be >= 1");
}

/// The three-microgrid network: two solar and one wind microgrid, 4 slots a
/// day, demand in {2,4,6}, price in {5,10,15}, B = 8, M = 14, renewables
/// capped at 8, jobs (1,2), (1,3), (2,4) each morning, c in {0,5,10,30}.
inline ScenarioConfig default_scenario() {
  ScenarioConfig cfg;
  cfg.name = "three-microgrid";
  cfg.slots_per_day = 4;
  const std::vector<AdlJob> jobs{{1, 2}, {1, 3}, {2, 4}};
  const RenewableKind kinds[] = {RenewableKind::Solar, RenewableKind::Solar, RenewableKind::Wind};
  for (int i = 0; i < 3; ++i) {
    MicrogridConfig mg;
    mg.name = "mg" + std::to_string(i + 1);
    mg.battery_capacity = 8;
    mg.max_grid_buy = 14;
    mg.renewable = RenewableSource::with_default_profile(kinds[i], cfg.slots_per_day, 8);
    mg.daily_jobs = jobs;
    cfg.microgrids.push_back(std::move(mg));
  }
  cfg.demand = {{2, 4, 6}, 1001, std::nullopt, false};
  cfg.price = {{5, 10, 15}, 2002, std::nullopt, false};
  cfg.penalties = {0.0, 5.0, 10.0, 30.0};
  return cfg;
}

/// One microgrid, two slots, small alphabets: small enough for the exact
/// solver. The demand chain is memoryless so the agent-visible state is
/// Markov.
inline ScenarioConfig tiny_scenario() {
  ScenarioConfig cfg;
  cfg.name = "tiny";
  cfg.slots_per_day = 2;
  MicrogridConfig mg;
  mg.name = "mg1";
  mg.battery_capacity = 2;
  mg.max_grid_buy = 4;
  mg.renewable = {RenewableKind::Solar, {1.0, 2.0}, 2};
  mg.daily_jobs = {{1, 1}};
  cfg.microgrids.push_back(std::move(mg));
  cfg.demand = {{2, 4}, 3003, std::nullopt, true};
  cfg.price = {{5, 10}, 4004, std::nullopt, false};
  cfg.variants = {Variant::AdlSharing};
  cfg.penalties = {5.0};
  return cfg;
}

// ---------------------------------------------------------------------------
// JSON

namespace detail {

using nlohmann::json;

template <class T>
T get(const json& j, const std::string& key, const std::string& path, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(at(path, key) + ": wrong type");
  }
}

inline void reject_unknown(const json& j, std::initializer_list<const char*> known, const std::string& path) {
  if (!j.is_object()) throw ConfigError((path.empty() ? std::string("<root>") : path) + ": expected an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* k : known) ok = ok || it.key() == k;
    if (!ok) throw ConfigError(at(path, it.key()) + ": unknown field");
  }
}

inline std::vector<AdlJob> jobs_from_json(const json& j, const std::string& path) {
  std::vector<AdlJob> jobs;
  if (!j.is_array()) throw ConfigError(path + ": expected a list of [energy, deadline] pairs");
  for (std::size_t i = 0; i < j.size(); ++i) {
    const auto& e = j[i];
    if (!e.is_array() || e.size() != 2 || !e[0].is_number_integer() || !e[1].is_number_integer())
      throw ConfigError(path + "[" + std::to_string(i) + "]: expected [energy, deadline]");
    jobs.push_back({e[0].get<int>(), e[1].get<int>()});
  }
  return jobs;
}

inline ChainConfig chain_from_json(const json& j, const std::string& path) {
  reject_unknown(j, {"alphabet", "seed", "matrix", "memoryless"}, path);
  ChainConfig c;
  c.alphabet = get<std::vector<int>>(j, "alphabet", path, {});
  if (!j.contains("seed") && !j.contains("matrix")) throw ConfigError(at(path, "seed") + ": missing");
  c.seed = get<std::uint64_t>(j, "seed", path, 0);
  if (j.contains("matrix")) c.matrix = get<Matrix>(j, "matrix", path, {});
  c.memoryless = get<bool>(j, "memoryless", path, false);
  return c;
}

inline json chain_to_json(const ChainConfig& c) {
  json j{{"alphabet", c.alphabet}, {"seed", c.seed}, {"memoryless", c.memoryless}};
  if (c.matrix) j["matrix"] = *c.matrix;
  return j;
}

}  // namespace detail

inline nlohmann::json to_json(const ScenarioConfig& cfg) {
  using nlohmann::json;
  json mgs = json::array();
  for (const auto& mg : cfg.microgrids) {
    json jobs = json::array();
    for (const auto& job : mg.daily_jobs) jobs.push_back({job.energy, job.deadline});
    json m{{"name", mg.name},
           {"battery_capacity", mg.battery_capacity},
           {"max_grid_buy", mg.max_grid_buy},
           {"renewable",
            {{"kind", std::string(to_string(mg.renewable.kind))}, {"cap", mg.renewable.cap}, {"rates", mg.renewable.slot_rates}}},
           {"daily_jobs", jobs}};
    if (mg.demand_matrix) m["demand_matrix"] = *mg.demand_matrix;
    mgs.push_back(std::move(m));
  }
  json variants = json::array();
  for (auto v : cfg.variants) variants.push_back(std::string(to_string(v)));
  const auto& s = cfg.training.schedule;
  return json{
      {"name", cfg.name},
      {"slots_per_day", cfg.slots_per_day},
      {"microgrids", mgs},
      {"demand", detail::chain_to_json(cfg.demand)},
      {"price", detail::chain_to_json(cfg.price)},
      {"variants", variants},
      {"penalties", cfg.penalties},
      {"training",
       {{"cycles", cfg.training.cycles},
        {"step_rule", s.rule == LearningSchedule::StepRule::Harmonic ? "harmonic" : "constant"},
        {"c0", s.c0},
        {"c1", s.c1},
        {"epsilon", s.epsilon},
        {"epsilon_final", s.epsilon_final},
        {"trace_stride", cfg.training.trace_stride}}},
      {"evaluation", {{"runs", cfg.evaluation.runs}, {"days_per_run", cfg.evaluation.days_per_run}}},
      {"master_seed", cfg.master_seed},
      {"replicates", cfg.replicates},
      {"penalize_scheduled_at_deadline", cfg.penalize_scheduled_at_deadline},
      {"settlement", cfg.settlement},
  };
}

/// Parses and validates. Every error names the offending field path.
inline ScenarioConfig scenario_from_json(const nlohmann::json& j) {
  using detail::get;
  detail::reject_unknown(j,
                         {"name", "slots_per_day", "microgrids", "demand", "price", "variants", "penalties",
                          "training", "evaluation", "master_seed", "replicates",
                          "penalize_scheduled_at_deadline", "settlement"},
                         "");
  ScenarioConfig cfg;
  cfg.name = get<std::string>(j, "name", "", cfg.name);
  cfg.slots_per_day = get<int>(j, "slots_per_day", "", cfg.slots_per_day);
  if (!j.contains("microgrids") || !j["microgrids"].is_array())
    throw ConfigError("microgrids: expected a list");
  for (std::size_t i = 0; i < j["microgrids"].size(); ++i) {
    const std::string path = "microgrids[" + std::to_string(i) + "]";
    const auto& m = j["microgrids"][i];
    detail::reject_unknown(m, {"name", "battery_capacity", "max_grid_buy", "renewable", "daily_jobs", "demand_matrix"},
                           path);
    MicrogridConfig mg;
    mg.name = get<std::string>(m, "name", path, "mg" + std::to_string(i + 1));
    mg.battery_capacity = get<int>(m, "battery_capacity", path, mg.battery_capacity);
    mg.max_grid_buy = get<int>(m, "max_grid_buy", path, mg.max_grid_buy);
    if (!m.contains("renewable")) throw ConfigError(path + ".renewable: missing");
    const auto& r = m["renewable"];
    const std::string rpath = path + ".renewable";
    detail::reject_unknown(r, {"kind", "cap", "rates"}, rpath);
    try {
      mg.renewable.kind = parse_renewable_kind(get<std::string>(r, "kind", rpath, "none"));
    } catch (const ConfigError& e) {
      throw ConfigError(rpath + ".kind: " + e.what());
    }
    mg.renewable.cap = get<int>(r, "cap", rpath, 8);
    if (r.contains("rates")) {
      mg.renewable.slot_rates = get<std::vector<double>>(r, "rates", rpath, {});
    } else {
      mg.renewable = RenewableSource::with_default_profile(mg.renewable.kind, cfg.slots_per_day, mg.renewable.cap);
    }
    if (m.contains("daily_jobs")) mg.daily_jobs = detail::jobs_from_json(m["daily_jobs"], path + ".daily_jobs");
    if (m.contains("demand_matrix")) mg.demand_matrix = get<Matrix>(m, "demand_matrix", path, {});
    cfg.microgrids.push_back(std::move(mg));
  }
  if (!j.contains("demand")) throw ConfigError("demand: missing");
  if (!j.contains("price")) throw ConfigError("price: missing");
  cfg.demand = detail::chain_from_json(j["demand"], "demand");
  cfg.price = detail::chain_from_json(j["price"], "price");
  if (j.contains("variants")) {
    cfg.variants.clear();
    const auto names = get<std::vector<std::string>>(j, "variants", "", {});
    for (std::size_t i = 0; i < names.size(); ++i) {
      try {
        cfg.variants.push_back(parse_variant(names[i]));
      } catch (const ConfigError& e) {
        throw ConfigError("variants[" + std::to_string(i) + "]: " + e.what());
      }
    }
  }
  cfg.penalties = get<std::vector<double>>(j, "penalties", "", cfg.penalties);
  if (j.contains("training")) {
    const auto& t = j["training"];
    detail::reject_unknown(t, {"cycles", "step_rule", "c0", "c1", "epsilon", "epsilon_final", "trace_stride"},
                           "training");
    auto& s = cfg.training.schedule;
    cfg.training.cycles = get<std::uint64_t>(t, "cycles", "training", cfg.training.cycles);
    const auto rule = get<std::string>(t, "step_rule", "training", "harmonic");
    if (rule == "harmonic") {
      s.rule = LearningSchedule::StepRule::Harmonic;
    } else if (rule == "constant") {
      s.rule = LearningSchedule::StepRule::Constant;
    } else {
      throw ConfigError("training.step_rule: expected 'harmonic' or 'constant'");
    }
    s.c0 = get<double>(t, "c0", "training", s.c0);
    s.c1 = get<double>(t, "c1", "training", s.c1);
    s.epsilon = get<double>(t, "epsilon", "training", s.epsilon);
    s.epsilon_final = get<double>(t, "epsilon_final", "training", s.epsilon);
    cfg.training.trace_stride = get<std::uint64_t>(t, "trace_stride", "training", cfg.training.trace_stride);
  }
  if (j.contains("evaluation")) {
    const auto& e = j["evaluation"];
    detail::reject_unknown(e, {"runs", "days_per_run"}, "evaluation");
    cfg.evaluation.runs = get<std::uint64_t>(e, "runs", "evaluation", cfg.evaluation.runs);
    cfg.evaluation.days_per_run = get<int>(e, "days_per_run", "evaluation", cfg.evaluation.days_per_run);
  }
  if (!j.contains("master_seed")) throw ConfigError("master_seed: missing");
  cfg.master_seed = get<std::uint64_t>(j, "master_seed", "", cfg.master_seed);
  cfg.replicates = get<std::uint64_t>(j, "replicates", "", cfg.replicates);
  cfg.penalize_scheduled_at_deadline =
      get<bool>(j, "penalize_scheduled_at_deadline", "", cfg.penalize_scheduled_at_deadline);
  cfg.settlement = get<bool>(j, "settlement", "", cfg.settlement);
  cfg.validate();
  return cfg;
}

inline ScenarioConfig load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path + ": cannot open");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(path + ": " + e.what());
  }
  return scenario_from_json(j);
}

}  // namespace mgrid
