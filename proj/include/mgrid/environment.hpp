#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "mgrid/domain.hpp"
#include "mgrid/processes.hpp"
#include "mgrid/random.hpp"

namespace mgrid {

/// One microgrid's simulator: couples the domain transition with its own
/// demand chain and renewable source. Price is global and supplied by the
/// caller on every step.
///
/// Each step draws next renewable, then next demand, from the owned stream,
/// regardless of the action taken, so two environments with the same seed see
/// the same exogenous path under different policies.
class MicrogridEnv {
 public:
  MicrogridEnv(GridParams params, Variant variant, FiniteMarkovChain demand, RenewableSource renewable,
               std::uint64_t seed)
      : params_(std::move(params)),
        variant_(variant),
        demand_(std::move(demand)),
        renewable_(std::move(renewable)),
        rng_(seed) {
    params_.validate();
    renewable_.validate(params_.slots_per_day);
  }

  /// Start of a day: slot 1, empty battery, fresh daily jobs.
  void reset(std::size_t demand_index, int price) {
    demand_.set_state(demand_index);
    snap_ = {};
    snap_.battery = 0;
    snap_.renewable = renewable_.sample(1, rng_);
    snap_.non_adl_demand = demand_.value() + first_slot_extra();
    snap_.state.slot = 1;
    snap_.state.price = price;
    snap_.state.net_demand = snap_.renewable + snap_.battery - snap_.non_adl_demand;
    snap_.state.jobs = arrivals();
  }

  StepResult advance(const JointAction& action, int next_price) {
    const int next_slot = snap_.state.slot % params_.slots_per_day + 1;
    Exogenous exo;
    exo.renewable = renewable_.sample(next_slot, rng_);
    exo.demand = demand_.sample(rng_) + (next_slot == 1 ? first_slot_extra() : 0);
    exo.price = next_price;
    if (next_slot == 1) exo.new_jobs = arrivals();
    auto out = step(snap_, action, exo, params_, variant_);
    snap_ = out.next;
    return out;
  }

  const EnvSnapshot& snapshot() const noexcept { return snap_; }
  const MicrogridState& state() const noexcept { return snap_.state; }
  const GridParams& params() const noexcept { return params_; }
  Variant variant() const noexcept { return variant_; }
  std::size_t demand_index() const noexcept { return demand_.state(); }
  const FiniteMarkovChain& demand_chain() const noexcept { return demand_; }
  const RenewableSource& renewable() const noexcept { return renewable_; }
  Rng& rng() noexcept { return rng_; }

 private:
  int first_slot_extra() const {
    return variant_ == Variant::NonAdl ? params_.daily_job_energy() : 0;
  }

  std::vector<AdlJob> arrivals() const {
    if (variant_ == Variant::NonAdl) return {};
    auto jobs = params_.daily_jobs;
    canonicalize(jobs);
    return jobs;
  }

  GridParams params_;
  Variant variant_;
  FiniteMarkovChain demand_;
  RenewableSource renewable_;
  Rng rng_;
  EnvSnapshot snap_;
};

}  // namespace mgrid
