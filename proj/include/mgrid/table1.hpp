#pragma once

#include <array>
#include <cstddef>

#include "mgrid/domain.hpp"
#include "mgrid/market.hpp"

namespace mgrid {

/// Three microgrids over two intervals with known demand and supply, price
/// higher in interval 2 and no main-grid purchases. Three hand-written
/// policies are replayed through the domain transition:
///   1. no sharing and no storage (surplus without storage is sold to the main grid);
///   2. MG-2 buys from MG-1 in interval 1, MG-3 stores, MG-1 buys from MG-3 in interval 2;
///   3. MG-2 buys from MG-3 in interval 1, MG-1 stores its surplus for interval 2.
struct Table1Outcome {
  static constexpr int kPrice[2] = {5, 10};
  static constexpr int kDemand[3][2] = {{1, 1}, {1, 1}, {1, 1}};
  static constexpr int kSupply[3][2] = {{2, 0}, {0, 1}, {2, 1}};
  static constexpr int kTrades[3][3][2] = {
      {{1, 0}, {0, 0}, {1, 0}},
      {{1, -1}, {-1, 0}, {0, 1}},
      {{0, 0}, {-1, 0}, {1, 0}},
  };

  // [scenario][microgrid][interval]
  std::array<std::array<std::array<int, 2>, 3>, 3> net_demand{};
  std::array<std::array<std::array<int, 2>, 3>, 3> unmet{};
  // [scenario][microgrid]
  std::array<std::array<double, 3>, 3> profit{};
  // [scenario]: units bought from or sold to the main grid by the ledger
  std::array<int, 3> main_grid_units{};

  bool passed() const {
    if (!(profit[2][0] > profit[1][0])) return false;
    for (int mg = 0; mg < 3; ++mg)
      for (int t = 0; t < 2; ++t) {
        const bool expected = (mg == 1 && t == 0) || (mg == 0 && t == 1);
        if (unmet[0][mg][t] != (expected ? 1 : 0)) return false;
        if (unmet[1][mg][t] != 0 || unmet[2][mg][t] != 0) return false;
      }
    return main_grid_units[1] == 0 && main_grid_units[2] == 0;
  }
};

inline Table1Outcome table1_regression(double penalty = 5.0) {
  Table1Outcome out;
  for (int sc = 0; sc < 3; ++sc) {
    GridParams params;
    params.battery_capacity = sc == 0 ? 0 : 8;
    params.max_grid_buy = 14;
    params.penalty = penalty;
    params.slots_per_day = 2;

    std::array<EnvSnapshot, 3> snaps{};
    for (int mg = 0; mg < 3; ++mg) {
      auto& s = snaps[mg];
      s.renewable = Table1Outcome::kSupply[mg][0];
      s.non_adl_demand = Table1Outcome::kDemand[mg][0];
      s.state = {1, s.renewable - s.non_adl_demand, Table1Outcome::kPrice[0], {}};
    }
    for (int t = 0; t < 2; ++t) {
      std::array<int, 3> trades{};
      for (int mg = 0; mg < 3; ++mg) {
        const JointAction action{Table1Outcome::kTrades[sc][mg][t], 0};
        const auto& s = snaps[mg];
        trades[mg] = action.trade;
        out.net_demand[sc][mg][t] = s.state.net_demand;
        out.unmet[sc][mg][t] = std::max(0, action.trade - s.state.net_demand);
        const int next_t = (t + 1) % 2;
        const Exogenous exo{Table1Outcome::kSupply[mg][next_t], Table1Outcome::kDemand[mg][next_t],
                            Table1Outcome::kPrice[next_t], {}};
        const auto res = step(s, action, exo, params, Variant::AdlSharing);
        out.profit[sc][mg] += res.reward;
        snaps[mg] = res.next;
      }
      const auto rec = settle(trades, t + 1, Table1Outcome::kPrice[t]);
      out.main_grid_units[sc] += rec.main_grid_absorbed() + rec.main_grid_sold();
    }
  }
  return out;
}

}  // namespace mgrid
