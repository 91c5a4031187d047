#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <span>
#include <vector>

namespace mgrid {

/// Counterparty id standing for the main grid.
inline constexpr int kMainGrid = -1;

struct Flow {
  int seller = kMainGrid;
  int buyer = kMainGrid;
  int units = 0;

  bool operator==(const Flow&) const = default;
};

/// Who delivered energy to whom in one slot. Every flow settles at the
/// main-grid price, so the ledger never changes any agent's reward.
struct SettlementRecord {
  int slot = 0;
  double price = 0.0;
  std::vector<Flow> flows;
  int peer_volume = 0;

  /// Net units leaving microgrid `id` (positive = sold).
  int net_flow(int id) const {
    int net = 0;
    for (const auto& f : flows) {
      if (f.seller == id) net += f.units;
      if (f.buyer == id) net -= f.units;
    }
    return net;
  }

  int main_grid_sold() const {  // main grid -> microgrids
    int total = 0;
    for (const auto& f : flows)
      if (f.seller == kMainGrid) total += f.units;
    return total;
  }

  int main_grid_absorbed() const {  // microgrids -> main grid
    int total = 0;
    for (const auto& f : flows)
      if (f.buyer == kMainGrid) total += f.units;
    return total;
  }
};

namespace detail {

/// Hamilton apportionment: split `total` over `weights` in proportion, floors
/// first, leftover units to the largest remainders (lower index wins ties).
inline std::vector<int> apportion(int total, std::span<const int> weights) {
  std::vector<int> out(weights.size(), 0);
  const std::int64_t sum = std::accumulate(weights.begin(), weights.end(), std::int64_t{0});
  if (sum == 0 || total == 0) return out;
  std::vector<std::int64_t> remainder(weights.size());
  int assigned = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    const std::int64_t scaled = static_cast<std::int64_t>(total) * weights[i];
    out[i] = static_cast<int>(scaled / sum);
    remainder[i] = scaled % sum;
    assigned += out[i];
  }
  std::vector<std::size_t> order(weights.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return remainder[a] > remainder[b]; });
  for (std::size_t k = 0; assigned < total; ++k, ++assigned) ++out[order[k]];
  return out;
}

/// Integer matrix with row sums `rows`, column sums `cols` and every cell the
/// floor or ceiling of rows[i] * cols[j] / total. Floors first, then the
/// largest fractional cells greedily, then augmenting paths for whatever the
/// greedy pass could not place. Such a rounding always exists.
inline std::vector<std::vector<int>> round_outer_product(std::span<const int> rows, std::span<const int> cols,
                                                         int total) {
  const std::size_t m = rows.size(), n = cols.size();
  std::vector<std::vector<int>> cell(m, std::vector<int>(n, 0));
  if (total == 0) return cell;
  std::vector<std::vector<bool>> fractional(m, std::vector<bool>(n, false));
  std::vector<std::vector<bool>> raised(m, std::vector<bool>(n, false));
  std::vector<int> row_need(rows.begin(), rows.end()), col_need(cols.begin(), cols.end());
  struct Candidate {
    std::int64_t rem;
    std::size_t i, j;
  };
  std::vector<Candidate> candidates;
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const std::int64_t prod = static_cast<std::int64_t>(rows[i]) * cols[j];
      cell[i][j] = static_cast<int>(prod / total);
      row_need[i] -= cell[i][j];
      col_need[j] -= cell[i][j];
      if (prod % total) {
        fractional[i][j] = true;
        candidates.push_back({prod % total, i, j});
      }
    }
  }
  std::stable_sort(candidates.begin(), candidates.end(),
                   [](const Candidate& a, const Candidate& b) { return a.rem > b.rem; });
  for (const auto& c : candidates) {
    if (row_need[c.i] > 0 && col_need[c.j] > 0) {
      raised[c.i][c.j] = true;
      --row_need[c.i];
      --col_need[c.j];
    }
  }
  // Augment: row i -> column j over an unraised fractional cell, column j ->
  // row k over a raised cell (k gives up its raise on j).
  for (std::size_t start = 0; start < m; ++start) {
    while (row_need[start] > 0) {
      std::vector<int> col_parent(n, -1);
      std::vector<int> row_parent(m, -2);
      std::vector<std::size_t> frontier{start};
      row_parent[start] = -1;
      int found = -1;
      while (!frontier.empty() && found < 0) {
        std::vector<std::size_t> next_rows;
        for (auto i : frontier) {
          for (std::size_t j = 0; j < n && found < 0; ++j) {
            if (!fractional[i][j] || raised[i][j] || col_parent[j] >= 0) continue;
            col_parent[j] = static_cast<int>(i);
            if (col_need[j] > 0) {
              found = static_cast<int>(j);
              break;
            }
            for (std::size_t k = 0; k < m; ++k)
              if (raised[k][j] && row_parent[k] == -2) {
                row_parent[k] = static_cast<int>(j);
                next_rows.push_back(k);
              }
          }
          if (found >= 0) break;
        }
        frontier = std::move(next_rows);
      }
      if (found < 0) break;  // unreachable for consistent margins
      std::size_t j = static_cast<std::size_t>(found);
      --col_need[j];
      while (true) {
        const auto i = static_cast<std::size_t>(col_parent[j]);
        raised[i][j] = true;
        if (row_parent[i] == -1) break;
        const auto prev = static_cast<std::size_t>(row_parent[i]);
        raised[i][prev] = false;
        j = prev;
      }
      --row_need[start];
    }
  }
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (raised[i][j]) ++cell[i][j];
  return cell;
}

}  // namespace detail

/// Matches sellers with buyers before touching the main grid.
///
/// `net_trades[i]` is microgrid i's u + v (positive sells). The peer volume
/// is min(total sold, total bought). Each side's share of it is proportional
/// to its requested volume, and each seller's share is spread over buyers in
/// proportion to their shares, all rounded to whole units by largest
/// remainder. Residual sales go to the main grid, residual purchases come
/// from it.
inline SettlementRecord settle(std::span<const int> net_trades, int slot, double price) {
  SettlementRecord rec;
  rec.slot = slot;
  rec.price = price;
  std::vector<int> sellers, buyers, sell, buy;
  for (std::size_t i = 0; i < net_trades.size(); ++i) {
    if (net_trades[i] > 0) {
      sellers.push_back(static_cast<int>(i));
      sell.push_back(net_trades[i]);
    } else if (net_trades[i] < 0) {
      buyers.push_back(static_cast<int>(i));
      buy.push_back(-net_trades[i]);
    }
  }
  const int supply = std::accumulate(sell.begin(), sell.end(), 0);
  const int demand = std::accumulate(buy.begin(), buy.end(), 0);
  rec.peer_volume = std::min(supply, demand);

  const auto sell_share = detail::apportion(rec.peer_volume, sell);
  const auto buy_share = detail::apportion(rec.peer_volume, buy);
  const auto matrix = detail::round_outer_product(sell_share, buy_share, rec.peer_volume);

  for (std::size_t i = 0; i < sellers.size(); ++i)
    for (std::size_t j = 0; j < buyers.size(); ++j)
      if (matrix[i][j] > 0) rec.flows.push_back({sellers[i], buyers[j], matrix[i][j]});
  for (std::size_t i = 0; i < sellers.size(); ++i)
    if (sell[i] > sell_share[i]) rec.flows.push_back({sellers[i], kMainGrid, sell[i] - sell_share[i]});
  for (std::size_t j = 0; j < buyers.size(); ++j)
    if (buy[j] > buy_share[j]) rec.flows.push_back({kMainGrid, buyers[j], buy[j] - buy_share[j]});
  return rec;
}

}  // namespace mgrid
