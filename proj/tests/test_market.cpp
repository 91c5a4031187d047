#include <gtest/gtest.h>

#include "mgrid/market.hpp"
#include "support/generators.hpp"

using namespace mgrid;

TEST(Settle, ExactMatch) {
  const std::vector<int> trades{3, -3};
  const auto rec = settle(trades, 1, 10.0);
  EXPECT_EQ(rec.flows, (std::vector<Flow>{{0, 1, 3}}));
  EXPECT_EQ(rec.peer_volume, 3);
  EXPECT_EQ(rec.main_grid_absorbed(), 0);
  EXPECT_EQ(rec.main_grid_sold(), 0);
}

TEST(Settle, SurplusGoesToMainGrid) {
  const std::vector<int> trades{5, -2};
  const auto rec = settle(trades, 2, 5.0);
  EXPECT_EQ(rec.flows, (std::vector<Flow>{{0, 1, 2}, {0, kMainGrid, 3}}));
  EXPECT_EQ(rec.main_grid_absorbed(), 3);
}

TEST(Settle, ProportionalSplit) {
  const std::vector<int> trades{4, 4, -4};
  const auto rec = settle(trades, 3, 15.0);
  EXPECT_EQ(rec.flows, (std::vector<Flow>{{0, 2, 2}, {1, 2, 2}, {0, kMainGrid, 2}, {1, kMainGrid, 2}}));
  EXPECT_EQ(rec.main_grid_absorbed(), 4);
}

TEST(Settle, ShortageComesFromMainGrid) {
  const std::vector<int> trades{1, -2, -3, 0};
  const auto rec = settle(trades, 1, 5.0);
  EXPECT_EQ(rec.peer_volume, 1);
  EXPECT_EQ(rec.main_grid_sold(), 4);
  for (int i = 0; i < 4; ++i) EXPECT_EQ(rec.net_flow(i), trades[static_cast<std::size_t>(i)]);
}

TEST(Settle, NobodyTrades) {
  const std::vector<int> trades{0, 0};
  EXPECT_TRUE(settle(trades, 1, 5.0).flows.empty());
  EXPECT_TRUE(settle(std::vector<int>{}, 1, 5.0).flows.empty());
}

TEST(Settle, IndependentOfParticipantOrderUpToRelabeling) {
  const std::vector<int> a{3, 2, -4}, b{2, 3, -4};
  const auto ra = settle(a, 1, 5.0), rb = settle(b, 1, 5.0);
  EXPECT_EQ(ra.net_flow(0), rb.net_flow(1));
  EXPECT_EQ(ra.peer_volume, rb.peer_volume);
}

TEST(Apportion, LargestRemainder) {
  const std::vector<int> w{1, 1, 1};
  EXPECT_EQ(detail::apportion(2, w), (std::vector<int>{1, 1, 0}));
  const std::vector<int> v{5, 3, 2};
  EXPECT_EQ(detail::apportion(5, v), (std::vector<int>{3, 1, 1}));
}

TEST(SettleProperty, ConservationAndRounding) {
  const auto v = fixtures::sweep_settlement(100'000, 41);
  EXPECT_EQ(v.net_flow, 0u);
  EXPECT_EQ(v.rounding, 0u);
  EXPECT_EQ(v.volume, 0u);
  EXPECT_EQ(v.self_flow, 0u);
}
