#include <gtest/gtest.h>

#include "ratchet/policy.hpp"

using namespace ratchet;

namespace {

struct HalfCeiling {
  PolicyKind kind() const { return PolicyKind::Tabulated; }
  double price(int, double x, Demand) const { return std::isinf(x) ? 1.0 : 0.5 * x; }
};

}  // namespace

TEST(Policy, FlexibleIgnoresCeiling) {
  const MarketParams m(0.0, 1.0, 2.0, {0.3, 0.5});
  const auto p = flexible_policy(m);
  EXPECT_EQ(p.kind(), PolicyKind::Flexible);
  EXPECT_DOUBLE_EQ(p.price(1, kNoCeiling, Demand::High), 1.0);
  EXPECT_DOUBLE_EQ(p.price(2, 0.1, Demand::High), 1.0);
  EXPECT_DOUBLE_EQ(p.price(2, 0.1, Demand::Low), 0.5);
  EXPECT_THROW(p.price(3, 1.0, Demand::Low), DomainError);
}

TEST(Policy, SimulateThreadsCeiling) {
  const auto wrapped = Policy::wrap(HalfCeiling{}, 4);
  EXPECT_EQ(wrapped.kind(), PolicyKind::Tabulated);
  const auto prices = simulate_prices(wrapped, {Demand::High, Demand::Low, Demand::High, Demand::Low});
  ASSERT_EQ(prices.size(), 4u);
  EXPECT_DOUBLE_EQ(prices[0], 1.0);
  EXPECT_DOUBLE_EQ(prices[1], 0.5);
  EXPECT_DOUBLE_EQ(prices[2], 0.25);
  EXPECT_DOUBLE_EQ(prices[3], 0.125);
}

TEST(Policy, WrapSharesRuleAcrossCopies) {
  const auto a = Policy::wrap(HalfCeiling{}, 2);
  const Policy b = a;
  EXPECT_DOUBLE_EQ(a.price(2, 0.8, Demand::Low), b.price(2, 0.8, Demand::Low));
}

static_assert(PricingRule<Policy>);
static_assert(PricingRule<HalfCeiling>);
