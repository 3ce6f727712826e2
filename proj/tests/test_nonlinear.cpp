#include <gtest/gtest.h>

#include <random>

#include "ratchet/nonlinear.hpp"

using namespace ratchet;

TEST(Foc, FrozenResiduals) {
  const NonlinearInstance half(0.5, 1.0);
  EXPECT_NEAR(foc_residual(1.0 / 3.0, half), 0.0, 1e-15);
  EXPECT_NEAR(foc_residual(0.25, half), 0.125, 1e-15);  // q (p_H - p_L) = 0.5 * 0.25
  EXPECT_THROW(foc_residual(0.5, half), DomainError);
  EXPECT_THROW(foc_residual(0.7, half), DomainError);
}

TEST(Foc, LinearRootMatchesClosedForm) {
  EXPECT_NEAR(solve_p1_low(NonlinearInstance(0.5, 1.0)), 1.0 / 3.0, 1e-12);
  EXPECT_NEAR(solve_p1_low(NonlinearInstance(0.25, 1.0)), 0.3, 1e-12);
  for (int k = 1; k <= 9; ++k) {
    const double q = 0.1 * k;
    EXPECT_NEAR(solve_p1_low(NonlinearInstance(q, 1.0)), (1.0 + 2.0 * q) / (4.0 * (1.0 + q)), 1e-12);
  }
}

TEST(Foc, CurvedRootIsBracketedAndSolvesResidual) {
  for (double a : {0.6, 0.8, 0.9, 1.1, 1.2, 1.5}) {
    const NonlinearInstance inst(0.5, a);
    const double root = solve_p1_low(inst);
    EXPECT_GT(root, inst.bracket_lo());
    EXPECT_LT(root, inst.bracket_hi());
    EXPECT_LT(std::abs(foc_residual(root, inst)), 1e-12) << "a=" << a;
  }
}

TEST(Foc, BracketFailureNamesEndpoint) {
  // d_L close to d_H with strong curvature: the low price sits near d_L and the bracket collapses.
  try {
    NonlinearInstance inst(0.9, 6.0, 1.0, 0.98);
    solve_p1_low(inst);
    SUCCEED();
  } catch (const InteriorRegimeViolated& e) {
    EXPECT_NE(std::string(e.what()).find("endpoint"), std::string::npos);
  }
  EXPECT_THROW(NonlinearInstance(0.5, 1.0, 1.0, 1.0), ValidationError);
}

TEST(Delta, NeutralAtLinearDemand) {
  for (int k = 1; k <= 9; ++k) EXPECT_NEAR(delta(NonlinearInstance(0.1 * k, 1.0)), 0.0, 1e-12);
}

TEST(Delta, FormulaAgreesWithEnumeration) {
  for (double q : {0.1, 0.25, 0.5, 0.75, 0.9}) {
    for (double a : {0.5, 0.8, 0.9, 1.0, 1.1, 1.2, 2.0}) {
      const NonlinearInstance inst(q, a);
      EXPECT_NEAR(delta(inst), delta_by_enumeration(inst), 1e-10) << "q=" << q << " a=" << a;
    }
  }
}

// Independent of the first-order condition: a dense grid DP over the same
// model must reproduce the gap to grid accuracy, including its sign.
TEST(Delta, GridDynamicProgramReproducesGap) {
  for (double q : {0.25, 0.5, 0.75}) {
    for (double a : {0.8, 1.2}) {
      const NonlinearInstance inst(q, a);
      const auto& m = inst.params();
      const auto table = solve_dp(m, GridSpec::covering(m, 20001));
      const double grid_gap = enumerate_expectation(table, m).expected_avg_price -
                              enumerate_expectation(flexible_policy(m), m).expected_avg_price;
      EXPECT_NEAR(grid_gap, delta(inst), 2e-4) << "q=" << q << " a=" << a;
      EXPECT_EQ(grid_gap > 0.0, delta(inst) > 0.0);
    }
  }
}

TEST(Delta, ObservedSignFollowsExponent) {
  // Recorded behaviour of the (d - p)^a model: the gap is negative for a < 1
  // and positive for a > 1 (see README, "Curvature sign").
  for (double q : {0.25, 0.5, 0.75}) {
    EXPECT_LT(delta(NonlinearInstance(q, 0.9)), 0.0);
    EXPECT_GT(delta(NonlinearInstance(q, 1.1)), 0.0);
  }
}

TEST(Delta, VanishesAsQApproachesZero) {
  double previous = std::abs(delta(NonlinearInstance(0.2, 1.3)));
  for (double q : {0.1, 0.01, 0.001}) {
    const double now = std::abs(delta(NonlinearInstance(q, 1.3)));
    EXPECT_LT(now, previous);
    previous = now;
  }
  EXPECT_LT(previous, 1e-3);
}

TEST(Slope, ClosedFormFrozenValues) {
  EXPECT_NEAR(delta_slope_closed(0.5), -0.0288811325233, 1e-12);
  EXPECT_LT(delta_slope_closed(1e-9), 0.0);
  EXPECT_NEAR(delta_slope_closed(1e-9), 0.0, 1e-9);
  EXPECT_NEAR(delta_slope_closed(1.0 - 1e-9), 0.0, 1e-9);
  EXPECT_THROW(delta_slope_closed(1.0), DomainError);
  EXPECT_THROW(delta_slope_closed(NonlinearInstance(0.5, 1.0, 2.0, 1.0)), UnsupportedConfiguration);
  EXPECT_DOUBLE_EQ(delta_slope_closed(NonlinearInstance(0.5, 1.0)), delta_slope_closed(0.5));
}

TEST(Slope, FiniteDifferenceIsStableAndMirrorsClosedForm) {
  EXPECT_THROW(delta_slope_fd(0.5, 0.0), DomainError);
  EXPECT_THROW(delta_slope_fd(0.5, 0.2), DomainError);
  for (const auto& row : slope_audit({0.1, 0.3, 0.5, 0.7, 0.9})) {
    EXPECT_TRUE(std::isfinite(row.fd));
    EXPECT_NEAR(row.fd, row.fd_half, 1e-8);
    // Same magnitude, opposite sign.
    EXPECT_NEAR(row.ratio, -1.0, 1e-5) << "q=" << row.q;
  }
}

TEST(Sweep, LexicographicRowsAndStatus) {
  const auto rows = sweep_delta({0.75, 0.25, 0.5, 0.25}, {1.2, 0.8, 1.0}, 3);
  ASSERT_EQ(rows.size(), 9u);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    EXPECT_EQ(rows[i].q, (std::vector<double>{0.25, 0.5, 0.75})[i / 3]);
    EXPECT_EQ(rows[i].a, (std::vector<double>{0.8, 1.0, 1.2})[i % 3]);
    ASSERT_EQ(rows[i].status, CellStatus::Ok);
    if (rows[i].a == 1.0) {
      EXPECT_NEAR(*rows[i].delta, 0.0, 1e-12);
    }
  }
  EXPECT_TRUE(sweep_delta({}, {1.0}).empty());
}

TEST(Sweep, InfeasibleCellsAreMarked) {
  const auto rows = sweep_delta({0.5}, {1.0, -1.0});
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0].status, CellStatus::Infeasible);
  EXPECT_FALSE(rows[0].delta.has_value());
  EXPECT_EQ(rows[1].status, CellStatus::Ok);
}

TEST(Sweep, WorkerCountDoesNotChangeResults) {
  std::vector<double> qs, as;
  for (int i = 1; i <= 9; ++i) qs.push_back(0.1 * i);
  for (int i = 0; i <= 10; ++i) as.push_back(0.5 + 0.1 * i);
  const auto one = sweep_delta(qs, as, 1);
  const auto many = sweep_delta(qs, as, 7);
  ASSERT_EQ(one.size(), many.size());
  for (std::size_t i = 0; i < one.size(); ++i) {
    EXPECT_EQ(one[i].status, many[i].status);
    EXPECT_EQ(one[i].delta, many[i].delta);
  }
}

TEST(Foc, ResidualSmallOnEveryFeasibleCell) {
  std::vector<double> qs, as;
  for (int i = 1; i <= 19; ++i) qs.push_back(0.05 * i);
  for (int i = 0; i <= 30; ++i) as.push_back(0.4 + 0.1 * i);
  int feasible = 0;
  for (const auto& row : sweep_delta(qs, as, 4)) {
    if (row.status != CellStatus::Ok) continue;
    ++feasible;
    const NonlinearInstance inst(row.q, row.a);
    EXPECT_LT(std::abs(foc_residual(solve_p1_low(inst), inst)), 1e-10) << row.q << "," << row.a;
    EXPECT_NEAR(*row.delta, delta_by_enumeration(inst), 1e-10);
  }
  EXPECT_GT(feasible, 0);
}

TEST(Foc, LinearRootRandomized) {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> u(0.001, 0.999);
  for (int k = 0; k < 100; ++k) {
    const double q = u(rng);
    const NonlinearInstance inst(q, 1.0);
    EXPECT_NEAR(solve_p1_low(inst), (inst.p_low() + q * inst.p_high()) / (1.0 + q), 1e-12);
  }
}
