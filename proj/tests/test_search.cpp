#include <gtest/gtest.h>

#include "orthols/counting_model.hpp"
#include "orthols/search.hpp"
#include "test_util.hpp"

using namespace orthols;
using orthols::test::mat;
using orthols::test::unit_column;

namespace {

QuadraticTraceModel<double> diag123() {
  return QuadraticTraceModel<double>(mat({{1, 0, 0}, {0, 2, 0}, {0, 0, 3}}));
}

StiefelPoint<double> tilted_start() {
  return StiefelPoint<double>(MatrixXd((unit_column(3, 0) + unit_column(3, 2)) / std::sqrt(2.0)));
}

} // namespace

TEST(Directions, SteepestIsNegatedGradient) {
  auto rng = test::rng(1);
  const auto U = random_stiefel<double>(8, 2, rng);
  const auto G = random_tangent(U, rng);
  const auto D = steepest_direction(G);
  EXPECT_DOUBLE_EQ(inner(G, D), -G.matrix().squaredNorm());
  EXPECT_DOUBLE_EQ(D.norm(), G.norm());
}

TEST(Directions, CgForcedRestart) {
  auto rng = test::rng(2);
  const auto U = random_stiefel<double>(8, 2, rng);
  const auto G = random_tangent(U, rng);
  const auto Gold = random_tangent(U, rng);
  const auto cg = cg_direction(G, Gold, Gold, U, 50, 50);
  EXPECT_TRUE(cg.was_reset);
  EXPECT_EQ(cg.D.matrix(), MatrixXd(-G.matrix()));
}

TEST(Directions, CgRepeatedGradientHasZeroBeta) {
  auto rng = test::rng(3);
  const auto U = random_stiefel<double>(8, 2, rng);
  const auto G = random_tangent(U, rng);
  const TangentVector<double> Dold(U, -G.matrix());
  const auto cg = cg_direction(G, G, Dold, U, 7, 50);
  EXPECT_FALSE(cg.was_reset);
  EXPECT_MATRIX_NEAR(cg.D.matrix(), MatrixXd(-G.matrix()), 1e-15);
}

TEST(Directions, CgDescentAlongSolve) {
  const QuadraticTraceModel<double> model(random_symmetric<double>(40, 12));
  auto rng = test::rng(4);
  const auto U0 = random_stiefel<double>(40, 4, rng);
  SolveConfig<double> cfg;
  cfg.direction = DirectionKind::cg_restart;
  cfg.epsilon = 1e-9;
  const auto r = solve(model, U0, cfg);
  EXPECT_EQ(r.status, SolveStatus::converged) << r.diagnostic;
  for (std::size_t i = 0; i + 1 < r.trace.size(); ++i)
    ASSERT_LT(r.trace[i].slope, 0.0) << "iteration " << i;
  EXPECT_NEAR(r.final_energy, eigen_oracle(model, 4).min_energy, 1e-8);
}

TEST(Solve, StationaryStartConvergesImmediately) {
  const auto model = diag123();
  const StiefelPoint<double> U0(MatrixXd(MatrixXd::Identity(3, 2)));
  const auto r = solve(model, U0, SolveConfig<double>{});
  EXPECT_EQ(r.status, SolveStatus::converged);
  EXPECT_EQ(r.iterations, 0u);
  EXPECT_EQ(r.final_residual, 0.0);
  ASSERT_EQ(r.trace.size(), 1u);
  EXPECT_EQ(r.trace[0].step, 0.0);
  EXPECT_EQ(r.total_energy_evals, 1u);
  EXPECT_EQ(r.total_retraction_evals, 0u);
}

TEST(Solve, AdaptiveReachesSmallestEigenvalue) {
  const auto model = diag123();
  CountingModel<double> counting(model);
  const auto r = solve<double>(counting, tilted_start(), SolveConfig<double>{});
  ASSERT_EQ(r.status, SolveStatus::converged) << r.diagnostic;
  EXPECT_NEAR(r.final_energy, 0.5, 1e-8);
  EXPECT_LE(r.final_residual, 1e-12);
  EXPECT_EQ(r.total_energy_evals, r.iterations + 1);
  EXPECT_EQ(r.total_retraction_evals, r.iterations);
  EXPECT_EQ(counting.values(), r.iterations + 1);
  for (std::size_t i = 0; i + 1 < r.trace.size(); ++i) {
    EXPECT_EQ(r.trace[i].backtracks, 0u);
    EXPECT_TRUE(r.trace[i].estimator.has_value());
  }
}

TEST(Solve, BacktrackingReachesSameEnergy) {
  const auto model = diag123();
  SolveConfig<double> cfg;
  cfg.strategy = Strategy::backtracking;
  const auto r = solve(model, tilted_start(), cfg);
  ASSERT_EQ(r.status, SolveStatus::converged) << r.diagnostic;
  EXPECT_NEAR(r.final_energy, 0.5, 1e-8);
  EXPECT_GE(r.total_retraction_evals, r.iterations);
  std::size_t backtracks = 0;
  for (const auto &rec : r.trace)
    backtracks += rec.backtracks;
  EXPECT_EQ(r.total_retraction_evals, r.iterations + backtracks);
  EXPECT_EQ(r.total_energy_evals, r.iterations + backtracks + 1);
}

TEST(Solve, BacktrackingConditionHoldsEveryStep) {
  // Condition number 1e4. The energy test stops resolving decrease near
  // residual 1e-6 here, so the tolerance stays above that floor.
  const QuadraticTraceModel<double> model(random_spd_with_condition<double>(30, 1e4, 1));
  auto rng = test::rng(2);
  SolveConfig<double> cfg;
  cfg.strategy = Strategy::backtracking;
  cfg.epsilon = 1e-5;
  const auto r = solve(model, random_stiefel<double>(30, 3, rng), cfg);
  ASSERT_EQ(r.status, SolveStatus::converged) << r.diagnostic;
  std::size_t backtracked = 0;
  for (std::size_t i = 0; i + 1 < r.trace.size(); ++i) {
    const auto &a = r.trace[i];
    ASSERT_LE(r.trace[i + 1].energy - a.reference, cfg.step.eta * a.step * a.slope);
    ASSERT_GE(a.reference, a.energy);
    backtracked += a.backtracks > 0;
  }
  EXPECT_GT(backtracked, 0u);
}

TEST(Solve, IteratesStayFeasible) {
  const QuadraticTraceModel<double> model(random_symmetric<double>(25, 9));
  auto rng = test::rng(9);
  const auto U0 = random_stiefel<double>(25, 3, rng);
  for (Retraction kind : {Retraction::qr, Retraction::geodesic}) {
    for (std::size_t cap : {1u, 10u, 100u, 1000u}) {
      SolveConfig<double> cfg;
      cfg.retraction = kind;
      cfg.max_iter = cap;
      const auto r = solve(model, U0, cfg);
      EXPECT_LE(orthonormality_defect(r.final_point.matrix()), 1e-10);
    }
  }
}

TEST(Solve, IterationCapReportsMaxIterations) {
  const auto model = diag123();
  SolveConfig<double> cfg;
  cfg.max_iter = 1;
  const auto r = solve(model, tilted_start(), cfg);
  EXPECT_EQ(r.status, SolveStatus::max_iterations);
  EXPECT_EQ(r.iterations, 1u);
  ASSERT_EQ(r.trace.size(), 2u);
  EXPECT_EQ(r.trace[0].iter, 0u);
  EXPECT_EQ(r.trace[1].iter, 1u);
}

TEST(Solve, DeterministicTrace) {
  const QuadraticTraceModel<double> model(random_symmetric<double>(20, 2));
  auto rng = test::rng(10);
  const auto U0 = random_stiefel<double>(20, 2, rng);
  const auto a = solve(model, U0, SolveConfig<double>{});
  const auto b = solve(model, U0, SolveConfig<double>{});
  ASSERT_EQ(a.trace.size(), b.trace.size());
  for (std::size_t i = 0; i < a.trace.size(); ++i) {
    EXPECT_EQ(a.trace[i].energy, b.trace[i].energy);
    EXPECT_EQ(a.trace[i].residual, b.trace[i].residual);
    EXPECT_EQ(a.trace[i].step, b.trace[i].step);
  }
  EXPECT_TRUE((a.final_point.matrix().array() == b.final_point.matrix().array()).all());
}

TEST(Solve, LatticeStrategiesAgree) {
  LatticeParams lp;
  lp.npts = 48;
  const NonlinearLatticeModel<double> model(lp);
  auto rng = test::rng(11);
  const auto U0 = random_stiefel<double>(48, 3, rng);
  SolveConfig<double> cfg;
  cfg.epsilon = 1e-9;
  const auto a = solve(model, U0, cfg);
  cfg.strategy = Strategy::backtracking;
  const auto b = solve(model, U0, cfg);
  ASSERT_EQ(a.status, SolveStatus::converged) << a.diagnostic;
  ASSERT_EQ(b.status, SolveStatus::converged) << b.diagnostic;
  EXPECT_NEAR(a.final_energy, b.final_energy, 1e-9 * std::abs(a.final_energy));
}

TEST(Solve, RejectsMismatchedStartAndInvalidConfig) {
  const auto model = diag123();
  const StiefelPoint<double> U0(MatrixXd(MatrixXd::Identity(4, 1)));
  EXPECT_THROW(solve(model, U0, SolveConfig<double>{}), ShapeMismatch);
  SolveConfig<double> cfg;
  cfg.alpha = 1.0;
  EXPECT_THROW(solve(model, tilted_start(), cfg), Error);
}
