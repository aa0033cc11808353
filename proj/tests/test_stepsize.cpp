#include <gtest/gtest.h>

#include <deque>

#include "orthols/counting_model.hpp"
#include "orthols/stepsize.hpp"
#include "test_util.hpp"

using namespace orthols;
using orthols::test::mat;
using orthols::test::unit_column;

TEST(NonMonotone, AlphaZeroTracksLatestEnergy) {
  auto s = NonMonotoneState<double>::start(0.0, 17.0);
  s = nm_update(s, 3.0);
  s = nm_update(s, 5.0);
  EXPECT_EQ(s.C, 5.0);
  EXPECT_EQ(s.Q, 1.0);
}

TEST(NonMonotone, HandComputedUpdate) {
  const auto s = nm_update(NonMonotoneState<double>{0.85, 2.0, 1.0}, 1.0);
  EXPECT_DOUBLE_EQ(s.Q, 1.85);
  EXPECT_NEAR(s.C, 2.7 / 1.85, 1e-15);
  EXPECT_NEAR(s.C, 1.4594594594594594, 1e-15);
}

TEST(NonMonotone, ConstantEnergyIsFixedPoint) {
  auto s = NonMonotoneState<double>::start(0.85, 4.25);
  for (int i = 0; i < 100; ++i) {
    s = nm_update(s, 4.25);
    EXPECT_NEAR(s.C, 4.25, 1e-14);
  }
}

TEST(NonMonotone, WeightStaysBelowLimitAndReferenceAboveEnergy) {
  auto rng = test::rng(4);
  std::uniform_real_distribution<double> dec(0.0, 1.0);
  for (double alpha : {0.0, 0.5, 0.85, 0.99}) {
    auto s = NonMonotoneState<double>::start(alpha, 0.0);
    for (int i = 0; i < 2000; ++i) {
      const double e = s.C - dec(rng);
      s = nm_update(s, e);
      ASSERT_GE(s.C, e);
      ASSERT_GE(s.Q, 1.0);
      // Q = 1 exactly when alpha = 0; otherwise the geometric sum stays
      // below its limit (up to rounding once it has converged).
      if (alpha == 0.0)
        ASSERT_EQ(s.Q, 1.0);
      else
        ASSERT_LE(s.Q, (1.0 / (1.0 - alpha)) * (1 + 1e-15));
    }
  }
}

TEST(NonMonotone, WeightStrictlyBelowLimitBeforeConvergence) {
  auto s = NonMonotoneState<double>::start(0.85, 1.0);
  for (int i = 0; i < 50; ++i) {
    s = nm_update(s, 1.0);
    ASSERT_LT(s.Q, 1.0 / (1.0 - 0.85));
  }
}

TEST(NonMonotone, RejectsAlphaOutsideRange) {
  EXPECT_THROW(NonMonotoneState<double>::start(1.0, 0.0), Error);
  EXPECT_THROW(NonMonotoneState<double>::start(-0.1, 0.0), Error);
}

TEST(BbSteps, HandComputedQuotients) {
  const MatrixXd S = mat({{2, 0}, {0, 0}});
  const MatrixXd Y = mat({{1, 0}, {0, 5}});
  EXPECT_DOUBLE_EQ(*bb_step_1(S, Y), 2.0);
  EXPECT_DOUBLE_EQ(*bb_step_2(S, Y), 2.0 / 26.0);
}

TEST(BbSteps, EqualAndScaledPairs) {
  auto rng = test::rng(8);
  const MatrixXd S = random_normal<double>(5, 2, rng);
  EXPECT_NEAR(*bb_step_1(S, S), 1.0, 1e-15);
  EXPECT_NEAR(*bb_step_2(S, S), 1.0, 1e-15);
  const MatrixXd Y = 2.0 * S;
  EXPECT_NEAR(*bb_step_1(S, Y), 0.5, 1e-15);
  EXPECT_NEAR(*bb_step_2(S, Y), 0.5, 1e-15);
}

TEST(BbSteps, AbsoluteValueKeepsStepsPositive) {
  const MatrixXd S = mat({{1}, {0}});
  const MatrixXd Y = mat({{-2}, {0}});
  EXPECT_DOUBLE_EQ(*bb_step_1(S, Y), 0.5);
  EXPECT_DOUBLE_EQ(*bb_step_2(S, Y), 0.5);
}

TEST(BbSteps, DegenerateDenominators) {
  const MatrixXd S = mat({{1}, {0}});
  const MatrixXd Y = mat({{0}, {1}});
  EXPECT_FALSE(bb_step_1(S, Y));
  EXPECT_FALSE(bb_step_2(S, Y));
  EXPECT_FALSE(bb_step_2(S, MatrixXd::Zero(2, 1)));
  EXPECT_EQ(bb_initial(3, S, Y, BbMode::odd_even), 1.0);
  EXPECT_EQ(bb_initial(4, S, Y, BbMode::odd_even), 1.0);
}

TEST(BbInitial, ParityAndModes) {
  const MatrixXd S = mat({{2, 0}, {0, 0}});
  const MatrixXd Y = mat({{1, 0}, {0, 5}});
  const double t1 = *bb_step_1(S, Y), t2 = *bb_step_2(S, Y);
  EXPECT_EQ(bb_initial(3, S, Y, BbMode::odd_even), t1);
  EXPECT_EQ(bb_initial(4, S, Y, BbMode::odd_even), t2);
  EXPECT_EQ(bb_initial(4, S, Y, BbMode::bb1), t1);
  EXPECT_EQ(bb_initial(3, S, Y, BbMode::bb2), t2);
  EXPECT_EQ(bb_initial(0, S, Y, BbMode::odd_even), 1e-2);
  EXPECT_EQ(bb_initial(0, S, Y, BbMode::odd_even, 0.3), 0.3);
}

TEST(Estimator, HandComputedValues) {
  EXPECT_DOUBLE_EQ(estimator_zeta(1.0, 1.0, -1.0, 2.0, 0.5), 0.5);
  EXPECT_DOUBLE_EQ(estimator_zeta(0.9, 1.0, -1.0, 0.0, 1.0), 1.1);
  for (double t : {1e-6, 0.3, 7.0})
    EXPECT_DOUBLE_EQ(estimator_zeta(2.0, 2.0, -0.7, 0.0, t), 1.0);
}

TEST(Estimator, RequiresDescentAndPositiveStep) {
  EXPECT_THROW(estimator_zeta(1.0, 1.0, 0.0, 2.0, 0.5), NonDescentDirection);
  EXPECT_THROW(estimator_zeta(1.0, 1.0, 1.0, 2.0, 0.5), NonDescentDirection);
  EXPECT_THROW(estimator_zeta(1.0, 1.0, -1.0, 2.0, 0.0), Error);
}

TEST(AcceptableBound, CurvatureBranchWithEqualReference) {
  const double eta = 1e-4, g = -3.0, hq = 4.0;
  const double b = acceptable_upper_bound(1.0, 1.0, g, hq, eta, 100.0, 1.0);
  EXPECT_NEAR(b, 2 * (1 - eta) * (-g) / hq, 1e-15);
  EXPECT_NEAR(estimator_zeta(1.0, 1.0, g, hq, b), eta, 1e-12);
}

TEST(AcceptableBound, NonpositiveCurvatureUsesTrustRadius) {
  EXPECT_DOUBLE_EQ(acceptable_upper_bound(1.0, 1.0, -1.0, -1.0, 1e-4, 0.2, 2.0), 0.1);
  EXPECT_DOUBLE_EQ(acceptable_upper_bound(0.5, 1.0, -1.0, 0.0, 1e-4, 0.2, 2.0), 0.1);
}

TEST(AcceptableBound, ZeroEtaGivesNewtonInterval) {
  EXPECT_DOUBLE_EQ(acceptable_upper_bound(1.0, 1.0, -1.0, 2.0, 0.0, 100.0, 1.0), 1.0);
}

TEST(AcceptableBound, MatchesBisectionWhenReferenceExceedsEnergy) {
  const double E = 0.2, C = 0.7, g = -1.3, hq = 5.0, eta = 1e-3;
  const double b = acceptable_upper_bound(E, C, g, hq, eta, 1e3, 1.0);
  double lo = 1e-12, hi = 1e3;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (estimator_zeta(E, C, g, hq, mid) >= eta ? lo : hi) = mid;
  }
  EXPECT_NEAR(b, lo, 1e-12 * b);
  EXPECT_GE(estimator_zeta(E, C, g, hq, b * (1 - 1e-9)), eta);
  EXPECT_LT(estimator_zeta(E, C, g, hq, b * (1 + 1e-9)), eta);
}

TEST(AcceptableBound, RejectsEnergyAboveReference) {
  EXPECT_THROW(acceptable_upper_bound(2.0, 1.0, -1.0, 1.0, 1e-4, 0.2, 1.0), InvalidReference);
  EXPECT_THROW(acceptable_upper_bound(1.0, 1.0, 0.0, 1.0, 1e-4, 0.2, 1.0), NonDescentDirection);
}

TEST(ImproveStep, HandComputedValues) {
  EXPECT_DOUBLE_EQ(improve_step(-1.0, 2.0, 10.0, 1.0), 0.5);
  EXPECT_DOUBLE_EQ(improve_step(-1.0, -3.0, 0.2, 2.0), 0.1);
  EXPECT_DOUBLE_EQ(improve_step(-1.0, 2.0, 0.1, 1.0), 0.1);
}

TEST(ImproveStep, AlwaysInsideAcceptableInterval) {
  auto rng = test::rng(12);
  std::uniform_real_distribution<double> u(-3, 3);
  for (int trial = 0; trial < 1000; ++trial) {
    const double C = u(rng), E = C - std::abs(u(rng)), g = -std::pow(10.0, u(rng));
    const double hq = std::pow(10.0, u(rng)) * (trial % 7 == 0 ? -1 : 1);
    const double theta = 0.2, normD = std::pow(10.0, u(rng) / 2);
    const double t = improve_step(g, hq, theta, normD);
    ASSERT_GE(estimator_zeta(E, C, g, hq, t), 1e-4);
    ASSERT_LE(t * normD, theta * (1 + 1e-15));
    ASSERT_LE(t, acceptable_upper_bound(E, C, g, hq, 1e-4, theta, normD) * (1 + 1e-12));
  }
}

TEST(AdaptiveStep, AcceptsInitialGuessInsideInterval) {
  const StepParams<double> params;
  const auto d = adaptive_step(1.0, 1.0, -1.0, 2.0, 0.3, params, 0.1);
  EXPECT_EQ(d.t, 0.3);
  EXPECT_TRUE(d.initial_accepted);
  EXPECT_EQ(d.clamp_reason, ClampReason::none);
  EXPECT_EQ(d.backtracks, 0u);
  ASSERT_TRUE(d.estimator);
  EXPECT_DOUBLE_EQ(*d.estimator, 0.7);
}

TEST(AdaptiveStep, ImprovesRejectedGuess) {
  StepParams<double> params;
  params.theta = 10.0;
  const auto d = adaptive_step(1.0, 1.0, -1.0, 2.0, 5.0, params, 1.0);
  EXPECT_FALSE(d.initial_accepted);
  EXPECT_DOUBLE_EQ(*d.estimator, -4.0);
  EXPECT_DOUBLE_EQ(d.t, 0.5);
  EXPECT_EQ(d.clamp_reason, ClampReason::curvature_minimizer);
}

TEST(AdaptiveStep, FloorsTinyGuessBeforeJudging) {
  const StepParams<double> params;
  const auto d = adaptive_step(1.0, 1.0, -1.0, 2.0, 1e-30, params, 1.0);
  EXPECT_EQ(d.t, 1e-20);
  EXPECT_TRUE(d.initial_accepted);
  EXPECT_EQ(d.clamp_reason, ClampReason::floor);
  EXPECT_DOUBLE_EQ(*d.estimator, estimator_zeta(1.0, 1.0, -1.0, 2.0, 1e-20));
}

TEST(AdaptiveStep, ClampsToTrustRadius) {
  const StepParams<double> params; // theta = 0.2
  const auto d = adaptive_step(1.0, 1.0, -1.0, 0.0, 3.0, params, 1.0);
  EXPECT_DOUBLE_EQ(d.t, 0.2);
  EXPECT_TRUE(d.initial_accepted);
  EXPECT_EQ(d.clamp_reason, ClampReason::trust_radius);
}

TEST(AdaptiveStep, NeverEvaluatesTheModel) {
  const QuadraticTraceModel<double> quad(mat({{1, 0, 0}, {0, 2, 0}, {0, 0, 3}}));
  CountingModel<double> model(quad);
  const StiefelPoint<double> U(MatrixXd((unit_column(3, 0) + unit_column(3, 2)) / std::sqrt(2.0)));
  const auto G = grassmann_gradient<double>(model, U);
  const TangentVector<double> D(U, -G.matrix());
  const double g = inner(G, D);
  const double hq = grassmann_hessian_qform<double>(model, U, D);
  const double E = model.value(U.matrix());
  model.reset();
  const auto d = adaptive_step(E, E, g, hq, 5.0, StepParams<double>{}, D.norm());
  EXPECT_GT(d.t, 0.0);
  EXPECT_EQ(model.values(), 0u);
  EXPECT_EQ(model.gradients(), 0u);
  EXPECT_EQ(model.hessians(), 0u);
}

namespace {

// Returns scripted energies in call order; gradients are never needed here.
class ScriptedModel final : public EnergyModel<double> {
public:
  explicit ScriptedModel(std::deque<double> values) : values_(std::move(values)) {}
  Eigen::Index dimension() const override { return 3; }
  double value(const MatrixXd &) const override {
    const double v = values_.front();
    values_.pop_front();
    return v;
  }
  MatrixXd euclidean_gradient(const MatrixXd &U) const override { return MatrixXd::Zero(U.rows(), U.cols()); }
  MatrixXd hessian_apply(const MatrixXd &, const MatrixXd &D) const override { return MatrixXd::Zero(D.rows(), D.cols()); }

private:
  mutable std::deque<double> values_;
};

} // namespace

TEST(Backtracking, ThirdTrialAccepted) {
  const ScriptedModel model({10.0, 10.0, -1.0});
  const StiefelPoint<double> U(unit_column(3, 0));
  const TangentVector<double> D(U, unit_column(3, 1));
  const auto out = backtracking_step<double>(model, U, D, -1.0, 0.8, StepParams<double>{}, 0.0,
                                             Retraction::qr);
  EXPECT_DOUBLE_EQ(out.decision.t, 0.2);
  EXPECT_EQ(out.decision.backtracks, 2u);
  EXPECT_FALSE(out.decision.initial_accepted);
  EXPECT_EQ(out.energy, -1.0);
  EXPECT_EQ(out.retraction_evals, 3u);
  EXPECT_EQ(out.energy_evals, 3u);
  EXPECT_MATRIX_NEAR(out.point.matrix(), retract_qr(U, D, 0.2).matrix(), 0.0);
}

TEST(Backtracking, AcceptsGoodInitialStepUnchanged) {
  const ScriptedModel model({-5.0});
  const StiefelPoint<double> U(unit_column(3, 0));
  const TangentVector<double> D(U, unit_column(3, 1));
  const auto out = backtracking_step<double>(model, U, D, -1.0, 0.8, StepParams<double>{}, 0.0,
                                             Retraction::geodesic);
  EXPECT_EQ(out.decision.t, 0.8);
  EXPECT_EQ(out.decision.backtracks, 0u);
  EXPECT_TRUE(out.decision.initial_accepted);
}

TEST(Backtracking, StiffQuadraticNeedsReductions) {
  const QuadraticTraceModel<double> model(mat({{1, 0}, {0, 100}}));
  const double a = 0.3;
  const StiefelPoint<double> U(mat({{std::cos(a)}, {std::sin(a)}}));
  const auto G = grassmann_gradient(model, U);
  const TangentVector<double> D(U, -G.matrix());
  const double g = inner(G, D), E = model.value(U.matrix());
  const StepParams<double> params;
  const auto out = backtracking_step(model, U, D, g, 10.0, params, E, Retraction::qr);
  EXPECT_GT(out.decision.backtracks, 0u);
  EXPECT_LT(out.decision.backtracks, 100u);
  EXPECT_LE(out.energy - E, params.eta * out.decision.t * g);
  EXPECT_DOUBLE_EQ(out.energy, model.value(out.point.matrix()));
  EXPECT_EQ(out.retraction_evals, out.decision.backtracks + 1);
}

TEST(Backtracking, GivesUpAfterCap) {
  const QuadraticTraceModel<double> model(mat({{1, 0}, {0, 2}}));
  const StiefelPoint<double> U(unit_column(2, 1));
  const TangentVector<double> D(U, unit_column(2, 0));
  // Claimed slope far steeper than the truth: no step can satisfy the test.
  EXPECT_THROW(backtracking_step(model, U, D, -1e6, 1.0, StepParams<double>{}, 1.0, Retraction::qr),
               MaxBacktracks);
}

TEST(StepParams, Validation) {
  StepParams<double> p;
  EXPECT_NO_THROW(p.validate());
  p.k = 1.0;
  EXPECT_THROW(p.validate(), Error);
  p = {};
  p.eta = 0.0;
  EXPECT_THROW(p.validate(), Error);
}
