#pragma once

#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "orthols/errors.hpp"
#include "orthols/manifold.hpp"
#include "orthols/numerics.hpp"
#include "orthols/objectives.hpp"
#include "orthols/stepsize.hpp"

namespace orthols {

enum class Strategy { adaptive, backtracking, none };
enum class DirectionKind { steepest, cg_restart };
enum class SolveStatus { converged, max_iterations, failed };

template <typename Scalar> struct SolveConfig {
  Scalar epsilon{1e-12};
  std::size_t max_iter = 30000;
  StepParams<Scalar> step;
  Scalar alpha{0.85};
  Strategy strategy = Strategy::adaptive;
  BbMode bb_mode = BbMode::odd_even;
  DirectionKind direction = DirectionKind::steepest;
  Retraction retraction = Retraction::qr;
  std::size_t cg_restart_period = 50;
  Scalar initial_step{1e-2}; // used before any (S, Y) pair exists
  std::uint64_t seed = 0;

  void validate() const {
    if (!(epsilon > Scalar(0)))
      throw Error("SolveConfig: epsilon must be positive");
    if (max_iter == 0)
      throw Error("SolveConfig: max_iter must be positive");
    if (!(alpha >= Scalar(0) && alpha < Scalar(1)))
      throw Error("SolveConfig: alpha must lie in [0, 1)");
    if (!(initial_step > Scalar(0)))
      throw Error("SolveConfig: initial_step must be positive");
    step.validate();
  }
};

template <typename Scalar> struct IterationRecord {
  std::size_t iter = 0;
  Scalar energy{};
  Scalar residual{};
  Scalar step{};
  std::size_t backtracks = 0;
  std::optional<Scalar> estimator;
  bool direction_reset = false;
  double elapsed = 0.0;
  // Not exported to traces; kept so the descent and non-monotone conditions
  // can be audited after the fact.
  Scalar reference{}; // C_n used by the step test
  Scalar slope{};     // <grad_G E(U_n), D_n>
};

template <typename Scalar> struct SolveResult {
  SolveStatus status = SolveStatus::failed;
  std::string diagnostic{};
  StiefelPoint<Scalar> final_point;
  Scalar final_energy{};
  Scalar final_residual{};
  std::size_t iterations = 0; // steps taken
  std::vector<IterationRecord<Scalar>> trace{};
  std::size_t total_energy_evals = 0;
  std::size_t total_retraction_evals = 0;
  double wallclock = 0.0;
};

template <typename Scalar>
TangentVector<Scalar> steepest_direction(const TangentVector<Scalar> &G) {
  return TangentVector<Scalar>(G.base(), -G.matrix());
}

template <typename Scalar> struct CgDirection {
  TangentVector<Scalar> D;
  bool was_reset;
};

/// Polak-Ribiere-plus conjugate gradient direction. The previous gradient and
/// direction are brought to the tangent space at U_new by projection. The
/// direction restarts as -G_new every `period` iterations, when it is not a
/// sufficient descent direction, or when it grows beyond 1e3 ||G_new||.
template <typename Scalar>
CgDirection<Scalar> cg_direction(const TangentVector<Scalar> &G_new,
                                 const TangentVector<Scalar> &G_old,
                                 const TangentVector<Scalar> &D_old,
                                 const StiefelPoint<Scalar> &U_new, std::size_t iter,
                                 std::size_t period) {
  auto restart = [&] { return CgDirection<Scalar>{steepest_direction(G_new), true}; };
  const Scalar old_sq = G_old.matrix().squaredNorm();
  if ((period > 0 && iter % period == 0) || !(old_sq > Scalar(0)))
    return restart();

  const Matrix<Scalar> &X = U_new.matrix();
  const Matrix<Scalar> &Gm = G_new.matrix();
  const Matrix<Scalar> PG = G_old.matrix() - X * (X.transpose() * G_old.matrix());
  const Matrix<Scalar> PD = D_old.matrix() - X * (X.transpose() * D_old.matrix());
  const Scalar beta = std::max(Scalar(0), inner(Gm, Gm - PG) / old_sq);
  Matrix<Scalar> D = -Gm + beta * PD;

  const Scalar gsq = Gm.squaredNorm();
  if (!(inner(Gm, D) <= -Scalar(1e-12) * gsq) || D.norm() > Scalar(1e3) * std::sqrt(gsq))
    return restart();
  return {project_tangent(U_new, D), false};
}

/// Orthogonality-constrained line search. Each iteration updates the
/// non-monotone reference C_n from E(U_n), picks a descent direction, seeds
/// the step with a BB quotient, selects t_n with the configured strategy and
/// moves to U_{n+1} = retract(U_n, D_n, t_n). Stops once ||grad_G E||_F <= eps.
///
/// The trace holds one record per visited iterate; the last record describes
/// the final point and carries a zero step.
template <typename Scalar>
SolveResult<Scalar> solve(const EnergyModel<Scalar> &model, const StiefelPoint<Scalar> &U0,
                          const SolveConfig<Scalar> &config) {
  using Clock = std::chrono::steady_clock;
  config.validate();
  if (U0.rows() != model.dimension())
    throw ShapeMismatch("solve: initial point dimension differs from the model");

  const auto started = Clock::now();
  SolveResult<Scalar> result{.status = SolveStatus::failed, .final_point = U0};

  StiefelPoint<Scalar> U = U0;
  Scalar E = model.value(U.matrix());
  result.total_energy_evals = 1;
  Matrix<Scalar> egrad = model.euclidean_gradient(U.matrix());
  std::optional<TangentVector<Scalar>> G = project_tangent(U, egrad);
  Scalar residual = G->norm();

  auto nm = NonMonotoneState<Scalar>::start(config.alpha, E);
  std::optional<TangentVector<Scalar>> G_prev, D_prev;
  Matrix<Scalar> S, Y;
  std::size_t n = 0;

  try {
    if (!std::isfinite(E) || !std::isfinite(residual))
      throw Error("non-finite energy or gradient at the initial point");

    while (residual > config.epsilon && n < config.max_iter) {
      const auto iter_start = Clock::now();
      if (n > 0)
        nm = nm_update(nm, E);

      bool reset = false;
      std::optional<TangentVector<Scalar>> D;
      if (config.direction == DirectionKind::cg_restart && n > 0) {
        auto cg = cg_direction(*G, *G_prev, *D_prev, U, n, config.cg_restart_period);
        D.emplace(std::move(cg.D));
        reset = cg.was_reset;
      } else {
        D.emplace(steepest_direction(*G));
      }
      Scalar g = inner(*G, *D);
      if (!(g < Scalar(0))) {
        D.emplace(steepest_direction(*G));
        reset = true;
        g = inner(*G, *D);
      }
      if (!(g < Scalar(0)))
        throw NonDescentDirection("search direction is not a descent direction");

      const Scalar t_initial =
          n == 0 ? config.initial_step : bb_initial(n, S, Y, config.bb_mode, config.initial_step);
      // C_n >= E(U_n) holds whenever the previous step met the non-monotone
      // test; the max keeps the reference valid when it did not (adaptive
      // steps are not re-checked) or when the recursion rounds below E.
      const Scalar reference = std::max(nm.C, E);

      StepDecision<Scalar> decision;
      std::optional<StiefelPoint<Scalar>> U_next;
      Scalar E_next{};
      switch (config.strategy) {
      case Strategy::adaptive: {
        const Scalar hq = grassmann_hessian_qform(model, U, *D, egrad);
        decision = adaptive_step(E, reference, g, hq, t_initial, config.step, D->norm());
        U_next = retract(config.retraction, U, *D, decision.t);
        E_next = model.value(U_next->matrix());
        ++result.total_retraction_evals;
        ++result.total_energy_evals;
        break;
      }
      case Strategy::backtracking: {
        auto outcome = backtracking_step(model, U, *D, g, t_initial, config.step, reference,
                                         config.retraction);
        decision = outcome.decision;
        U_next = std::move(outcome.point);
        E_next = outcome.energy;
        result.total_retraction_evals += outcome.retraction_evals;
        result.total_energy_evals += outcome.energy_evals;
        if (!(E_next - reference <= config.step.eta * decision.t * g))
          throw Error("accepted backtracking step violates the non-monotone condition");
        break;
      }
      case Strategy::none: {
        decision.t = t_initial;
        decision.initial_accepted = true;
        U_next = retract(config.retraction, U, *D, decision.t);
        E_next = model.value(U_next->matrix());
        ++result.total_retraction_evals;
        ++result.total_energy_evals;
        break;
      }
      }

      Matrix<Scalar> egrad_next = model.euclidean_gradient(U_next->matrix());
      TangentVector<Scalar> G_next = project_tangent(*U_next, egrad_next);
      const Scalar residual_next = G_next.norm();
      if (!std::isfinite(E_next) || !std::isfinite(residual_next))
        throw Error("non-finite energy or gradient after the step");

      S = U_next->matrix() - U.matrix();
      Y = G_next.matrix() - G->matrix();

      IterationRecord<Scalar> rec;
      rec.iter = n;
      rec.energy = E;
      rec.residual = residual;
      rec.step = decision.t;
      rec.backtracks = decision.backtracks;
      rec.estimator = decision.estimator;
      rec.direction_reset = reset;
      rec.reference = reference;
      rec.slope = g;
      rec.elapsed = std::chrono::duration<double>(Clock::now() - iter_start).count();
      result.trace.push_back(rec);

      G_prev.emplace(std::move(*G));
      D_prev.emplace(std::move(*D));
      U = *U_next;
      E = E_next;
      egrad = std::move(egrad_next);
      G.emplace(std::move(G_next));
      residual = residual_next;
      ++n;
    }
    result.status =
        residual <= config.epsilon ? SolveStatus::converged : SolveStatus::max_iterations;
  } catch (const std::exception &e) {
    result.status = SolveStatus::failed;
    result.diagnostic = "iteration " + std::to_string(n) + ": " + e.what();
  }

  IterationRecord<Scalar> last;
  last.iter = n;
  last.energy = E;
  last.residual = residual;
  last.reference = std::max(nm.C, E);
  result.trace.push_back(last);

  result.final_point = U;
  result.final_energy = E;
  result.final_residual = residual;
  result.iterations = n;
  result.wallclock = std::chrono::duration<double>(Clock::now() - started).count();
  return result;
}

} // namespace orthols
