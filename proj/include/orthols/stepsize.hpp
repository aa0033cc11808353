#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>

#include "orthols/errors.hpp"
#include "orthols/manifold.hpp"
#include "orthols/numerics.hpp"
#include "orthols/objectives.hpp"

namespace orthols {

/// Exponentially weighted reference value for the non-monotone test:
///   Q' = alpha Q + 1,  C' = (alpha Q C + E_new) / Q'.
/// Start from C = E(U_0), Q = 1. With alpha = 0, C tracks the latest energy
/// and the test reduces to plain Armijo.
template <typename Scalar> struct NonMonotoneState {
  Scalar alpha{};
  Scalar C{};
  Scalar Q{1};

  static NonMonotoneState start(Scalar alpha, Scalar initial_energy) {
    if (!(alpha >= Scalar(0) && alpha < Scalar(1)))
      throw Error("NonMonotoneState: alpha must lie in [0, 1)");
    return {alpha, initial_energy, Scalar(1)};
  }
};

template <typename Scalar>
NonMonotoneState<Scalar> nm_update(const NonMonotoneState<Scalar> &state, Scalar energy) {
  NonMonotoneState<Scalar> next = state;
  next.Q = state.alpha * state.Q + Scalar(1);
  next.C = (state.alpha * state.Q * state.C + energy) / next.Q;
  return next;
}

template <typename Scalar> struct StepParams {
  Scalar eta{1e-4};    // sufficient decrease, in (0, 1)
  Scalar t_min{1e-20}; // step floor
  Scalar k{0.5};       // backtracking shrink factor, in (0, 1)
  Scalar theta{0.2};   // trust radius on t * ||D||

  void validate() const {
    if (!(eta > Scalar(0) && eta < Scalar(1)))
      throw Error("StepParams: eta must lie in (0, 1)");
    if (!(t_min > Scalar(0)))
      throw Error("StepParams: t_min must be positive");
    if (!(k > Scalar(0) && k < Scalar(1)))
      throw Error("StepParams: k must lie in (0, 1)");
    if (!(theta > Scalar(0)))
      throw Error("StepParams: theta must be positive");
  }
};

enum class ClampReason { none, trust_radius, floor, curvature_minimizer };

inline const char *to_string(ClampReason r) {
  switch (r) {
  case ClampReason::none:
    return "none";
  case ClampReason::trust_radius:
    return "trust_radius";
  case ClampReason::floor:
    return "floor";
  case ClampReason::curvature_minimizer:
    return "curvature_minimizer";
  }
  return "?";
}

template <typename Scalar> struct StepDecision {
  Scalar t{};
  bool initial_accepted = false;
  std::optional<Scalar> estimator; // zeta at the tried step; adaptive only
  ClampReason clamp_reason = ClampReason::none;
  std::size_t backtracks = 0;
};

enum class BbMode { odd_even, bb1, bb2 };

// ---------------------------------------------------------------------------
// Barzilai-Borwein initial steps, S = U_n - U_{n-1}, Y = grad_n - grad_{n-1}.
// Both return nullopt when a denominator falls below 1e-30.

template <typename DerivedS, typename DerivedY>
std::optional<typename DerivedS::Scalar> bb_step_1(const Eigen::MatrixBase<DerivedS> &S,
                                                   const Eigen::MatrixBase<DerivedY> &Y) {
  using Scalar = typename DerivedS::Scalar;
  const Scalar sy = std::abs(inner(S, Y));
  if (!(sy >= Scalar(1e-30)))
    return std::nullopt;
  return S.squaredNorm() / sy;
}

template <typename DerivedS, typename DerivedY>
std::optional<typename DerivedS::Scalar> bb_step_2(const Eigen::MatrixBase<DerivedS> &S,
                                                   const Eigen::MatrixBase<DerivedY> &Y) {
  using Scalar = typename DerivedS::Scalar;
  const Scalar sy = std::abs(inner(S, Y));
  const Scalar yy = Y.squaredNorm();
  if (!(yy >= Scalar(1e-30)) || !(sy >= Scalar(1e-30)))
    return std::nullopt;
  return sy / yy;
}

/// Initial step for iteration `iter`: tau_1 on odd iterations and tau_2 on
/// even ones (or one of them always). Iteration 0 has no (S, Y) pair and gets
/// `first_step`; degenerate BB quotients fall back to 1.
template <typename DerivedS, typename DerivedY>
typename DerivedS::Scalar bb_initial(std::size_t iter, const Eigen::MatrixBase<DerivedS> &S,
                                     const Eigen::MatrixBase<DerivedY> &Y, BbMode mode,
                                     typename DerivedS::Scalar first_step = 1e-2) {
  using Scalar = typename DerivedS::Scalar;
  if (iter == 0)
    return first_step;
  const bool use_first = mode == BbMode::bb1 || (mode == BbMode::odd_even && iter % 2 == 1);
  const auto tau = use_first ? bb_step_1(S, Y) : bb_step_2(S, Y);
  return tau.value_or(Scalar(1));
}

// ---------------------------------------------------------------------------
// Quadratic-model estimator. Throughout, g = <grad_G E(U), D> and
// hq = hess_G E(U)[D, D].

namespace detail {
template <typename Scalar> void require_descent(Scalar g, const char *where) {
  if (!(g < Scalar(0)))
    throw NonDescentDirection(std::string(where) + ": <grad, D> must be negative");
}
} // namespace detail

/// zeta(t) = [E - C + t g + t^2 hq / 2] / (t g).
template <typename Scalar> Scalar estimator_zeta(Scalar E, Scalar C, Scalar g, Scalar hq, Scalar t) {
  detail::require_descent(g, "estimator_zeta");
  if (!(t > Scalar(0)))
    throw Error("estimator_zeta: step must be positive");
  return (E - C + t * g + Scalar(0.5) * t * t * hq) / (t * g);
}

/// Largest t with zeta(t) >= eta and t ||D|| <= theta. For hq > 0 it is
///   min( [(eta - 1) - sqrt(Delta)] g / hq, theta / ||D|| ),
///   Delta = (eta - 1)^2 - 2 hq (E - C) / g^2,
/// otherwise theta / ||D||. Requires E <= C.
template <typename Scalar>
Scalar acceptable_upper_bound(Scalar E, Scalar C, Scalar g, Scalar hq, Scalar eta, Scalar theta,
                              Scalar normD) {
  detail::require_descent(g, "acceptable_upper_bound");
  if (E > C)
    throw InvalidReference("acceptable_upper_bound: energy exceeds the reference value");
  if (!(normD > Scalar(0)))
    throw Error("acceptable_upper_bound: direction norm must be positive");
  const Scalar trust = theta / normD;
  if (!(hq > Scalar(0)))
    return trust;
  const Scalar delta = (eta - Scalar(1)) * (eta - Scalar(1)) - Scalar(2) * hq * (E - C) / (g * g);
  const Scalar curvature = ((eta - Scalar(1)) - std::sqrt(delta)) * g / hq;
  return std::min(curvature, trust);
}

/// Minimizer of the quadratic model, clamped to the trust radius.
template <typename Scalar> Scalar improve_step(Scalar g, Scalar hq, Scalar theta, Scalar normD) {
  detail::require_descent(g, "improve_step");
  if (!(normD > Scalar(0)))
    throw Error("improve_step: direction norm must be positive");
  const Scalar trust = theta / normD;
  if (hq > Scalar(0))
    return std::min(-g / hq, trust);
  return trust;
}

/// Estimate -> Judge -> Improve. Clamp the initial guess into
/// [t_min, theta / ||D||], accept it when zeta >= eta, and otherwise take the
/// quadratic-model minimizer. Never touches the energy or the retraction.
template <typename Scalar>
StepDecision<Scalar> adaptive_step(Scalar E, Scalar C, Scalar g, Scalar hq, Scalar t_initial,
                                   const StepParams<Scalar> &params, Scalar normD) {
  detail::require_descent(g, "adaptive_step");
  if (!(normD > Scalar(0)))
    throw Error("adaptive_step: direction norm must be positive");

  StepDecision<Scalar> out;
  const Scalar trust = params.theta / normD;
  Scalar t = t_initial;
  if (!(t >= params.t_min)) {
    t = params.t_min;
    out.clamp_reason = ClampReason::floor;
  }
  if (t > trust) {
    t = trust;
    out.clamp_reason = ClampReason::trust_radius;
  }

  const Scalar zeta = estimator_zeta(E, C, g, hq, t);
  out.estimator = zeta;
  if (zeta >= params.eta) {
    out.t = t;
    out.initial_accepted = true;
    return out;
  }

  out.t = improve_step(g, hq, params.theta, normD);
  out.clamp_reason = (hq > Scalar(0) && -g / hq <= trust) ? ClampReason::curvature_minimizer
                                                          : ClampReason::trust_radius;
  return out;
}

template <typename Scalar> struct BacktrackOutcome {
  StepDecision<Scalar> decision;
  StiefelPoint<Scalar> point; // retract(U, D, t) at the accepted t
  Scalar energy;              // E at that point
  std::size_t retraction_evals = 0;
  std::size_t energy_evals = 0;
};

/// Armijo-type backtracking against the non-monotone reference C: shrink
/// t <- k t from max(t_initial, t_min) until
///   E(retract(U, D, t)) - C <= eta t g.
/// Each trial costs one retraction and one energy evaluation; the accepted
/// trial is returned so the caller does not recompute it. A trial whose
/// retraction fails or whose energy is not finite counts as rejected.
template <typename Scalar>
BacktrackOutcome<Scalar> backtracking_step(const EnergyModel<Scalar> &model,
                                           const StiefelPoint<Scalar> &U,
                                           const TangentVector<Scalar> &D, Scalar g,
                                           Scalar t_initial, const StepParams<Scalar> &params,
                                           Scalar C, Retraction retraction) {
  static constexpr std::size_t kMaxBacktracks = 100;
  detail::require_descent(g, "backtracking_step");

  StepDecision<Scalar> decision;
  Scalar t = std::max(t_initial, params.t_min);
  if (!(t_initial >= params.t_min))
    decision.clamp_reason = ClampReason::floor;

  std::size_t retractions = 0, energies = 0;
  for (;;) {
    std::optional<StiefelPoint<Scalar>> trial;
    ++retractions;
    try {
      trial = retract(retraction, U, D, t);
    } catch (const RankDeficient &) {
    }
    if (trial) {
      const Scalar energy = model.value(trial->matrix());
      ++energies;
      if (std::isfinite(energy) && energy - C <= params.eta * t * g) {
        decision.t = t;
        decision.initial_accepted = decision.backtracks == 0;
        return {decision, *trial, energy, retractions, energies};
      }
    }
    if (decision.backtracks == kMaxBacktracks)
      throw MaxBacktracks("backtracking_step: no acceptable step after 100 reductions");
    t *= params.k;
    ++decision.backtracks;
  }
}

} // namespace orthols
