#include "orthols/harness/checks.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "orthols/counting_model.hpp"
#include "orthols/manifold.hpp"
#include "orthols/objectives.hpp"
#include "orthols/search.hpp"
#include "orthols/stepsize.hpp"

namespace orthols::harness {

namespace {

using Rng = std::mt19937_64;
using Point = StiefelPoint<double>;
using Tangent = TangentVector<double>;

class Recorder {
public:
  void add(std::string name, bool passed, const std::string &detail) {
    results_.push_back({std::move(name), passed, detail});
  }
  std::vector<CheckResult> take() { return std::move(results_); }

private:
  std::vector<CheckResult> results_;
};

std::string fmt(const char *label, double v) {
  std::ostringstream os;
  os.precision(3);
  os << label << "=" << std::scientific << v;
  return os.str();
}

std::pair<Eigen::Index, Eigen::Index> random_shape(Rng &rng, Eigen::Index max_n = 30,
                                                   Eigen::Index max_p = 6) {
  const auto p = std::uniform_int_distribution<Eigen::Index>(1, max_p)(rng);
  const auto n = std::uniform_int_distribution<Eigen::Index>(p + 1, max_n)(rng);
  return {n, p};
}

Tangent unit_tangent(const Point &U, Rng &rng) {
  const Tangent D = random_tangent(U, rng);
  return Tangent(U, D.matrix() / D.norm());
}

double uniform(Rng &rng, double a, double b) {
  return std::uniform_real_distribution<double>(a, b)(rng);
}

double log_uniform(Rng &rng, double lo_exp, double hi_exp) {
  return std::pow(10.0, uniform(rng, lo_exp, hi_exp));
}

const Retraction kRetractions[] = {Retraction::qr, Retraction::geodesic};

const char *name_of(Retraction r) { return r == Retraction::qr ? "qr" : "geodesic"; }

} // namespace

std::vector<CheckResult> geometry_checks() {
  Recorder rec;

  for (Retraction kind : kRetractions) {
    Rng rng(101);
    bool exact = true;
    for (int trial = 0; trial < 100; ++trial) {
      const auto [n, p] = random_shape(rng);
      const Point U = random_stiefel<double>(n, p, rng);
      const Tangent D = random_tangent(U, rng);
      const Point R = retract(kind, U, D, 0.0);
      exact = exact && (R.matrix().array() == U.matrix().array()).all();
    }
    rec.add(std::string("retraction_at_zero/") + name_of(kind), exact, "100 trials");
  }

  for (Retraction kind : kRetractions) {
    Rng rng(102);
    double lo = 1e300, hi = 0;
    for (int trial = 0; trial < 20; ++trial) {
      const auto [n, p] = random_shape(rng);
      const Point U = random_stiefel<double>(n, p, rng);
      const Tangent D = unit_tangent(U, rng);
      double prev = 0;
      for (double h : {1e-3, 1e-4, 1e-5}) {
        const Matrix<double> fd = (retract(kind, U, D, h).matrix() - U.matrix()) / h;
        const double err = (fd - D.matrix()).norm();
        if (prev > 0) {
          lo = std::min(lo, prev / err);
          hi = std::max(hi, prev / err);
        }
        prev = err;
      }
    }
    rec.add(std::string("retraction_derivative/") + name_of(kind), lo >= 5.0 && hi <= 20.0,
            fmt("min_ratio", lo) + " " + fmt("max_ratio", hi));
  }

  for (Retraction kind : kRetractions) {
    Rng rng(103);
    double worst = 0;
    for (int trial = 0; trial < 1000; ++trial) {
      const auto [n, p] = random_shape(rng);
      const Point U = random_stiefel<double>(n, p, rng);
      const Tangent D = random_tangent(U, rng);
      const double t = uniform(rng, 0.0, 10.0);
      worst = std::max(worst, orthonormality_defect(retract(kind, U, D, t).matrix()));
    }
    rec.add(std::string("feasibility/") + name_of(kind), worst <= 1e-10, fmt("max_defect", worst));
  }

  for (Retraction kind : kRetractions) {
    Rng rng(104);
    bool monotone = true;
    double last = 0;
    for (int trial = 0; trial < 50; ++trial) {
      const auto [n, p] = random_shape(rng);
      const Point U = random_stiefel<double>(n, p, rng);
      const Tangent D = random_tangent(U, rng);
      double prev = 1e300;
      for (double t : {1e-1, 1e-2, 1e-3}) {
        const Matrix<double> lin = U.matrix() + t * D.matrix();
        const double ratio = (retract(kind, U, D, t).matrix() - lin).norm() / (t * D.norm());
        monotone = monotone && ratio < prev;
        prev = ratio;
      }
      last = std::max(last, prev);
    }
    rec.add(std::string("second_order_defect/") + name_of(kind), monotone,
            fmt("max_ratio_at_1e-3", last));
  }

  {
    Rng rng(105);
    double worst_iso = 0, worst_tan = 0;
    for (int trial = 0; trial < 300; ++trial) {
      const auto [n, p] = random_shape(rng);
      const Point U = random_stiefel<double>(n, p, rng);
      const Tangent D = random_tangent(U, rng);
      const Tangent X = unit_tangent(U, rng);
      const Tangent Y = unit_tangent(U, rng);
      const double t = uniform(rng, 0.0, 2.0);
      const Tangent tX = parallel_transport(U, D, t, X);
      const Tangent tY = parallel_transport(U, D, t, Y);
      worst_iso = std::max(worst_iso, std::abs(inner(tX, tY) - inner(X, Y)));
      worst_iso = std::max(worst_iso, std::abs(tX.norm() - 1.0));
      const Matrix<double> &W = tX.base().matrix();
      worst_tan = std::max(worst_tan, (W.transpose() * tX.matrix()).norm());
    }
    rec.add("transport_isometry", worst_iso <= 1e-10, fmt("max_inner_error", worst_iso));
    rec.add("transport_tangency", worst_tan <= 1e-10, fmt("max_defect", worst_tan));
  }

  {
    Rng rng(106);
    bool ok = true;
    double worst = 0;
    for (int trial = 0; trial < 500; ++trial) {
      const auto [n, p] = random_shape(rng);
      const Point U = random_stiefel<double>(n, p, rng);
      const Point W = random_stiefel<double>(n, p, rng);
      const double cf = dist_cf(U, W), geo = dist_geo(U, W);
      ok = ok && cf <= geo * (1 + 1e-12) && geo <= 2 * cf * (1 + 1e-12);
      worst = std::max(worst, geo / std::max(cf, 1e-300));
    }
    rec.add("distance_sandwich", ok, fmt("max_geo_over_cf", worst));
  }

  {
    Rng rng(107);
    double worst_end = 0, worst_len = 0;
    for (int trial = 0; trial < 100; ++trial) {
      const auto [n, p] = random_shape(rng);
      const Point U = random_stiefel<double>(n, p, rng);
      const Point W = random_stiefel<double>(n, p, rng);
      const auto pa = principal_angles(U, W);
      worst_end = std::max(worst_end, dist_geo(geodesic_point(U, pa, 1.0), W));
      worst_len = std::max(worst_len, std::abs(geodesic_direction(U, pa).norm() - pa.theta.norm()));
    }
    rec.add("geodesic_reconstruction", worst_end <= 1e-8 && worst_len <= 1e-10,
            fmt("max_endpoint_dist", worst_end) + " " + fmt("max_length_error", worst_len));
  }

  return rec.take();
}

namespace {

struct ModelCase {
  std::string name;
  std::unique_ptr<EnergyModel<double>> model;
};

std::vector<ModelCase> calculus_models() {
  std::vector<ModelCase> out;
  out.push_back({"quadratic", std::make_unique<QuadraticTraceModel<double>>(
                                  random_symmetric<double>(24, 7))});
  LatticeParams lp;
  lp.npts = 40;
  out.push_back({"lattice", std::make_unique<NonlinearLatticeModel<double>>(lp)});
  return out;
}

} // namespace

std::vector<CheckResult> objectives_checks() {
  Recorder rec;
  for (const auto &mc : calculus_models()) {
    const EnergyModel<double> &model = *mc.model;
    const Eigen::Index n = model.dimension();
    Rng rng(201);

    double worst_grad = 0, worst_hess = 0, worst_sym = 0, worst_tan = 0;
    for (int trial = 0; trial < 100; ++trial) {
      const auto p = std::uniform_int_distribution<Eigen::Index>(1, 5)(rng);
      const Point U = random_stiefel<double>(n, p, rng);

      const Matrix<double> Dm = random_normal<double>(n, p, rng);
      const double eps = 1e-5;
      const double exact = inner(model.euclidean_gradient(U.matrix()), Dm);
      const double fd = (model.value(U.matrix() + eps * Dm) - model.value(U.matrix() - eps * Dm)) /
                        (2 * eps);
      worst_grad = std::max(worst_grad, std::abs(exact - fd) / (1 + std::abs(exact)));

      const Tangent D = unit_tangent(U, rng);
      const double h = 1e-3;
      const double e0 = model.value(U.matrix());
      const double ep = model.value(retract_geodesic(U, D, h).matrix());
      const double em = model.value(retract_geodesic(U, D, -h).matrix());
      const double q = grassmann_hessian_qform(model, U, D);
      worst_hess = std::max(worst_hess, std::abs((ep - 2 * e0 + em) / (h * h) - q) / (1 + std::abs(q)));

      const Matrix<double> D1 = random_normal<double>(n, p, rng);
      const Matrix<double> D2 = random_normal<double>(n, p, rng);
      const double a = inner(model.hessian_apply(U.matrix(), D1), D2);
      const double b = inner(model.hessian_apply(U.matrix(), D2), D1);
      worst_sym = std::max(worst_sym, std::abs(a - b) / (1 + std::abs(a)));

      const Tangent G = grassmann_gradient(model, U);
      worst_tan = std::max(worst_tan, (U.matrix().transpose() * G.matrix()).norm());
    }
    rec.add("gradient_fd/" + mc.name, worst_grad <= 1e-6, fmt("max_rel_error", worst_grad));
    rec.add("hessian_qform_fd/" + mc.name, worst_hess <= 1e-4, fmt("max_rel_error", worst_hess));
    rec.add("hessian_symmetry/" + mc.name, worst_sym <= 1e-9, fmt("max_rel_error", worst_sym));
    rec.add("gradient_tangency/" + mc.name, worst_tan <= 1e-10, fmt("max_defect", worst_tan));

    double worst_e = 0, worst_g = 0;
    for (int trial = 0; trial < 200; ++trial) {
      const auto p = std::uniform_int_distribution<Eigen::Index>(1, 5)(rng);
      const Point U = random_stiefel<double>(n, p, rng);
      const Matrix<double> P = thin_qr(random_normal<double>(p, p, rng)).Q;
      const Point UP(U.matrix() * P);
      const double e = model.value(U.matrix());
      worst_e = std::max(worst_e, std::abs(model.value(UP.matrix()) - e) / (1 + std::abs(e)));
      const Tangent G = grassmann_gradient(model, U);
      const Tangent GP = grassmann_gradient(model, UP);
      worst_g = std::max(worst_g, (GP.matrix() - G.matrix() * P).norm() / (1 + G.norm()));
    }
    rec.add("energy_invariance/" + mc.name, worst_e <= 1e-10, fmt("max_rel_error", worst_e));
    rec.add("gradient_equivariance/" + mc.name, worst_g <= 1e-10, fmt("max_rel_error", worst_g));

    double min_ratio = 1e300;
    bool taylor_ok = true;
    for (int trial = 0; trial < 20; ++trial) {
      const auto p = std::uniform_int_distribution<Eigen::Index>(1, 5)(rng);
      const Point U = random_stiefel<double>(n, p, rng);
      const Tangent D = unit_tangent(U, rng);
      const double e0 = model.value(U.matrix());
      const double g = inner(grassmann_gradient(model, U), D);
      const double q = grassmann_hessian_qform(model, U, D);
      auto remainder = [&](double t) {
        return std::abs(model.value(retract_geodesic(U, D, t).matrix()) - e0 - t * g -
                        0.5 * t * t * q);
      };
      const double r1 = remainder(1e-1), r2 = remainder(1e-2);
      // A vanishing remainder at the small step means the model is even
      // flatter than cubic along D, which also passes.
      const bool ok = r2 <= 1e-12 * (1 + std::abs(e0)) || r1 / r2 >= 300.0;
      taylor_ok = taylor_ok && ok;
      if (r2 > 0)
        min_ratio = std::min(min_ratio, r1 / r2);
    }
    rec.add("taylor_ratio/" + mc.name, taylor_ok, fmt("min_ratio", min_ratio));
  }
  return rec.take();
}

namespace {

struct StepTuple {
  double E, C, g, hq, eta, theta, normD;
};

StepTuple random_tuple(Rng &rng, double max_eta) {
  StepTuple s;
  s.C = uniform(rng, -10, 10);
  s.E = uniform(rng, 0, 1) < 0.2 ? s.C : s.C - log_uniform(rng, -6, 1);
  s.g = -log_uniform(rng, -3, 2);
  const double u = uniform(rng, 0, 1);
  s.hq = u < 0.8 ? log_uniform(rng, -3, 3) : (u < 0.9 ? 0.0 : -log_uniform(rng, -3, 3));
  s.eta = std::min(max_eta, log_uniform(rng, -6, -0.5));
  s.theta = uniform(rng, 0.05, 1.0);
  s.normD = log_uniform(rng, -2, 1);
  return s;
}

double zeta(const StepTuple &s, double t) { return estimator_zeta(s.E, s.C, s.g, s.hq, t); }

// Largest t <= theta / ||D|| with zeta(t) >= eta, found by bisection. zeta is
// non-increasing in t when hq > 0 and bounded below by 1 otherwise.
double bisect_bound(const StepTuple &s) {
  const double trust = s.theta / s.normD;
  if (zeta(s, trust) >= s.eta)
    return trust;
  double lo = 0, hi = trust;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi)
      break;
    (mid > 0 && zeta(s, mid) >= s.eta ? lo : hi) = mid;
  }
  return lo;
}

} // namespace

std::vector<CheckResult> stepsize_checks() {
  Recorder rec;

  {
    Rng rng(301);
    double worst_edge = 0, worst_oracle = 0;
    bool ok = true;
    for (int trial = 0; trial < 1000; ++trial) {
      const StepTuple s = random_tuple(rng, 0.5);
      const double trust = s.theta / s.normD;
      const double b = acceptable_upper_bound(s.E, s.C, s.g, s.hq, s.eta, s.theta, s.normD);
      auto acceptable = [&](double t) { return zeta(s, t) >= s.eta && t * s.normD <= s.theta; };
      const double below = b * (1 - 1e-6), above = b * (1 + 1e-6);
      // Inside the interval the test holds; just outside it fails unless the
      // miss is within roundoff of the boundary.
      if (!acceptable(below)) {
        worst_edge = std::max(worst_edge, s.eta - zeta(s, below));
        ok = ok && s.eta - zeta(s, below) <= 1e-10;
      }
      if (acceptable(above) && above * s.normD <= s.theta) {
        worst_edge = std::max(worst_edge, zeta(s, above) - s.eta);
        ok = ok && zeta(s, above) - s.eta <= 1e-10;
      }
      const double oracle = bisect_bound(s);
      const double dz = b >= trust * (1 - 1e-15) && oracle >= trust * (1 - 1e-15)
                            ? 0.0
                            : std::abs(zeta(s, b) - zeta(s, std::max(oracle, 1e-300)));
      worst_oracle = std::max(worst_oracle, dz);
      ok = ok && dz <= 1e-10;
    }
    rec.add("zeta_interval_equivalence", ok,
            fmt("max_edge_error", worst_edge) + " " + fmt("max_bisection_gap", worst_oracle));
  }

  {
    Rng rng(302);
    bool ok = true;
    double worst = 1e300;
    for (int trial = 0; trial < 1000; ++trial) {
      const StepTuple s = random_tuple(rng, 1e-4);
      const double t = improve_step(s.g, s.hq, s.theta, s.normD);
      const double z = zeta(s, t);
      ok = ok && z >= s.eta && t * s.normD <= s.theta * (1 + 1e-15);
      worst = std::min(worst, z - s.eta);
    }
    rec.add("improve_step_acceptable", ok, fmt("min_zeta_margin", worst));
  }

  {
    Rng rng(303);
    bool ok = true;
    for (int seq = 0; seq < 200; ++seq) {
      const double alpha = seq % 10 == 0 ? 0.0 : uniform(rng, 0.0, 0.99);
      auto st = NonMonotoneState<double>::start(alpha, uniform(rng, -5, 5));
      double last = st.C;
      for (int step = 0; step < 200; ++step) {
        // Energies accepted by a line search never exceed the reference.
        last = st.C - log_uniform(rng, -8, 0);
        st = nm_update(st, last);
        // Q reaches 1 / (1 - alpha) in floating point once alpha^k drops
        // below an ulp of it, so the strict bound is checked up to rounding.
        const double limit = 1.0 / (1.0 - alpha);
        ok = ok && st.C >= last && st.Q >= 1.0 && st.Q <= limit * (1 + 1e-15);
        if (alpha == 0.0)
          ok = ok && st.C == last && st.Q == 1.0;
      }
    }
    rec.add("nonmonotone_invariants", ok, "200 sequences of 200 updates");
  }

  {
    // With alpha = 0 the reference is the current energy, so backtracking is
    // plain Armijo: compare with a direct loop.
    Rng rng(304);
    bool ok = true;
    StepParams<double> params;
    for (int trial = 0; trial < 50; ++trial) {
      const QuadraticTraceModel<double> model(random_spd_with_condition<double>(12, 1e3, 400 + trial));
      const Point U = random_stiefel<double>(12, 2, rng);
      const Tangent G = grassmann_gradient(model, U);
      const Tangent D(U, -G.matrix());
      const double g = inner(G, D);
      const double E = model.value(U.matrix());
      const auto st = nm_update(NonMonotoneState<double>::start(0.0, 123.0), E);
      const double t0 = log_uniform(rng, -2, 1);
      const auto out = backtracking_step(model, U, D, g, t0, params, st.C, Retraction::qr);
      double t = t0;
      while (model.value(retract_qr(U, D, t).matrix()) - E > params.eta * t * g)
        t *= params.k;
      ok = ok && st.C == E && out.decision.t == t;
    }
    rec.add("alpha_zero_is_armijo", ok, "50 trials");
  }

  {
    Rng rng(305);
    bool ok = true;
    for (int trial = 0; trial < 1000; ++trial) {
      const Matrix<double> S = random_normal<double>(6, 2, rng) * log_uniform(rng, -6, 2);
      const Matrix<double> Y = random_normal<double>(6, 2, rng) * log_uniform(rng, -6, 2);
      for (const auto tau : {bb_step_1(S, Y), bb_step_2(S, Y)})
        ok = ok && tau && std::isfinite(*tau) && *tau > 0;
    }
    rec.add("bb_positive", ok, "1000 trials");
  }

  return rec.take();
}

std::vector<CheckResult> search_checks() {
  Recorder rec;
  const QuadraticTraceModel<double> model(random_symmetric<double>(30, 5));
  Rng rng(401);
  const Point U0 = random_stiefel<double>(30, 3, rng);
  SolveConfig<double> cfg;
  cfg.epsilon = 1e-9;

  {
    CountingModel<double> counting(model);
    const auto r = solve<double>(counting, U0, cfg);
    const bool ok = r.status == SolveStatus::converged &&
                    counting.values() == r.iterations + 1 &&
                    r.total_energy_evals == r.iterations + 1 &&
                    r.total_retraction_evals == r.iterations;
    rec.add("adaptive_zero_probe", ok,
            "iters=" + std::to_string(r.iterations) +
                " energy_evals=" + std::to_string(counting.values()));
  }

  {
    auto bcfg = cfg;
    bcfg.strategy = Strategy::backtracking;
    const auto r = solve<double>(model, U0, bcfg);
    bool ok = r.status == SolveStatus::converged;
    bool descent = true;
    for (std::size_t i = 0; i + 1 < r.trace.size(); ++i) {
      const auto &a = r.trace[i];
      ok = ok && r.trace[i + 1].energy - a.reference <= bcfg.step.eta * a.step * a.slope;
      ok = ok && a.reference >= a.energy;
      descent = descent && a.slope < 0;
    }
    rec.add("backtracking_condition", ok, "iters=" + std::to_string(r.iterations));
    rec.add("descent_direction", descent, "every iteration");
  }

  {
    double worst = 0;
    for (Retraction kind : kRetractions) {
      for (std::size_t cap : {1, 5, 25, 125}) {
        auto c = cfg;
        c.max_iter = cap;
        c.retraction = kind;
        worst = std::max(worst, orthonormality_defect(solve<double>(model, U0, c).final_point.matrix()));
      }
    }
    rec.add("trajectory_feasibility", worst <= 1e-10, fmt("max_defect", worst));
  }

  {
    const auto a = solve<double>(model, U0, cfg);
    const auto b = solve<double>(model, U0, cfg);
    bool same = a.trace.size() == b.trace.size();
    for (std::size_t i = 0; same && i < a.trace.size(); ++i)
      same = a.trace[i].energy == b.trace[i].energy && a.trace[i].residual == b.trace[i].residual &&
             a.trace[i].step == b.trace[i].step;
    rec.add("determinism", same, "two identical solves");
  }

  return rec.take();
}

std::vector<CheckResult> run_checks(const std::string &suite) {
  if (suite == "geometry")
    return geometry_checks();
  if (suite == "objectives")
    return objectives_checks();
  if (suite == "stepsize")
    return stepsize_checks();
  if (suite == "search")
    return search_checks();
  if (suite == "all") {
    std::vector<CheckResult> out;
    for (auto part : {geometry_checks(), objectives_checks(), stepsize_checks(), search_checks()})
      out.insert(out.end(), part.begin(), part.end());
    return out;
  }
  throw Error("unknown suite '" + suite + "'");
}

} // namespace orthols::harness
