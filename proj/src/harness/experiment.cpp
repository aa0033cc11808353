#include "orthols/harness/experiment.hpp"

#include <fstream>
#include <random>
#include <sstream>

namespace orthols::harness {

void ExperimentConfig::validate() const {
  if (strategies.empty())
    throw Error("config: at least one strategy is required");
  if (bb_modes.empty())
    throw Error("config: at least one bb mode is required");
  const Eigen::Index n =
      problem.kind == ProblemKind::lattice ? problem.lattice.npts : problem.n;
  if (problem.p < 1 || (problem.matrix_file.empty() && n < problem.p))
    throw Error("config: need n >= p >= 1");
  solver.validate();
}

Problem build_problem(const ProblemSpec &spec) {
  Problem out;
  std::ostringstream desc;
  if (spec.kind == ProblemKind::lattice) {
    if (spec.lattice.npts < spec.p)
      throw Error("lattice: need npts >= p");
    out.model = std::make_unique<NonlinearLatticeModel<double>>(spec.lattice);
    desc << "lattice npts=" << spec.lattice.npts << " p=" << spec.p
         << " L=" << spec.lattice.length << " gamma=" << spec.lattice.gamma
         << " well=" << spec.lattice.well;
  } else {
    MatrixXd A;
    if (!spec.matrix_file.empty()) {
      std::ifstream in(spec.matrix_file);
      if (!in)
        throw Error("cannot open matrix file '" + spec.matrix_file + "'");
      A = read_dense_matrix<double>(in);
      desc << "quadratic file=" << spec.matrix_file;
    } else {
      A = random_symmetric<double>(spec.n, spec.seed);
      desc << "quadratic n=" << spec.n << " seed=" << spec.seed;
    }
    if (A.rows() < spec.p)
      throw Error("quadratic: need n >= p");
    auto model = std::make_unique<QuadraticTraceModel<double>>(A);
    out.oracle_energy = eigen_oracle(*model, spec.p).min_energy;
    out.model = std::move(model);
    desc << " p=" << spec.p;
  }
  out.description = desc.str();
  return out;
}

StiefelPoint<double> initial_point(Eigen::Index n, Eigen::Index p, std::uint64_t seed) {
  // Offset stream so the start is independent of the problem matrix.
  std::mt19937_64 rng(seed ^ 0x9E3779B97F4A7C15ULL);
  return random_stiefel<double>(n, p, rng);
}

Strategy parse_strategy(const std::string &s) {
  if (s == "adaptive")
    return Strategy::adaptive;
  if (s == "backtracking")
    return Strategy::backtracking;
  if (s == "none")
    return Strategy::none;
  throw Error("unknown strategy '" + s + "'");
}

BbMode parse_bb_mode(const std::string &s) {
  if (s == "odd_even")
    return BbMode::odd_even;
  if (s == "bb1")
    return BbMode::bb1;
  if (s == "bb2")
    return BbMode::bb2;
  throw Error("unknown bb mode '" + s + "'");
}

DirectionKind parse_direction(const std::string &s) {
  if (s == "steepest")
    return DirectionKind::steepest;
  if (s == "cg_restart" || s == "cg")
    return DirectionKind::cg_restart;
  throw Error("unknown direction '" + s + "'");
}

Retraction parse_retraction(const std::string &s) {
  if (s == "qr")
    return Retraction::qr;
  if (s == "geodesic")
    return Retraction::geodesic;
  throw Error("unknown retraction '" + s + "'");
}

ProblemKind parse_problem_kind(const std::string &s) {
  if (s == "quadratic")
    return ProblemKind::quadratic;
  if (s == "lattice")
    return ProblemKind::lattice;
  throw Error("unknown problem '" + s + "'");
}

OutputFormat parse_format(const std::string &s) {
  if (s == "csv")
    return OutputFormat::csv;
  if (s == "json")
    return OutputFormat::json;
  throw Error("unknown format '" + s + "'");
}

std::string to_string(Strategy s) {
  switch (s) {
  case Strategy::adaptive:
    return "adaptive";
  case Strategy::backtracking:
    return "backtracking";
  case Strategy::none:
    return "none";
  }
  return "?";
}

std::string to_string(BbMode m) {
  switch (m) {
  case BbMode::odd_even:
    return "odd_even";
  case BbMode::bb1:
    return "bb1";
  case BbMode::bb2:
    return "bb2";
  }
  return "?";
}

std::string to_string(SolveStatus s) {
  switch (s) {
  case SolveStatus::converged:
    return "converged";
  case SolveStatus::max_iterations:
    return "max_iterations";
  case SolveStatus::failed:
    return "failed";
  }
  return "?";
}

} // namespace orthols::harness
