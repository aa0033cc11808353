#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "orthols/objectives.hpp"
#include "orthols/search.hpp"

namespace orthols::harness {

enum class ProblemKind { quadratic, lattice };
enum class OutputFormat { csv, json };

struct ProblemSpec {
  ProblemKind kind = ProblemKind::quadratic;
  Eigen::Index n = 50;              // quadratic dimension
  Eigen::Index p = 3;               // number of columns
  std::uint64_t seed = 1;           // problem matrix and initial frame
  std::string matrix_file;          // quadratic: overrides the random matrix
  LatticeParams lattice;            // lattice only
};

struct ExperimentConfig {
  ProblemSpec problem;
  SolveConfig<double> solver;
  std::vector<Strategy> strategies{Strategy::adaptive};
  std::vector<BbMode> bb_modes{BbMode::odd_even};
  std::string out;                  // trace or table destination, empty = none
  OutputFormat format = OutputFormat::csv;
  std::string summary;              // optional JSON summary path

  void validate() const;
};

/// A concrete problem instance plus its ground truth when one is known.
struct Problem {
  std::unique_ptr<EnergyModel<double>> model;
  std::optional<double> oracle_energy;
  std::string description;
};

Problem build_problem(const ProblemSpec &spec);

/// Seeded start: the Q factor of a standard-normal n x p matrix.
StiefelPoint<double> initial_point(Eigen::Index n, Eigen::Index p, std::uint64_t seed);

Strategy parse_strategy(const std::string &s);
BbMode parse_bb_mode(const std::string &s);
DirectionKind parse_direction(const std::string &s);
Retraction parse_retraction(const std::string &s);
ProblemKind parse_problem_kind(const std::string &s);
OutputFormat parse_format(const std::string &s);

std::string to_string(Strategy s);
std::string to_string(BbMode m);
std::string to_string(SolveStatus s);

} // namespace orthols::harness
