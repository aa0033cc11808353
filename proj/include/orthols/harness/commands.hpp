#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "orthols/harness/experiment.hpp"

namespace orthols::harness {

inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitNotConverged = 2;

struct CompareRow {
  std::string label;
  Strategy strategy;
  BbMode bb_mode;
  SolveResult<double> result;
};

struct Comparison {
  std::vector<CompareRow> rows;
  bool energies_agree = true; // among converged rows, 1e-7 relative
  double max_relative_gap = 0;
};

/// Runs every strategy x bb mode on one problem instance from one start.
Comparison run_comparison(const ExperimentConfig &config);

void write_comparison(std::ostream &out, const Comparison &cmp, OutputFormat format);

int cmd_run(const ExperimentConfig &config, std::ostream &out, std::ostream &err);
int cmd_compare(const ExperimentConfig &config, std::ostream &out, std::ostream &err);
int cmd_check(const std::string &suite, std::ostream &out, std::ostream &err);

/// Entry point of the command-line tool; returns the process exit code.
int run_cli(int argc, const char *const *argv, std::ostream &out, std::ostream &err);

} // namespace orthols::harness
