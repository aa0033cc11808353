#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "orthols/search.hpp"

namespace orthols::harness {

inline constexpr const char *kTraceHeader =
    "iter,energy,residual,step,backtracks,estimator,direction_reset,elapsed_s";

/// Flat trace row as written to disk.
struct TraceRow {
  std::size_t iter = 0;
  double energy = 0;
  double residual = 0;
  double step = 0;
  std::size_t backtracks = 0;
  std::optional<double> estimator;
  bool direction_reset = false;
  double elapsed_s = 0;

  bool operator==(const TraceRow &) const = default;
};

std::vector<TraceRow> to_rows(const std::vector<IterationRecord<double>> &trace);

void write_trace_csv(std::ostream &out, const std::vector<TraceRow> &rows);
std::vector<TraceRow> read_trace_csv(std::istream &in);
void write_trace_json(std::ostream &out, const std::vector<TraceRow> &rows);

/// {status, iters, final_energy, final_residual, energy_evals, retraction_evals, wallclock_s}
std::string summary_json(const SolveResult<double> &result);

} // namespace orthols::harness
