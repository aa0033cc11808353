#include "orthols/harness/trace_io.hpp"

#include <cstdio>
#include <cstdlib>
#include <istream>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "orthols/harness/experiment.hpp"

namespace orthols::harness {

namespace {

std::string sci(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.16e", v);
  return buf;
}

double parse_double(const std::string &s, std::size_t line) {
  // strtod rather than stod: subnormal values are valid trace entries.
  char *end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size())
    throw Error("trace line " + std::to_string(line) + ": bad number '" + s + "'");
  return v;
}

std::size_t parse_count(const std::string &s, std::size_t line) {
  std::size_t used = 0;
  unsigned long long v = 0;
  try {
    v = std::stoull(s, &used);
  } catch (const std::exception &) {
    used = 0;
  }
  if (used != s.size() || s.empty())
    throw Error("trace line " + std::to_string(line) + ": bad integer '" + s + "'");
  return static_cast<std::size_t>(v);
}

} // namespace

std::vector<TraceRow> to_rows(const std::vector<IterationRecord<double>> &trace) {
  std::vector<TraceRow> rows;
  rows.reserve(trace.size());
  for (const auto &r : trace)
    rows.push_back({r.iter, r.energy, r.residual, r.step, r.backtracks, r.estimator,
                    r.direction_reset, r.elapsed});
  return rows;
}

void write_trace_csv(std::ostream &out, const std::vector<TraceRow> &rows) {
  out << kTraceHeader << '\n';
  for (const auto &r : rows) {
    out << r.iter << ',' << sci(r.energy) << ',' << sci(r.residual) << ',' << sci(r.step) << ','
        << r.backtracks << ',' << (r.estimator ? sci(*r.estimator) : std::string()) << ','
        << (r.direction_reset ? 1 : 0) << ',' << sci(r.elapsed_s) << '\n';
  }
}

std::vector<TraceRow> read_trace_csv(std::istream &in) {
  std::string line;
  if (!std::getline(in, line) || line != kTraceHeader)
    throw Error("trace: missing or unexpected header");
  std::vector<TraceRow> rows;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty())
      continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ','))
      f.push_back(cell);
    if (!line.empty() && line.back() == ',')
      f.emplace_back();
    if (f.size() != 8)
      throw Error("trace line " + std::to_string(lineno) + ": expected 8 fields");
    TraceRow r;
    r.iter = parse_count(f[0], lineno);
    r.energy = parse_double(f[1], lineno);
    r.residual = parse_double(f[2], lineno);
    r.step = parse_double(f[3], lineno);
    r.backtracks = parse_count(f[4], lineno);
    if (!f[5].empty())
      r.estimator = parse_double(f[5], lineno);
    if (f[6] != "0" && f[6] != "1")
      throw Error("trace line " + std::to_string(lineno) + ": direction_reset must be 0 or 1");
    r.direction_reset = f[6] == "1";
    r.elapsed_s = parse_double(f[7], lineno);
    rows.push_back(r);
  }
  return rows;
}

void write_trace_json(std::ostream &out, const std::vector<TraceRow> &rows) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto &r : rows) {
    nlohmann::json j{{"iter", r.iter},
                     {"energy", r.energy},
                     {"residual", r.residual},
                     {"step", r.step},
                     {"backtracks", r.backtracks},
                     {"estimator", nullptr},
                     {"direction_reset", r.direction_reset},
                     {"elapsed_s", r.elapsed_s}};
    if (r.estimator)
      j["estimator"] = *r.estimator;
    arr.push_back(std::move(j));
  }
  out << arr.dump(1) << '\n';
}

std::string summary_json(const SolveResult<double> &result) {
  nlohmann::json j{{"status", to_string(result.status)},
                   {"iters", result.iterations},
                   {"final_energy", result.final_energy},
                   {"final_residual", result.final_residual},
                   {"energy_evals", result.total_energy_evals},
                   {"retraction_evals", result.total_retraction_evals},
                   {"wallclock_s", result.wallclock}};
  if (!result.diagnostic.empty())
    j["diagnostic"] = result.diagnostic;
  return j.dump();
}

} // namespace orthols::harness
