#include "orthols/harness/commands.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>

#include <json.hpp>

#include "orthols/harness/checks.hpp"
#include "orthols/harness/trace_io.hpp"

namespace orthols::harness {

namespace {

std::ofstream open_output(const std::string &path) {
  std::ofstream f(path);
  if (!f)
    throw Error("cannot open '" + path + "' for writing");
  return f;
}

std::string sci(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.16e", v);
  return buf;
}

double atpi(const SolveResult<double> &r) {
  return r.iterations > 0 ? r.wallclock / static_cast<double>(r.iterations) : 0.0;
}

} // namespace

Comparison run_comparison(const ExperimentConfig &config) {
  config.validate();
  const Problem problem = build_problem(config.problem);
  const StiefelPoint<double> U0 =
      initial_point(problem.model->dimension(), config.problem.p, config.problem.seed);

  Comparison cmp;
  const bool several_modes = config.bb_modes.size() > 1;
  for (Strategy s : config.strategies) {
    for (BbMode m : config.bb_modes) {
      SolveConfig<double> solver = config.solver;
      solver.strategy = s;
      solver.bb_mode = m;
      std::string label = to_string(s);
      if (several_modes)
        label += "/" + to_string(m);
      cmp.rows.push_back({label, s, m, solve(*problem.model, U0, solver)});
    }
  }

  std::optional<double> ref;
  for (const auto &row : cmp.rows) {
    if (row.result.status != SolveStatus::converged)
      continue;
    if (!ref) {
      ref = row.result.final_energy;
      continue;
    }
    const double gap =
        std::abs(row.result.final_energy - *ref) / std::max(1.0, std::abs(*ref));
    cmp.max_relative_gap = std::max(cmp.max_relative_gap, gap);
  }
  cmp.energies_agree = cmp.max_relative_gap <= 1e-7;
  return cmp;
}

void write_comparison(std::ostream &out, const Comparison &cmp, OutputFormat format) {
  if (format == OutputFormat::json) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto &row : cmp.rows) {
      const auto &r = row.result;
      rows.push_back({{"strategy", row.label},
                      {"energy", r.final_energy},
                      {"iter", r.iterations},
                      {"final_residual", r.final_residual},
                      {"wct_s", r.wallclock},
                      {"atpi_s", atpi(r)},
                      {"energy_evals", r.total_energy_evals},
                      {"retraction_evals", r.total_retraction_evals},
                      {"status", to_string(r.status)}});
    }
    nlohmann::json doc{{"rows", rows},
                       {"energies_agree", cmp.energies_agree},
                       {"max_relative_gap", cmp.max_relative_gap}};
    out << doc.dump(1) << '\n';
    return;
  }
  out << "strategy,energy,iter,final_residual,wct_s,atpi_s,energy_evals,retraction_evals,status\n";
  for (const auto &row : cmp.rows) {
    const auto &r = row.result;
    out << row.label << ',' << sci(r.final_energy) << ',' << r.iterations << ','
        << sci(r.final_residual) << ',' << sci(r.wallclock) << ',' << sci(atpi(r)) << ','
        << r.total_energy_evals << ',' << r.total_retraction_evals << ',' << to_string(r.status)
        << '\n';
  }
  if (!cmp.energies_agree)
    out << "# WARNING: converged energies disagree, max relative gap " << sci(cmp.max_relative_gap)
        << '\n';
}

int cmd_run(const ExperimentConfig &config, std::ostream &out, std::ostream &err) {
  try {
    config.validate();
    const Problem problem = build_problem(config.problem);
    const StiefelPoint<double> U0 =
        initial_point(problem.model->dimension(), config.problem.p, config.problem.seed);
    SolveConfig<double> solver = config.solver;
    solver.strategy = config.strategies.front();
    solver.bb_mode = config.bb_modes.front();
    const auto result = solve(*problem.model, U0, solver);

    if (!config.out.empty()) {
      auto f = open_output(config.out);
      const auto rows = to_rows(result.trace);
      if (config.format == OutputFormat::json)
        write_trace_json(f, rows);
      else
        write_trace_csv(f, rows);
    }
    const std::string summary = summary_json(result);
    out << summary << '\n';
    if (!config.summary.empty())
      open_output(config.summary) << summary << '\n';

    switch (result.status) {
    case SolveStatus::converged:
      return kExitOk;
    case SolveStatus::max_iterations:
      return kExitNotConverged;
    case SolveStatus::failed:
      err << "error: " << result.diagnostic << '\n';
      return kExitError;
    }
  } catch (const std::exception &e) {
    err << "error: " << e.what() << '\n';
  }
  return kExitError;
}

int cmd_compare(const ExperimentConfig &config, std::ostream &out, std::ostream &err) {
  try {
    const Comparison cmp = run_comparison(config);
    if (config.out.empty()) {
      write_comparison(out, cmp, config.format);
    } else {
      auto f = open_output(config.out);
      write_comparison(f, cmp, config.format);
    }
    if (!cmp.energies_agree)
      err << "warning: converged energies disagree beyond 1e-7 relative\n";
    bool all_converged = true;
    for (const auto &row : cmp.rows) {
      if (row.result.status == SolveStatus::failed)
        err << row.label << ": " << row.result.diagnostic << '\n';
      all_converged = all_converged && row.result.status == SolveStatus::converged;
    }
    return all_converged ? kExitOk : kExitNotConverged;
  } catch (const std::exception &e) {
    err << "error: " << e.what() << '\n';
    return kExitError;
  }
}

int cmd_check(const std::string &suite, std::ostream &out, std::ostream &err) {
  std::vector<CheckResult> results;
  try {
    results = run_checks(suite);
  } catch (const std::exception &e) {
    err << "error: " << e.what() << '\n';
    return kExitError;
  }
  bool all = true;
  for (const auto &r : results) {
    out << (r.passed ? "PASS " : "FAIL ") << r.name << "  " << r.detail << '\n';
    all = all && r.passed;
  }
  return all ? kExitOk : kExitError;
}

} // namespace orthols::harness
