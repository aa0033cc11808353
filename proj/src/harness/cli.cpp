#include <ostream>

#include <CLI11.hpp>

#include "orthols/harness/commands.hpp"

namespace orthols::harness {

namespace {

struct RawOptions {
  std::string problem = "quadratic";
  std::vector<std::string> strategies{"adaptive"};
  std::vector<std::string> bb_modes{"odd_even"};
  std::string retraction = "qr";
  std::string direction = "steepest";
  std::string format = "csv";
  long long n = 50, p = 3, npts = 128;
  std::size_t cg_period = 50;
};

void add_experiment_options(CLI::App &cmd, RawOptions &raw, ExperimentConfig &cfg) {
  auto &sol = cfg.solver;
  auto &prob = cfg.problem;
  cmd.set_config("--config", "", "flat key=value file with the same option names");
  cmd.add_option("--problem", raw.problem, "quadratic or lattice")->capture_default_str();
  cmd.add_option("--n", raw.n, "quadratic dimension")->capture_default_str();
  cmd.add_option("--p", raw.p, "number of columns")->capture_default_str();
  cmd.add_option("--npts", raw.npts, "lattice points")->capture_default_str();
  cmd.add_option("--length", prob.lattice.length, "lattice domain length")->capture_default_str();
  cmd.add_option("--gamma", prob.lattice.gamma, "lattice nonlinearity")->capture_default_str();
  cmd.add_option("--well", prob.lattice.well, "lattice well depth")->capture_default_str();
  cmd.add_option("--matrix-file", prob.matrix_file, "dense symmetric matrix for quadratic");
  cmd.add_option("--seed", prob.seed, "problem and start seed")->capture_default_str();
  cmd.add_option("--strategy", raw.strategies, "adaptive, backtracking, none")
      ->delimiter(',')
      ->capture_default_str();
  cmd.add_option("--bb-mode", raw.bb_modes, "odd_even, bb1, bb2")
      ->delimiter(',')
      ->capture_default_str();
  cmd.add_option("--eta", sol.step.eta)->capture_default_str();
  cmd.add_option("--alpha", sol.alpha)->capture_default_str();
  cmd.add_option("--k", sol.step.k)->capture_default_str();
  cmd.add_option("--theta", sol.step.theta)->capture_default_str();
  cmd.add_option("--t-min", sol.step.t_min)->capture_default_str();
  cmd.add_option("--eps", sol.epsilon, "residual tolerance")->capture_default_str();
  cmd.add_option("--max-iter", sol.max_iter)->capture_default_str();
  cmd.add_option("--initial-step", sol.initial_step, "step before any BB pair")
      ->capture_default_str();
  cmd.add_option("--retraction", raw.retraction, "qr or geodesic")->capture_default_str();
  cmd.add_option("--direction", raw.direction, "steepest or cg_restart")->capture_default_str();
  cmd.add_option("--cg-period", raw.cg_period, "CG restart period")->capture_default_str();
  cmd.add_option("--out", cfg.out, "trace or table file");
  cmd.add_option("--format", raw.format, "csv or json")->capture_default_str();
}

void finish_config(const RawOptions &raw, ExperimentConfig &cfg) {
  if (raw.n < 1 || raw.p < 1 || raw.npts < 1)
    throw Error("--n, --p and --npts must be positive");
  cfg.problem.kind = parse_problem_kind(raw.problem);
  cfg.problem.n = raw.n;
  cfg.problem.p = raw.p;
  cfg.problem.lattice.npts = raw.npts;
  cfg.strategies.clear();
  for (const auto &s : raw.strategies)
    cfg.strategies.push_back(parse_strategy(s));
  cfg.bb_modes.clear();
  for (const auto &m : raw.bb_modes)
    cfg.bb_modes.push_back(parse_bb_mode(m));
  cfg.solver.retraction = parse_retraction(raw.retraction);
  cfg.solver.direction = parse_direction(raw.direction);
  cfg.solver.cg_restart_period = raw.cg_period;
  cfg.solver.seed = cfg.problem.seed;
  cfg.format = parse_format(raw.format);
  cfg.validate();
}

} // namespace

int run_cli(int argc, const char *const *argv, std::ostream &out, std::ostream &err) {
  CLI::App app{"Line-search minimization with orthogonality constraints"};
  app.require_subcommand(1);

  // Experiment options live on the top-level app so one flat config file
  // serves every subcommand; subcommands pass them through.
  RawOptions raw;
  ExperimentConfig cfg;
  add_experiment_options(app, raw, cfg);
  app.add_option("--summary", cfg.summary, "run: also write the JSON summary here");

  auto *run = app.add_subcommand("run", "solve one problem and write its trace")->fallthrough();
  run->footer("Experiment options are listed by --help on the main command.");
  auto *cmp = app.add_subcommand("compare", "run several strategies from the same start")
                  ->fallthrough();
  cmp->footer("Experiment options are listed by --help on the main command.");
  std::string suite = "all";
  auto *check = app.add_subcommand("check", "run the built-in property suites")->fallthrough();
  check->add_option("suite,--suite", suite, "geometry, objectives, stepsize, search or all")
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    return app.exit(e, out, err) == 0 ? kExitOk : kExitError;
  }

  try {
    if (run->parsed()) {
      finish_config(raw, cfg);
      return cmd_run(cfg, out, err);
    }
    if (cmp->parsed()) {
      finish_config(raw, cfg);
      return cmd_compare(cfg, out, err);
    }
  } catch (const std::exception &e) {
    err << "error: " << e.what() << '\n';
    return kExitError;
  }
  return cmd_check(suite, out, err);
}

} // namespace orthols::harness
