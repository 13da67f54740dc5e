// Command line front end: run, modes, sweep-k, gen, verify.
//
// Exit codes: 0 success, 1 usage error, 2 scenario/validation error,
// 3 solver limit or numerical failure, 4 verification FAIL.

#include <cstdio>
#include <exception>
#include <stdexcept>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "stackheat/oracle.hpp"
#include "stackheat/runner.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitValidation = 2;
constexpr int kExitSolverLimit = 3;
constexpr int kExitVerifyFail = 4;

std::string fmt6(double v) {
  if (v == 0.0) v = 0.0;  // normalize -0
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

void add_solver_flags(CLI::App* cmd, stackheat::runner::SolveOptions& opt) {
  cmd->add_option("--tiers", opt.tiers, "Override the tier count of both price grids (0 = keep scenario values)")
      ->check(CLI::Range(0, 16));
  cmd->add_option("--pwl-segments", opt.pwl_segments,
                  "Fuel-curve segments, also comfort breakpoints per side")
      ->check(CLI::Range(1, 64))
      ->capture_default_str();
  cmd->add_option("--big-m", opt.big_m,
                  "Fixed Big-M for every complementarity pair (0 = automatic per-pair bounds)")
      ->check(CLI::NonNegativeNumber);
  cmd->add_option("--rel-gap", opt.rel_gap, "Relative optimality gap for branch and bound")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  cmd->add_option("--node-limit", opt.node_limit, "Stop after exploring N nodes (0 = unlimited)")
      ->check(CLI::NonNegativeNumber);
  cmd->add_option("--time-limit", opt.time_limit_s,
                  "Wall-clock limit in seconds (0 = none; limited runs are not byte-reproducible)")
      ->check(CLI::NonNegativeNumber);
  cmd->add_flag("--dump-lp", opt.dump_lp, "Also write the MILP as model.lp in the output directory");
}

void print_report_line(const stackheat::runner::SolutionReport& rep) {
  std::printf("mode %d: status=%s net_revenue=%s revenue=%s operating_cost=%s", rep.mode,
              rep.status.c_str(), fmt6(rep.net_revenue).c_str(), fmt6(rep.revenue).c_str(),
              fmt6(rep.operating_cost).c_str());
  std::printf(" energy_cost=%s comfort_loss=%s total_cost=%s", fmt6(rep.energy_cost).c_str(),
              fmt6(rep.comfort_loss).c_str(), fmt6(rep.total_cost).c_str());
  std::printf(" rel_gap=%s nodes=%ld\n", fmt6(rep.rel_gap).c_str(), rep.nodes);
  if (!rep.detail.empty()) std::printf("  detail: %s\n", rep.detail.c_str());
  for (const auto& w : rep.warnings) std::printf("  warning: %s\n", w.c_str());
}

// A report counts as settled when the solver gave a definitive answer:
// proven optimal or proven infeasible. Limits and failures map to exit 3.
bool settled(const stackheat::runner::SolutionReport& rep) {
  return rep.status == "optimal" || rep.status == "infeasible";
}

int cmd_run(const std::string& scenario_path, int mode, const std::string& out_dir,
            const stackheat::runner::SolveOptions& opt) {
  const auto sc = stackheat::runner::load_scenario(scenario_path);
  const auto rep = stackheat::runner::run_mode(sc, mode, opt);
  print_report_line(rep);
  if (!out_dir.empty()) {
    stackheat::runner::write_run_dir(out_dir, sc, rep);
    std::printf("wrote %s\n", out_dir.c_str());
  }
  return settled(rep) ? kExitOk : kExitSolverLimit;
}

int cmd_modes(const std::string& scenario_path, const std::string& out_dir,
              const stackheat::runner::SolveOptions& opt) {
  const auto sc = stackheat::runner::load_scenario(scenario_path);
  const auto reps = stackheat::runner::run_all_modes(sc, opt);
  for (const auto& rep : reps) print_report_line(rep);
  if (!out_dir.empty()) {
    stackheat::runner::write_modes_summary(out_dir + "/summary.csv", reps);
    for (const auto& rep : reps)
      stackheat::runner::write_run_dir(out_dir + "/mode_" + std::to_string(rep.mode), sc, rep);
    std::printf("wrote %s\n", out_dir.c_str());
  }
  for (const auto& rep : reps)
    if (!settled(rep)) return kExitSolverLimit;
  return kExitOk;
}

int cmd_sweep(const std::string& scenario_path, const std::vector<double>& k_list, int mode,
              const std::string& out_dir, const stackheat::runner::SolveOptions& opt) {
  const auto sc = stackheat::runner::load_scenario(scenario_path);
  const auto rows = stackheat::runner::sweep_k(sc, k_list, mode, opt);
  for (const auto& row : rows) {
    std::printf("k=%s ", fmt6(row.k).c_str());
    print_report_line(row.report);
  }
  if (!out_dir.empty()) {
    stackheat::runner::write_sweep_summary(out_dir + "/summary.csv", rows);
    std::printf("wrote %s\n", out_dir.c_str());
  }
  for (const auto& row : rows)
    if (!settled(row.report)) return kExitSolverLimit;
  return kExitOk;
}

int cmd_gen(unsigned long long seed, int horizon, int tiers, const std::string& out_dir) {
  stackheat::runner::GenSpec spec;
  spec.horizon_T = horizon;
  spec.tiers = tiers;
  const auto sc = stackheat::runner::generate_scenario(seed, spec);
  const auto violations = stackheat::devices::validate_scenario(sc);
  if (!violations.empty())
    throw stackheat::runner::ValidationError("generated scenario failed validation", violations);
  const auto path = stackheat::runner::write_scenario(out_dir, sc);
  std::printf("wrote %s\n", path.c_str());
  return kExitOk;
}

int cmd_verify(const std::string& scenario_path, int mode, const std::string& out_dir,
               double tolerance, const stackheat::runner::SolveOptions& opt) {
  const auto sc = stackheat::runner::load_scenario(scenario_path);
  const auto result = stackheat::runner::verify_mode(sc, mode, opt, tolerance);
  const auto& v = result.verdict;
  std::printf("verify mode %d: %s\n", mode, v.pass ? "PASS" : "FAIL");
  std::printf("  milp_objective=%s oracle_objective=%s abs_dev=%s rel_dev=%s\n",
              fmt6(v.milp_objective).c_str(), fmt6(v.oracle_objective).c_str(),
              fmt6(v.abs_dev).c_str(), fmt6(v.rel_dev).c_str());
  if (!v.message.empty()) std::printf("  %s\n", v.message.c_str());
  if (!out_dir.empty()) {
    stackheat::runner::write_verify_dir(out_dir, result);
    std::printf("wrote %s\n", out_dir.c_str());
  }
  return v.pass ? kExitOk : kExitVerifyFail;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Desk-scale optimizer for a tiered-pricing electric-thermal energy system"};
  app.require_subcommand(1);

  std::string scenario_path, out_dir;
  int run_mode_n = 1, sweep_mode_n = 5, verify_mode_n = 1;
  double tolerance = 1e-5;
  unsigned long long seed = 1;
  int horizon = 24, gen_tiers = 3;
  std::vector<double> k_list = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
  stackheat::runner::SolveOptions opt;

  // K values rescale the residential share of heat demand; the split must
  // keep both zones nonempty.
  auto open_unit_interval = CLI::Validator(
      [](std::string& s) -> std::string {
        try {
          const double v = std::stod(s);
          if (v > 0.0 && v < 1.0) return {};
        } catch (const std::exception&) {
        }
        return "value must lie strictly between 0 and 1: " + s;
      },
      "FRACTION(0,1)");

  auto* run = app.add_subcommand("run", "Solve one consumption mode on a scenario");
  run->add_option("--scenario", scenario_path, "Scenario config file")->required();
  run->add_option("--mode", run_mode_n, "Consumption mode 1-5")->check(CLI::Range(1, 5))->capture_default_str();
  run->add_option("--out", out_dir, "Output directory (summary, prices, dispatch, residuals, log)");
  add_solver_flags(run, opt);

  auto* modes = app.add_subcommand("modes", "Solve all five consumption modes");
  modes->add_option("--scenario", scenario_path, "Scenario config file")->required();
  modes->add_option("--out", out_dir, "Output directory (summary.csv + one run directory per mode)");
  add_solver_flags(modes, opt);

  auto* sweep = app.add_subcommand("sweep-k", "Sweep the residential share of heat demand");
  sweep->add_option("--scenario", scenario_path, "Scenario config file")->required();
  sweep->add_option("--k-list", k_list, "Residential share values, comma separated")
      ->delimiter(',')
      ->check(open_unit_interval)
      ->capture_default_str();
  sweep->add_option("--mode", sweep_mode_n, "Consumption mode 1-5")->check(CLI::Range(1, 5))->capture_default_str();
  sweep->add_option("--out", out_dir, "Output directory (summary.csv)");
  add_solver_flags(sweep, opt);

  auto* gen = app.add_subcommand("gen", "Generate a seeded synthetic scenario");
  gen->add_option("--seed", seed, "Random seed")->capture_default_str();
  gen->add_option("--horizon", horizon, "Number of hourly periods")->check(CLI::Range(1, 168))->capture_default_str();
  gen->add_option("--tiers", gen_tiers, "Price tiers per grid")->check(CLI::Range(2, 16))->capture_default_str();
  gen->add_option("--out", out_dir, "Output directory for scenario.ini and profile CSVs")->required();

  auto* verify = app.add_subcommand("verify", "Compare the reformulation against brute-force enumeration");
  verify->add_option("--scenario", scenario_path, "Scenario config file")->required();
  verify->add_option("--mode", verify_mode_n, "Consumption mode 1-5")
      ->check(CLI::Range(1, 5))
      ->capture_default_str();
  verify->add_option("--tolerance", tolerance, "Relative objective tolerance for PASS")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  verify->add_option("--out", out_dir, "Output directory (verdict.txt + oracle_table.csv)");
  add_solver_flags(verify, opt);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (app.got_subcommand(run)) return cmd_run(scenario_path, run_mode_n, out_dir, opt);
    if (app.got_subcommand(modes)) return cmd_modes(scenario_path, out_dir, opt);
    if (app.got_subcommand(sweep)) return cmd_sweep(scenario_path, k_list, sweep_mode_n, out_dir, opt);
    if (app.got_subcommand(gen)) return cmd_gen(seed, horizon, gen_tiers, out_dir);
    if (app.got_subcommand(verify))
      return cmd_verify(scenario_path, verify_mode_n, out_dir, tolerance, opt);
  } catch (const stackheat::runner::ValidationError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitValidation;
  } catch (const stackheat::runner::ScenarioError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitValidation;
  } catch (const stackheat::oracle::OracleCapError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitValidation;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitValidation;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitSolverLimit;
  }
  return kExitUsage;
}
