#pragma once

#include <array>
#include <stdexcept>
#include <string>
#include <vector>

#include "stackheat/devices.hpp"
#include "stackheat/milp.hpp"
#include "stackheat/oracle.hpp"
#include "stackheat/reform.hpp"

// Scenario files, synthetic scenario generation, and the experiment harness:
// single-mode runs, the five-mode comparison table, the residential-share
// sweep, oracle verification, and CSV/report emission.

namespace stackheat::runner {

// Parse failure in a scenario or profile file; what() carries file and line.
struct ScenarioError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Scenario parsed but failed validation; every violation is listed, not just
// the first.
struct ValidationError : std::runtime_error {
  std::vector<devices::Violation> violations;
  ValidationError(const std::string& what_arg, std::vector<devices::Violation> v);
};

// ---- scenario files ----

// Load a scenario config plus the profile CSVs it references (paths relative
// to the config file). Throws ScenarioError on parse problems, ValidationError
// when validate_scenario reports violations.
devices::Scenario load_scenario(const std::string& path);

// Write scenario.ini and profiles/*.csv under dir (created if needed).
// Numbers use shortest round-trip formatting so load_scenario reproduces the
// scenario exactly. Returns the scenario.ini path.
std::string write_scenario(const std::string& dir, const devices::Scenario& sc);

// ---- synthetic scenarios ----

struct GenSpec {
  int horizon_T = 24;
  int tiers = 3;
};

// Deterministic seeded synthesis of a winter day: sinusoidal outdoor
// temperature with its minimum near 05:00, wind anti-correlated with daytime,
// midday-only PV, double-peak electric load; 2 CHP units, 1 conventional
// unit, electric and thermal storage, an electric boiler, and tiered prices
// whose daily mean lies on the tier lattice. Same seed, same scenario.
devices::Scenario generate_scenario(unsigned long long seed, const GenSpec& spec = {});

// Small instance for oracle comparisons: 1 CHP, 1 conventional unit, no
// storage, renewables or boiler. Tier grids are seeded but the mean is always
// placed on the achievable lattice.
devices::Scenario generate_tiny(unsigned long long seed, int horizon_T, int tiers);

// ---- runs ----

struct SolveOptions {
  int pwl_segments = 8;       // fuel segments; comfort breakpoints per side
  int tiers = 0;              // > 0 overrides both price specs' tier counts
  double big_m = 0.0;         // > 0 overrides the per-pair automatic Big-M
  double rel_gap = 1e-6;
  long node_limit = 0;        // 0 = unlimited
  double time_limit_s = 0.0;  // 0 = none (wall clock, breaks determinism)
  bool dump_lp = false;       // keep the MILP text in SolutionReport::lp_text
};

struct SolutionReport {
  int mode = 0;
  std::string status;           // optimal | limit | infeasible | error
  bool final_solution = false;  // solver proved optimality within rel_gap
  std::string detail;           // error text or limit description

  std::vector<double> kappa_e, kappa_h;
  std::vector<double> electric_load_kW, cut_kW, shift_kW;
  // zone index 0 = residential, 1 = public
  std::array<std::vector<double>, 2> zone_temp_C, zone_heat_kW, zone_href_kW,
      zone_reducible_kW, zone_dev_kW;
  devices::Dispatch dispatch;

  // Exact (non-PWL) evaluation of the extracted solution.
  double net_revenue = 0.0;  // revenue - operating_cost
  double revenue = 0.0;
  double operating_cost = 0.0;
  double energy_cost = 0.0;   // consumer side of revenue
  double comfort_loss = 0.0;  // psi * sum d^2
  double total_cost = 0.0;    // energy_cost + comfort_loss

  reform::KktResiduals kkt;
  double electric_balance_residual = 0.0;
  double thermal_balance_residual = 0.0;
  double shift_sum = 0.0;         // |sum_t shift| after solving
  double band_violation_C = 0.0;  // worst temperature excursion outside bands

  milp::MilpStatus solver_status = milp::MilpStatus::NumericalFailure;
  double objective = 0.0;  // MILP incumbent (PWL fuel, linearized revenue)
  double best_bound = 0.0;
  double rel_gap = milp::kInf;
  long nodes = 0;
  long simplex_iterations = 0;
  std::vector<std::string> warnings;  // reformulation warnings
  std::string lp_text;                // filled when SolveOptions::dump_lp

  bool has_solution() const { return status == "optimal" || status == "limit"; }
};

// Full pipeline for one mode: comfort bands -> bilevel -> single-level MILP ->
// branch and bound -> extraction. Asserts the report invariants (cost
// identities, balances, bands, shift conservation, KKT residuals) whenever an
// incumbent exists; solver limits give status "limit" with
// final_solution = false. Scenario validation failures throw ValidationError.
SolutionReport run_mode(const devices::Scenario& sc, int mode, const SolveOptions& opt = {});

// Modes 1..5 in order; a per-mode failure becomes that row's status while the
// other rows are still produced.
std::vector<SolutionReport> run_all_modes(const devices::Scenario& sc,
                                          const SolveOptions& opt = {});

// Rescale the residential share of total reference heat demand to k, keeping
// the total fixed. Each zone's surface and volume scale together, so its
// comfort temperatures are unchanged.
devices::Scenario rescale_residential_share(const devices::Scenario& sc, double k);

struct SweepRow {
  double k = 0.0;
  SolutionReport report;
};

std::vector<SweepRow> sweep_k(const devices::Scenario& sc, const std::vector<double>& k_values,
                              int mode, const SolveOptions& opt = {});

struct VerifyResult {
  SolutionReport report;
  oracle::OracleResult table;
  oracle::CompareVerdict verdict;
};

// Run the reformulation pipeline and the brute-force leader enumeration on
// the same scenario and compare objectives. Oracle cap refusals propagate as
// oracle::OracleCapError.
VerifyResult verify_mode(const devices::Scenario& sc, int mode, const SolveOptions& opt = {},
                         double tolerance = 1e-5);

// ---- emission ----
// Report numbers are written with 6 significant digits, '.' decimal point and
// ',' delimiter. Nothing time- or host-dependent is written: identical inputs
// give byte-identical files.

// summary.csv, dispatch.csv, prices.csv, residuals.txt, solver_log.txt
// (+ model.lp when dump_lp was set) under dir. Series files are written only
// when the report carries a solution.
void write_run_dir(const std::string& dir, const devices::Scenario& sc,
                   const SolutionReport& report);

// summary.csv rows: mode,net_revenue,revenue,operating_cost,energy_cost,
// comfort_loss,total_cost,status
void write_modes_summary(const std::string& csv_path, const std::vector<SolutionReport>& rows);

// summary.csv rows: k,... (same cost columns),status
void write_sweep_summary(const std::string& csv_path, const std::vector<SweepRow>& rows);

// verdict.txt and oracle_table.csv under dir.
void write_verify_dir(const std::string& dir, const VerifyResult& result);

}  // namespace stackheat::runner
