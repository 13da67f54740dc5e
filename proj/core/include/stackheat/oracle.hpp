#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "stackheat/bilevel.hpp"
#include "stackheat/devices.hpp"
#include "stackheat/milp.hpp"
#include "stackheat/reform.hpp"

// Independent ground truth for tiny instances. enumerate_leader walks every
// mean-feasible tier combination, solves the follower LP for those numeric
// prices, and re-optimizes the leader among follower-optimal responses (the
// optimistic tie-break) - no KKT, no Big-M, no product linearization.
// follower_grid_check is a second opinion that avoids even the LP solver on
// the thermal side: exhaustive temperature grids plus the exact quadratic
// comfort cost.

namespace stackheat::oracle {

struct OracleCapError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct OracleOptions {
  long long enum_cap = 100000;  // refuse above tier_count^(2T) combinations
  int comfort_breakpoints = 8;  // must match the reformulation for equivalence
  int fuel_segments = 8;        // same
  double tie_epsilon = 1e-9;    // relative slack of the follower-optimality cut
};

struct OracleEntry {
  std::vector<int> tier_e, tier_h;  // tier index per hour
  std::vector<double> kappa_e, kappa_h;
  bool feasible = false;      // leader can serve the follower's response
  double follower_cost = 0.0;
  double leader_profit = 0.0;
};

struct OracleResult {
  std::vector<OracleEntry> table;  // lexicographic by (electric, heat) combo
  int best = -1;                   // index into table, -1 if nothing feasible
  double best_objective = 0.0;

  bool any_feasible() const { return best >= 0; }
};

OracleResult enumerate_leader(const devices::Scenario& sc, int mode,
                              const OracleOptions& opt = {});

// Run the two-stage solve at one fixed tier combination (tier index per hour
// for each commodity), recover the KKT duals from the follower LP, and pack
// primal values, duals, complementarity binaries, product variables and fuel
// weights into the reformulation's variable layout. bp must be the assembly R
// was built from; the fuel segment count is taken from R itself. The packed
// point has machine-precision stationarity and complementarity (the joint
// stage runs against an exact follower-cost cut, falling back to the tie
// epsilon only if that fails numerically); its objective is the best leader
// profit at those prices, so repacking a solver incumbent at its own tier
// choices can only help. Returns an empty vector when either stage fails.
// Callers should still let the MILP solver re-check the point (see
// MilpOptions::incumbent_hint).
std::vector<double> repack_at_tiers(const devices::Scenario& sc,
                                    const bilevel::BilevelProblem& bp,
                                    const reform::Reformulation& R, const std::vector<int>& ce,
                                    const std::vector<int>& ch, const OracleOptions& opt = {});

// Starting incumbent for the branch and bound, built without enumeration:
// repack_at_tiers at one mean-feasible combination, the daily budget spread
// as evenly as the lattice allows.
std::vector<double> mip_start(const devices::Scenario& sc, const bilevel::BilevelProblem& bp,
                              const reform::Reformulation& R, const OracleOptions& opt = {});

// Exhaustive temperature-trajectory search (uniform grid within the comfort
// bands) with exact quadratic comfort cost, plus the exact greedy optimum of
// the shiftable electric load. Requires horizon <= 3 and cut_max = 0 (with
// curtailment the electric subproblem stops being a box-plus-budget problem).
// error_bound is a Lipschitz bound on how far the grid best can sit above the
// true continuous optimum.
struct GridCheckResult {
  double objective = 0.0;
  double electric_cost = 0.0;
  double thermal_cost = 0.0;
  double error_bound = 0.0;
  long long evaluated = 0;
};

GridCheckResult follower_grid_check(const devices::Scenario& sc, int mode,
                                    const std::vector<double>& kappa_e,
                                    const std::vector<double>& kappa_h, double temp_grid_step,
                                    long long cap = 2000000);

struct CompareVerdict {
  bool pass = false;
  double milp_objective = 0.0;
  double oracle_objective = 0.0;
  double abs_dev = 0.0;
  double rel_dev = 0.0;
  std::string message;
};

// PASS iff |milp - oracle| <= tol * (1 + |oracle|), boundary included. A MILP
// below the oracle points at an invalid Big-M or a solver limit; above it, at
// an oracle gap or invalid Big-M.
CompareVerdict compare(double milp_objective, const OracleResult& oracle, double tol);

}  // namespace stackheat::oracle
