#pragma once

#include <iosfwd>
#include <limits>
#include <string>
#include <vector>

// Embedded LP/MILP solver: bounded-variable primal simplex (two phases,
// Dantzig pricing with a Bland fallback after degenerate streaks) plus a
// best-bound branch-and-bound with depth-first plunging. Deterministic:
// identical inputs give identical pivots, nodes and solutions.

namespace stackheat::milp {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

enum class Relation { LessEq, Equal, GreaterEq };

struct LinearTerm {
  int var = 0;
  double coeff = 0.0;
};

struct Row {
  std::vector<LinearTerm> terms;
  Relation rel = Relation::LessEq;
  double rhs = 0.0;
};

struct LinearProgram {
  enum class Sense { Minimize, Maximize };
  Sense sense = Sense::Minimize;
  std::vector<double> objective;
  std::vector<double> lower;
  std::vector<double> upper;
  std::vector<Row> rows;

  int num_vars() const { return static_cast<int>(objective.size()); }
  // Returns the new variable's index.
  int add_var(double lo, double hi, double obj);
  void add_row(std::vector<LinearTerm> terms, Relation rel, double rhs);
  // Throws std::invalid_argument on malformed input (bad indices, NaN, lo > hi).
  void validate() const;
};

enum class LpStatus { Optimal, Infeasible, Unbounded, IterationLimit, NumericalFailure };

// Row multipliers proving that no point satisfies all rows and bounds:
// the multiplier combination of the rows admits values (over the variable
// box) that never meet the combined row requirement. Verifiable by direct
// interval arithmetic; see verify().
struct FarkasCertificate {
  std::vector<double> row_multipliers;
  // Interval of sum_i y_i * (a_i . x) over the variable box:
  double combo_min = 0.0, combo_max = 0.0;
  // Interval of sum_i y_i * r_i over each row's admissible activity r_i:
  double required_min = 0.0, required_max = 0.0;
  // Certificate is conclusive when the two intervals are disjoint.
  bool verify(double tol = 1e-7) const;
};

struct LpSolution {
  LpStatus status = LpStatus::NumericalFailure;
  double objective = 0.0;         // in the problem's own sense
  std::vector<double> x;          // primal values
  std::vector<double> duals;      // one per row
  std::vector<double> reduced_costs;  // one per variable
  // Simplex status per variable, structurals then one slack per row:
  // 0 basic, 1 at lower, 2 at upper, 3 nonbasic free. Filled on Optimal;
  // feed it back through LpOptions::warm_start on a problem with the same
  // rows (bounds may differ) to resume near the old basis.
  std::vector<unsigned char> basis_status;
  FarkasCertificate farkas;       // populated when status == Infeasible
  long iterations = 0;
  // Dual convention: objective_j = sum_i duals_i * a_ij + reduced_costs_j for
  // every variable j. For Maximize this makes duals of tight LessEq rows
  // non-negative (shadow prices); for Minimize, duals of tight GreaterEq rows
  // are non-negative.
};

struct LpOptions {
  double feas_tol = 1e-8;
  double opt_tol = 1e-7;
  long max_iterations = 0;  // 0 = automatic from problem size
  bool scale = true;
  // Optional starting basis (see LpSolution::basis_status). Must describe a
  // problem with the same rows and variables; ignored when it does not fit.
  const std::vector<unsigned char>* warm_start = nullptr;
};

LpSolution solve_lp(const LinearProgram& lp, const LpOptions& options = {});

struct MixedIntegerProgram {
  LinearProgram lp;
  std::vector<int> integer_vars;
};

enum class MilpStatus { Optimal, Infeasible, Unbounded, NodeLimit, TimeLimit, NumericalFailure };

struct MilpSolution {
  MilpStatus status = MilpStatus::NumericalFailure;
  bool has_incumbent = false;
  double objective = 0.0;   // incumbent value, problem sense
  std::vector<double> x;    // incumbent (integer variables snapped)
  double best_bound = 0.0;  // proven bound, problem sense
  double rel_gap = kInf;    // |best_bound - objective| / (1 + |objective|)
  long nodes = 0;           // LP relaxations solved
  long simplex_iterations = 0;
  double wall_time_s = 0.0;
};

struct MilpOptions {
  double rel_gap = 1e-6;
  double int_tol = 1e-6;
  long node_limit = 0;      // 0 = unlimited
  double time_limit_s = 0;  // 0 = none; wall clock, non-deterministic if hit
  LpOptions lp;
  std::ostream* trace = nullptr;  // one line per node when set
  // Optional known-feasible point used as the starting incumbent. It is
  // checked against bounds, rows and integrality first; a point that does not
  // check out is ignored rather than trusted.
  const std::vector<double>* incumbent_hint = nullptr;
};

// Branching: most-fractional variable, ties broken by lowest index.
// Node selection: best bound, with depth-first plunging between picks.
MilpSolution solve_milp(const MixedIntegerProgram& mip, const MilpOptions& options = {});

}  // namespace stackheat::milp
