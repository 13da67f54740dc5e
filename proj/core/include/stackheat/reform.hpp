#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "stackheat/bilevel.hpp"
#include "stackheat/milp.hpp"

// Single-level reformulation of the pricing game. The follower LP is replaced
// by its KKT conditions; complementarity is encoded with per-pair Big-M
// constants and one binary per pair; the bilinear price*load revenue is
// linearized exactly against the tier binaries; quadratic fuel costs are
// expanded into convex-combination PWL form. The result is one MILP whose
// optimum equals the optimistic bilevel optimum when the Ms are valid, up to
// the PWL chord error on the fuel curves.

namespace stackheat::reform {

struct ReformulationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Chord interpolation of a convex quadratic on a bounded interval.
struct PwlCurve {
  std::vector<double> x;  // strictly increasing breakpoints
  std::vector<double> f;  // exact function values at the breakpoints
  bool convex = true;
  double max_gap = 0.0;  // worst over-approximation: a * width^2 / 4
};

// One complementarity condition dual * slack = 0 with slack(x) >= 0.
struct ComplementarityPair {
  int dual_var = 0;
  std::vector<milp::LinearTerm> slack_terms;
  double slack_const = 0.0;
  double slack_width = 0.0;  // provable upper bound on the slack value
  double dual_hint = 0.0;    // magnitude estimate for the dual at an optimum
  std::string label;
};

// KKT conditions of the follower LP with prices treated as parameters. Dual
// variable ids continue right after the bilevel problem's variables, in a
// fixed order: one dual per follower row (in row order, sign-free only for
// equalities), then per follower variable either its single free fixing dual
// (bounds equal) or a lower-bound dual followed by an upper-bound dual, each
// only when that side is finite.
struct KktSystem {
  int first_dual_id = 0;
  std::vector<bilevel::VarRef> dual_vars;
  std::vector<bilevel::LinearConstraint> stationarity;
  std::vector<ComplementarityPair> pairs;
};

// Big-M encoding of the complementarity pairs: one binary u per pair,
// dual <= M_dual * u and slack <= M_slack * (1 - u).
struct BigMRows {
  std::vector<bilevel::VarRef> binaries;
  std::vector<bilevel::LinearConstraint> rows;
  std::vector<std::string> warnings;  // requested M below a provable slack bound
};

// Exact linearization of price * load products against tier binaries.
struct ProductRows {
  std::vector<bilevel::VarRef> aux;  // w variables, one per (product, tier)
  std::vector<bilevel::LinearConstraint> rows;
  std::vector<milp::LinearTerm> revenue_linear;  // grid value times w
};

// Convex-combination expansion of one quadratic cost term.
struct PwlExpansion {
  PwlCurve curve;
  std::vector<bilevel::VarRef> weights;  // one per breakpoint, in [0, 1]
  std::vector<bilevel::LinearConstraint> rows;  // hull (sum = 1) and argument link
  std::vector<milp::LinearTerm> cost_terms;     // scale * f(x_i) on each weight
};

// Final single-level problem plus the name/provenance maps used by reports.
struct MilpProblem {
  milp::LinearProgram lp;
  std::vector<int> integer_vars;
  std::vector<std::string> var_names;  // aligned with lp variables
  std::vector<std::string> row_tags;   // aligned with lp rows
};

struct ReformOptions {
  double big_m = 0.0;  // > 0: one global M for every pair; else per-pair automatic
  int n_segments = 8;  // fuel PWL segment count
};

struct Reformulation {
  MilpProblem milp;
  KktSystem kkt;
  std::vector<std::string> warnings;
  int first_dual_id = 0;
  int first_binary_id = 0;
  int first_product_id = 0;
  int first_fuel_id = 0;
};

// Stationarity, primal feasibility, dual signs and complementarity pairs of
// the follower LP. Price variables enter stationarity rows symbolically as
// linear terms. Throws ReformulationError if a follower objective product is
// not price * follower-variable.
KktSystem follower_kkt(const bilevel::BilevelProblem& bp);

// Big-M rows for every pair; binaries get ids from first_free_id on. With
// big_m_value > 0 that constant is used everywhere and a warning is recorded
// for each pair whose provable slack bound exceeds it; otherwise M_dual is
// 10x the pair's hint and M_slack is the provable slack bound. Throws
// ReformulationError when an automatic M would have to cover an unbounded
// slack.
BigMRows big_m_complementarity(const KktSystem& kkt, double big_m_value, int first_free_id);

// w = z * load for every product and tier; exact because z is binary and the
// load's provable range is [0, Ymax]. Throws ReformulationError for a price
// variable without a tier group or a load without a finite range.
ProductRows linearize_products(const std::vector<bilevel::BilinearTerm>& products,
                               const std::vector<bilevel::TierGroup>& groups,
                               const std::vector<bilevel::VarRef>& vars, int first_free_id);

// Chord PWL of scale * (a g^2 + b g + c) over [arg_lo, arg_hi] with
// n_segments + 1 uniform breakpoints; convex-combination weights, no
// binaries. Throws ReformulationError for a < 0.
PwlExpansion pwl_expand(const bilevel::QuadCost& q, int n_segments, int first_free_id);

// Appends the expansion of q directly to an LP: weight variables with
// objective coefficient obj_sign * scale * f(x_i), then the hull row and the
// argument link row, in that order. Returns the weight variable ids. Both the
// reformulation and the enumeration oracle price fuel through this one path.
std::vector<int> append_quadratic_pwl(milp::LinearProgram& lp, const bilevel::QuadCost& q,
                                      int n_segments, double obj_sign);

// The single-level MILP: leader rows, follower primal rows, KKT stationarity,
// Big-M complementarity, product linearization and fuel PWL, maximizing
// revenue minus operating cost.
Reformulation to_milp(const bilevel::BilevelProblem& bp, const ReformOptions& opt = {});

// Worst violations of the KKT system under a full variable assignment.
struct KktResiduals {
  double stationarity = 0.0;
  double primal = 0.0;
  double dual_sign = 0.0;
  double complementarity = 0.0;

  double max_all() const;
};

KktResiduals kkt_residuals(const std::vector<double>& x, const KktSystem& kkt,
                           const bilevel::BilevelProblem& bp);

// Plain-text listing of the problem (objective, rows, bounds, binaries) for
// debugging and the --dump-lp flag.
std::string to_lp_text(const MilpProblem& p);

}  // namespace stackheat::reform
