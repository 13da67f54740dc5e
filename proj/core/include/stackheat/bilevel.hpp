#pragma once

#include <array>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "stackheat/devices.hpp"
#include "stackheat/milp.hpp"
#include "stackheat/thermal.hpp"

// Bilevel pricing game assembly. The operator (leader) picks tiered
// electricity and heat prices and dispatches its fleet to maximize profit;
// consumers (follower) minimize energy cost plus a PWL-expanded quadratic
// comfort penalty by curtailing and shifting electric load and steering zone
// temperatures within mode-dependent comfort bands. Leader balance rows
// reference the follower's load variables; follower rows reference follower
// variables only, with prices entering the follower objective as parameters.

namespace stackheat::bilevel {

using milp::LinearTerm;
using milp::Relation;

enum class Owner { Leader, Follower, Dual, Auxiliary };

struct VarRef {
  int id = 0;
  std::string name;
  double lower = 0.0;
  double upper = 0.0;
  bool integral = false;
  Owner owner = Owner::Leader;
  // Magnitude estimate for the duals of this variable's bounds, used to size
  // complementarity Big-Ms downstream. 0 means "no estimate".
  double dual_hint = 0.0;
  // Provable value range, used to size slack-side Big-Ms and product bounds
  // when the declared bounds are infinite (e.g. a load with an implied cap).
  // NaN means "same as the declared bounds".
  double range_lo = std::numeric_limits<double>::quiet_NaN();
  double range_hi = std::numeric_limits<double>::quiet_NaN();

  double eff_lo() const { return std::isnan(range_lo) ? lower : range_lo; }
  double eff_hi() const { return std::isnan(range_hi) ? upper : range_hi; }
};

struct LinearConstraint {
  std::vector<LinearTerm> terms;
  Relation rel = Relation::Equal;
  double rhs = 0.0;
  std::string tag;  // semantic provenance label, e.g. "electric-balance"
};

// price_var * var, with the price restricted to a tier grid elsewhere.
struct BilinearTerm {
  int price_var = 0;
  int var = 0;
  double coeff = 1.0;
};

// scale * (a*g^2 + b*g + c) with g = sum of terms, g in [arg_lo, arg_hi].
// Marked for piecewise-linear expansion downstream.
struct QuadCost {
  double a = 0.0, b = 0.0, c = 0.0;
  std::vector<LinearTerm> arg;
  double arg_lo = 0.0, arg_hi = 0.0;
  double scale = 1.0;
  std::string name;
};

struct LeaderObjective {  // maximized
  std::vector<LinearTerm> linear;      // cycling, reserve, curtailment costs (negated)
  std::vector<BilinearTerm> revenue;   // price * load, linearized downstream
  std::vector<QuadCost> fuel;          // subtracted, PWL-expanded downstream
};

struct FollowerObjective {  // minimized
  std::vector<LinearTerm> linear;      // comfort PWL weights
  std::vector<BilinearTerm> bilinear;  // price * consumption
};

// Tier machinery for one price variable: kappa = sum grid[j]*z[j], sum z = 1.
struct TierGroup {
  int kappa_var = 0;
  std::vector<int> z_vars;
  std::vector<double> grid;
};

// Ids and data the downstream stages navigate by. Zone index 0 is
// residential, 1 is public. tau[z][k] holds the temperature at the end of
// hour k (k = 0..T-1); the initial temperature is a constant, not a variable.
struct Index {
  int T = 0;
  double dt_h = 1.0;
  // follower
  std::vector<int> pl, pcut, shift;
  std::array<std::vector<int>, 2> tau, heat, dev;
  std::array<std::vector<std::vector<int>>, 2> lam;      // empty when the hour is pinned
  std::array<std::vector<std::vector<double>>, 2> lam_x; // breakpoints per zone/hour
  // leader
  std::vector<std::vector<int>> chp_p, chp_h, con_p, eb_p;
  std::vector<std::vector<int>> sto_cha, sto_dis, sto_soc;  // soc entry k = end of hour k
  std::vector<std::vector<int>> ren_inj, ren_cur;
  std::vector<std::vector<int>> reserve;  // chp units, then con units, then electric storages
  std::vector<int> kappa_e, kappa_h;
  TierGroup tier_e_template, tier_h_template;  // grids; per-hour groups below
  std::vector<TierGroup> tiers_e, tiers_h;
  // derived data
  std::vector<double> pl_ymax;                  // product bound per hour
  std::array<std::vector<double>, 2> heat_ymax; // product bound per zone/hour
  std::array<std::vector<double>, 2> href_kw;
  std::array<thermal::TempBandSchedule, 2> bands;
  std::array<double, 2> cap_kwh_per_k{}, loss_kw_per_k{}, tau_init{}, dmax{};
  double psi = 0.0;
};

struct BilevelProblem {
  std::vector<VarRef> vars;
  std::vector<LinearConstraint> leader_constraints;
  std::vector<LinearConstraint> follower_constraints;
  LeaderObjective leader_objective;
  FollowerObjective follower_objective;
  Index index;
  int mode = 0;

  int add_var(std::string name, double lo, double hi, Owner owner, bool integral = false,
              double dual_hint = 0.0);
  void validate() const;  // follower purity, bound sanity; throws std::logic_error
};

// Builders. assemble() is the public entry; the two builders are exposed for
// structural tests. build_follower must run first: the leader's balance rows
// and revenue products reference the follower's load variables. assemble()
// also mirrors the leader's revenue products into the follower objective
// (what the consumer pays is what the operator earns).
// comfort_breakpoints is the per-side breakpoint count of the comfort-penalty
// PWL (2*n+1 total breakpoints).
void build_follower(const devices::Scenario& sc, int mode, int comfort_breakpoints,
                    BilevelProblem& bp);
void build_leader(const devices::Scenario& sc, BilevelProblem& bp);
BilevelProblem assemble(const devices::Scenario& sc, int mode, int comfort_breakpoints = 8);

}  // namespace stackheat::bilevel
