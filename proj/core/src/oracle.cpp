#include "stackheat/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <unordered_map>

#include "stackheat/reform.hpp"
#include "stackheat/thermal.hpp"

namespace stackheat::oracle {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

using bilevel::Owner;
using milp::Relation;

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

// Mean-feasible tier index combinations, ascending lexicographic.
std::vector<std::vector<int>> feasible_combos(const devices::PriceSpec& spec, int T,
                                              double eps) {
  const std::vector<double> grid = spec.grid();
  const int J = static_cast<int>(grid.size());
  const double target = T * spec.kappa_mean;
  std::vector<std::vector<int>> out;
  std::vector<int> cur(T, 0);
  while (true) {
    double sum = 0.0;
    for (int t = 0; t < T; ++t) sum += grid[cur[t]];
    if (std::abs(sum - target) <= eps + 1e-12 * std::max(1.0, std::abs(target)))
      out.push_back(cur);
    int pos = T - 1;
    while (pos >= 0 && cur[pos] == J - 1) cur[pos--] = 0;
    if (pos < 0) break;
    ++cur[pos];
  }
  return out;
}

// The two-stage solve both the enumeration and the MIP start run per price
// combination: a follower LP on the follower id prefix, and an optimistic
// joint LP over every model variable with the prices fixed and a
// follower-optimality cut rewritten in place.
struct TwoStage {
  const bilevel::BilevelProblem& bp;
  int nf = 0;
  milp::LinearProgram flp, jlp;
  std::vector<double> fobj_base;
  std::vector<double> jobj_base;
  std::size_t cut_row = 0;

  TwoStage(const bilevel::BilevelProblem& problem, int fuel_segments) : bp(problem) {
    // Follower variables come first in assembly order; the follower LP reuses
    // their ids directly.
    while (nf < static_cast<int>(bp.vars.size()) && bp.vars[nf].owner == Owner::Follower) ++nf;
    for (int j = nf; j < static_cast<int>(bp.vars.size()); ++j)
      if (bp.vars[j].owner == Owner::Follower)
        throw std::logic_error("follower variables are not a prefix of the assembly");

    flp.sense = milp::LinearProgram::Sense::Minimize;
    for (int j = 0; j < nf; ++j) flp.add_var(bp.vars[j].lower, bp.vars[j].upper, 0.0);
    for (const bilevel::LinearConstraint& row : bp.follower_constraints)
      flp.add_row(row.terms, row.rel, row.rhs);
    fobj_base.assign(nf, 0.0);
    for (const milp::LinearTerm& t : bp.follower_objective.linear) fobj_base[t.var] += t.coeff;

    jlp.sense = milp::LinearProgram::Sense::Maximize;
    for (const bilevel::VarRef& v : bp.vars) jlp.add_var(v.lower, v.upper, 0.0);
    for (const bilevel::LinearConstraint& row : bp.leader_constraints)
      jlp.add_row(row.terms, row.rel, row.rhs);
    for (const bilevel::LinearConstraint& row : bp.follower_constraints)
      jlp.add_row(row.terms, row.rel, row.rhs);
    for (const bilevel::QuadCost& q : bp.leader_objective.fuel)
      reform::append_quadratic_pwl(jlp, q, fuel_segments, -1.0);
    for (const milp::LinearTerm& t : bp.leader_objective.linear) jlp.objective[t.var] += t.coeff;
    jlp.add_row({{0, 0.0}}, Relation::LessEq, 0.0);  // cut placeholder
    cut_row = jlp.rows.size() - 1;
    jobj_base = jlp.objective;
  }

  milp::LpSolution solve_follower(const std::vector<double>& ke, const std::vector<double>& kh) {
    const bilevel::Index& ix = bp.index;
    const int T = static_cast<int>(ke.size());
    flp.objective = fobj_base;
    for (int t = 0; t < T; ++t) flp.objective[ix.pl[t]] += ke[t];
    for (int z = 0; z < 2; ++z)
      for (int t = 0; t < T; ++t) flp.objective[ix.heat[z][t]] += kh[t];
    return milp::solve_lp(flp);
  }

  milp::LpSolution solve_joint(const std::vector<int>& ce, const std::vector<int>& ch,
                               const std::vector<double>& ke, const std::vector<double>& kh,
                               double follower_cost, double tie_eps) {
    const bilevel::Index& ix = bp.index;
    const int T = static_cast<int>(ke.size());
    jlp.objective = jobj_base;
    for (int t = 0; t < T; ++t) jlp.objective[ix.pl[t]] += ke[t];
    for (int z = 0; z < 2; ++z)
      for (int t = 0; t < T; ++t) jlp.objective[ix.heat[z][t]] += kh[t];
    for (int t = 0; t < T; ++t) {
      jlp.lower[ix.kappa_e[t]] = jlp.upper[ix.kappa_e[t]] = ke[t];
      jlp.lower[ix.kappa_h[t]] = jlp.upper[ix.kappa_h[t]] = kh[t];
      const auto& ze = ix.tiers_e[t].z_vars;
      for (std::size_t j = 0; j < ze.size(); ++j)
        jlp.lower[ze[j]] = jlp.upper[ze[j]] = (static_cast<int>(j) == ce[t]) ? 1.0 : 0.0;
      const auto& zh = ix.tiers_h[t].z_vars;
      for (std::size_t j = 0; j < zh.size(); ++j)
        jlp.lower[zh[j]] = jlp.upper[zh[j]] = (static_cast<int>(j) == ch[t]) ? 1.0 : 0.0;
    }
    milp::Row& cut = jlp.rows[cut_row];
    cut.terms.clear();
    for (const milp::LinearTerm& t : bp.follower_objective.linear) cut.terms.push_back(t);
    for (int t = 0; t < T; ++t) cut.terms.push_back({ix.pl[t], ke[t]});
    for (int z = 0; z < 2; ++z)
      for (int t = 0; t < T; ++t) cut.terms.push_back({ix.heat[z][t], kh[t]});
    cut.rhs = follower_cost + tie_eps * (1.0 + std::abs(follower_cost));
    return milp::solve_lp(jlp);
  }
};

// Tier indices hitting the commodity's daily mean on the lattice, spread as
// evenly as possible across the hours.
std::vector<int> balanced_combo(const devices::PriceSpec& spec, int T) {
  const int J = spec.tier_count;
  const double step = spec.grid_step();
  long long k =
      step > 0.0 ? std::llround(T * (spec.kappa_mean - spec.kappa_min) / step) : 0;
  k = std::clamp(k, 0LL, static_cast<long long>(T) * (J - 1));
  std::vector<int> combo(T, static_cast<int>(k / T));
  const int rem = static_cast<int>(k % T);
  for (int t = 0; t < rem; ++t) ++combo[t];
  return combo;
}

// Mean-preserving reshaping: paired +1/-1 tier moves between the heaviest and
// lightest hours by weight. peak_up raises prices on high-demand hours (and
// lowers them on low-demand ones); otherwise the mirror image.
void shift_pairs(std::vector<int>& combo, const std::vector<double>& weight, int tier_count,
                 int npairs, bool peak_up) {
  const int T = static_cast<int>(combo.size());
  std::vector<int> order(T);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return weight[a] > weight[b]; });
  int i = 0, j = T - 1, done = 0;
  while (done < npairs && i < j) {
    const int hup = peak_up ? order[i] : order[j];
    const int hdn = peak_up ? order[j] : order[i];
    const bool can_up = combo[hup] + 1 <= tier_count - 1;
    const bool can_dn = combo[hdn] - 1 >= 0;
    if (can_up && can_dn) {
      ++combo[hup];
      --combo[hdn];
      ++done;
      ++i;
      --j;
    } else {
      if (!can_up) peak_up ? ++i : --j;
      if (!can_dn) peak_up ? --j : ++i;
    }
  }
}

}  // namespace

OracleResult enumerate_leader(const devices::Scenario& sc, int mode, const OracleOptions& opt) {
  const int T = sc.horizon_T;
  const double raw = std::pow(static_cast<double>(sc.electric_price.tier_count), T) *
                     std::pow(static_cast<double>(sc.heat_price.tier_count), T);
  if (raw > static_cast<double>(opt.enum_cap))
    throw OracleCapError("oracle enumeration needs a cap of at least " + fmt(raw) +
                         " combinations; the cap is " + std::to_string(opt.enum_cap));

  bilevel::BilevelProblem bp = bilevel::assemble(sc, mode, opt.comfort_breakpoints);
  TwoStage ts(bp, opt.fuel_segments);

  const std::vector<double> egrid = sc.electric_price.grid();
  const std::vector<double> hgrid = sc.heat_price.grid();
  const auto combos_e = feasible_combos(sc.electric_price, T, sc.mean_tolerance(sc.electric_price));
  const auto combos_h = feasible_combos(sc.heat_price, T, sc.mean_tolerance(sc.heat_price));

  OracleResult R;
  for (const std::vector<int>& ce : combos_e)
    for (const std::vector<int>& ch : combos_h) {
      OracleEntry ent;
      ent.tier_e = ce;
      ent.tier_h = ch;
      ent.kappa_e.resize(T);
      ent.kappa_h.resize(T);
      for (int t = 0; t < T; ++t) ent.kappa_e[t] = egrid[ce[t]];
      for (int t = 0; t < T; ++t) ent.kappa_h[t] = hgrid[ch[t]];

      const milp::LpSolution fsol = ts.solve_follower(ent.kappa_e, ent.kappa_h);
      if (fsol.status != milp::LpStatus::Optimal) {
        R.table.push_back(std::move(ent));
        continue;
      }
      ent.follower_cost = fsol.objective;

      const milp::LpSolution jsol =
          ts.solve_joint(ce, ch, ent.kappa_e, ent.kappa_h, ent.follower_cost, opt.tie_epsilon);
      if (jsol.status == milp::LpStatus::Optimal) {
        ent.feasible = true;
        ent.leader_profit = jsol.objective;
        if (R.best < 0 || ent.leader_profit > R.best_objective) {
          R.best = static_cast<int>(R.table.size());
          R.best_objective = ent.leader_profit;
        }
      }
      R.table.push_back(std::move(ent));
    }
  return R;
}

std::vector<double> repack_at_tiers(const devices::Scenario& sc,
                                    const bilevel::BilevelProblem& bp,
                                    const reform::Reformulation& R, const std::vector<int>& ce,
                                    const std::vector<int>& ch, const OracleOptions& opt) {
  const int T = sc.horizon_T;
  const bilevel::Index& ix = bp.index;
  const int nvars = R.milp.lp.num_vars();
  const int nb = static_cast<int>(bp.vars.size());
  if (static_cast<int>(ce.size()) != T || static_cast<int>(ch.size()) != T) return {};

  // Read the fuel segment count back from the reformulation's weight block so
  // the joint LP's weights line up one to one.
  int fuel_segments = opt.fuel_segments;
  const int fuel_weights = nvars - R.first_fuel_id;
  const int n_fuel = static_cast<int>(bp.leader_objective.fuel.size());
  if (n_fuel > 0) {
    if (fuel_weights % n_fuel != 0 || fuel_weights / n_fuel < 2) return {};
    fuel_segments = fuel_weights / n_fuel - 1;
  }

  TwoStage ts(bp, fuel_segments);
  if (ts.jlp.num_vars() != nb + fuel_weights) return {};

  const std::vector<double> egrid = sc.electric_price.grid();
  const std::vector<double> hgrid = sc.heat_price.grid();
  std::vector<double> ke(T), kh(T);
  for (int t = 0; t < T; ++t) {
    if (ce[t] < 0 || ce[t] >= static_cast<int>(egrid.size()) || ch[t] < 0 ||
        ch[t] >= static_cast<int>(hgrid.size()))
      return {};
    ke[t] = egrid[ce[t]];
    kh[t] = hgrid[ch[t]];
  }

  const milp::LpSolution fsol = ts.solve_follower(ke, kh);
  if (fsol.status != milp::LpStatus::Optimal) return {};
  // An exact-cost cut keeps the joint stage on the follower's optimal face,
  // where complementary slackness against the stage-1 duals is exact. Any
  // positive tie epsilon gets spent opening slack on positive-dual rows,
  // which the Big-M rows then reject. Relax only if the exact cut fails.
  milp::LpSolution jsol = ts.solve_joint(ce, ch, ke, kh, fsol.objective, 0.0);
  if (jsol.status != milp::LpStatus::Optimal)
    jsol = ts.solve_joint(ce, ch, ke, kh, fsol.objective, opt.tie_epsilon);
  if (jsol.status != milp::LpStatus::Optimal) return {};

  std::vector<double> x(nvars, 0.0);
  for (int j = 0; j < nb; ++j) x[j] = jsol.x[j];
  for (int k = 0; k < fuel_weights; ++k) x[R.first_fuel_id + k] = jsol.x[nb + k];

  // Duals in the KKT builder's id order: one per follower row, then per
  // follower variable its fixing dual, or the lower then upper bound duals
  // (the reduced cost split by sign).
  int cursor = R.first_dual_id;
  for (std::size_t r = 0; r < bp.follower_constraints.size(); ++r) {
    const double y = fsol.duals[r];
    const Relation rel = bp.follower_constraints[r].rel;
    double mu = rel == Relation::GreaterEq ? y : -y;
    if (rel != Relation::Equal) mu = std::max(mu, 0.0);
    x[cursor++] = mu;
  }
  for (const bilevel::VarRef& v : bp.vars) {
    if (v.owner != Owner::Follower) continue;
    const double rc = fsol.reduced_costs[v.id];
    if (v.lower == v.upper) {
      x[cursor++] = -rc;
      continue;
    }
    if (std::isfinite(v.lower)) x[cursor++] = std::max(rc, 0.0);
    if (std::isfinite(v.upper)) x[cursor++] = std::max(-rc, 0.0);
  }
  if (cursor != R.first_binary_id) return {};

  // Complementarity binaries: u = 1 frees the dual side, u = 0 the slack
  // side. The stage-1 duals and the stage-2 point are complementary up to the
  // tie epsilon, so the larger side decides.
  for (std::size_t p = 0; p < R.kkt.pairs.size(); ++p) {
    const reform::ComplementarityPair& pair = R.kkt.pairs[p];
    double slack = pair.slack_const;
    for (const milp::LinearTerm& t : pair.slack_terms) slack += t.coeff * x[t.var];
    x[R.first_binary_id + static_cast<int>(p)] = x[pair.dual_var] > slack ? 1.0 : 0.0;
  }

  // Product variables: w carries the load on the chosen tier, zero elsewhere.
  std::vector<int> chosen(nb, -1);
  for (int t = 0; t < T; ++t) chosen[ix.kappa_e[t]] = ce[t];
  for (int t = 0; t < T; ++t) chosen[ix.kappa_h[t]] = ch[t];
  std::unordered_map<int, std::size_t> tiers_by_kappa;
  for (const bilevel::TierGroup& g : ix.tiers_e) tiers_by_kappa[g.kappa_var] = g.z_vars.size();
  for (const bilevel::TierGroup& g : ix.tiers_h) tiers_by_kappa[g.kappa_var] = g.z_vars.size();
  int wid = R.first_product_id;
  for (const bilevel::BilinearTerm& b : bp.leader_objective.revenue) {
    const auto it = tiers_by_kappa.find(b.price_var);
    if (it == tiers_by_kappa.end() || chosen[b.price_var] < 0) return {};
    for (std::size_t j = 0; j < it->second; ++j)
      x[wid++] = static_cast<int>(j) == chosen[b.price_var] ? jsol.x[b.var] : 0.0;
  }
  if (wid != R.first_fuel_id) return {};

  return x;
}

std::vector<double> mip_start(const devices::Scenario& sc, const bilevel::BilevelProblem& bp,
                              const reform::Reformulation& R, const OracleOptions& opt) {
  const int T = sc.horizon_T;
  std::vector<double> wh(T, 0.0);
  for (const thermal::BuildingZone* z : {&sc.residential_zone, &sc.public_zone}) {
    const std::vector<double> href =
        thermal::comfort_reference_loads(*z, sc.outdoor_temp_profile_C, T, sc.dt_s);
    for (int t = 0; t < T; ++t) wh[t] += href[t];
  }

  // Candidate price shapes, all on the mean lattice: evenly spread, high on
  // peak demand hours, and high on trough hours. Keep the most profitable
  // repack.
  const std::vector<int> be = balanced_combo(sc.electric_price, T);
  const std::vector<int> bh = balanced_combo(sc.heat_price, T);
  const int npairs = std::max(1, T / 4);
  struct Candidate {
    std::vector<int> ce, ch;
  };
  std::vector<Candidate> cands{{be, bh}};
  for (bool peak_up : {true, false}) {
    Candidate c{be, bh};
    shift_pairs(c.ce, sc.base_electric_load_kW, sc.electric_price.tier_count, npairs, peak_up);
    shift_pairs(c.ch, wh, sc.heat_price.tier_count, npairs, peak_up);
    if (c.ce != be || c.ch != bh) cands.push_back(std::move(c));
  }

  const milp::LinearProgram& lp = R.milp.lp;
  const double sgn = lp.sense == milp::LinearProgram::Sense::Maximize ? 1.0 : -1.0;
  std::vector<double> best;
  double best_obj = -kInf;
  for (const Candidate& c : cands) {
    std::vector<double> x = repack_at_tiers(sc, bp, R, c.ce, c.ch, opt);
    if (x.empty()) continue;
    double obj = 0.0;
    for (int j = 0; j < lp.num_vars(); ++j) obj += lp.objective[j] * x[j];
    if (sgn * obj > best_obj) {
      best_obj = sgn * obj;
      best = std::move(x);
    }
  }
  return best;
}

GridCheckResult follower_grid_check(const devices::Scenario& sc, int mode,
                                    const std::vector<double>& kappa_e,
                                    const std::vector<double>& kappa_h, double temp_grid_step,
                                    long long cap) {
  const int T = sc.horizon_T;
  if (T > 3) throw std::invalid_argument("grid check requires horizon_T <= 3");
  if (!(temp_grid_step > 0.0)) throw std::invalid_argument("grid step must be positive");
  if (static_cast<int>(kappa_e.size()) != T || static_cast<int>(kappa_h.size()) != T)
    throw std::invalid_argument("price vectors must have horizon_T entries");
  for (double c : sc.cut_max_profile_kW)
    if (c != 0.0)
      throw std::invalid_argument(
          "grid check requires cut_max = 0 (curtailment breaks the exact electric solve)");

  GridCheckResult R;

  // Electric side: fixed total, per-hour windows from the shift bound; filling
  // the cheapest hours first is exact.
  {
    const double smax = sc.shift_max_kW;
    std::vector<double> lo(T), hi(T), e(T);
    double mass = 0.0, floor_sum = 0.0;
    for (int t = 0; t < T; ++t) {
      const double pl0 = sc.base_electric_load_kW.at(t);
      lo[t] = std::max(0.0, pl0 - smax);
      hi[t] = pl0 + smax;
      e[t] = lo[t];
      mass += pl0;
      floor_sum += lo[t];
    }
    double rem = std::max(0.0, mass - floor_sum);
    std::vector<int> order(T);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return kappa_e[a] < kappa_e[b]; });
    for (int t : order) {
      const double add = std::min(hi[t] - lo[t], rem);
      e[t] += add;
      rem -= add;
    }
    if (rem > 1e-9) throw std::logic_error("shift windows cannot absorb the base load");
    for (int t = 0; t < T; ++t) R.electric_cost += kappa_e[t] * e[t];
  }

  // Thermal side, per zone: exhaustive trajectory grid, exact quadratic cost.
  const thermal::BuildingZone* zones[2] = {&sc.residential_zone, &sc.public_zone};
  const char* zname[2] = {"res", "pub"};
  const double dt_h = sc.dt_hours();
  const double psi = sc.comfort_penalty_psi;
  for (int z = 0; z < 2; ++z) {
    const thermal::BuildingZone& zone = *zones[z];
    const thermal::TempBandSchedule bands =
        thermal::comfort_band_schedule(zone, sc.comfort, mode, T);
    const std::vector<double> href_w =
        thermal::comfort_reference_loads(zone, sc.outdoor_temp_profile_C, T, sc.dt_s);
    const double a = zone.heat_capacity_J_per_K() / 3.6e6 / dt_h;
    const double uk = zone.loss_conductance_W_per_K() / 1000.0;
    const double init = zone.initial_temp_C;

    std::vector<std::vector<double>> pts(T);
    long long count = 1;
    for (int t = 0; t < T; ++t) {
      double lo = bands.hours[t].t_min_C, hi = bands.hours[t].t_max_C;
      if (t == T - 1) {
        lo = std::max(lo, init);
        if (lo > hi + 1e-9)
          throw std::invalid_argument(std::string("zone ") + zname[z] +
                                      ": end-of-horizon guard conflicts with the final band");
        lo = std::min(lo, hi);
      }
      std::vector<double>& p = pts[t];
      for (double v = lo; v < hi - 1e-12; v += temp_grid_step) p.push_back(v);
      p.push_back(hi);
      count *= static_cast<long long>(p.size());
      if (count > cap)
        throw OracleCapError("grid check needs a cap of at least " + std::to_string(count) +
                             " trajectories; the cap is " + std::to_string(cap));
    }

    double best = kInf;
    std::vector<std::size_t> idx(T, 0);
    bool done = false;
    while (!done) {
      double cost = 0.0, prev = init;
      bool ok = true;
      for (int t = 0; t < T && ok; ++t) {
        const double tau = pts[t][idx[t]];
        const double h =
            a * (tau - prev) + uk * (prev - sc.outdoor_temp_profile_C.at(t));
        if (h < -1e-9) {
          ok = false;
          break;
        }
        const double d = href_w[t] / 1000.0 - h;
        cost += kappa_h[t] * h + psi * d * d;
        prev = tau;
      }
      if (ok) best = std::min(best, cost);
      ++R.evaluated;
      int pos = T - 1;
      while (pos >= 0 && ++idx[pos] == pts[pos].size()) idx[pos--] = 0;
      if (pos < 0) done = true;
    }
    if (!std::isfinite(best))
      throw std::runtime_error(std::string("no grid trajectory keeps heat nonnegative in zone ") +
                               zname[z]);
    R.thermal_cost += best;

    // Lipschitz bound per coordinate: each temperature moves its own hour's
    // heat by a and the next hour's by |a - u|. Assumes the h >= 0 floor is
    // slack near the optimum (heating season).
    double dcap = 0.0, khmax = 0.0;
    for (int t = 0; t < T; ++t) {
      const double end_hi = bands.hours[t].t_max_C;
      const double st_lo = t == 0 ? init : bands.hours[t - 1].t_min_C;
      const double st_hi = t == 0 ? init : bands.hours[t - 1].t_max_C;
      const double hcap = std::max(
          0.0, a * end_hi - uk * sc.outdoor_temp_profile_C.at(t) +
                   std::max((uk - a) * st_lo, (uk - a) * st_hi));
      const double href = href_w[t] / 1000.0;
      dcap = std::max(dcap, std::max(std::abs(href), std::abs(hcap - href)));
      khmax = std::max(khmax, std::abs(kappa_h[t]));
    }
    R.error_bound += T * (khmax + 2.0 * psi * dcap) * (a + std::abs(a - uk)) *
                     temp_grid_step / 2.0;
  }

  R.objective = R.electric_cost + R.thermal_cost;
  return R;
}

CompareVerdict compare(double milp_objective, const OracleResult& oracle, double tol) {
  CompareVerdict v;
  v.milp_objective = milp_objective;
  if (!oracle.any_feasible()) {
    v.message = "oracle found no feasible price combination";
    return v;
  }
  v.oracle_objective = oracle.best_objective;
  v.abs_dev = std::abs(milp_objective - oracle.best_objective);
  v.rel_dev = v.abs_dev / (1.0 + std::abs(oracle.best_objective));
  v.pass = v.rel_dev <= tol;
  if (v.pass)
    v.message = "PASS";
  else if (milp_objective < oracle.best_objective)
    v.message = "invalid Big-M (or solver limit): reformulation lost profit vs enumeration";
  else
    v.message = "oracle gap or invalid Big-M";
  return v;
}

}  // namespace stackheat::oracle
