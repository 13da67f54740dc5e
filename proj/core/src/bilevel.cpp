#include "stackheat/bilevel.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace stackheat::bilevel {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string sub(const std::string& base, int t) { return base + "[" + std::to_string(t) + "]"; }

std::string sub2(const std::string& base, int t, int i) {
  return base + "[" + std::to_string(t) + "][" + std::to_string(i) + "]";
}

}  // namespace

int BilevelProblem::add_var(std::string name, double lo, double hi, Owner owner, bool integral,
                            double dual_hint) {
  VarRef v;
  v.id = static_cast<int>(vars.size());
  v.name = std::move(name);
  v.lower = lo;
  v.upper = hi;
  v.integral = integral;
  v.owner = owner;
  v.dual_hint = dual_hint;
  vars.push_back(std::move(v));
  return vars.back().id;
}

void BilevelProblem::validate() const {
  auto fail = [](const std::string& what) { throw std::logic_error("bilevel: " + what); };

  for (std::size_t j = 0; j < vars.size(); ++j) {
    const VarRef& v = vars[j];
    if (v.id != static_cast<int>(j)) fail("variable id out of order at '" + v.name + "'");
    if (std::isnan(v.lower) || std::isnan(v.upper) || v.lower > v.upper)
      fail("bad bounds on '" + v.name + "'");
    if (std::isnan(v.range_lo) != std::isnan(v.range_hi))
      fail("one-sided range on '" + v.name + "'");
    if (!std::isnan(v.range_lo) && !(v.range_lo <= v.range_hi))
      fail("bad range on '" + v.name + "'");
    if (v.integral && !(std::isfinite(v.lower) && std::isfinite(v.upper)))
      fail("integer variable '" + v.name + "' needs finite bounds");
  }

  auto check_term = [&](const LinearTerm& term, const std::string& where, bool follower_only) {
    if (term.var < 0 || term.var >= static_cast<int>(vars.size()))
      fail(where + " references variable id " + std::to_string(term.var));
    if (!std::isfinite(term.coeff)) fail(where + " has a non-finite coefficient");
    const Owner o = vars[term.var].owner;
    if (follower_only && o != Owner::Follower)
      fail(where + " references non-follower variable '" + vars[term.var].name + "'");
    if (!follower_only && o != Owner::Leader && o != Owner::Follower)
      fail(where + " references non-model variable '" + vars[term.var].name + "'");
  };
  auto check_rows = [&](const std::vector<LinearConstraint>& rows, bool follower_only,
                        const char* side) {
    for (std::size_t r = 0; r < rows.size(); ++r) {
      const LinearConstraint& row = rows[r];
      const std::string where = std::string(side) + " row " + std::to_string(r) + " (" +
                                (row.tag.empty() ? "untagged" : row.tag) + ")";
      if (row.tag.empty()) fail(where);
      if (!std::isfinite(row.rhs)) fail(where + " has a non-finite rhs");
      for (const LinearTerm& term : row.terms) check_term(term, where, follower_only);
    }
  };
  check_rows(leader_constraints, false, "leader");
  check_rows(follower_constraints, true, "follower");

  auto check_product = [&](const BilinearTerm& b, const std::string& where) {
    if (b.price_var < 0 || b.price_var >= static_cast<int>(vars.size()) || b.var < 0 ||
        b.var >= static_cast<int>(vars.size()))
      fail(where + " references an out-of-range variable id");
    if (vars[b.price_var].owner != Owner::Leader)
      fail(where + " price side '" + vars[b.price_var].name + "' is not leader-owned");
    if (vars[b.var].owner != Owner::Follower)
      fail(where + " load side '" + vars[b.var].name + "' is not follower-owned");
  };
  for (const BilinearTerm& b : leader_objective.revenue) check_product(b, "revenue product");
  for (const BilinearTerm& b : follower_objective.bilinear) check_product(b, "price cost product");
  for (const LinearTerm& t : leader_objective.linear)
    check_term(t, "leader objective", false);
  for (const LinearTerm& t : follower_objective.linear)
    check_term(t, "follower objective", true);
  for (const QuadCost& q : leader_objective.fuel) {
    const std::string where = "fuel term '" + q.name + "'";
    if (!(std::isfinite(q.arg_lo) && std::isfinite(q.arg_hi) && q.arg_lo <= q.arg_hi))
      fail(where + " has a bad argument range");
    for (const LinearTerm& t : q.arg) {
      check_term(t, where, false);
      if (vars[t.var].owner != Owner::Leader)
        fail(where + " argument '" + vars[t.var].name + "' is not leader-owned");
    }
  }
}

void build_follower(const devices::Scenario& sc, int mode, int comfort_breakpoints,
                    BilevelProblem& bp) {
  if (comfort_breakpoints < 1)
    throw std::invalid_argument("comfort_breakpoints must be at least 1");
  const int T = sc.horizon_T;
  const double dt_h = sc.dt_hours();
  Index& ix = bp.index;
  ix.T = T;
  ix.dt_h = dt_h;
  ix.psi = sc.comfort_penalty_psi;
  bp.mode = mode;

  const double ke_max = sc.electric_price.kappa_max;
  const double kh_max = sc.heat_price.kappa_max;

  // Flexible electric load: pl = pl0 - pcut + shift, pl >= 0. The cap
  // pl0 + shift_max is implied, recorded as a range instead of a bound so it
  // does not add complementarity pairs.
  ix.pl.resize(T);
  ix.pcut.resize(T);
  ix.shift.resize(T);
  ix.pl_ymax.resize(T);
  for (int t = 0; t < T; ++t) {
    ix.pl_ymax[t] = std::max(0.0, sc.base_electric_load_kW.at(t) + sc.shift_max_kW);
    const int id = bp.add_var(sub("pl", t), 0.0, kInf, Owner::Follower, false, 2.0 * ke_max);
    bp.vars[id].range_lo = 0.0;
    bp.vars[id].range_hi = ix.pl_ymax[t];
    ix.pl[t] = id;
  }
  for (int t = 0; t < T; ++t)
    ix.pcut[t] = bp.add_var(sub("pcut", t), 0.0, std::max(0.0, sc.cut_max_profile_kW.at(t)),
                            Owner::Follower, false, 2.0 * ke_max);
  for (int t = 0; t < T; ++t)
    ix.shift[t] = bp.add_var(sub("shift", t), -sc.shift_max_kW, sc.shift_max_kW, Owner::Follower,
                             false, 3.0 * ke_max);

  for (int t = 0; t < T; ++t)
    bp.follower_constraints.push_back(
        {{{ix.pl[t], 1.0}, {ix.pcut[t], 1.0}, {ix.shift[t], -1.0}},
         Relation::Equal,
         sc.base_electric_load_kW.at(t),
         "electric-load-split"});
  {
    LinearConstraint row;
    for (int t = 0; t < T; ++t) row.terms.push_back({ix.shift[t], 1.0});
    row.rel = Relation::Equal;
    row.rhs = 0.0;
    row.tag = "shift-conservation";
    bp.follower_constraints.push_back(std::move(row));
  }

  const thermal::BuildingZone* zones[2] = {&sc.residential_zone, &sc.public_zone};
  const char* zname[2] = {"res", "pub"};

  for (int z = 0; z < 2; ++z) {
    const thermal::BuildingZone& zone = *zones[z];
    ix.bands[z] = thermal::comfort_band_schedule(zone, sc.comfort, mode, T);
    const std::vector<double> href_w =
        thermal::comfort_reference_loads(zone, sc.outdoor_temp_profile_C, T, sc.dt_s);

    ix.href_kw[z].resize(T);
    double dmax = 0.0;
    for (int t = 0; t < T; ++t) {
      ix.href_kw[z][t] = href_w[t] / 1000.0;
      dmax = std::max(dmax, std::abs(ix.href_kw[z][t]));
    }
    ix.dmax[z] = std::max(dmax, 1e-6);
    ix.cap_kwh_per_k[z] = zone.heat_capacity_J_per_K() / 3.6e6;
    ix.loss_kw_per_k[z] = zone.loss_conductance_W_per_K() / 1000.0;
    ix.tau_init[z] = zone.initial_temp_C;

    const double a = ix.cap_kwh_per_k[z] / dt_h;  // kW moved per K of end-state change
    const double uk = ix.loss_kw_per_k[z];
    const double m_dev = 2.0 * ix.psi * ix.dmax[z];          // |gradient| cap of the penalty
    const double m_gamma = kh_max + m_dev;                   // heat-balance dual cap
    const double tau_hint = m_gamma * (a + std::abs(a - uk));
    const double heat_hint = 2.0 * (kh_max + m_dev);
    const double lam_hint = 6.0 * ix.psi * ix.dmax[z] * ix.dmax[z];

    // Temperature states, end of hour k. The last one is lifted to at least
    // the initial temperature so the horizon cannot end on borrowed heat.
    ix.tau[z].resize(T);
    for (int k = 0; k < T; ++k) {
      const thermal::TempBand& band = ix.bands[z].hours[k];
      double lo = band.t_min_C, hi = band.t_max_C;
      if (k == T - 1) {
        lo = std::max(lo, ix.tau_init[z]);
        if (lo > hi + 1e-9)
          throw std::invalid_argument(std::string("zone ") + zname[z] +
                                      ": end-of-horizon guard conflicts with the final band");
        lo = std::min(lo, hi);
      }
      ix.tau[z][k] =
          bp.add_var(sub(std::string("tau.") + zname[z], k), lo, hi, Owner::Follower, false,
                     tau_hint);
    }

    // Heat drawn by the zone; the Euler balance implies a finite cap, recorded
    // as a range for downstream product and Big-M sizing.
    ix.heat[z].resize(T);
    ix.heat_ymax[z].resize(T);
    for (int t = 0; t < T; ++t) {
      const double end_hi = bp.vars[ix.tau[z][t]].upper;
      const double st_lo = t == 0 ? ix.tau_init[z] : bp.vars[ix.tau[z][t - 1]].lower;
      const double st_hi = t == 0 ? ix.tau_init[z] : bp.vars[ix.tau[z][t - 1]].upper;
      const double out_t = sc.outdoor_temp_profile_C.at(t);
      const double hmax =
          a * end_hi - uk * out_t + std::max((uk - a) * st_lo, (uk - a) * st_hi);
      ix.heat_ymax[z][t] = std::max(0.0, hmax);
      const int id = bp.add_var(sub(std::string("heat.") + zname[z], t), 0.0, kInf,
                                Owner::Follower, false, heat_hint);
      bp.vars[id].range_lo = 0.0;
      bp.vars[id].range_hi = ix.heat_ymax[z][t];
      ix.heat[z][t] = id;
    }

    // Deviation from the reference heat load. On pinned hours the temperature
    // is fixed, the deviation is identically zero and carries no penalty
    // machinery; on flexible hours it is free, bounded through the PWL hull.
    auto pinned = [&](int t) {
      return ix.bands[z].hours[t].fixed && (t == 0 || ix.bands[z].hours[t - 1].fixed);
    };
    ix.dev[z].resize(T);
    for (int t = 0; t < T; ++t) {
      if (pinned(t)) {
        ix.dev[z][t] =
            bp.add_var(sub(std::string("dev.") + zname[z], t), 0.0, 0.0, Owner::Follower);
      } else {
        const int id = bp.add_var(sub(std::string("dev.") + zname[z], t), -kInf, kInf,
                                  Owner::Follower);
        bp.vars[id].range_lo = -ix.dmax[z];
        bp.vars[id].range_hi = ix.dmax[z];
        ix.dev[z][t] = id;
      }
    }

    // Convex-combination weights of the comfort penalty, flexible hours only.
    const int nb = comfort_breakpoints;
    ix.lam[z].assign(T, {});
    ix.lam_x[z].assign(T, {});
    for (int t = 0; t < T; ++t) {
      if (pinned(t)) continue;
      std::vector<double> xs(2 * nb + 1);
      for (int i = 0; i <= 2 * nb; ++i)
        xs[i] = ix.dmax[z] * (static_cast<double>(i - nb) / nb);
      std::vector<int> ids(2 * nb + 1);
      for (int i = 0; i <= 2 * nb; ++i) {
        const int id = bp.add_var(sub2(std::string("lam.") + zname[z], t, i), 0.0, kInf,
                                  Owner::Follower, false, lam_hint);
        bp.vars[id].range_lo = 0.0;
        bp.vars[id].range_hi = 1.0;
        ids[i] = id;
      }
      ix.lam[z][t] = std::move(ids);
      ix.lam_x[z][t] = std::move(xs);
    }

    // Euler heat balance, hour by hour; hour 0 folds the initial temperature
    // into the right-hand side.
    for (int t = 0; t < T; ++t) {
      LinearConstraint row;
      row.terms.push_back({ix.heat[z][t], 1.0});
      row.terms.push_back({ix.tau[z][t], -a});
      double rhs = -uk * sc.outdoor_temp_profile_C.at(t);
      if (t == 0)
        rhs -= (a - uk) * ix.tau_init[z];
      else
        row.terms.push_back({ix.tau[z][t - 1], a - uk});
      row.rel = Relation::Equal;
      row.rhs = rhs;
      row.tag = "thermal-euler";
      bp.follower_constraints.push_back(std::move(row));
    }
    for (int t = 0; t < T; ++t)
      bp.follower_constraints.push_back({{{ix.dev[z][t], 1.0}, {ix.heat[z][t], 1.0}},
                                         Relation::Equal,
                                         ix.href_kw[z][t],
                                         "comfort-deviation"});
    for (int t = 0; t < T; ++t) {
      if (ix.lam[z][t].empty()) continue;
      LinearConstraint hull, arg;
      for (std::size_t i = 0; i < ix.lam[z][t].size(); ++i) {
        hull.terms.push_back({ix.lam[z][t][i], 1.0});
        arg.terms.push_back({ix.lam[z][t][i], ix.lam_x[z][t][i]});
      }
      hull.rel = Relation::Equal;
      hull.rhs = 1.0;
      hull.tag = "comfort-pwl-hull";
      arg.terms.push_back({ix.dev[z][t], -1.0});
      arg.rel = Relation::Equal;
      arg.rhs = 0.0;
      arg.tag = "comfort-pwl-arg";
      bp.follower_constraints.push_back(std::move(hull));
      bp.follower_constraints.push_back(std::move(arg));
    }

    // Comfort penalty: psi * dev^2 expanded over the hull weights.
    for (int t = 0; t < T; ++t)
      for (std::size_t i = 0; i < ix.lam[z][t].size(); ++i) {
        const double x = ix.lam_x[z][t][i];
        bp.follower_objective.linear.push_back({ix.lam[z][t][i], ix.psi * x * x});
      }
  }
}

void build_leader(const devices::Scenario& sc, BilevelProblem& bp) {
  Index& ix = bp.index;
  if (ix.pl.empty())
    throw std::logic_error("build_leader needs the follower block; run build_follower first");
  const int T = ix.T;
  const double dt_h = ix.dt_h;

  const auto nchp = sc.chp_units.size();
  const auto ncon = sc.con_units.size();
  const auto nsto = sc.storages.size();
  const auto neb = sc.boilers.size();
  const auto nren = sc.renewables.size();

  ix.chp_p.assign(nchp, {});
  ix.chp_h.assign(nchp, {});
  for (std::size_t n = 0; n < nchp; ++n) {
    const devices::ChpUnit& u = sc.chp_units[n];
    const std::string base = "chp" + std::to_string(n);
    for (int t = 0; t < T; ++t)
      ix.chp_p[n].push_back(bp.add_var(sub(base + ".p", t), u.p_min_kW, u.p_max_kW, Owner::Leader));
    for (int t = 0; t < T; ++t)
      ix.chp_h[n].push_back(bp.add_var(sub(base + ".h", t), u.h_min_kW, u.h_max_kW, Owner::Leader));
  }
  ix.con_p.assign(ncon, {});
  for (std::size_t n = 0; n < ncon; ++n) {
    const devices::ConUnit& u = sc.con_units[n];
    const std::string base = "con" + std::to_string(n);
    for (int t = 0; t < T; ++t)
      ix.con_p[n].push_back(bp.add_var(sub(base + ".p", t), u.p_min_kW, u.p_max_kW, Owner::Leader));
  }
  ix.eb_p.assign(neb, {});
  for (std::size_t n = 0; n < neb; ++n) {
    const devices::ElectricBoiler& u = sc.boilers[n];
    const std::string base = "eb" + std::to_string(n);
    for (int t = 0; t < T; ++t)
      ix.eb_p[n].push_back(bp.add_var(sub(base + ".p", t), 0.0, u.p_max_kW, Owner::Leader));
  }
  ix.sto_cha.assign(nsto, {});
  ix.sto_dis.assign(nsto, {});
  ix.sto_soc.assign(nsto, {});
  for (std::size_t n = 0; n < nsto; ++n) {
    const devices::Storage& u = sc.storages[n];
    const std::string base = "sto" + std::to_string(n);
    for (int t = 0; t < T; ++t)
      ix.sto_cha[n].push_back(bp.add_var(sub(base + ".cha", t), 0.0, u.p_charge_max_kW,
                                         Owner::Leader));
    for (int t = 0; t < T; ++t)
      ix.sto_dis[n].push_back(bp.add_var(sub(base + ".dis", t), 0.0, u.p_discharge_max_kW,
                                         Owner::Leader));
    for (int k = 0; k < T; ++k) {
      double lo = u.soc_min_kWh, hi = u.soc_max_kWh;
      if (k == T - 1) {
        // do not end the day on borrowed state of charge
        lo = std::max(lo, u.soc_init_kWh);
        if (lo > hi + 1e-9)
          throw std::invalid_argument("storage " + u.name +
                                      ": initial state of charge exceeds soc_max");
        lo = std::min(lo, hi);
      }
      ix.sto_soc[n].push_back(bp.add_var(sub(base + ".soc", k), lo, hi, Owner::Leader));
    }
  }
  ix.ren_inj.assign(nren, {});
  ix.ren_cur.assign(nren, {});
  for (std::size_t n = 0; n < nren; ++n) {
    const devices::Renewable& u = sc.renewables[n];
    const std::string base = "ren" + std::to_string(n);
    for (int t = 0; t < T; ++t) {
      const double avail = std::max(0.0, u.availability_profile_kW.at(t));
      ix.ren_inj[n].push_back(bp.add_var(sub(base + ".inj", t), 0.0, avail, Owner::Leader));
      ix.ren_cur[n].push_back(bp.add_var(sub(base + ".cur", t), 0.0, avail, Owner::Leader));
    }
  }

  // Reserve providers: CHPs, then CONs, then electric storages.
  struct Provider {
    std::string name;
    double cap = 0.0;
    double cost = 0.0;
    int kind = 0;     // 0 chp, 1 con, 2 electric storage
    std::size_t unit = 0;
  };
  std::vector<Provider> providers;
  for (std::size_t n = 0; n < nchp; ++n)
    providers.push_back({"rsv.chp" + std::to_string(n), sc.chp_units[n].p_max_kW,
                         sc.chp_units[n].reserve_cost, 0, n});
  for (std::size_t n = 0; n < ncon; ++n)
    providers.push_back({"rsv.con" + std::to_string(n), sc.con_units[n].p_max_kW,
                         sc.con_units[n].reserve_cost, 1, n});
  for (std::size_t n = 0; n < nsto; ++n)
    if (sc.storages[n].kind == devices::StorageKind::Electric)
      providers.push_back({"rsv.sto" + std::to_string(n),
                           sc.storages[n].p_discharge_max_kW + sc.storages[n].p_charge_max_kW,
                           sc.storages[n].reserve_cost, 2, n});
  ix.reserve.assign(providers.size(), {});
  for (std::size_t k = 0; k < providers.size(); ++k)
    for (int t = 0; t < T; ++t)
      ix.reserve[k].push_back(
          bp.add_var(sub(providers[k].name, t), 0.0, providers[k].cap, Owner::Leader));

  // A tier grid that cannot reach the required mean within tolerance makes
  // every price schedule infeasible; refuse to build such a problem.
  auto check_mean_reachable = [&](const devices::PriceSpec& spec, const char* which) {
    const double eps = sc.mean_tolerance(spec);
    const double target = T * spec.kappa_mean;
    const double base = T * spec.kappa_min;
    const double step = spec.grid_step();
    double best = base;
    if (step > 0.0) {
      double k = std::round((target - base) / step);
      k = std::min(std::max(k, 0.0), static_cast<double>(T) * (spec.tier_count - 1));
      best = base + k * step;
    }
    if (std::abs(best - target) > eps + 1e-9 * std::max(1.0, std::abs(target)))
      throw std::invalid_argument(std::string(which) +
                                  " tier grid cannot meet the mean-price constraint");
  };
  check_mean_reachable(sc.electric_price, "electric");
  check_mean_reachable(sc.heat_price, "heat");

  // Tiered prices: kappa snaps to one grid value through a one-hot choice.
  auto add_prices = [&](const devices::PriceSpec& spec, const std::string& kname,
                        std::vector<int>& kappa, std::vector<TierGroup>& groups,
                        TierGroup& tmpl) {
    const std::vector<double> grid = spec.grid();
    tmpl.kappa_var = -1;
    tmpl.z_vars.clear();
    tmpl.grid = grid;
    kappa.resize(T);
    groups.assign(T, {});
    for (int t = 0; t < T; ++t) {
      kappa[t] = bp.add_var(sub(kname, t), spec.kappa_min, spec.kappa_max, Owner::Leader);
      TierGroup g;
      g.kappa_var = kappa[t];
      g.grid = grid;
      for (std::size_t j = 0; j < grid.size(); ++j)
        g.z_vars.push_back(
            bp.add_var(sub2(kname + ".z", t, static_cast<int>(j)), 0.0, 1.0, Owner::Leader, true));
      groups[t] = std::move(g);
    }
  };
  add_prices(sc.electric_price, "ke", ix.kappa_e, ix.tiers_e, ix.tier_e_template);
  add_prices(sc.heat_price, "kh", ix.kappa_h, ix.tiers_h, ix.tier_h_template);

  // Electric balance: generation, net storage discharge and injections cover
  // the flexible load plus boiler draw.
  for (int t = 0; t < T; ++t) {
    LinearConstraint row;
    for (std::size_t n = 0; n < nchp; ++n) row.terms.push_back({ix.chp_p[n][t], 1.0});
    for (std::size_t n = 0; n < ncon; ++n) row.terms.push_back({ix.con_p[n][t], 1.0});
    for (std::size_t n = 0; n < nren; ++n) row.terms.push_back({ix.ren_inj[n][t], 1.0});
    for (std::size_t n = 0; n < nsto; ++n)
      if (sc.storages[n].kind == devices::StorageKind::Electric) {
        row.terms.push_back({ix.sto_dis[n][t], 1.0});
        row.terms.push_back({ix.sto_cha[n][t], -1.0});
      }
    for (std::size_t n = 0; n < neb; ++n) row.terms.push_back({ix.eb_p[n][t], -1.0});
    row.terms.push_back({ix.pl[t], -1.0});
    row.rel = Relation::Equal;
    row.rhs = 0.0;
    row.tag = "electric-balance";
    bp.leader_constraints.push_back(std::move(row));
  }

  // Thermal balance: CHP heat, boiler output and net thermal-storage
  // discharge cover both zones' heat draw.
  for (int t = 0; t < T; ++t) {
    LinearConstraint row;
    for (std::size_t n = 0; n < nchp; ++n) row.terms.push_back({ix.chp_h[n][t], 1.0});
    for (std::size_t n = 0; n < neb; ++n)
      row.terms.push_back({ix.eb_p[n][t], sc.boilers[n].eta_eb});
    for (std::size_t n = 0; n < nsto; ++n)
      if (sc.storages[n].kind == devices::StorageKind::Thermal) {
        row.terms.push_back({ix.sto_dis[n][t], 1.0});
        row.terms.push_back({ix.sto_cha[n][t], -1.0});
      }
    for (int z = 0; z < 2; ++z) row.terms.push_back({ix.heat[z][t], -1.0});
    row.rel = Relation::Equal;
    row.rhs = 0.0;
    row.tag = "thermal-balance";
    bp.leader_constraints.push_back(std::move(row));
  }

  // Ramp limits on electric output.
  auto add_ramps = [&](const std::vector<int>& p, double ramp_per_h) {
    const double step = ramp_per_h * dt_h;
    for (int t = 1; t < T; ++t) {
      bp.leader_constraints.push_back(
          {{{p[t], 1.0}, {p[t - 1], -1.0}}, Relation::LessEq, step, "ramp-up"});
      bp.leader_constraints.push_back(
          {{{p[t - 1], 1.0}, {p[t], -1.0}}, Relation::LessEq, step, "ramp-down"});
    }
  };
  for (std::size_t n = 0; n < nchp; ++n) add_ramps(ix.chp_p[n], sc.chp_units[n].ramp_kW_per_h);
  for (std::size_t n = 0; n < ncon; ++n) add_ramps(ix.con_p[n], sc.con_units[n].ramp_kW_per_h);

  // Storage state of charge.
  for (std::size_t n = 0; n < nsto; ++n) {
    const devices::Storage& u = sc.storages[n];
    for (int t = 0; t < T; ++t) {
      LinearConstraint row;
      row.terms.push_back({ix.sto_soc[n][t], 1.0});
      double rhs = 0.0;
      if (t == 0)
        rhs = u.soc_init_kWh;
      else
        row.terms.push_back({ix.sto_soc[n][t - 1], -1.0});
      row.terms.push_back({ix.sto_cha[n][t], -u.eta_charge * dt_h});
      row.terms.push_back({ix.sto_dis[n][t], dt_h / u.eta_discharge});
      row.rel = Relation::Equal;
      row.rhs = rhs;
      row.tag = "storage-balance";
      bp.leader_constraints.push_back(std::move(row));
    }
  }

  // Reserve: headroom per provider, then the hourly requirement against the
  // base (pre-response) load.
  for (std::size_t k = 0; k < providers.size(); ++k) {
    const Provider& pr = providers[k];
    for (int t = 0; t < T; ++t) {
      LinearConstraint row;
      row.terms.push_back({ix.reserve[k][t], 1.0});
      if (pr.kind == 0) {
        row.terms.push_back({ix.chp_p[pr.unit][t], 1.0});
        row.rhs = sc.chp_units[pr.unit].p_max_kW;
      } else if (pr.kind == 1) {
        row.terms.push_back({ix.con_p[pr.unit][t], 1.0});
        row.rhs = sc.con_units[pr.unit].p_max_kW;
      } else {
        row.terms.push_back({ix.sto_dis[pr.unit][t], 1.0});
        row.terms.push_back({ix.sto_cha[pr.unit][t], -1.0});
        row.rhs = sc.storages[pr.unit].p_discharge_max_kW;
      }
      row.rel = Relation::LessEq;
      row.tag = "reserve-headroom";
      bp.leader_constraints.push_back(std::move(row));
    }
  }
  for (int t = 0; t < T; ++t) {
    LinearConstraint row;
    for (std::size_t k = 0; k < providers.size(); ++k)
      row.terms.push_back({ix.reserve[k][t], 1.0});
    row.rel = Relation::GreaterEq;
    row.rhs = sc.reserve_fraction * sc.base_electric_load_kW.at(t);
    row.tag = "reserve-requirement";
    bp.leader_constraints.push_back(std::move(row));
  }

  // Renewables: availability is injected or spilled.
  for (std::size_t n = 0; n < nren; ++n)
    for (int t = 0; t < T; ++t)
      bp.leader_constraints.push_back(
          {{{ix.ren_inj[n][t], 1.0}, {ix.ren_cur[n][t], 1.0}},
           Relation::Equal,
           std::max(0.0, sc.renewables[n].availability_profile_kW.at(t)),
           "renewable-split"});

  // Tier choice and the mean-price anchor per commodity.
  auto add_tier_rows = [&](const std::vector<TierGroup>& groups, const std::vector<int>& kappa,
                           const devices::PriceSpec& spec) {
    for (int t = 0; t < T; ++t) {
      const TierGroup& g = groups[t];
      LinearConstraint pick, price;
      for (std::size_t j = 0; j < g.z_vars.size(); ++j) {
        pick.terms.push_back({g.z_vars[j], 1.0});
        price.terms.push_back({g.z_vars[j], -g.grid[j]});
      }
      pick.rel = Relation::Equal;
      pick.rhs = 1.0;
      pick.tag = "tier-choice";
      price.terms.push_back({g.kappa_var, 1.0});
      price.rel = Relation::Equal;
      price.rhs = 0.0;
      price.tag = "tier-price";
      bp.leader_constraints.push_back(std::move(pick));
      bp.leader_constraints.push_back(std::move(price));
    }
    const double eps = sc.mean_tolerance(spec);
    LinearConstraint up, dn;
    for (int t = 0; t < T; ++t) {
      up.terms.push_back({kappa[t], 1.0});
      dn.terms.push_back({kappa[t], 1.0});
    }
    up.rel = Relation::LessEq;
    up.rhs = T * spec.kappa_mean + eps;
    up.tag = "mean-price-upper";
    dn.rel = Relation::GreaterEq;
    dn.rhs = T * spec.kappa_mean - eps;
    dn.tag = "mean-price-lower";
    bp.leader_constraints.push_back(std::move(up));
    bp.leader_constraints.push_back(std::move(dn));
  };
  add_tier_rows(ix.tiers_e, ix.kappa_e, sc.electric_price);
  add_tier_rows(ix.tiers_h, ix.kappa_h, sc.heat_price);

  // Objective: revenue minus fuel, cycling, reserve and curtailment costs.
  for (int t = 0; t < T; ++t) bp.leader_objective.revenue.push_back({ix.kappa_e[t], ix.pl[t], 1.0});
  for (int z = 0; z < 2; ++z)
    for (int t = 0; t < T; ++t)
      bp.leader_objective.revenue.push_back({ix.kappa_h[t], ix.heat[z][t], 1.0});

  for (std::size_t n = 0; n < nchp; ++n) {
    const devices::ChpUnit& u = sc.chp_units[n];
    for (int t = 0; t < T; ++t) {
      QuadCost q;
      q.a = u.cost_a;
      q.b = u.cost_b;
      q.c = u.cost_c;
      q.arg = {{ix.chp_p[n][t], 1.0}, {ix.chp_h[n][t], u.cv_ratio}};
      q.arg_lo = u.p_min_kW + u.cv_ratio * u.h_min_kW;
      q.arg_hi = u.p_max_kW + u.cv_ratio * u.h_max_kW;
      q.scale = dt_h;
      q.name = sub("chp" + std::to_string(n) + ".fuel", t);
      bp.leader_objective.fuel.push_back(std::move(q));
    }
  }
  for (std::size_t n = 0; n < ncon; ++n) {
    const devices::ConUnit& u = sc.con_units[n];
    for (int t = 0; t < T; ++t) {
      QuadCost q;
      q.a = u.cost_a;
      q.b = u.cost_b;
      q.c = u.cost_c;
      q.arg = {{ix.con_p[n][t], 1.0}};
      q.arg_lo = u.p_min_kW;
      q.arg_hi = u.p_max_kW;
      q.scale = dt_h;
      q.name = sub("con" + std::to_string(n) + ".fuel", t);
      bp.leader_objective.fuel.push_back(std::move(q));
    }
  }

  for (std::size_t n = 0; n < nsto; ++n)
    for (int t = 0; t < T; ++t) {
      bp.leader_objective.linear.push_back({ix.sto_cha[n][t], -sc.storages[n].cycling_cost});
      bp.leader_objective.linear.push_back({ix.sto_dis[n][t], -sc.storages[n].cycling_cost});
    }
  for (std::size_t k = 0; k < providers.size(); ++k)
    for (int t = 0; t < T; ++t)
      bp.leader_objective.linear.push_back({ix.reserve[k][t], -providers[k].cost});
  for (std::size_t n = 0; n < nren; ++n)
    for (int t = 0; t < T; ++t)
      bp.leader_objective.linear.push_back(
          {ix.ren_cur[n][t], -sc.renewables[n].curtail_penalty});
}

BilevelProblem assemble(const devices::Scenario& sc, int mode, int comfort_breakpoints) {
  if (mode < 1 || mode > 5)
    throw std::invalid_argument("mode must be between 1 and 5");
  BilevelProblem bp;
  build_follower(sc, mode, comfort_breakpoints, bp);
  build_leader(sc, bp);
  // What the consumer pays is what the operator earns.
  bp.follower_objective.bilinear = bp.leader_objective.revenue;
  bp.validate();
  return bp;
}

}  // namespace stackheat::bilevel
