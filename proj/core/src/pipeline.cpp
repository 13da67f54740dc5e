#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "runner_util.hpp"
#include "stackheat/bilevel.hpp"
#include "stackheat/oracle.hpp"
#include "stackheat/reform.hpp"
#include "stackheat/runner.hpp"

// Experiment harness: single-mode pipeline runs, the five-mode table, the
// residential-share sweep, oracle verification and file emission.

namespace stackheat::runner {

namespace fs = std::filesystem;

namespace {

// 6 significant digits, C locale, no negative zero.
std::string fmt(double v) {
  if (v == 0.0) v = 0.0;
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::ofstream open_out(const fs::path& p) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream f(p);
  if (!f) throw std::runtime_error("cannot write " + p.string());
  return f;
}

void require(bool ok, const std::string& what) {
  if (!ok) throw std::logic_error("solution invariant violated: " + what);
}

// Extracted series, exact cost evaluation and invariant checks for one
// incumbent assignment.
void extract_solution(const devices::Scenario& sc, const bilevel::BilevelProblem& bp,
                      const reform::Reformulation& R, const std::vector<double>& x,
                      SolutionReport& rep) {
  const bilevel::Index& ix = bp.index;
  const int T = ix.T;

  rep.kappa_e.resize(T);
  rep.kappa_h.resize(T);
  rep.electric_load_kW.resize(T);
  rep.cut_kW.resize(T);
  rep.shift_kW.resize(T);
  for (int t = 0; t < T; ++t) {
    rep.kappa_e[t] = x[ix.kappa_e[t]];
    rep.kappa_h[t] = x[ix.kappa_h[t]];
    rep.electric_load_kW[t] = x[ix.pl[t]];
    rep.cut_kW[t] = x[ix.pcut[t]];
    rep.shift_kW[t] = x[ix.shift[t]];
  }
  for (int z = 0; z < 2; ++z) {
    rep.zone_temp_C[z].resize(T);
    rep.zone_heat_kW[z].resize(T);
    rep.zone_href_kW[z].resize(T);
    rep.zone_reducible_kW[z].resize(T);
    rep.zone_dev_kW[z].resize(T);
    for (int t = 0; t < T; ++t) {
      rep.zone_temp_C[z][t] = x[ix.tau[z][t]];
      rep.zone_heat_kW[z][t] = x[ix.heat[z][t]];
      rep.zone_href_kW[z][t] = ix.href_kw[z][t];
      rep.zone_reducible_kW[z][t] = ix.href_kw[z][t] - x[ix.heat[z][t]];
      rep.zone_dev_kW[z][t] = x[ix.dev[z][t]];
    }
  }

  auto series = [&](const std::vector<std::vector<int>>& ids) {
    std::vector<std::vector<double>> out(ids.size());
    for (std::size_t n = 0; n < ids.size(); ++n) {
      out[n].resize(T);
      for (int t = 0; t < T; ++t) out[n][t] = x[ids[n][t]];
    }
    return out;
  };
  devices::Dispatch& d = rep.dispatch;
  d.chp_p = series(ix.chp_p);
  d.chp_h = series(ix.chp_h);
  d.con_p = series(ix.con_p);
  d.eb_p.assign(T, 0.0);
  for (const auto& unit : ix.eb_p)
    for (int t = 0; t < T; ++t) d.eb_p[t] += x[unit[t]];
  d.sto_charge = series(ix.sto_cha);
  d.sto_discharge = series(ix.sto_dis);
  d.soc = series(ix.sto_soc);
  d.ren_injected = series(ix.ren_inj);
  d.ren_curtailed = series(ix.ren_cur);
  d.reserve = series(ix.reserve);

  // Exact (non-PWL) costs of the extracted point.
  rep.revenue = devices::revenue(rep.kappa_e, rep.kappa_h, rep.electric_load_kW,
                                 rep.zone_heat_kW[0], rep.zone_heat_kW[1]);
  rep.operating_cost = devices::operating_cost(sc, d).total();
  rep.net_revenue = rep.revenue - rep.operating_cost;
  rep.energy_cost = rep.revenue;
  double dev2 = 0.0;
  for (int z = 0; z < 2; ++z)
    for (int t = 0; t < T; ++t) dev2 += rep.zone_dev_kW[z][t] * rep.zone_dev_kW[z][t];
  rep.comfort_loss = ix.psi * dev2;
  rep.total_cost = rep.energy_cost + rep.comfort_loss;

  rep.kkt = reform::kkt_residuals(x, R.kkt, bp);

  // Balance residuals recomputed from the extracted series, sign convention
  // matching the model rows; tolerances scale with the largest row activity.
  double e_scale = 1.0, h_scale = 1.0;
  for (int t = 0; t < T; ++t) {
    double e = -x[ix.pl[t]], ea = std::abs(x[ix.pl[t]]);
    for (const auto& u : ix.chp_p) e += x[u[t]], ea += std::abs(x[u[t]]);
    for (const auto& u : ix.con_p) e += x[u[t]], ea += std::abs(x[u[t]]);
    for (const auto& u : ix.ren_inj) e += x[u[t]], ea += std::abs(x[u[t]]);
    for (std::size_t n = 0; n < sc.storages.size(); ++n)
      if (sc.storages[n].kind == devices::StorageKind::Electric) {
        e += x[ix.sto_dis[n][t]] - x[ix.sto_cha[n][t]];
        ea += std::abs(x[ix.sto_dis[n][t]]) + std::abs(x[ix.sto_cha[n][t]]);
      }
    for (const auto& u : ix.eb_p) e -= x[u[t]], ea += std::abs(x[u[t]]);
    rep.electric_balance_residual = std::max(rep.electric_balance_residual, std::abs(e));
    e_scale = std::max(e_scale, 1.0 + ea);

    double h = 0.0, ha = 0.0;
    for (const auto& u : ix.chp_h) h += x[u[t]], ha += std::abs(x[u[t]]);
    for (std::size_t n = 0; n < sc.boilers.size(); ++n) {
      h += x[ix.eb_p[n][t]] * sc.boilers[n].eta_eb;
      ha += std::abs(x[ix.eb_p[n][t]] * sc.boilers[n].eta_eb);
    }
    for (std::size_t n = 0; n < sc.storages.size(); ++n)
      if (sc.storages[n].kind == devices::StorageKind::Thermal) {
        h += x[ix.sto_dis[n][t]] - x[ix.sto_cha[n][t]];
        ha += std::abs(x[ix.sto_dis[n][t]]) + std::abs(x[ix.sto_cha[n][t]]);
      }
    for (int z = 0; z < 2; ++z) h -= x[ix.heat[z][t]], ha += std::abs(x[ix.heat[z][t]]);
    rep.thermal_balance_residual = std::max(rep.thermal_balance_residual, std::abs(h));
    h_scale = std::max(h_scale, 1.0 + ha);
  }

  double shift_total = 0.0, shift_abs = 0.0;
  for (int t = 0; t < T; ++t) {
    shift_total += rep.shift_kW[t];
    shift_abs += std::abs(rep.shift_kW[t]);
  }
  rep.shift_sum = std::abs(shift_total);

  double temp_scale = 1.0;
  for (int z = 0; z < 2; ++z)
    for (int t = 0; t < T; ++t) {
      const thermal::TempBand& b = ix.bands[z].hours[t];
      const double tau = rep.zone_temp_C[z][t];
      rep.band_violation_C =
          std::max({rep.band_violation_C, b.t_min_C - tau, tau - b.t_max_C});
      temp_scale = std::max(temp_scale, 1.0 + std::abs(tau));
    }
  rep.band_violation_C = std::max(rep.band_violation_C, 0.0);

  require(rep.electric_balance_residual <= 1e-6 * e_scale, "electric balance");
  require(rep.thermal_balance_residual <= 1e-6 * h_scale, "thermal balance");
  require(rep.shift_sum <= 1e-6 * (1.0 + shift_abs), "shift conservation");
  require(rep.band_violation_C <= 1e-6 * temp_scale, "temperature band");
  require(rep.kkt.max_all() <= 1e-6 * (1.0 + std::abs(rep.objective)), "KKT residuals");
}

}  // namespace

SolutionReport run_mode(const devices::Scenario& sc_in, int mode, const SolveOptions& opt) {
  devices::Scenario sc = sc_in;
  if (opt.tiers > 0) {
    sc.electric_price.tier_count = opt.tiers;
    sc.heat_price.tier_count = opt.tiers;
  }
  std::vector<devices::Violation> viol = devices::validate_scenario(sc);
  if (!viol.empty()) {
    std::string msg = "scenario validation failed:";
    for (const devices::Violation& v : viol) msg += "\n  " + v.field + ": " + v.message;
    throw ValidationError(msg, std::move(viol));
  }

  SolutionReport rep;
  rep.mode = mode;

  bilevel::BilevelProblem bp = bilevel::assemble(sc, mode, opt.pwl_segments);
  reform::ReformOptions ro;
  ro.big_m = opt.big_m;
  ro.n_segments = opt.pwl_segments;
  reform::Reformulation R = reform::to_milp(bp, ro);
  rep.warnings = R.warnings;
  if (opt.dump_lp) rep.lp_text = reform::to_lp_text(R.milp);

  oracle::OracleOptions oo;
  oo.comfort_breakpoints = opt.pwl_segments;
  oo.fuel_segments = opt.pwl_segments;
  std::vector<double> hint = oracle::mip_start(sc, bp, R, oo);

  milp::MilpOptions mo;
  mo.rel_gap = opt.rel_gap;
  mo.node_limit = opt.node_limit;
  mo.time_limit_s = opt.time_limit_s;
  if (!hint.empty()) mo.incumbent_hint = &hint;
  milp::MixedIntegerProgram mip{R.milp.lp, R.milp.integer_vars};
  milp::MilpSolution sol = milp::solve_milp(mip, mo);

  rep.solver_status = sol.status;
  rep.objective = sol.objective;
  rep.best_bound = sol.best_bound;
  rep.rel_gap = sol.rel_gap;
  rep.nodes = sol.nodes;
  rep.simplex_iterations = sol.simplex_iterations;

  switch (sol.status) {
    case milp::MilpStatus::Optimal:
      rep.status = "optimal";
      rep.final_solution = true;
      break;
    case milp::MilpStatus::Infeasible:
      rep.status = "infeasible";
      rep.detail = "reformulated problem has no feasible point";
      return rep;
    case milp::MilpStatus::Unbounded:
      rep.status = "error";
      rep.detail = "reformulated problem is unbounded";
      return rep;
    case milp::MilpStatus::NumericalFailure:
      rep.status = "error";
      rep.detail = "numerical failure in branch and bound";
      return rep;
    case milp::MilpStatus::NodeLimit:
      rep.status = "limit";
      rep.detail = "node limit reached";
      break;
    case milp::MilpStatus::TimeLimit:
      rep.status = "limit";
      rep.detail = "time limit reached";
      break;
  }
  if (!sol.has_incumbent) {
    rep.detail += ", no incumbent";
    return rep;
  }

  std::vector<double> x = std::move(sol.x);

  // Polish: re-solve the two price-taking stages at the incumbent's tier
  // choices. The repacked point has clean complementarity and the best leader
  // profit at those prices, so it can only improve the incumbent.
  const bilevel::Index& ix = bp.index;
  {
    std::vector<int> ce(ix.T, -1), ch(ix.T, -1);
    bool have = true;
    for (int t = 0; t < ix.T && have; ++t) {
      const auto& ze = ix.tiers_e[t].z_vars;
      const auto& zh = ix.tiers_h[t].z_vars;
      for (std::size_t j = 0; j < ze.size(); ++j)
        if (x[ze[j]] > 0.5) ce[t] = static_cast<int>(j);
      for (std::size_t j = 0; j < zh.size(); ++j)
        if (x[zh[j]] > 0.5) ch[t] = static_cast<int>(j);
      have = ce[t] >= 0 && ch[t] >= 0;
    }
    if (have) {
      std::vector<double> pol = oracle::repack_at_tiers(sc, bp, R, ce, ch, oo);
      if (!pol.empty()) {
        double pobj = 0.0;
        for (int j = 0; j < R.milp.lp.num_vars(); ++j) pobj += R.milp.lp.objective[j] * pol[j];
        if (pobj >= rep.objective - 1e-7 * (1.0 + std::abs(rep.objective))) {
          x = std::move(pol);
          rep.objective = pobj;
          rep.rel_gap = std::max(0.0, (rep.best_bound - pobj) / (1.0 + std::abs(pobj)));
        }
      }
    }
  }

  extract_solution(sc, bp, R, x, rep);
  return rep;
}

std::vector<SolutionReport> run_all_modes(const devices::Scenario& sc, const SolveOptions& opt) {
  std::vector<SolutionReport> rows;
  for (int mode = 1; mode <= 5; ++mode) {
    try {
      rows.push_back(run_mode(sc, mode, opt));
    } catch (const std::exception& e) {
      SolutionReport rep;
      rep.mode = mode;
      rep.status = "error";
      rep.detail = e.what();
      rows.push_back(std::move(rep));
    }
  }
  return rows;
}

devices::Scenario rescale_residential_share(const devices::Scenario& sc, double k) {
  if (!(k > 0.0 && k < 1.0))
    throw std::invalid_argument("residential share must lie strictly between 0 and 1");
  const double k0 = reference_share(sc);
  if (!(k0 > 0.0 && k0 < 1.0))
    throw std::invalid_argument("scenario has a degenerate zone split, cannot rescale");
  devices::Scenario out = sc;
  const double res = k / k0;
  const double pub = (1.0 - k) / (1.0 - k0);
  out.residential_zone.surface_area_m2 *= res;
  out.residential_zone.volume_m3 *= res;
  out.public_zone.surface_area_m2 *= pub;
  out.public_zone.volume_m3 *= pub;
  out.residential_share = reference_share(out);
  return out;
}

std::vector<SweepRow> sweep_k(const devices::Scenario& sc, const std::vector<double>& k_values,
                              int mode, const SolveOptions& opt) {
  std::vector<SweepRow> rows;
  for (double k : k_values) {
    SweepRow row;
    row.k = k;
    try {
      row.report = run_mode(rescale_residential_share(sc, k), mode, opt);
    } catch (const std::exception& e) {
      row.report.mode = mode;
      row.report.status = "error";
      row.report.detail = e.what();
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

VerifyResult verify_mode(const devices::Scenario& sc_in, int mode, const SolveOptions& opt,
                         double tolerance) {
  // The enumeration reads tier counts from the scenario, so apply the
  // override here and both sides see the same game.
  devices::Scenario sc = sc_in;
  if (opt.tiers > 0) {
    sc.electric_price.tier_count = opt.tiers;
    sc.heat_price.tier_count = opt.tiers;
  }

  std::vector<devices::Violation> viol = devices::validate_scenario(sc);
  if (!viol.empty()) {
    std::string msg = "scenario validation failed:";
    for (const devices::Violation& v : viol) msg += "\n  " + v.field + ": " + v.message;
    throw ValidationError(msg, std::move(viol));
  }

  VerifyResult vr;
  // Enumerate first: the combination cap refuses oversized scenarios before
  // the reformulation pays for a full branch and bound run.
  oracle::OracleOptions oo;
  oo.comfort_breakpoints = opt.pwl_segments;
  oo.fuel_segments = opt.pwl_segments;
  vr.table = oracle::enumerate_leader(sc, mode, oo);

  try {
    vr.report = run_mode(sc, mode, opt);
  } catch (const ValidationError&) {
    throw;
  } catch (const std::exception& e) {
    vr.report.mode = mode;
    vr.report.status = "error";
    vr.report.detail = e.what();
  }

  const bool milp_solved = vr.report.has_solution() && !vr.report.kappa_e.empty();
  if (milp_solved) {
    vr.verdict = oracle::compare(vr.report.objective, vr.table, tolerance);
  } else if (vr.table.any_feasible()) {
    vr.verdict.pass = false;
    vr.verdict.oracle_objective = vr.table.best_objective;
    vr.verdict.message =
        "reformulation produced no solution but enumeration found a feasible "
        "strategy: invalid Big-M, or a solver limit was hit";
  } else {
    vr.verdict.pass = true;
    vr.verdict.message = "both the reformulation and the enumeration found no feasible strategy";
  }
  return vr;
}

// ---- emission ----

void write_run_dir(const std::string& dir, const devices::Scenario& sc,
                   const SolutionReport& rep) {
  fs::create_directories(dir);
  const fs::path base = dir;

  {
    std::ofstream f = open_out(base / "summary.csv");
    f << "mode,net_revenue,revenue,operating_cost,energy_cost,comfort_loss,total_cost,status\n";
    f << rep.mode << ',' << fmt(rep.net_revenue) << ',' << fmt(rep.revenue) << ','
      << fmt(rep.operating_cost) << ',' << fmt(rep.energy_cost) << ',' << fmt(rep.comfort_loss)
      << ',' << fmt(rep.total_cost) << ',' << rep.status << '\n';
  }

  const int T = static_cast<int>(rep.kappa_e.size());
  if (T > 0) {
    std::ofstream f = open_out(base / "prices.csv");
    f << "hour,kappa_e,kappa_h\n";
    for (int t = 0; t < T; ++t)
      f << t << ',' << fmt(rep.kappa_e[t]) << ',' << fmt(rep.kappa_h[t]) << '\n';
  }

  if (T > 0) {
    std::ofstream f = open_out(base / "dispatch.csv");
    const devices::Dispatch& d = rep.dispatch;
    f << "hour,electric_load_kW,cut_kW,shift_kW";
    for (const auto& u : sc.chp_units) f << ',' << u.name << "_p_kW," << u.name << "_h_kW";
    for (const auto& u : sc.con_units) f << ',' << u.name << "_p_kW";
    if (!sc.boilers.empty()) f << ",eb_p_kW";
    for (const auto& s : sc.storages)
      f << ',' << s.name << "_charge_kW," << s.name << "_discharge_kW," << s.name << "_soc_kWh";
    for (const auto& r : sc.renewables)
      f << ',' << r.name << "_injected_kW," << r.name << "_curtailed_kW";
    for (const auto& u : sc.chp_units) f << ',' << u.name << "_reserve_kW";
    for (const auto& u : sc.con_units) f << ',' << u.name << "_reserve_kW";
    for (const auto& s : sc.storages)
      if (s.kind == devices::StorageKind::Electric) f << ',' << s.name << "_reserve_kW";
    const char* zp[2] = {"res", "pub"};
    for (int z = 0; z < 2; ++z)
      f << ',' << zp[z] << "_temp_C," << zp[z] << "_heat_kW," << zp[z] << "_href_kW," << zp[z]
        << "_reducible_kW," << zp[z] << "_dev_kW";
    f << '\n';
    for (int t = 0; t < T; ++t) {
      f << t << ',' << fmt(rep.electric_load_kW[t]) << ',' << fmt(rep.cut_kW[t]) << ','
        << fmt(rep.shift_kW[t]);
      for (std::size_t n = 0; n < sc.chp_units.size(); ++n)
        f << ',' << fmt(d.chp_p[n][t]) << ',' << fmt(d.chp_h[n][t]);
      for (std::size_t n = 0; n < sc.con_units.size(); ++n) f << ',' << fmt(d.con_p[n][t]);
      if (!sc.boilers.empty()) f << ',' << fmt(d.eb_p[t]);
      for (std::size_t n = 0; n < sc.storages.size(); ++n)
        f << ',' << fmt(d.sto_charge[n][t]) << ',' << fmt(d.sto_discharge[n][t]) << ','
          << fmt(d.soc[n][t]);
      for (std::size_t n = 0; n < sc.renewables.size(); ++n)
        f << ',' << fmt(d.ren_injected[n][t]) << ',' << fmt(d.ren_curtailed[n][t]);
      for (std::size_t n = 0; n < d.reserve.size(); ++n) f << ',' << fmt(d.reserve[n][t]);
      for (int z = 0; z < 2; ++z)
        f << ',' << fmt(rep.zone_temp_C[z][t]) << ',' << fmt(rep.zone_heat_kW[z][t]) << ','
          << fmt(rep.zone_href_kW[z][t]) << ',' << fmt(rep.zone_reducible_kW[z][t]) << ','
          << fmt(rep.zone_dev_kW[z][t]);
      f << '\n';
    }
  }

  {
    std::ofstream f = open_out(base / "residuals.txt");
    f << "kkt_stationarity " << fmt(rep.kkt.stationarity) << '\n';
    f << "kkt_primal " << fmt(rep.kkt.primal) << '\n';
    f << "kkt_dual_sign " << fmt(rep.kkt.dual_sign) << '\n';
    f << "kkt_complementarity " << fmt(rep.kkt.complementarity) << '\n';
    f << "electric_balance_kW " << fmt(rep.electric_balance_residual) << '\n';
    f << "thermal_balance_kW " << fmt(rep.thermal_balance_residual) << '\n';
    f << "shift_sum_kW " << fmt(rep.shift_sum) << '\n';
    f << "band_violation_C " << fmt(rep.band_violation_C) << '\n';
  }

  {
    std::ofstream f = open_out(base / "solver_log.txt");
    f << "mode " << rep.mode << '\n';
    f << "status " << rep.status << '\n';
    f << "final_solution " << (rep.final_solution ? "yes" : "no") << '\n';
    if (!rep.detail.empty()) f << "detail " << rep.detail << '\n';
    f << "objective " << fmt(rep.objective) << '\n';
    f << "best_bound " << fmt(rep.best_bound) << '\n';
    f << "rel_gap " << fmt(rep.rel_gap) << '\n';
    f << "nodes " << rep.nodes << '\n';
    f << "simplex_iterations " << rep.simplex_iterations << '\n';
    for (const std::string& w : rep.warnings) f << "warning " << w << '\n';
  }

  if (!rep.lp_text.empty()) open_out(base / "model.lp") << rep.lp_text;
}

namespace {

void cost_columns(std::ofstream& f, const SolutionReport& r) {
  f << fmt(r.net_revenue) << ',' << fmt(r.revenue) << ',' << fmt(r.operating_cost) << ','
    << fmt(r.energy_cost) << ',' << fmt(r.comfort_loss) << ',' << fmt(r.total_cost) << ','
    << r.status << '\n';
}

}  // namespace

void write_modes_summary(const std::string& csv_path, const std::vector<SolutionReport>& rows) {
  std::ofstream f = open_out(csv_path);
  f << "mode,net_revenue,revenue,operating_cost,energy_cost,comfort_loss,total_cost,status\n";
  for (const SolutionReport& r : rows) {
    f << r.mode << ',';
    cost_columns(f, r);
  }
}

void write_sweep_summary(const std::string& csv_path, const std::vector<SweepRow>& rows) {
  std::ofstream f = open_out(csv_path);
  f << "k,net_revenue,revenue,operating_cost,energy_cost,comfort_loss,total_cost,status\n";
  for (const SweepRow& r : rows) {
    f << fmt(r.k) << ',';
    cost_columns(f, r.report);
  }
}

void write_verify_dir(const std::string& dir, const VerifyResult& vr) {
  fs::create_directories(dir);
  const fs::path base = dir;
  {
    std::ofstream f = open_out(base / "verdict.txt");
    f << (vr.verdict.pass ? "PASS" : "FAIL") << '\n';
    f << "milp_objective " << fmt(vr.verdict.milp_objective) << '\n';
    f << "oracle_objective " << fmt(vr.verdict.oracle_objective) << '\n';
    f << "abs_deviation " << fmt(vr.verdict.abs_dev) << '\n';
    f << "rel_deviation " << fmt(vr.verdict.rel_dev) << '\n';
    if (!vr.verdict.message.empty()) f << "note " << vr.verdict.message << '\n';
  }
  {
    std::ofstream f = open_out(base / "oracle_table.csv");
    f << "tier_e,tier_h,kappa_e,kappa_h,feasible,follower_cost,leader_profit\n";
    auto joined = [](const auto& v, auto fmt1) {
      std::string s;
      for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) s += ';';
        s += fmt1(v[i]);
      }
      return s;
    };
    for (const oracle::OracleEntry& e : vr.table.table) {
      f << joined(e.tier_e, [](int v) { return std::to_string(v); }) << ','
        << joined(e.tier_h, [](int v) { return std::to_string(v); }) << ','
        << joined(e.kappa_e, fmt) << ',' << joined(e.kappa_h, fmt) << ','
        << (e.feasible ? 1 : 0) << ',' << fmt(e.follower_cost) << ',' << fmt(e.leader_profit)
        << '\n';
    }
  }
}

}  // namespace stackheat::runner
