#include "stackheat/devices.hpp"

#include <cmath>
#include <stdexcept>

namespace stackheat::devices {

double PriceSpec::grid_step() const {
  if (tier_count < 2) return 0.0;
  return (kappa_max - kappa_min) / static_cast<double>(tier_count - 1);
}

std::vector<double> PriceSpec::grid() const {
  std::vector<double> values(static_cast<size_t>(tier_count > 0 ? tier_count : 0));
  const double step = grid_step();
  for (int j = 0; j < tier_count; ++j) values[static_cast<size_t>(j)] = kappa_min + step * j;
  return values;
}

double Scenario::mean_tolerance(const PriceSpec& spec) const {
  if (price_mean_tolerance > 0.0) return price_mean_tolerance;
  const double step = spec.grid_step();
  const double horizon = horizon_T > 0 ? static_cast<double>(horizon_T) : 1.0;
  const double tol = step / horizon;
  return tol > 0.0 ? tol : 1e-12;
}

double chp_fuel_cost(const ChpUnit& unit, double p_kW, double h_kW) {
  const double g = p_kW + unit.cv_ratio * h_kW;
  return unit.cost_a * g * g + unit.cost_b * g + unit.cost_c;
}

double con_fuel_cost(const ConUnit& unit, double p_kW) {
  return unit.cost_a * p_kW * p_kW + unit.cost_b * p_kW + unit.cost_c;
}

namespace {

void require_shape(bool ok, const std::string& what) {
  if (!ok) throw std::invalid_argument("dispatch shape: " + what);
}

void require_series(const std::vector<std::vector<double>>& series, size_t units, size_t hours,
                    const std::string& name) {
  require_shape(series.size() == units, name + " has wrong unit count");
  for (const auto& row : series) {
    require_shape(row.size() == hours, name + " has wrong horizon length");
  }
}

}  // namespace

CostBreakdown operating_cost(const Scenario& scenario, const Dispatch& dispatch) {
  const size_t T = static_cast<size_t>(scenario.horizon_T);
  const size_t n_chp = scenario.chp_units.size();
  const size_t n_con = scenario.con_units.size();
  const size_t n_sto = scenario.storages.size();
  const size_t n_ren = scenario.renewables.size();
  size_t n_elec_sto = 0;
  for (const auto& s : scenario.storages) {
    if (s.kind == StorageKind::Electric) ++n_elec_sto;
  }

  require_series(dispatch.chp_p, n_chp, T, "chp_p");
  require_series(dispatch.chp_h, n_chp, T, "chp_h");
  require_series(dispatch.con_p, n_con, T, "con_p");
  require_series(dispatch.sto_charge, n_sto, T, "sto_charge");
  require_series(dispatch.sto_discharge, n_sto, T, "sto_discharge");
  require_series(dispatch.ren_injected, n_ren, T, "ren_injected");
  require_series(dispatch.ren_curtailed, n_ren, T, "ren_curtailed");
  require_series(dispatch.reserve, n_chp + n_con + n_elec_sto, T, "reserve");
  if (!scenario.boilers.empty()) {
    require_shape(dispatch.eb_p.size() == T, "eb_p has wrong horizon length");
  }

  const double dt_h = scenario.dt_hours();
  CostBreakdown out;

  for (size_t t = 0; t < T; ++t) {
    double fuel = 0.0;
    for (size_t n = 0; n < n_chp; ++n) {
      fuel += chp_fuel_cost(scenario.chp_units[n], dispatch.chp_p[n][t], dispatch.chp_h[n][t]);
    }
    for (size_t m = 0; m < n_con; ++m) {
      fuel += con_fuel_cost(scenario.con_units[m], dispatch.con_p[m][t]);
    }
    out.fuel += fuel * dt_h;

    for (size_t l = 0; l < n_sto; ++l) {
      out.cycling += scenario.storages[l].cycling_cost *
                     (dispatch.sto_charge[l][t] + dispatch.sto_discharge[l][t]);
    }

    size_t k = 0;
    for (size_t n = 0; n < n_chp; ++n, ++k) {
      out.reserve += scenario.chp_units[n].reserve_cost * dispatch.reserve[k][t];
    }
    for (size_t m = 0; m < n_con; ++m, ++k) {
      out.reserve += scenario.con_units[m].reserve_cost * dispatch.reserve[k][t];
    }
    for (size_t l = 0; l < n_sto; ++l) {
      if (scenario.storages[l].kind != StorageKind::Electric) continue;
      out.reserve += scenario.storages[l].reserve_cost * dispatch.reserve[k][t];
      ++k;
    }

    for (size_t s = 0; s < n_ren; ++s) {
      out.curtailment += scenario.renewables[s].curtail_penalty * dispatch.ren_curtailed[s][t];
    }
  }
  return out;
}

double revenue(const std::vector<double>& kappa_e, const std::vector<double>& kappa_h,
               const std::vector<double>& electric_load_kW,
               const std::vector<double>& heat_res_kW, const std::vector<double>& heat_pub_kW) {
  const size_t T = kappa_e.size();
  if (kappa_h.size() != T || electric_load_kW.size() != T || heat_res_kW.size() != T ||
      heat_pub_kW.size() != T) {
    throw std::invalid_argument("revenue series lengths disagree");
  }
  double total = 0.0;
  for (size_t t = 0; t < T; ++t) {
    total += kappa_e[t] * electric_load_kW[t] + kappa_h[t] * (heat_res_kW[t] + heat_pub_kW[t]);
  }
  return total;
}

namespace {

struct Checker {
  std::vector<Violation> out;
  void check(bool ok, const std::string& field, const std::string& message) {
    if (!ok) out.push_back({field, message});
  }
};

void check_price(Checker& c, const PriceSpec& spec, const Scenario& s, const std::string& field) {
  c.check(spec.tier_count >= 2, field + ".tier_count", "at least two tiers required");
  c.check(spec.kappa_min >= 0.0, field + ".kappa_min", "prices must be non-negative");
  c.check(spec.kappa_min <= spec.kappa_mean && spec.kappa_mean <= spec.kappa_max,
          field + ".kappa_mean", "mean price must lie between the min and max price");
  if (spec.tier_count >= 2 && spec.kappa_max >= spec.kappa_min && s.horizon_T >= 1) {
    // The mean constraint must be reachable on the tier grid: total price mass
    // sits on a lattice kappa_min*T + step*q, q integer in [0, T*(tiers-1)].
    const double step = spec.grid_step();
    const double tol = s.mean_tolerance(spec);
    const double target = static_cast<double>(s.horizon_T) * spec.kappa_mean;
    double best;
    if (step <= 0.0) {
      best = std::abs(target - s.horizon_T * spec.kappa_min);
    } else {
      const double q = (target - s.horizon_T * spec.kappa_min) / step;
      const double q_max = static_cast<double>(s.horizon_T) * (spec.tier_count - 1);
      double q_near = std::round(q);
      if (q_near < 0.0) q_near = 0.0;
      if (q_near > q_max) q_near = q_max;
      best = std::abs(q - q_near) * step;
    }
    c.check(best <= tol + 1e-12, field + ".kappa_mean",
            "tier grid cannot meet the mean-price constraint within tolerance");
  }
}

}  // namespace

std::vector<Violation> validate_scenario(const Scenario& s) {
  Checker c;
  c.check(s.horizon_T >= 1, "horizon_T", "horizon must be at least one hour");
  c.check(s.dt_s > 0.0, "dt_s", "time step must be positive");

  const size_t T = s.horizon_T >= 1 ? static_cast<size_t>(s.horizon_T) : 0;
  auto check_profile = [&](const std::vector<double>& p, const std::string& field) {
    c.check(p.size() >= T && T > 0, field, "profile shorter than the horizon");
  };
  check_profile(s.outdoor_temp_profile_C, "outdoor_temp_profile_C");
  check_profile(s.base_electric_load_kW, "base_electric_load_kW");
  check_profile(s.cut_max_profile_kW, "cut_max_profile_kW");
  for (size_t t = 0; t < std::min(T, s.base_electric_load_kW.size()); ++t) {
    c.check(s.base_electric_load_kW[t] >= 0.0, "base_electric_load_kW",
            "base load must be non-negative at hour " + std::to_string(t));
  }
  for (size_t t = 0; t < std::min(T, s.cut_max_profile_kW.size()); ++t) {
    c.check(s.cut_max_profile_kW[t] >= 0.0, "cut_max_profile_kW",
            "max curtailment must be non-negative at hour " + std::to_string(t));
  }

  try {
    s.residential_zone.validate();
  } catch (const std::exception& e) {
    c.out.push_back({"residential_zone", e.what()});
  }
  try {
    s.public_zone.validate();
  } catch (const std::exception& e) {
    c.out.push_back({"public_zone", e.what()});
  }
  try {
    s.comfort.validate();
  } catch (const std::exception& e) {
    c.out.push_back({"comfort", e.what()});
  }
  c.check(s.residential_zone.zone_kind == thermal::ZoneKind::Residential, "residential_zone",
          "zone kind must be residential");
  c.check(s.public_zone.zone_kind == thermal::ZoneKind::Public, "public_zone",
          "zone kind must be public");
  c.check(s.residential_share > 0.0 && s.residential_share < 1.0, "residential_share",
          "residential share must lie strictly between 0 and 1");

  c.check(!s.chp_units.empty(), "chp_units", "at least one CHP unit required");
  for (size_t n = 0; n < s.chp_units.size(); ++n) {
    const auto& u = s.chp_units[n];
    const std::string f = "chp_units[" + std::to_string(n) + "]";
    c.check(u.cost_a >= 0.0, f + ".cost_a", "quadratic fuel coefficient must be non-negative");
    c.check(u.cv_ratio >= 0.0, f + ".cv_ratio", "heat equivalence ratio must be non-negative");
    c.check(u.p_min_kW >= 0.0 && u.p_min_kW <= u.p_max_kW, f + ".p_min_kW",
            "electric output box is inverted or negative");
    c.check(u.h_min_kW >= 0.0 && u.h_min_kW <= u.h_max_kW, f + ".h_min_kW",
            "heat output box is inverted or negative");
    c.check(u.ramp_kW_per_h > 0.0, f + ".ramp_kW_per_h", "ramp limit must be positive");
    c.check(u.reserve_cost >= 0.0, f + ".reserve_cost", "reserve cost must be non-negative");
  }
  for (size_t m = 0; m < s.con_units.size(); ++m) {
    const auto& u = s.con_units[m];
    const std::string f = "con_units[" + std::to_string(m) + "]";
    c.check(u.cost_a >= 0.0, f + ".cost_a", "quadratic fuel coefficient must be non-negative");
    c.check(u.p_min_kW >= 0.0 && u.p_min_kW <= u.p_max_kW, f + ".p_min_kW",
            "electric output box is inverted or negative");
    c.check(u.ramp_kW_per_h > 0.0, f + ".ramp_kW_per_h", "ramp limit must be positive");
    c.check(u.reserve_cost >= 0.0, f + ".reserve_cost", "reserve cost must be non-negative");
  }
  for (size_t l = 0; l < s.storages.size(); ++l) {
    const auto& u = s.storages[l];
    const std::string f = "storages[" + std::to_string(l) + "]";
    c.check(u.capacity_kWh > 0.0, f + ".capacity_kWh", "capacity must be positive");
    c.check(u.p_charge_max_kW >= 0.0, f + ".p_charge_max_kW", "charge limit must be non-negative");
    c.check(u.p_discharge_max_kW >= 0.0, f + ".p_discharge_max_kW",
            "discharge limit must be non-negative");
    c.check(u.eta_charge > 0.0 && u.eta_charge <= 1.0, f + ".eta_charge",
            "charge efficiency must lie in (0, 1]");
    c.check(u.eta_discharge > 0.0 && u.eta_discharge <= 1.0, f + ".eta_discharge",
            "discharge efficiency must lie in (0, 1]");
    c.check(0.0 <= u.soc_min_kWh && u.soc_min_kWh <= u.soc_max_kWh &&
                u.soc_max_kWh <= u.capacity_kWh,
            f + ".soc_min_kWh", "state-of-charge box is inconsistent with capacity");
    c.check(u.soc_min_kWh <= u.soc_init_kWh && u.soc_init_kWh <= u.soc_max_kWh,
            f + ".soc_init_kWh", "initial state of charge outside its box");
    c.check(u.cycling_cost >= 0.0, f + ".cycling_cost", "cycling cost must be non-negative");
    c.check(u.reserve_cost >= 0.0, f + ".reserve_cost", "reserve cost must be non-negative");
  }
  for (size_t b = 0; b < s.boilers.size(); ++b) {
    const auto& u = s.boilers[b];
    const std::string f = "boilers[" + std::to_string(b) + "]";
    c.check(u.p_max_kW >= 0.0, f + ".p_max_kW", "boiler capacity must be non-negative");
    c.check(u.eta_eb > 0.0 && u.eta_eb <= 1.0, f + ".eta_eb",
            "boiler efficiency must lie in (0, 1]");
  }
  for (size_t r = 0; r < s.renewables.size(); ++r) {
    const auto& u = s.renewables[r];
    const std::string f = "renewables[" + std::to_string(r) + "]";
    c.check(u.availability_profile_kW.size() >= T && T > 0, f + ".availability_profile_kW",
            "availability profile shorter than the horizon");
    for (size_t t = 0; t < std::min(T, u.availability_profile_kW.size()); ++t) {
      c.check(u.availability_profile_kW[t] >= 0.0, f + ".availability_profile_kW",
              "availability must be non-negative at hour " + std::to_string(t));
    }
    c.check(u.curtail_penalty >= 0.0, f + ".curtail_penalty",
            "curtailment penalty must be non-negative");
  }

  check_price(c, s.electric_price, s, "electric_price");
  check_price(c, s.heat_price, s, "heat_price");

  c.check(s.comfort_penalty_psi > 0.0, "comfort_penalty_psi",
          "comfort penalty weight must be positive");
  c.check(s.shift_max_kW >= 0.0, "shift_max_kW", "shift bound must be non-negative");
  c.check(s.reserve_fraction >= 0.0, "reserve_fraction",
          "reserve fraction must be non-negative");
  c.check(s.price_mean_tolerance >= 0.0, "price_mean_tolerance",
          "mean-price tolerance must be non-negative");
  return c.out;
}

}  // namespace stackheat::devices
