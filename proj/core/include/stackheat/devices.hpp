#pragma once

#include <string>
#include <vector>

#include "stackheat/thermal.hpp"

// Supply fleet, tariff structure and the full scenario container, plus the
// exact (quadratic) cost and revenue evaluators used for reporting and as the
// ground truth the optimization layers approximate.
// Units: kW, kWh, hours, currency units per kWh.

namespace stackheat::devices {

struct ChpUnit {
  std::string name = "chp";
  double cost_a = 0.0;  // quadratic fuel coefficient on p + cv_ratio * h
  double cost_b = 0.0;
  double cost_c = 0.0;
  double cv_ratio = 0.0;  // heat-to-power equivalence in the fuel argument
  double p_min_kW = 0.0, p_max_kW = 0.0;
  double h_min_kW = 0.0, h_max_kW = 0.0;
  double ramp_kW_per_h = 0.0;  // bound on |p[t+1] - p[t]|
  double reserve_cost = 0.0;   // per kW of reserve held
};

struct ConUnit {
  std::string name = "con";
  double cost_a = 0.0;
  double cost_b = 0.0;
  double cost_c = 0.0;
  double p_min_kW = 0.0, p_max_kW = 0.0;
  double ramp_kW_per_h = 0.0;
  double reserve_cost = 0.0;
};

enum class StorageKind { Electric, Thermal };

struct Storage {
  std::string name = "storage";
  StorageKind kind = StorageKind::Electric;
  double capacity_kWh = 0.0;
  double p_charge_max_kW = 0.0;
  double p_discharge_max_kW = 0.0;
  double eta_charge = 1.0;
  double eta_discharge = 1.0;
  double soc_init_kWh = 0.0;
  double soc_min_kWh = 0.0;
  double soc_max_kWh = 0.0;
  double cycling_cost = 0.0;  // per kW moved in either direction
  double reserve_cost = 0.0;  // per kW of reserve held (electric storage only)
};

struct ElectricBoiler {
  std::string name = "boiler";
  double p_max_kW = 0.0;
  double eta_eb = 1.0;  // heat out per electric in
};

enum class RenewKind { Wind, PV };

struct Renewable {
  std::string name = "renewable";
  RenewKind kind = RenewKind::Wind;
  std::vector<double> availability_profile_kW;
  double curtail_penalty = 0.0;  // per kW spilled
};

// Tiered tariff: tier_count uniform grid points on [kappa_min, kappa_max];
// the daily mean must stay near kappa_mean.
struct PriceSpec {
  double kappa_min = 0.0;
  double kappa_max = 0.0;
  double kappa_mean = 0.0;
  int tier_count = 2;

  double grid_step() const;
  std::vector<double> grid() const;  // tier_count ascending values
};

struct Scenario {
  int horizon_T = 24;
  double dt_s = 3600.0;

  std::vector<double> outdoor_temp_profile_C;
  std::vector<double> base_electric_load_kW;

  thermal::BuildingZone residential_zone;
  thermal::BuildingZone public_zone;
  thermal::ComfortPolicy comfort;
  double residential_share = 0.5;  // share of total reference heat demand

  std::vector<ChpUnit> chp_units;
  std::vector<ConUnit> con_units;
  std::vector<Storage> storages;
  std::vector<ElectricBoiler> boilers;
  std::vector<Renewable> renewables;

  PriceSpec electric_price;
  PriceSpec heat_price;

  double comfort_penalty_psi = 0.0;        // weight on squared heat-deviation
  std::vector<double> cut_max_profile_kW;  // per-hour max electric curtailment
  double shift_max_kW = 0.0;               // symmetric per-hour shift bound
  double reserve_fraction = 0.05;          // reserve requirement vs base load
  double price_mean_tolerance = 0.0;       // 0 = auto: grid step / horizon

  double dt_hours() const { return dt_s / 3600.0; }
  // Effective tolerance on |sum(kappa) - T*kappa_mean| for one commodity.
  double mean_tolerance(const PriceSpec& spec) const;
};

// Hourly dispatch series for the fleet; outer index = unit, inner = hour.
// soc series have horizon_T + 1 entries (state before hour 0 first).
struct Dispatch {
  std::vector<std::vector<double>> chp_p, chp_h;
  std::vector<std::vector<double>> con_p;
  std::vector<double> eb_p;
  std::vector<std::vector<double>> sto_charge, sto_discharge, soc;
  std::vector<std::vector<double>> ren_injected, ren_curtailed;
  std::vector<std::vector<double>> reserve;  // one series per reserve provider:
                                             // all CHPs, then CONs, then electric storages
};

struct CostBreakdown {
  double fuel = 0.0;
  double cycling = 0.0;
  double reserve = 0.0;
  double curtailment = 0.0;
  double total() const { return fuel + cycling + reserve + curtailment; }
};

// Quadratic fuel cost of a CHP at one hour: a*(p + cv*h)^2 + b*(p + cv*h) + c.
double chp_fuel_cost(const ChpUnit& unit, double p_kW, double h_kW);

// Quadratic fuel cost of a conventional unit: a*p^2 + b*p + c.
double con_fuel_cost(const ConUnit& unit, double p_kW);

// Exact operating cost of a dispatch: fuel (times dt in hours) plus storage
// cycling, reserve holding and curtailment penalties. Throws
// std::invalid_argument when series shapes disagree with the scenario.
CostBreakdown operating_cost(const Scenario& scenario, const Dispatch& dispatch);

// Seller revenue sum(kappa_e*P_L + kappa_h*(H_res + H_pub)) over the horizon.
double revenue(const std::vector<double>& kappa_e, const std::vector<double>& kappa_h,
               const std::vector<double>& electric_load_kW,
               const std::vector<double>& heat_res_kW, const std::vector<double>& heat_pub_kW);

struct Violation {
  std::string field;
  std::string message;
};

// Exhaustive validation: returns every violated rule (empty = valid).
// Data, not exceptions: callers decide what is fatal.
std::vector<Violation> validate_scenario(const Scenario& scenario);

}  // namespace stackheat::devices
