#include <cmath>
#include <cstdint>
#include <stdexcept>

#include "stackheat/runner.hpp"
#include "stackheat/thermal.hpp"

#include "runner_util.hpp"

// Seeded synthetic scenarios. All randomness comes from one splitmix64
// stream, so a seed fixes every byte of the result on every platform.

namespace stackheat::runner {

namespace {

uint64_t splitmix64(uint64_t& state) {
  state += 0x9e3779b97f4a7c15ull;
  uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

struct Rng {
  uint64_t state;
  explicit Rng(uint64_t seed) : state(seed) {}
  double unit() { return static_cast<double>(splitmix64(state) >> 11) * 0x1.0p-53; }
  double range(double lo, double hi) { return lo + (hi - lo) * unit(); }
  long long integer(long long lo, long long hi) {  // inclusive
    return lo + static_cast<long long>(splitmix64(state) % static_cast<uint64_t>(hi - lo + 1));
  }
};

double gauss_bump(double h, double center, double width) {
  const double d = (h - center) / width;
  return std::exp(-0.5 * d * d);
}

thermal::BuildingZone make_zone(thermal::ZoneKind kind, double surface_m2, double volume_m3,
                                double loss_coeff) {
  thermal::BuildingZone z;
  z.zone_kind = kind;
  z.surface_area_m2 = surface_m2;
  z.volume_m3 = volume_m3;
  z.loss_coeff_W_per_m2K = loss_coeff;
  z.initial_temp_C = thermal::temp_from_pmv(0.0, z);
  return z;
}

// A tier grid [kmin, kmax] with J tiers reaches daily means of the form
// kmin + k*step/T only; snap the mean onto that lattice.
devices::PriceSpec lattice_price(double kmin, double kmax, int tiers, int T, long long lattice_k) {
  devices::PriceSpec p;
  p.kappa_min = kmin;
  p.kappa_max = kmax;
  p.tier_count = tiers;
  const double step = (kmax - kmin) / (tiers - 1);
  p.kappa_mean = kmin + static_cast<double>(lattice_k) * step / T;
  return p;
}

}  // namespace

devices::Scenario generate_scenario(unsigned long long seed, const GenSpec& spec) {
  if (spec.horizon_T < 2) throw std::invalid_argument("generate: horizon must be at least 2");
  if (spec.tiers < 2) throw std::invalid_argument("generate: at least two tiers required");
  Rng rng(0x5741434b ^ seed);

  devices::Scenario sc;
  sc.horizon_T = spec.horizon_T;
  sc.dt_s = 3600.0;
  const int T = sc.horizon_T;

  // Cold winter day: minimum near 05:00, single daily swing.
  const double t_mean = rng.range(-10.0, -8.0);
  const double t_amp = rng.range(5.0, 7.0);
  for (int t = 0; t < T; ++t) {
    const double h = static_cast<double>(t % 24);
    const double v = t_mean + t_amp * std::sin(2.0 * M_PI * (h - 11.0) / 24.0);
    sc.outdoor_temp_profile_C.push_back(v + rng.range(-0.3, 0.3));
  }

  // Double-peak electric load: morning and evening bumps on a base.
  const double base = rng.range(850.0, 950.0);
  const double peak_am = rng.range(350.0, 450.0);
  const double peak_pm = rng.range(400.0, 500.0);
  for (int t = 0; t < T; ++t) {
    const double h = static_cast<double>(t % 24);
    double v = base + peak_am * gauss_bump(h, 9.0, 2.2) + peak_pm * gauss_bump(h, 19.0, 2.5);
    v *= rng.range(0.98, 1.02);
    sc.base_electric_load_kW.push_back(v);
  }

  sc.residential_zone =
      make_zone(thermal::ZoneKind::Residential, 273000.0, 682500.0, 0.15);
  sc.public_zone = make_zone(thermal::ZoneKind::Public, 273000.0, 1365000.0, 0.15);

  devices::ChpUnit chp1;
  chp1.name = "chp1";
  chp1.cost_a = 6e-5;
  chp1.cost_b = 0.28;
  chp1.cost_c = 28.0;
  chp1.cv_ratio = 0.15;
  chp1.p_min_kW = 200.0;
  chp1.p_max_kW = 2000.0;
  chp1.h_min_kW = 0.0;
  chp1.h_max_kW = 1500.0;
  chp1.ramp_kW_per_h = 900.0;
  chp1.reserve_cost = 0.02;
  sc.chp_units.push_back(chp1);

  devices::ChpUnit chp2;
  chp2.name = "chp2";
  chp2.cost_a = 7e-5;
  chp2.cost_b = 0.26;
  chp2.cost_c = 25.0;
  chp2.cv_ratio = 0.18;
  chp2.p_min_kW = 150.0;
  chp2.p_max_kW = 1600.0;
  chp2.h_min_kW = 0.0;
  chp2.h_max_kW = 1200.0;
  chp2.ramp_kW_per_h = 800.0;
  chp2.reserve_cost = 0.022;
  sc.chp_units.push_back(chp2);

  devices::ConUnit con1;
  con1.name = "con1";
  con1.cost_a = 9e-5;
  con1.cost_b = 0.34;
  con1.cost_c = 20.0;
  con1.p_min_kW = 100.0;
  con1.p_max_kW = 1500.0;
  con1.ramp_kW_per_h = 700.0;
  con1.reserve_cost = 0.018;
  sc.con_units.push_back(con1);

  devices::Storage bat;
  bat.name = "battery";
  bat.kind = devices::StorageKind::Electric;
  bat.capacity_kWh = 2000.0;
  bat.p_charge_max_kW = 500.0;
  bat.p_discharge_max_kW = 500.0;
  bat.eta_charge = 0.95;
  bat.eta_discharge = 0.95;
  bat.soc_init_kWh = 1000.0;
  bat.soc_min_kWh = 200.0;
  bat.soc_max_kWh = 1900.0;
  bat.cycling_cost = 0.012;
  bat.reserve_cost = 0.01;
  sc.storages.push_back(bat);

  devices::Storage tank;
  tank.name = "heat_tank";
  tank.kind = devices::StorageKind::Thermal;
  tank.capacity_kWh = 3000.0;
  tank.p_charge_max_kW = 800.0;
  tank.p_discharge_max_kW = 800.0;
  tank.eta_charge = 0.93;
  tank.eta_discharge = 0.93;
  tank.soc_init_kWh = 1500.0;
  tank.soc_min_kWh = 300.0;
  tank.soc_max_kWh = 2850.0;
  tank.cycling_cost = 0.006;
  tank.reserve_cost = 0.0;
  sc.storages.push_back(tank);

  devices::ElectricBoiler eb;
  eb.name = "boiler";
  eb.p_max_kW = 400.0;
  eb.eta_eb = 0.98;
  sc.boilers.push_back(eb);

  // Wind peaks in the small hours, anti-correlated with daytime.
  devices::Renewable wind;
  wind.name = "wind";
  wind.kind = devices::RenewKind::Wind;
  const double wind_base = rng.range(250.0, 350.0);
  for (int t = 0; t < T; ++t) {
    const double h = static_cast<double>(t % 24);
    double v = wind_base * (1.0 + 0.5 * std::cos(2.0 * M_PI * (h - 3.0) / 24.0));
    v *= rng.range(0.9, 1.1);
    wind.availability_profile_kW.push_back(v);
  }
  wind.curtail_penalty = 0.05;
  sc.renewables.push_back(wind);

  // PV exists only in daylight hours 6..19.
  devices::Renewable pv;
  pv.name = "pv";
  pv.kind = devices::RenewKind::PV;
  const double pv_cap = rng.range(350.0, 450.0);
  for (int t = 0; t < T; ++t) {
    const int h = t % 24;
    double v = 0.0;
    if (h >= 6 && h <= 19) {
      const double s = std::sin(M_PI * (h - 6.0) / 14.0);
      v = pv_cap * s * s * rng.range(0.92, 1.0);
    }
    pv.availability_profile_kW.push_back(v);
  }
  pv.curtail_penalty = 0.05;
  sc.renewables.push_back(pv);

  // Mean on the lattice: T*kmin + k*step sums are the only reachable ones.
  // The midpoint index keeps the mean inside [kmin, kmax] for any horizon.
  const long long mid_k = static_cast<long long>(T) * (spec.tiers - 1) / 2;
  sc.electric_price = lattice_price(0.42, 0.78, spec.tiers, T, mid_k);
  sc.heat_price = lattice_price(0.28, 0.52, spec.tiers, T, mid_k);

  sc.comfort_penalty_psi = 5e-4;
  for (int t = 0; t < T; ++t) sc.cut_max_profile_kW.push_back(0.05 * sc.base_electric_load_kW[t]);
  sc.shift_max_kW = 120.0;
  sc.reserve_fraction = 0.05;
  sc.residential_share = reference_share(sc);
  return sc;
}

devices::Scenario generate_tiny(unsigned long long seed, int horizon_T, int tiers) {
  if (horizon_T < 1) throw std::invalid_argument("generate: horizon must be at least 1");
  if (tiers < 2) throw std::invalid_argument("generate: at least two tiers required");
  Rng rng(0x414e5453ull ^ (seed * 0x100000001b3ull));

  devices::Scenario sc;
  sc.horizon_T = horizon_T;
  sc.dt_s = 3600.0;
  const int T = horizon_T;

  const double t_out = rng.range(-8.0, -2.0);
  for (int t = 0; t < T; ++t)
    sc.outdoor_temp_profile_C.push_back(t_out + rng.range(-2.0, 2.0));
  for (int t = 0; t < T; ++t)
    sc.base_electric_load_kW.push_back(rng.range(850.0, 1150.0));

  const double loss = rng.range(4.0, 6.0);  // U around 4..6 kW/K per zone
  sc.residential_zone = make_zone(thermal::ZoneKind::Residential, 1000.0, 59700.0, loss);
  sc.public_zone = make_zone(thermal::ZoneKind::Public, 1000.0, 59700.0, loss);

  devices::ChpUnit chp;
  chp.name = "chp1";
  chp.cost_a = rng.range(3e-4, 6e-4);
  chp.cost_b = rng.range(0.15, 0.22);
  chp.cost_c = rng.range(8.0, 15.0);
  chp.cv_ratio = rng.range(0.12, 0.2);
  chp.p_min_kW = 0.0;
  chp.p_max_kW = rng.range(1300.0, 1800.0);
  chp.h_min_kW = 0.0;
  chp.h_max_kW = rng.range(1000.0, 1400.0);
  chp.ramp_kW_per_h = rng.range(700.0, 1000.0);
  chp.reserve_cost = 0.02;
  sc.chp_units.push_back(chp);

  devices::ConUnit con;
  con.name = "con1";
  con.cost_a = rng.range(2e-4, 5e-4);
  con.cost_b = rng.range(0.2, 0.3);
  con.cost_c = rng.range(6.0, 12.0);
  con.p_min_kW = 0.0;
  con.p_max_kW = rng.range(1000.0, 1400.0);
  con.ramp_kW_per_h = rng.range(600.0, 900.0);
  con.reserve_cost = 0.015;
  sc.con_units.push_back(con);

  const auto seeded_price = [&](double lo_min, double lo_max, double span_min,
                                double span_max) {
    const double kmin = rng.range(lo_min, lo_max);
    const double kmax = kmin + rng.range(span_min, span_max);
    const long long lattice_max = static_cast<long long>(T) * (tiers - 1);
    const long long k = rng.integer(lattice_max / 3, (2 * lattice_max) / 3);
    return lattice_price(kmin, kmax, tiers, T, k);
  };
  sc.electric_price = seeded_price(0.35, 0.45, 0.3, 0.5);
  sc.heat_price = seeded_price(0.2, 0.3, 0.2, 0.35);

  sc.comfort_penalty_psi = rng.range(3e-4, 8e-4);
  const double cut = rng.range(30.0, 60.0);
  for (int t = 0; t < T; ++t) sc.cut_max_profile_kW.push_back(cut);
  sc.shift_max_kW = rng.range(80.0, 150.0);
  sc.reserve_fraction = 0.05;
  sc.residential_share = reference_share(sc);
  return sc;
}

}  // namespace stackheat::runner
