#pragma once

#include <set>
#include <utility>
#include <vector>

// Building thermal side: PMV comfort model, per-mode temperature bands, and the
// discrete (explicit Euler) heat balance of a lumped single-node zone.
// Units here are SI: W, J, s, degrees C. The market-facing modules convert to kW/h.

namespace stackheat::thermal {

enum class ZoneKind { Residential, Public };

struct BuildingZone {
  ZoneKind zone_kind = ZoneKind::Residential;
  double surface_area_m2 = 0.0;       // heat-exchanging envelope area S
  double volume_m3 = 0.0;             // conditioned air volume V
  double loss_coeff_W_per_m2K = 0.0;  // envelope loss coefficient K
  double air_specific_heat_J_per_kgK = 1005.0;
  double air_density_kg_per_m3 = 1.2;
  double skin_temp_C = 33.5;          // mean skin temperature t_m
  double metabolic_rate_W_per_m2 = 80.0;
  double clothing_insulation_clo = 0.12;  // I_cl
  double duty_min_temp_C = 5.0;       // statutory floor for public buildings off hours
  double initial_temp_C = 20.0;

  double heat_capacity_J_per_K() const;     // C_z = c_air * rho_air * V
  double loss_conductance_W_per_K() const;  // U_z = K * S

  // Throws std::domain_error on non-physical values.
  void validate() const;
};

struct ComfortPolicy {
  std::set<int> working_hours;  // hours of day treated as occupied/working
  std::pair<double, double> pmv_band_working{-1.0, 1.0};
  std::pair<double, double> pmv_band_offhours{-0.5, 0.5};
  std::pair<double, double> pmv_band_public{-0.5, 0.5};

  ComfortPolicy();

  static std::set<int> default_working_hours();  // {8..21}

  void validate() const;  // bands ordered and within [-3, 3]
};

struct TempBand {
  double t_min_C = 0.0;
  double t_max_C = 0.0;
  bool fixed = false;  // true: equality band (t_min == t_max by construction)
};

// One band per hour of the horizon. Band at index t applies to the zone
// temperature reached at the end of hour t (the state T[t+1]).
struct TempBandSchedule {
  std::vector<TempBand> hours;
};

// S/V ratio; the comfort and loss model anchor. Throws std::domain_error
// unless both arguments are positive.
double body_coefficient(double surface_area_m2, double volume_m3);

// Thermal comfort index of an indoor temperature for the zone's occupants.
// Affine in indoor temperature; equals 2.43 exactly at the skin temperature.
double pmv(double indoor_temp_C, const BuildingZone& zone);

// Inverse of pmv(). Throws std::domain_error if pmv_value is outside [-3, 3].
double temp_from_pmv(double pmv_value, const BuildingZone& zone);

// Temperature comfort bands for one zone under operating mode 1..5.
// horizon_T >= 1; hours index maps to hour-of-day via t mod 24.
TempBandSchedule comfort_band_schedule(const BuildingZone& zone, const ComfortPolicy& policy,
                                       int mode, int horizon_T);

// Heat power (W) that moves the zone from T_in_now to T_in_next over one step
// of dt_s seconds with outdoor temperature T_out_now, under the explicit Euler
// discretization of the single-node balance:
//   H = C_z * (T_next - T_now) / dt + U_z * (T_now - T_out).
double heat_power_for_transition(double t_in_now_C, double t_in_next_C, double t_out_now_C,
                                 const BuildingZone& zone, double dt_s);

// Heat-power sequence (W, length horizon_T) that holds the zone at the neutral
// comfort temperature temp_from_pmv(0) at the end of every hour, starting from
// the zone's actual initial temperature. From hour 1 on this is the steady
// state U_z * (T_ref - T_out[t]); hour 0 includes the transition from
// initial_temp_C so that a zone pinned at the neutral temperature needs
// exactly this sequence.
std::vector<double> comfort_reference_loads(const BuildingZone& zone,
                                            const std::vector<double>& outdoor_temp_C,
                                            int horizon_T, double dt_s);

}  // namespace stackheat::thermal
