#include "stackheat/thermal.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace stackheat::thermal {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw std::domain_error(what);
}

}  // namespace

double BuildingZone::heat_capacity_J_per_K() const {
  return air_specific_heat_J_per_kgK * air_density_kg_per_m3 * volume_m3;
}

double BuildingZone::loss_conductance_W_per_K() const {
  return loss_coeff_W_per_m2K * surface_area_m2;
}

void BuildingZone::validate() const {
  require(surface_area_m2 > 0.0, "zone surface area must be positive");
  require(volume_m3 > 0.0, "zone volume must be positive");
  require(loss_coeff_W_per_m2K > 0.0, "zone loss coefficient must be positive");
  require(air_specific_heat_J_per_kgK > 0.0, "air specific heat must be positive");
  require(air_density_kg_per_m3 > 0.0, "air density must be positive");
  require(metabolic_rate_W_per_m2 > 0.0, "metabolic rate must be positive");
  require(clothing_insulation_clo >= 0.0, "clothing insulation must be non-negative");
  require(skin_temp_C > -50.0 && skin_temp_C < 60.0, "skin temperature out of range");
}

ComfortPolicy::ComfortPolicy() : working_hours(default_working_hours()) {}

std::set<int> ComfortPolicy::default_working_hours() {
  std::set<int> hours;
  for (int h = 8; h <= 21; ++h) hours.insert(h);
  return hours;
}

void ComfortPolicy::validate() const {
  auto check_band = [](const std::pair<double, double>& band, const char* name) {
    require(band.first <= band.second, std::string(name) + " band is inverted");
    require(band.first >= -3.0 && band.second <= 3.0,
            std::string(name) + " band outside the comfort scale [-3, 3]");
  };
  check_band(pmv_band_working, "working");
  check_band(pmv_band_offhours, "off-hours");
  check_band(pmv_band_public, "public");
  for (int h : working_hours) require(h >= 0 && h <= 23, "working hour outside 0..23");
}

double body_coefficient(double surface_area_m2, double volume_m3) {
  require(surface_area_m2 > 0.0, "surface area must be positive");
  require(volume_m3 > 0.0, "volume must be positive");
  return surface_area_m2 / volume_m3;
}

double pmv(double indoor_temp_C, const BuildingZone& zone) {
  const double denom = zone.metabolic_rate_W_per_m2 * (zone.clothing_insulation_clo + 0.1);
  require(denom > 0.0, "metabolic rate and clothing insulation imply a zero denominator");
  return 2.43 - 3.76 * (zone.skin_temp_C - indoor_temp_C) / denom;
}

double temp_from_pmv(double pmv_value, const BuildingZone& zone) {
  require(pmv_value >= -3.0 && pmv_value <= 3.0, "comfort index outside [-3, 3]");
  const double denom = zone.metabolic_rate_W_per_m2 * (zone.clothing_insulation_clo + 0.1);
  require(denom > 0.0, "metabolic rate and clothing insulation imply a zero denominator");
  return zone.skin_temp_C - (2.43 - pmv_value) * denom / 3.76;
}

TempBandSchedule comfort_band_schedule(const BuildingZone& zone, const ComfortPolicy& policy,
                                       int mode, int horizon_T) {
  require(horizon_T >= 1, "horizon must be at least one hour");
  if (mode < 1 || mode > 5) throw std::invalid_argument("unknown operating mode " + std::to_string(mode));
  policy.validate();
  zone.validate();

  const double t_neutral = temp_from_pmv(0.0, zone);
  const bool residential = zone.zone_kind == ZoneKind::Residential;

  // Whether this zone's temperature is pinned at the neutral point for the mode.
  const bool pinned = (mode == 2) || (mode == 3 && !residential) || (mode == 4 && residential);

  TempBandSchedule schedule;
  schedule.hours.reserve(static_cast<size_t>(horizon_T));
  for (int t = 0; t < horizon_T; ++t) {
    const int hour_of_day = t % 24;
    const bool working = policy.working_hours.count(hour_of_day) > 0;
    TempBand band;
    if (pinned) {
      band.t_min_C = band.t_max_C = t_neutral;
      band.fixed = true;
    } else if (residential) {
      const auto& pmv_band = working ? policy.pmv_band_working : policy.pmv_band_offhours;
      band.t_min_C = temp_from_pmv(pmv_band.first, zone);
      band.t_max_C = temp_from_pmv(pmv_band.second, zone);
    } else if (mode == 5 && !working) {
      // Public buildings out of working hours: statutory duty floor only.
      band.t_min_C = zone.duty_min_temp_C;
      band.t_max_C = temp_from_pmv(policy.pmv_band_public.second, zone);
    } else {
      band.t_min_C = temp_from_pmv(policy.pmv_band_public.first, zone);
      band.t_max_C = temp_from_pmv(policy.pmv_band_public.second, zone);
    }
    if (band.t_min_C > band.t_max_C) {
      throw std::invalid_argument("empty temperature band at hour " + std::to_string(t));
    }
    schedule.hours.push_back(band);
  }
  return schedule;
}

double heat_power_for_transition(double t_in_now_C, double t_in_next_C, double t_out_now_C,
                                 const BuildingZone& zone, double dt_s) {
  require(dt_s > 0.0, "time step must be positive");
  const double cap = zone.heat_capacity_J_per_K();
  const double loss = zone.loss_conductance_W_per_K();
  return cap * (t_in_next_C - t_in_now_C) / dt_s + loss * (t_in_now_C - t_out_now_C);
}

std::vector<double> comfort_reference_loads(const BuildingZone& zone,
                                            const std::vector<double>& outdoor_temp_C,
                                            int horizon_T, double dt_s) {
  require(horizon_T >= 1, "horizon must be at least one hour");
  if (static_cast<int>(outdoor_temp_C.size()) < horizon_T) {
    throw std::invalid_argument("outdoor temperature profile shorter than horizon");
  }
  const double t_ref = temp_from_pmv(0.0, zone);
  std::vector<double> loads(static_cast<size_t>(horizon_T));
  loads[0] = heat_power_for_transition(zone.initial_temp_C, t_ref, outdoor_temp_C[0], zone, dt_s);
  const double loss = zone.loss_conductance_W_per_K();
  for (int t = 1; t < horizon_T; ++t) {
    loads[static_cast<size_t>(t)] = loss * (t_ref - outdoor_temp_C[static_cast<size_t>(t)]);
  }
  return loads;
}

}  // namespace stackheat::thermal
