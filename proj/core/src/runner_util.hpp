#pragma once

#include "stackheat/devices.hpp"
#include "stackheat/thermal.hpp"

// Helpers shared between scenario generation, file I/O and the sweep.

namespace stackheat::runner {

// Residential share of total steady-state reference heat demand at the
// neutral temperatures.
inline double reference_share(const devices::Scenario& sc) {
  double tot[2] = {0.0, 0.0};
  const thermal::BuildingZone* zones[2] = {&sc.residential_zone, &sc.public_zone};
  for (int z = 0; z < 2; ++z) {
    auto href = thermal::comfort_reference_loads(*zones[z], sc.outdoor_temp_profile_C,
                                                 sc.horizon_T, sc.dt_s);
    for (double v : href) tot[z] += v;
  }
  const double sum = tot[0] + tot[1];
  return sum > 0.0 ? tot[0] / sum : 0.5;
}

}  // namespace stackheat::runner
