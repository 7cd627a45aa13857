#pragma once

// Synthetic ground truth the simulated motes sense: a sinusoidal air
// temperature with seasonal drift, damped and lagged soil temperature,
// rain-driven wetting with slower exponential drying, and a photoperiod.

#include <vector>

#include "soilnet/kvconfig.hpp"
#include "soilnet/time.hpp"

namespace soilnet {

struct RainEvent {
  UtcSeconds time{};
  double mm = 0;
};

struct EnvironmentModel {
  UtcSeconds reference_time{};           // seasonal drift is measured from here
  double air_mean_c = 3.0;
  double air_daily_amplitude_c = 5.0;
  double seasonal_drift_c_per_day = 0.0;
  double air_peak_hour_utc = 20.0;       // hour of the daily maximum
  double soil_damping = 0.35;            // amplitude ratio at 10 cm
  double soil_phase_lag_h = 3.0;         // lag at 10 cm
  double box_solar_gain_c = 4.0;         // enclosure heating at full sun

  std::vector<RainEvent> rain;           // sorted by time
  double dry_kpa = 80.0;                 // tension with no recent rain
  double wet_kpa = 10.0;                 // tension at saturation
  double wetting_per_mm = 0.08;          // saturation fraction gained per mm
  double drying_tau_h_per_mm = 6.0;      // drying time constant per mm of rain

  double day_length_h = 10.0;
  double solar_noon_utc_h = 17.0;
  double photo_peak_raw = 900.0;
  double photo_night_raw = 20.0;

  /// Throws std::invalid_argument on negative amplitudes or non-positive time constants.
  void validate() const;

  double air_temp_c(UtcSeconds t) const;
  double soil_temp_c(UtcSeconds t, int depth_cm) const;
  double box_temp_c(UtcSeconds t) const;
  double moisture_kpa(UtcSeconds t) const;
  double photo_raw(UtcSeconds t) const;
  /// Fraction of full sun in [0, 1].
  double daylight(UtcSeconds t) const;
  double rain_mm_on(Date day) const;

  static EnvironmentModel from_config(const KvSection& env, const std::vector<const KvSection*>& rain);
};

}  // namespace soilnet
