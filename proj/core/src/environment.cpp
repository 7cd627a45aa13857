#include "soilnet/environment.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace soilnet {
namespace {

double hours_between(UtcSeconds from, UtcSeconds to) {
  return static_cast<double>((to - from).count()) / 3600.0;
}

double hour_of_day(UtcSeconds t) {
  const auto since_midnight = t - std::chrono::floor<std::chrono::days>(t);
  return static_cast<double>(since_midnight.count()) / 3600.0;
}

}  // namespace

void EnvironmentModel::validate() const {
  if (air_daily_amplitude_c < 0 || box_solar_gain_c < 0) throw std::invalid_argument("amplitudes must be >= 0");
  if (soil_damping < 0 || soil_damping > 1) throw std::invalid_argument("soil_damping must lie in [0, 1]");
  if (!(drying_tau_h_per_mm > 0)) throw std::invalid_argument("drying time constant must be > 0");
  if (wetting_per_mm < 0) throw std::invalid_argument("wetting_per_mm must be >= 0");
  if (!(day_length_h >= 0 && day_length_h <= 24)) throw std::invalid_argument("day_length_h must lie in [0, 24]");
  if (photo_peak_raw < photo_night_raw) throw std::invalid_argument("photo peak below night level");
  for (const RainEvent& r : rain) {
    if (r.mm < 0) throw std::invalid_argument("rain amounts must be >= 0");
  }
  if (!std::is_sorted(rain.begin(), rain.end(), [](const RainEvent& a, const RainEvent& b) { return a.time < b.time; })) {
    throw std::invalid_argument("rain events must be sorted by time");
  }
}

double EnvironmentModel::air_temp_c(UtcSeconds t) const {
  const double days = hours_between(reference_time, t) / 24.0;
  const double phase = 2.0 * std::numbers::pi * (hour_of_day(t) - air_peak_hour_utc) / 24.0;
  return air_mean_c + seasonal_drift_c_per_day * days + air_daily_amplitude_c * std::cos(phase);
}

double EnvironmentModel::soil_temp_c(UtcSeconds t, int depth_cm) const {
  const double depth_ratio = std::max(0, depth_cm) / 10.0;
  const double amplitude = air_daily_amplitude_c * std::pow(soil_damping, depth_ratio);
  const double lag_h = soil_phase_lag_h * depth_ratio;
  const double days = hours_between(reference_time, t) / 24.0;
  const double phase = 2.0 * std::numbers::pi * (hour_of_day(t) - air_peak_hour_utc - lag_h) / 24.0;
  return air_mean_c + seasonal_drift_c_per_day * days + amplitude * std::cos(phase);
}

double EnvironmentModel::daylight(UtcSeconds t) const {
  if (day_length_h <= 0) return 0.0;
  const double sunrise = solar_noon_utc_h - day_length_h / 2.0;
  double since = hour_of_day(t) - sunrise;
  if (since < 0) since += 24.0;
  if (since > day_length_h) return 0.0;
  return std::sin(std::numbers::pi * since / day_length_h);
}

double EnvironmentModel::box_temp_c(UtcSeconds t) const {
  return air_temp_c(t) + box_solar_gain_c * daylight(t);
}

double EnvironmentModel::photo_raw(UtcSeconds t) const {
  return photo_night_raw + (photo_peak_raw - photo_night_raw) * daylight(t);
}

double EnvironmentModel::moisture_kpa(UtcSeconds t) const {
  double wetness = 0.0;
  for (const RainEvent& r : rain) {
    if (r.time > t) break;
    if (r.mm <= 0) continue;
    const double jump = std::min(1.0, wetting_per_mm * r.mm);
    const double tau_h = drying_tau_h_per_mm * r.mm;
    wetness += jump * std::exp(-hours_between(r.time, t) / tau_h);
  }
  wetness = std::min(1.0, wetness);
  return dry_kpa - (dry_kpa - wet_kpa) * wetness;
}

double EnvironmentModel::rain_mm_on(Date day) const {
  double total = 0;
  const UtcSeconds begin{day};
  const UtcSeconds end = begin + std::chrono::days{1};
  for (const RainEvent& r : rain) {
    if (r.time >= begin && r.time < end) total += r.mm;
  }
  return total;
}

EnvironmentModel EnvironmentModel::from_config(const KvSection& s, const std::vector<const KvSection*>& rain_sections) {
  EnvironmentModel env;
  if (s.has("reference_time")) env.reference_time = parse_utc(s.text("reference_time"));
  env.air_mean_c = s.number_or("air_mean_c", env.air_mean_c);
  env.air_daily_amplitude_c = s.number_or("air_daily_amplitude_c", env.air_daily_amplitude_c);
  env.seasonal_drift_c_per_day = s.number_or("seasonal_drift_c_per_day", env.seasonal_drift_c_per_day);
  env.air_peak_hour_utc = s.number_or("air_peak_hour_utc", env.air_peak_hour_utc);
  env.soil_damping = s.number_or("soil_damping", env.soil_damping);
  env.soil_phase_lag_h = s.number_or("soil_phase_lag_h", env.soil_phase_lag_h);
  env.box_solar_gain_c = s.number_or("box_solar_gain_c", env.box_solar_gain_c);
  env.dry_kpa = s.number_or("dry_kpa", env.dry_kpa);
  env.wet_kpa = s.number_or("wet_kpa", env.wet_kpa);
  env.wetting_per_mm = s.number_or("wetting_per_mm", env.wetting_per_mm);
  env.drying_tau_h_per_mm = s.number_or("drying_tau_h_per_mm", env.drying_tau_h_per_mm);
  env.day_length_h = s.number_or("day_length_h", env.day_length_h);
  env.solar_noon_utc_h = s.number_or("solar_noon_utc_h", env.solar_noon_utc_h);
  env.photo_peak_raw = s.number_or("photo_peak_raw", env.photo_peak_raw);
  env.photo_night_raw = s.number_or("photo_night_raw", env.photo_night_raw);
  for (const KvSection* r : rain_sections) {
    RainEvent ev;
    try {
      ev.time = parse_utc(r->text("time"));
    } catch (const std::invalid_argument& e) {
      r->fail("time", e.what());
    }
    ev.mm = r->number("mm");
    env.rain.push_back(ev);
  }
  std::stable_sort(env.rain.begin(), env.rain.end(),
                   [](const RainEvent& a, const RainEvent& b) { return a.time < b.time; });
  try {
    env.validate();
  } catch (const std::invalid_argument& e) {
    s.fail(e.what());
  }
  return env;
}

}  // namespace soilnet
