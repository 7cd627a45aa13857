#include "soilnet/mote_sim.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace soilnet {
namespace {

std::uint16_t thermistor_count(const Sensor& s, double celsius) {
  if (!s.calibration.thermistor_coeffs) return 0;
  const double r = thermistor_resistance(celsius, *s.calibration.thermistor_coeffs);
  return quantize_adc(resistance_to_adc(r, s.calibration.divider_ohms()));
}

double charge_mAh(const CurrentBudget& budget, std::string_view component, double seconds) {
  const BudgetComponent* c = budget.find(component);
  return c ? c->i_on_mA * seconds / 3600.0 : 0.0;
}

}  // namespace

MoteHardware MoteHardware::from_registry(const Registry& registry, const std::string& mote_id) {
  MoteHardware hw;
  for (const Sensor* s : registry.sensors_on_mote(mote_id)) {
    hw.sensors[reading_index(s->sensor_type)] = *s;
  }
  return hw;
}

MoteSim::MoteSim(std::string mote_id, SimTime boot_time, MoteHardware hardware, MoteConfig config)
    : mote_id_(std::move(mote_id)),
      hardware_(std::move(hardware)),
      config_(std::move(config)),
      boot_time_(boot_time),
      now_(boot_time),
      next_sample_ms_(static_cast<std::int64_t>(config_.sample_interval_s) * 1000),
      next_window_ms_(static_cast<std::int64_t>(config_.radio.status_period_s) * 1000),
      last_box_temp_c_(config_.battery_ref_temp_c) {
  if (config_.sample_interval_s < 1) throw std::invalid_argument("sample interval must be >= 1 s");
  if (config_.radio.status_period_s < 1) throw std::invalid_argument("status period must be >= 1 s");
  config_.battery.validate();
  config_.budget.validate();
}

std::uint32_t MoteSim::clock_s() const {
  return static_cast<std::uint32_t>(std::chrono::floor<std::chrono::seconds>(now_ - boot_time_).count());
}

double MoteSim::battery_voltage() const {
  return config_.battery.pack_voltage(ledger_.total_mAh(), last_box_temp_c_ - config_.battery_ref_temp_c);
}

std::uint16_t MoteSim::battery_adc() const {
  return quantize_adc(kAdcMax * battery_voltage() / kBatteryAdcFullScaleV);
}

std::array<std::uint16_t, kReadingCount> MoteSim::synthesize(const EnvironmentModel& env, UtcSeconds t, Rng* noise) {
  std::array<std::uint16_t, kReadingCount> out{};
  const auto& hw = hardware_.sensors;
  const auto soil_idx = reading_index(SensorType::soil_temperature);
  const auto moist_idx = reading_index(SensorType::soil_moisture);
  const auto box_idx = reading_index(SensorType::box_temperature);
  const auto photo_idx = reading_index(SensorType::photo);
  const auto batt_idx = reading_index(SensorType::battery_voltage);

  last_box_temp_c_ = env.box_temp_c(t);

  if (hw[soil_idx]) out[soil_idx] = thermistor_count(*hw[soil_idx], env.soil_temp_c(t, hw[soil_idx]->depth_cm));
  if (hw[moist_idx] && hw[moist_idx]->calibration.watermark_coeffs) {
    const Sensor& s = *hw[moist_idx];
    const double temp = env.soil_temp_c(t, s.depth_cm);
    const double r = watermark_resistance(env.moisture_kpa(t), temp, *s.calibration.watermark_coeffs);
    out[moist_idx] = quantize_adc(resistance_to_adc(r, s.calibration.divider_ohms()));
  }
  if (hw[box_idx]) out[box_idx] = thermistor_count(*hw[box_idx], last_box_temp_c_);
  if (hw[photo_idx]) out[photo_idx] = quantize_adc(env.photo_raw(t));
  if (hw[batt_idx]) out[batt_idx] = battery_adc();

  if (noise && hardware_.adc_noise_counts > 0) {
    for (std::size_t i = 0; i < kReadingCount; ++i) {
      if (hw[i]) out[i] = quantize_adc(out[i] + noise->normal(0.0, hardware_.adc_noise_counts));
    }
  }
  return out;
}

SampleRecord MoteSim::take_sample(const EnvironmentModel& env, UtcSeconds t, Rng* noise) {
  const auto readings = synthesize(env, t, noise);
  const auto since_boot = std::chrono::floor<std::chrono::seconds>(SimTime{t} - boot_time_).count();
  const auto mote_time = static_cast<std::uint32_t>(std::max<std::int64_t>(0, since_boot));
  const std::uint64_t seq = flash_.append(mote_time, readings);
  if (const BudgetComponent* c = config_.budget.find("sensing")) {
    ledger_.sensing_mAh += c->i_on_mA * c->t_on_s / 3600.0;
  }
  ++ledger_.samples;
  return SampleRecord{seq, mote_time, readings};
}

void MoteSim::open_window(SimTime t, std::vector<Emission>& out) {
  const std::uint64_t window = windows_opened_++;
  if (!can_transmit()) return;
  ledger_.radio_status_mAh += charge_mAh(config_.budget, "radio", config_.radio.radio_on_s);
  ledger_.status_radio_on_s += config_.radio.radio_on_s;
  ++ledger_.windows;
  const StatusMessage status = make_status();
  for (std::uint32_t k = 0; k < config_.radio.beacons_per_window; ++k) {
    out.push_back(BeaconEmission{t + std::chrono::milliseconds{static_cast<std::int64_t>(k) * config_.radio.beacon_spacing_ms},
                                 window, k, status});
  }
}

std::vector<Emission> MoteSim::advance(const EnvironmentModel& env, Rng& rng, SimTime until) {
  if (until < now_) throw std::invalid_argument("cannot advance a mote backwards in time");
  std::vector<Emission> out;
  while (true) {
    const SimTime sample_at = boot_time_ + std::chrono::milliseconds{next_sample_ms_};
    const SimTime window_at = boot_time_ + std::chrono::milliseconds{next_window_ms_};
    const SimTime next = std::min(sample_at, window_at);
    if (next > until) break;
    now_ = next;
    if (sample_at <= window_at) {
      next_sample_ms_ += static_cast<std::int64_t>(config_.sample_interval_s) * 1000;
      if (can_sample()) {
        const SampleRecord r = take_sample(env, floor_seconds(now_), &rng);
        out.push_back(SampleEmission{now_, r});
      }
    } else {
      next_window_ms_ += static_cast<std::int64_t>(config_.radio.status_period_s) * 1000;
      open_window(now_, out);
    }
  }
  now_ = until;
  return out;
}

StatusMessage MoteSim::make_status() const {
  StatusMessage s;
  s.mote_id = mote_id_;
  const std::uint64_t first = std::max(flash_.tail_seq(), download_cursor_);
  s.stored_records = static_cast<std::uint32_t>(flash_.head_seq() > first ? flash_.head_seq() - first : 0);
  if (flash_.head_seq() > 0) s.highest_seq = flash_.head_seq() - 1;
  s.battery_adc = battery_adc();
  s.epoch = epoch_;
  s.mote_time_s = clock_s();
  return s;
}

void MoteSim::acknowledge_download(std::uint64_t through_seq) {
  download_cursor_ = std::max(download_cursor_, through_seq + 1);
}

void MoteSim::charge_download(double radio_seconds) {
  if (radio_seconds < 0) throw std::invalid_argument("negative download time");
  ledger_.radio_download_mAh += charge_mAh(config_.budget, "radio", radio_seconds);
  ledger_.download_radio_on_s += radio_seconds;
}

void MoteSim::set_sample_interval(std::uint32_t seconds) {
  if (seconds < 1) throw std::invalid_argument("sample interval must be >= 1 s");
  config_.sample_interval_s = seconds;
  const std::int64_t clock_ms = (now_ - boot_time_).count();
  const std::int64_t step = static_cast<std::int64_t>(seconds) * 1000;
  next_sample_ms_ = (clock_ms / step + 1) * step;
}

void MoteSim::reboot() {
  ++epoch_;
  boot_time_ = now_;
  next_sample_ms_ = static_cast<std::int64_t>(config_.sample_interval_s) * 1000;
  next_window_ms_ = static_cast<std::int64_t>(config_.radio.status_period_s) * 1000;
}

}  // namespace soilnet
