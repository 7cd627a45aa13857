#pragma once

// Behavioural model of one mote's firmware: minute sampling into the flash
// ring, duty-cycled status beaconing, download bookkeeping, and an
// event-granular energy ledger.

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "soilnet/calibration.hpp"
#include "soilnet/energy.hpp"
#include "soilnet/environment.hpp"
#include "soilnet/random.hpp"
#include "soilnet/record.hpp"
#include "soilnet/registry.hpp"
#include "soilnet/time.hpp"

namespace soilnet {

struct RadioSchedule {
  std::uint32_t status_period_s = 120;
  double window_s = 2.0;             // protocol availability
  std::uint32_t beacon_spacing_ms = 250;
  std::uint32_t beacons_per_window = 6;
  double radio_on_s = 1.9;           // measured on-time charged to the ledger
};

struct StatusMessage {
  std::string mote_id;
  std::uint32_t stored_records = 0;  // records not yet downloaded
  std::optional<std::uint64_t> highest_seq;  // empty until the first sample
  std::uint16_t battery_adc = 0;
  std::uint32_t epoch = 0;
  std::uint32_t mote_time_s = 0;
  bool operator==(const StatusMessage&) const = default;
};

struct EnergyLedger {
  double sensing_mAh = 0;
  double radio_status_mAh = 0;
  double radio_download_mAh = 0;
  double status_radio_on_s = 0;
  double download_radio_on_s = 0;
  std::uint64_t samples = 0;
  std::uint64_t windows = 0;

  double total_mAh() const { return sensing_mAh + radio_status_mAh + radio_download_mAh; }
};

/// Per-reading sensor wiring of one mote. Unconnected readings report 0.
struct MoteHardware {
  std::array<std::optional<Sensor>, kReadingCount> sensors{};
  double adc_noise_counts = 0;  // Gaussian sigma, drawn from the injected generator

  static MoteHardware from_registry(const Registry& registry, const std::string& mote_id);
};

struct MoteConfig {
  std::uint32_t sample_interval_s = 60;
  RadioSchedule radio;
  BatteryModel battery;
  CurrentBudget budget = CurrentBudget::reference_mote();
  double battery_ref_temp_c = 10.0;
};

struct SampleEmission {
  SimTime time{};
  SampleRecord record;
};

struct BeaconEmission {
  SimTime time{};
  std::uint64_t window = 0;
  std::uint32_t index_in_window = 0;
  StatusMessage status;
};

using Emission = std::variant<SampleEmission, BeaconEmission>;

class MoteSim {
 public:
  MoteSim(std::string mote_id, SimTime boot_time, MoteHardware hardware, MoteConfig config = {});

  /// Runs the firmware over (now, until]. Samples fall on every multiple of
  /// the sample interval of the mote clock and radio windows on every
  /// multiple of the status period; a window's beacons are emitted together
  /// at window open, stamped 250 ms apart. Coincident sample and window:
  /// the sample comes first.
  std::vector<Emission> advance(const EnvironmentModel& env, Rng& rng, SimTime until);

  /// Synthesizes, stores, and charges one sample taken at `t`.
  SampleRecord take_sample(const EnvironmentModel& env, UtcSeconds t, Rng* noise = nullptr);

  std::vector<SampleRecord> flash_read_range(std::uint64_t from_seq, std::uint64_t to_seq) const {
    return flash_.read_range(from_seq, to_seq);
  }
  const FlashRing& flash() const { return flash_; }
  StatusMessage make_status() const;

  /// The gateway confirmed receipt of everything up to and including `seq`.
  void acknowledge_download(std::uint64_t through_seq);
  std::uint64_t download_cursor() const { return download_cursor_; }
  void charge_download(double radio_seconds);

  void set_sample_interval(std::uint32_t seconds);
  std::uint32_t sample_interval_s() const { return config_.sample_interval_s; }
  /// Clock restarts at zero under a new epoch; flash contents survive.
  void reboot();

  const std::string& mote_id() const { return mote_id_; }
  SimTime now() const { return now_; }
  std::uint32_t clock_s() const;
  std::uint32_t epoch() const { return epoch_; }
  SimTime boot_time() const { return boot_time_; }
  const EnergyLedger& ledger() const { return ledger_; }
  const MoteConfig& config() const { return config_; }
  double battery_voltage() const;
  std::uint16_t battery_adc() const;
  bool can_sample() const { return battery_voltage() >= config_.battery.flash_floor_pack; }
  bool can_transmit() const { return battery_voltage() >= config_.battery.radio_floor_pack; }

 private:
  std::array<std::uint16_t, kReadingCount> synthesize(const EnvironmentModel& env, UtcSeconds t, Rng* noise);
  void open_window(SimTime t, std::vector<Emission>& out);

  std::string mote_id_;
  MoteHardware hardware_;
  MoteConfig config_;
  FlashRing flash_;
  EnergyLedger ledger_;
  SimTime boot_time_;
  SimTime now_;
  std::uint32_t epoch_ = 0;
  std::int64_t next_sample_ms_;  // mote-clock milliseconds
  std::int64_t next_window_ms_;
  std::uint64_t windows_opened_ = 0;
  std::uint64_t download_cursor_ = 0;
  double last_box_temp_c_;
};

}  // namespace soilnet
