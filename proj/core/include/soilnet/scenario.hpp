#pragma once

// End-to-end deployment run: simulate motes and beacons, download weekly
// over a mobile link, push every download through the pipeline, and emit
// the artifact directory.
//
// Scenario files use the sectioned key-value format:
//
//   [scenario]        registry, seed, start_utc, duration_days,
//                     sample_interval_s, download_interval_days, status_link,
//                     download_link, grid_step_s, calib_version,
//                     gap_policy (missing | interpolate:N), report_hours,
//                     adc_noise_counts
//   [environment]     EnvironmentModel fields
//   [rain]            time, mm                       (repeatable)
//   [link]            name plus LinkModel fields     (repeatable)
//   [mote_link]       mote, status, download         (per-mote override)
//   [battery]         BatteryModel fields
//   [budget_component] name, i_on_mA, t_on_s, period_s (replaces the default budget)
//   [bad_data]        sensor_id, start, end, reason  (repeatable)
//   [reboot]          mote, time                     (repeatable)
//
// Paths are resolved against the scenario file's directory.
//
// Artifacts: level0/*.csv, store/, weather.csv, downloads.csv, health.csv,
// energy.csv, energy.json, cube/*.csv, report_moisture.{csv,svg},
// summary.json.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "soilnet/channel.hpp"
#include "soilnet/energy.hpp"
#include "soilnet/environment.hpp"
#include "soilnet/pipeline.hpp"
#include "soilnet/registry.hpp"

namespace soilnet {

struct ScenarioConfig {
  std::filesystem::path registry_path;
  std::uint64_t seed = 0;
  UtcSeconds start{};
  double duration_days = 0;
  std::uint32_t sample_interval_s = 60;
  double download_interval_days = 7;
  std::int32_t grid_step_s = 600;
  std::string calib_version = "v1";
  GapPolicy gap_policy;
  int report_hours = 6;
  double adc_noise_counts = 0;

  EnvironmentModel environment;
  std::map<std::string, LinkModel> links;
  std::string status_link;
  std::string download_link;
  std::map<std::string, std::pair<std::string, std::string>> mote_links;  // mote -> (status, download)
  BatteryModel battery;
  double battery_ref_temp_c = 10.0;
  CurrentBudget budget = CurrentBudget::reference_mote();
  std::vector<BadDataInterval> bad_data;
  std::vector<std::pair<std::string, UtcSeconds>> reboots;

  /// Throws ConfigError for any invalid or missing setting.
  static ScenarioConfig load(const std::filesystem::path& path);
  static ScenarioConfig from_sections(const std::vector<KvSection>& sections, const std::filesystem::path& base_dir);

  const LinkModel& status_link_for(const std::string& mote_id) const;
  const LinkModel& download_link_for(const std::string& mote_id) const;
};

struct ScenarioSummary {
  std::size_t downloads = 0;
  std::size_t failed_downloads = 0;
  std::size_t records_downloaded = 0;
  std::size_t measurements = 0;
  std::size_t calibrated = 0;
  std::size_t cells = 0;
  std::size_t quarantined = 0;
  std::uint64_t beacons_sent = 0;
  std::uint64_t beacons_received = 0;
};

/// Runs the scenario and writes every artifact under `out_dir`. Throws on failure.
ScenarioSummary simulate_scenario(const ScenarioConfig& config, const Registry& registry,
                                  const std::filesystem::path& out_dir);

/// Exit code: 0 success, 1 configuration error, 2 runtime failure.
int run_scenario(const std::filesystem::path& config_path, const std::filesystem::path& out_dir,
                 std::optional<std::uint64_t> seed_override, std::ostream& log);

/// Daily weather derived from the environment model over [first, last].
std::string synthesize_weather_csv(const EnvironmentModel& env, Date first, Date last);

std::string budget_csv(const CurrentBudget& budget);
std::string budget_json(const CurrentBudget& budget, const BatteryModel& battery);

}  // namespace soilnet
