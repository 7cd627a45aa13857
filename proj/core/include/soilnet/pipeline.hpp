#pragma once

// Raw-to-science workflow over a Store: QC staging with dedup, Level-1
// promotion (UTC + geolocation), calibration to physical units, BadData
// masking, weather ingest, and gridding into Level-3 DataSeries cells.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "soilnet/registry.hpp"
#include "soilnet/store.hpp"

namespace soilnet {

inline constexpr std::string_view kWeatherHeader =
    "date,tmin_c,tmax_c,tavg_c,precipitation_mm,humidity_pct,pressure_hpa,events";

struct StageResult {
  std::size_t staged = 0;
  std::size_t duplicates_dropped = 0;
  std::size_t malformed_dropped = 0;
};

/// Throws SchemaError on a header mismatch; the store is untouched then.
StageResult stage_and_dedup(const std::filesystem::path& csv_path, Store& store);
StageResult stage_and_dedup(std::istream& csv, const std::string& source, Store& store);

struct PromoteResult {
  std::size_t promoted = 0;     // Measurement rows written
  std::size_t quarantined = 0;  // staged records moved to quarantine
};

/// Moves every staged record into Measurement (one row per connected
/// sensor) and purges staging. `load_version` must exceed every version
/// already in LoadHistory. Throws UnknownIdError, leaving the store
/// unchanged, if a staged mote is not in the registry.
PromoteResult promote_level1(Store& store, const Registry& registry, std::uint64_t load_version);

struct CalibrateResult {
  std::size_t calibrated = 0;
  std::size_t skipped = 0;   // errors, logged in the LoadRecord
  std::size_t deferred = 0;  // moisture rows with no soil temperature yet
};

CalibrateResult calibrate_pending(Store& store, const Registry& registry, const std::string& calib_version);

/// Flags overlapping measurements, drops their derived Calibrated rows and
/// DataSeries cells, and records the interval. Returns newly flagged rows.
std::size_t mark_bad(Store& store, const BadDataInterval& interval);

struct GapPolicy {
  enum class Kind { missing, interpolate };
  Kind kind = Kind::missing;
  std::uint32_t max_gap_steps = 0;

  static GapPolicy missing() { return {}; }
  static GapPolicy interpolate(std::uint32_t max_gap) { return {Kind::interpolate, max_gap}; }
};

/// Replaces all cells of `step_s` with a fresh aggregation of Calibrated.
std::size_t grid_dataseries(Store& store, std::int32_t step_s, GapPolicy policy = GapPolicy::missing());

struct WeatherResult {
  std::size_t days = 0;
  std::size_t rejected = 0;
};

WeatherResult ingest_weather(const std::filesystem::path& csv_path, Store& store);
WeatherResult ingest_weather(std::istream& csv, Store& store);

std::string format_weather_events(std::uint8_t events);

/// Level-0 fields rebuilt from Measurement alone, ordered by (mote, epoch,
/// seq). Channels without a registered sensor read 0. The download id is
/// not retained and comes back empty.
std::vector<Level0Row> reconstruct_level0(const Store& store, const Registry& registry);

}  // namespace soilnet
