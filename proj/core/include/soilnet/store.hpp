#pragma once

// Embedded file-backed store holding the warehouse tables:
// staging (QC), Measurement (Level 1), Calibrated (Level 2), DataSeries
// (Level 3), LoadHistory, BadData, WeatherInfo, plus quarantined rows and
// the per-epoch time anchors.
//
// On disk a store is a directory with one `<table>.tbl` file per table.
// Each file is column-major:
//
//   "SNST" | u8 format version | u8 table tag | u16 0 | u64 rows | u32 columns
//   per column: u8 type | u16 name length | name | rows values
//
// Integers and IEEE-754 doubles are little-endian; strings are u32 length +
// UTF-8 bytes. Identifiers are dictionary-encoded through `ids`.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "soilnet/level0.hpp"
#include "soilnet/time.hpp"

namespace soilnet {

inline constexpr std::uint8_t kStoreFormatVersion = 1;

using Key = std::uint32_t;

class StringPool {
 public:
  Key intern(std::string_view s);
  std::optional<Key> find(std::string_view s) const;
  const std::string& str(Key k) const { return values_.at(k); }
  const std::vector<std::string>& values() const { return values_; }
  std::size_t size() const { return values_.size(); }

 private:
  std::vector<std::string> values_;
  std::unordered_map<std::string, Key> index_;
};

struct StagedRow {
  Level0Row row;
  std::string source;  // file the row came from
  bool operator==(const StagedRow&) const = default;
};

struct Measurement {
  Key sensor = 0;
  Key mote = 0;
  UtcSeconds utc{};
  std::uint16_t raw_value = 0;
  double lat_deg = 0;
  double lon_deg = 0;
  std::int32_t depth_cm = 0;
  std::uint32_t mote_time_s = 0;
  std::uint32_t epoch = 0;
  std::uint64_t seq = 0;
  std::uint64_t load_version = 0;
  bool processed = false;
  bool is_bad = false;
  bool operator==(const Measurement&) const = default;
};

struct CalibratedValue {
  Key sensor = 0;
  UtcSeconds utc{};
  double value = 0;
  double std_error = 0;
  Key calib_version = 0;
  bool operator==(const CalibratedValue&) const = default;
};

struct DataSeriesCell {
  Key sensor = 0;
  std::int64_t step_index = 0;
  std::int32_t step_s = 600;
  double mean = 0;
  double min = 0;
  double max = 0;
  double stddev = 0;
  std::uint32_t count = 0;
  bool interpolated = false;

  UtcSeconds start() const { return from_unix(step_index * step_s); }
  bool operator==(const DataSeriesCell&) const = default;
};

struct LoadRecord {
  std::uint64_t load_version = 0;
  std::string filename;
  UtcSeconds load_time{};
  std::string procedure_name;
  std::string error_notes;
  bool operator==(const LoadRecord&) const = default;
};

struct BadDataInterval {
  std::string sensor_id;
  UtcSeconds start{};
  UtcSeconds end{};
  std::string reason;
  bool operator==(const BadDataInterval&) const = default;
};

enum WeatherEvent : std::uint8_t { kRain = 1, kSnow = 2, kThunderstorm = 4, kFog = 8 };

struct WeatherDay {
  Date date{};
  double tmin_c = 0;
  double tmax_c = 0;
  double tavg_c = 0;
  double precipitation_mm = 0;
  double humidity_pct = 0;
  double pressure_hpa = 0;
  std::uint8_t events = 0;  // WeatherEvent bits
  bool operator==(const WeatherDay&) const = default;
};

struct QuarantinedRow {
  Level0Row row;
  std::string reason;
  bool operator==(const QuarantinedRow&) const = default;
};

/// (mote, epoch, seq): the identity of one downloaded record.
struct RecordKey {
  Key mote = 0;
  std::uint32_t epoch = 0;
  std::uint64_t seq = 0;
  bool operator==(const RecordKey&) const = default;
};

struct RecordKeyHash {
  std::size_t operator()(const RecordKey& k) const noexcept;
};

class StoreFormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Single-writer: pipeline stages run as sequential transactions on one Store.
class Store {
 public:
  StringPool ids;
  std::vector<StagedRow> staging;
  std::vector<Measurement> measurements;
  std::vector<CalibratedValue> calibrated;
  std::vector<DataSeriesCell> dataseries;
  std::vector<LoadRecord> load_history;
  std::vector<BadDataInterval> bad_data;
  std::map<Date, WeatherDay> weather;
  std::vector<QuarantinedRow> quarantine;
  std::map<std::pair<std::string, std::uint32_t>, TimeAnchor> anchors;

  std::uint64_t next_load_version() const;
  const LoadRecord* load_record(std::uint64_t version) const;

  bool seen(const RecordKey& key) const { return seen_.contains(key); }
  void remember(const RecordKey& key) { seen_.insert(key); }

  /// Writes every table; the directory is created if needed.
  void save(const std::filesystem::path& dir) const;
  /// Opens a saved store; a missing directory yields an empty store.
  static Store open(const std::filesystem::path& dir);

  bool operator==(const Store& other) const;

 private:
  void rebuild_seen();
  std::unordered_set<RecordKey, RecordKeyHash> seen_;
};

}  // namespace soilnet
