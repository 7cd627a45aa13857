#pragma once

// Level-0 CSV: raw records exactly as downloaded, one row per record.
//
//   download_id,mote_id,epoch,seq,mote_time_s,soil_temp_adc,soil_moist_adc,
//   box_temp_adc,photo_adc,battery_adc,anchor_mote_time_s,anchor_utc_iso8601
//
// UTF-8, LF line endings, header row. The (mote clock, UTC) anchor recorded
// at download completion is repeated on every row.

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "soilnet/record.hpp"
#include "soilnet/time.hpp"

namespace soilnet {

inline constexpr std::string_view kLevel0Header =
    "download_id,mote_id,epoch,seq,mote_time_s,soil_temp_adc,soil_moist_adc,box_temp_adc,photo_adc,"
    "battery_adc,anchor_mote_time_s,anchor_utc_iso8601";

struct TimeAnchor {
  std::uint32_t mote_time_s = 0;
  UtcSeconds utc{};
  bool operator==(const TimeAnchor&) const = default;
};

struct Level0Row {
  std::string download_id;
  std::string mote_id;
  std::uint32_t epoch = 0;
  std::uint64_t seq = 0;
  std::uint32_t mote_time_s = 0;
  std::array<std::uint16_t, kReadingCount> adc{};
  TimeAnchor anchor;
  bool operator==(const Level0Row&) const = default;
};

class SchemaError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Rows are parsed field-by-field; rows that fail range or syntax checks are
/// counted in `malformed` rather than aborting the read.
struct Level0Read {
  std::vector<Level0Row> rows;
  std::size_t malformed = 0;
};

struct Level0Export {
  std::string download_id;
  std::string mote_id;
  TimeAnchor anchor;
};

/// Per-record epochs are derived from the download's current epoch by
/// walking back through clock regressions (each one marks a reboot).
std::vector<std::uint32_t> assign_epochs(std::span<const SampleRecord> records, std::uint32_t current_epoch);

/// Throws std::invalid_argument if records are not strictly sequence-ordered.
std::string format_level0(std::span<const SampleRecord> records, const Level0Export& meta,
                          std::uint32_t current_epoch);
void export_level0(std::span<const SampleRecord> records, const Level0Export& meta, std::uint32_t current_epoch,
                   const std::filesystem::path& path);

/// Throws SchemaError if the header does not match; an empty stream yields no rows.
Level0Read read_level0(std::istream& in);
Level0Read read_level0(const std::filesystem::path& path);

}  // namespace soilnet
