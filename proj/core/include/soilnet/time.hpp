#pragma once

#include <chrono>
#include <cstdint>
#include <string>
#include <string_view>

namespace soilnet {

/// Wall-clock instants are UTC, whole seconds since the Unix epoch.
using UtcSeconds = std::chrono::sys_seconds;
/// Simulation instants need sub-second resolution for beacon spacing.
using SimTime = std::chrono::sys_time<std::chrono::milliseconds>;
using Date = std::chrono::sys_days;

/// Accepts `YYYY-MM-DDTHH:MM:SSZ` (the trailing Z is optional) or a bare
/// `YYYY-MM-DD`, which means midnight. Throws std::invalid_argument.
UtcSeconds parse_utc(std::string_view text);
Date parse_date(std::string_view text);

std::string format_utc(UtcSeconds t);   // 2005-12-01T00:00:00Z
std::string format_date(Date d);        // 2005-12-01

inline std::int64_t to_unix(UtcSeconds t) { return t.time_since_epoch().count(); }
inline UtcSeconds from_unix(std::int64_t s) { return UtcSeconds{std::chrono::seconds{s}}; }

inline UtcSeconds floor_seconds(SimTime t) {
  return std::chrono::floor<std::chrono::seconds>(t);
}

}  // namespace soilnet
