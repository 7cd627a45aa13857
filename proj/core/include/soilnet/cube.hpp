#pragma once

// Dimensional model over DataSeries cells and daily weather. Facts are
// immutable after build; queries scan them and aggregate exactly.
//
// Time levels: slot < hour < date, and date nests in each of week
// (ISO-8601), season (meteorological, December counted in the following
// year's DJF) and year.
// Location levels: sensor < mote < patch < site. Weather facts exist per
// site and per day only.

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "soilnet/registry.hpp"
#include "soilnet/store.hpp"

namespace soilnet {

enum class TimeLevel { slot, hour, date, week, season, year, all };
enum class LocationLevel { sensor, mote, patch, site, all };
enum class Aggregate { average, min, max, median, stddev, count };
enum class CyclicGroup { none, hour_of_day, week_of_year };

std::string_view to_string(TimeLevel v);
std::string_view to_string(LocationLevel v);
std::string_view to_string(Aggregate v);
std::string_view to_string(CyclicGroup v);
std::optional<TimeLevel> time_level_from_string(std::string_view s);
std::optional<LocationLevel> location_level_from_string(std::string_view s);
std::optional<Aggregate> aggregate_from_string(std::string_view s);
std::optional<CyclicGroup> cyclic_group_from_string(std::string_view s);

/// Weather fields: tmin_c, tmax_c, tavg_c, precipitation_mm, humidity_pct, pressure_hpa.
struct Measure {
  std::optional<SensorType> sensor_type;
  std::string weather_field;

  static Measure sensor(SensorType t) { return {t, {}}; }
  static Measure weather(std::string field) { return {std::nullopt, std::move(field)}; }
  bool is_weather() const { return !sensor_type; }
  std::string name() const;
};

/// Parses a sensor type name or a weather field name.
std::optional<Measure> measure_from_string(std::string_view s);

/// "field op value" with op one of = != < <= > >=. Fields: site, patch, mote,
/// sensor, depth_cm, land_cover, manufacturer, time (ISO UTC of the cell
/// start), date, hour, week, season, year, interpolated. Numeric fields
/// (depth_cm, hour, year, interpolated) compare numerically; the rest
/// compare as strings, which orders ISO dates and times correctly.
struct Filter {
  enum class Op { eq, ne, lt, le, gt, ge };
  std::string field;
  Op op = Op::eq;
  std::string value;
};

Filter parse_filter(std::string_view text);

struct CubeQuery {
  Measure measure = Measure::sensor(SensorType::soil_temperature);
  Aggregate aggregate = Aggregate::average;
  TimeLevel time_level = TimeLevel::all;
  LocationLevel location_level = LocationLevel::all;
  std::vector<Filter> filters;
  CyclicGroup cyclic_group = CyclicGroup::none;
  bool include_interpolated = true;
};

struct CellResult {
  std::string time_key;
  std::string cycle_key;  // empty without cyclic grouping
  std::string location_key;
  double value = 0;
  std::uint64_t count = 0;  // summed cell counts; interpolated cells weigh 1
  UtcSeconds bucket_start{};  // earliest contributing cell
  bool operator==(const CellResult&) const = default;
};

class QueryError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class MixedStepError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

std::string time_key(UtcSeconds t, TimeLevel level, std::int32_t step_s = 600);
std::string iso_week_key(Date d);  // 2006-W03
std::string season_key(Date d);    // 2006-DJF
std::string cycle_key(UtcSeconds t, CyclicGroup group);

class Cube {
 public:
  /// Throws MixedStepError if the cells do not share one step.
  static Cube build(std::span<const DataSeriesCell> cells, const StringPool& ids,
                    const std::map<Date, WeatherDay>& weather, const Registry& registry);
  /// Uses the store's cells of `step_s` only.
  static Cube build(const Store& store, const Registry& registry, std::int32_t step_s = 600);

  /// Results ordered by (time_key, cycle_key, location_key).
  std::vector<CellResult> query(const CubeQuery& q) const;

  std::size_t sensor_facts() const { return facts_.size(); }
  std::size_t weather_facts() const { return weather_.size(); }
  std::int32_t step_s() const { return step_s_; }

 private:
  struct LocationDim {
    std::string sensor, mote, patch, site, land_cover, manufacturer;
    int depth_cm = 0;
    SensorType type = SensorType::soil_temperature;
  };
  struct Fact {
    std::uint32_t location = 0;
    std::int64_t start = 0;
    double mean = 0, min = 0, max = 0, stddev = 0;
    std::uint32_t count = 0;
    bool interpolated = false;
  };
  struct WeatherFact {
    std::uint32_t site = 0;  // index into sites_
    Date date{};
    WeatherDay day;
  };

  std::vector<LocationDim> locations_;
  std::vector<std::string> sites_;
  std::vector<Fact> facts_;
  std::vector<WeatherFact> weather_;
  std::int32_t step_s_ = 600;
};

std::string results_to_csv(const std::vector<CellResult>& rows);
std::string results_to_json(const std::vector<CellResult>& rows);

}  // namespace soilnet
