#pragma once

// Site / patch / mote / sensor hierarchy, per-sensor calibration constants,
// and the experiment event log.

#include <array>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "soilnet/kvconfig.hpp"
#include "soilnet/time.hpp"

namespace soilnet {

enum class SensorType { soil_temperature, soil_moisture, box_temperature, photo, battery_voltage };

inline constexpr std::array<SensorType, 5> kAllSensorTypes = {
    SensorType::soil_temperature, SensorType::soil_moisture, SensorType::box_temperature,
    SensorType::photo, SensorType::battery_voltage};

std::string_view to_string(SensorType type);
std::optional<SensorType> sensor_type_from_string(std::string_view name);
/// Physical unit of calibrated values: "degC", "kPa", "raw", "V".
std::string_view output_unit(SensorType type);
/// Position of the sensor type's reading inside a SampleRecord.
std::size_t reading_index(SensorType type);

struct GeoCoord {
  double lat_deg = 0;
  double lon_deg = 0;
  bool operator==(const GeoCoord&) const = default;
};

/// Displaces `origin` by (east_m, north_m) using a local equirectangular
/// approximation; adequate for meter-scale patches.
GeoCoord displace(GeoCoord origin, double east_m, double north_m);

struct Site {
  std::string site_id;
  std::string name;
  double latitude = 0;
  double longitude = 0;
  std::string description;
  bool operator==(const Site&) const = default;
};

struct Patch {
  std::string patch_id;
  std::string site_id;
  GeoCoord reference;
  double width_m = 0;
  double height_m = 0;
  std::string land_cover;
  bool operator==(const Patch&) const = default;
};

struct Mote {
  std::string mote_id;
  std::string patch_id;
  double offset_x_m = 0;  // east of the patch reference
  double offset_y_m = 0;  // north of the patch reference
  std::string mote_type;
  Date deploy_date{};
  bool operator==(const Mote&) const = default;
};

struct CalibrationConstants {
  double reference_resistor_ohms = 10000.0;
  /// Measured deviation of this mote's divider resistor from nominal.
  double reference_bias_ohms = 0.0;
  /// Log-cubic coefficients: 1/T[K] = A + B ln R + C (ln R)^3.
  std::optional<std::array<double, 3>> thermistor_coeffs;
  /// Rational moisture regression: kPa = (c0 + c1 Rk) / (1 + c2 T + c3 Rk), Rk in kOhm.
  std::optional<std::array<double, 4>> watermark_coeffs;
  double watermark_min_temp_c = -10.0;
  double watermark_max_temp_c = 45.0;

  double divider_ohms() const { return reference_resistor_ohms + reference_bias_ohms; }
  bool operator==(const CalibrationConstants&) const = default;
};

struct Sensor {
  std::string sensor_id;
  std::string mote_id;
  SensorType sensor_type = SensorType::soil_temperature;
  int depth_cm = 0;  // negative = above the surface
  int adc_channel = 0;
  CalibrationConstants calibration;
  double precision = 0;  // standard error in output units
  std::string manufacturer;
  bool operator==(const Sensor&) const = default;
};

enum class EventScope { global, site, patch, mote };
std::string_view to_string(EventScope scope);
std::optional<EventScope> event_scope_from_string(std::string_view name);

struct Event {
  UtcSeconds timestamp{};
  EventScope scope = EventScope::global;
  std::string scope_id;  // empty for global events
  std::string kind;
  std::string note;
  bool operator==(const Event&) const = default;
};

struct SensorLocation {
  std::string site_id;
  std::string patch_id;
  GeoCoord coords;
  int depth_cm = 0;
  bool operator==(const SensorLocation&) const = default;
};

class UnknownIdError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Immutable after load apart from the append-only event log. Writers to the
/// log must be serialised by the caller; readers need no locking otherwise.
class Registry {
 public:
  static Registry load(const std::filesystem::path& path);
  static Registry parse(std::istream& in, const std::string& source_name);
  /// Builds from already-parsed sections; rejects the whole input on any error.
  static Registry from_sections(const std::vector<KvSection>& sections);

  const std::vector<Site>& sites() const { return sites_; }
  const std::vector<Patch>& patches() const { return patches_; }
  const std::vector<Mote>& motes() const { return motes_; }
  const std::vector<Sensor>& sensors() const { return sensors_; }
  const std::vector<Event>& event_log() const { return events_; }

  const Site& site(std::string_view id) const;
  const Patch& patch(std::string_view id) const;
  const Mote& mote(std::string_view id) const;
  const Sensor& sensor(std::string_view id) const;
  bool has_mote(std::string_view id) const;
  bool has_sensor(std::string_view id) const;

  std::vector<const Sensor*> sensors_on_mote(std::string_view mote_id) const;
  const Sensor* sensor_of_type(std::string_view mote_id, SensorType type) const;
  std::vector<const Mote*> motes_in_patch(std::string_view patch_id) const;

  SensorLocation locate_sensor(std::string_view sensor_id) const;

  void record_event(Event event);
  /// Events whose scope matches exactly, in [from, to).
  std::vector<Event> events(EventScope scope, std::string_view scope_id, UtcSeconds from,
                            UtcSeconds to) const;

  bool operator==(const Registry& other) const;

 private:
  void validate_scope(const Event& event) const;

  std::vector<Site> sites_;
  std::vector<Patch> patches_;
  std::vector<Mote> motes_;
  std::vector<Sensor> sensors_;
  std::vector<Event> events_;
  std::unordered_map<std::string, std::size_t> site_index_, patch_index_, mote_index_, sensor_index_;
};

}  // namespace soilnet
