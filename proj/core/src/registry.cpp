#include "soilnet/registry.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

namespace soilnet {
namespace {

constexpr double kEarthRadiusM = 6371008.8;

const std::set<std::string, std::less<>> kLandCovers = {
    "urban_forest", "forest", "wetland", "grassland", "agricultural", "urban", "other"};

template <typename T>
const T& lookup(const std::vector<T>& items, const std::unordered_map<std::string, std::size_t>& idx,
                std::string_view id, const char* what) {
  const auto it = idx.find(std::string(id));
  if (it == idx.end()) throw UnknownIdError(std::string("unknown ") + what + " '" + std::string(id) + "'");
  return items[it->second];
}

const std::string& require_id(const KvSection& s, std::string_view key) {
  const std::string& v = s.text(key);
  if (v.empty()) s.fail(key, "identifier must not be empty");
  return v;
}

int entry_line(const KvSection& s, std::string_view key) {
  const KvEntry* e = s.find(key);
  return e ? e->line : s.line();
}

}  // namespace

std::string_view to_string(SensorType type) {
  switch (type) {
    case SensorType::soil_temperature: return "soil_temperature";
    case SensorType::soil_moisture: return "soil_moisture";
    case SensorType::box_temperature: return "box_temperature";
    case SensorType::photo: return "photo";
    case SensorType::battery_voltage: return "battery_voltage";
  }
  return "?";
}

std::optional<SensorType> sensor_type_from_string(std::string_view name) {
  for (SensorType t : kAllSensorTypes) {
    if (to_string(t) == name) return t;
  }
  return std::nullopt;
}

std::string_view output_unit(SensorType type) {
  switch (type) {
    case SensorType::soil_temperature:
    case SensorType::box_temperature: return "degC";
    case SensorType::soil_moisture: return "kPa";
    case SensorType::photo: return "raw";
    case SensorType::battery_voltage: return "V";
  }
  return "?";
}

std::size_t reading_index(SensorType type) {
  switch (type) {
    case SensorType::soil_temperature: return 0;
    case SensorType::soil_moisture: return 1;
    case SensorType::box_temperature: return 2;
    case SensorType::photo: return 3;
    case SensorType::battery_voltage: return 4;
  }
  return 0;
}

std::string_view to_string(EventScope scope) {
  switch (scope) {
    case EventScope::global: return "global";
    case EventScope::site: return "site";
    case EventScope::patch: return "patch";
    case EventScope::mote: return "mote";
  }
  return "?";
}

std::optional<EventScope> event_scope_from_string(std::string_view name) {
  for (EventScope s : {EventScope::global, EventScope::site, EventScope::patch, EventScope::mote}) {
    if (to_string(s) == name) return s;
  }
  return std::nullopt;
}

GeoCoord displace(GeoCoord origin, double east_m, double north_m) {
  const double lat0 = origin.lat_deg * std::numbers::pi / 180.0;
  const double dlat = north_m / kEarthRadiusM;
  const double dlon = east_m / (kEarthRadiusM * std::cos(lat0));
  return {origin.lat_deg + dlat * 180.0 / std::numbers::pi,
          origin.lon_deg + dlon * 180.0 / std::numbers::pi};
}

Registry Registry::load(const std::filesystem::path& path) {
  return from_sections(parse_kv_file(path));
}

Registry Registry::parse(std::istream& in, const std::string& source_name) {
  return from_sections(parse_kv(in, source_name));
}

Registry Registry::from_sections(const std::vector<KvSection>& sections) {
  if (sections.empty()) throw ConfigError("<registry>", 0, "site config contains no sections");

  Registry reg;
  std::vector<const KvSection*> event_sections;
  // Remember where each entity came from so later reference errors can name a line.
  std::unordered_map<std::string, int> patch_site_line, mote_patch_line, sensor_mote_line;

  auto claim = [](std::unordered_map<std::string, std::size_t>& idx, const std::string& id,
                  std::size_t pos, const KvSection& s, std::string_view key, const char* what) {
    if (!idx.emplace(id, pos).second) {
      throw ConfigError(s.source(), entry_line(s, key),
                        std::string("duplicate ") + what + " identifier '" + id + "'");
    }
  };

  for (const KvSection& s : sections) {
    const std::string& kind = s.name();
    if (kind == "site") {
      Site site{require_id(s, "site_id"), s.text_or("name", ""), s.number("latitude"),
                s.number("longitude"), s.text_or("description", "")};
      if (std::abs(site.latitude) > 90 || std::abs(site.longitude) > 180) s.fail("latitude/longitude out of range");
      claim(reg.site_index_, site.site_id, reg.sites_.size(), s, "site_id", "site");
      reg.sites_.push_back(std::move(site));
    } else if (kind == "patch") {
      Patch p;
      p.patch_id = require_id(s, "patch_id");
      p.site_id = require_id(s, "site_id");
      const auto ref = s.numbers("reference_coords", 2);
      p.reference = {ref[0], ref[1]};
      const auto extent = s.numbers("extent_m", 2);
      p.width_m = extent[0];
      p.height_m = extent[1];
      if (!(p.width_m > 0 && p.height_m > 0)) s.fail("extent_m", "extent must be strictly positive");
      p.land_cover = s.text_or("land_cover", "other");
      if (!kLandCovers.contains(p.land_cover)) s.fail("land_cover", "unknown land cover '" + p.land_cover + "'");
      claim(reg.patch_index_, p.patch_id, reg.patches_.size(), s, "patch_id", "patch");
      patch_site_line[p.patch_id] = entry_line(s, "site_id");
      reg.patches_.push_back(std::move(p));
    } else if (kind == "mote") {
      Mote m;
      m.mote_id = require_id(s, "mote_id");
      m.patch_id = require_id(s, "patch_id");
      const auto off = s.numbers("offset_m", 2);
      m.offset_x_m = off[0];
      m.offset_y_m = off[1];
      m.mote_type = s.text_or("mote_type", "micaz");
      try {
        m.deploy_date = parse_date(s.text("deploy_date"));
      } catch (const std::invalid_argument& e) {
        s.fail("deploy_date", e.what());
      }
      claim(reg.mote_index_, m.mote_id, reg.motes_.size(), s, "mote_id", "mote");
      mote_patch_line[m.mote_id] = entry_line(s, "patch_id");
      reg.motes_.push_back(std::move(m));
    } else if (kind == "sensor") {
      Sensor x;
      x.sensor_id = require_id(s, "sensor_id");
      x.mote_id = require_id(s, "mote_id");
      const auto type = sensor_type_from_string(s.text("sensor_type"));
      if (!type) s.fail("sensor_type", "unknown sensor type '" + s.text("sensor_type") + "'");
      x.sensor_type = *type;
      x.depth_cm = static_cast<int>(s.integer_or("depth_cm", 0));
      x.adc_channel = static_cast<int>(s.integer("adc_channel"));
      if (x.adc_channel < 0 || x.adc_channel > 6) s.fail("adc_channel", "must be in 0..6");
      x.precision = s.number_or("precision", 0.0);
      if (x.precision < 0) s.fail("precision", "must be non-negative");
      x.manufacturer = s.text_or("manufacturer", "");
      auto& cal = x.calibration;
      cal.reference_resistor_ohms = s.number_or("reference_resistor_ohms", 10000.0);
      if (!(cal.reference_resistor_ohms > 0)) s.fail("reference_resistor_ohms", "must be positive");
      cal.reference_bias_ohms = s.number_or("reference_bias_ohms", 0.0);
      if (s.has("thermistor_coeffs")) {
        const auto c = s.numbers("thermistor_coeffs", 3);
        cal.thermistor_coeffs = std::array<double, 3>{c[0], c[1], c[2]};
      }
      if (s.has("watermark_coeffs")) {
        const auto c = s.numbers("watermark_coeffs", 4);
        cal.watermark_coeffs = std::array<double, 4>{c[0], c[1], c[2], c[3]};
      }
      if (s.has("watermark_temp_range_c")) {
        const auto r = s.numbers("watermark_temp_range_c", 2);
        if (!(r[0] < r[1])) s.fail("watermark_temp_range_c", "range must be increasing");
        cal.watermark_min_temp_c = r[0];
        cal.watermark_max_temp_c = r[1];
      }
      claim(reg.sensor_index_, x.sensor_id, reg.sensors_.size(), s, "sensor_id", "sensor");
      sensor_mote_line[x.sensor_id] = entry_line(s, "mote_id");
      reg.sensors_.push_back(std::move(x));
    } else if (kind == "event") {
      event_sections.push_back(&s);
    } else {
      s.fail("unknown section kind");
    }
  }

  const std::string& source = sections.front().source();
  for (const Patch& p : reg.patches_) {
    if (!reg.site_index_.contains(p.site_id)) {
      throw ConfigError(source, patch_site_line[p.patch_id],
                        "patch '" + p.patch_id + "' references unknown site '" + p.site_id + "'");
    }
  }
  for (const Mote& m : reg.motes_) {
    const int line = mote_patch_line[m.mote_id];
    const auto it = reg.patch_index_.find(m.patch_id);
    if (it == reg.patch_index_.end()) {
      throw ConfigError(source, line, "mote '" + m.mote_id + "' references unknown patch '" + m.patch_id + "'");
    }
    const Patch& p = reg.patches_[it->second];
    if (m.offset_x_m < 0 || m.offset_x_m > p.width_m || m.offset_y_m < 0 || m.offset_y_m > p.height_m) {
      throw ConfigError(source, line, "mote '" + m.mote_id + "' offset lies outside patch extent");
    }
  }
  std::set<std::pair<std::string, int>> channels;
  std::set<std::pair<std::string, SensorType>> typed;
  for (const Sensor& x : reg.sensors_) {
    const int line = sensor_mote_line[x.sensor_id];
    if (!reg.mote_index_.contains(x.mote_id)) {
      throw ConfigError(source, line, "sensor '" + x.sensor_id + "' references unknown mote '" + x.mote_id + "'");
    }
    if (!channels.emplace(x.mote_id, x.adc_channel).second) {
      throw ConfigError(source, line, "duplicate (mote, adc_channel) for sensor '" + x.sensor_id + "'");
    }
    if (!typed.emplace(x.mote_id, x.sensor_type).second) {
      throw ConfigError(source, line,
                        "mote '" + x.mote_id + "' already has a " + std::string(to_string(x.sensor_type)) + " sensor");
    }
  }

  for (const KvSection* s : event_sections) {
    Event ev;
    try {
      ev.timestamp = parse_utc(s->text("timestamp"));
    } catch (const std::invalid_argument& e) {
      s->fail("timestamp", e.what());
    }
    const auto scope = event_scope_from_string(s->text_or("scope", "global"));
    if (!scope) s->fail("scope", "unknown scope");
    ev.scope = *scope;
    ev.scope_id = s->text_or("scope_id", "");
    ev.kind = s->text("kind");
    ev.note = s->text_or("note", "");
    try {
      reg.record_event(std::move(ev));
    } catch (const std::exception& e) {
      s->fail(e.what());
    }
  }
  return reg;
}

const Site& Registry::site(std::string_view id) const { return lookup(sites_, site_index_, id, "site"); }
const Patch& Registry::patch(std::string_view id) const { return lookup(patches_, patch_index_, id, "patch"); }
const Mote& Registry::mote(std::string_view id) const { return lookup(motes_, mote_index_, id, "mote"); }
const Sensor& Registry::sensor(std::string_view id) const { return lookup(sensors_, sensor_index_, id, "sensor"); }
bool Registry::has_mote(std::string_view id) const { return mote_index_.contains(std::string(id)); }
bool Registry::has_sensor(std::string_view id) const { return sensor_index_.contains(std::string(id)); }

std::vector<const Sensor*> Registry::sensors_on_mote(std::string_view mote_id) const {
  std::vector<const Sensor*> out;
  for (const Sensor& s : sensors_) {
    if (s.mote_id == mote_id) out.push_back(&s);
  }
  return out;
}

const Sensor* Registry::sensor_of_type(std::string_view mote_id, SensorType type) const {
  for (const Sensor& s : sensors_) {
    if (s.mote_id == mote_id && s.sensor_type == type) return &s;
  }
  return nullptr;
}

std::vector<const Mote*> Registry::motes_in_patch(std::string_view patch_id) const {
  std::vector<const Mote*> out;
  for (const Mote& m : motes_) {
    if (m.patch_id == patch_id) out.push_back(&m);
  }
  return out;
}

SensorLocation Registry::locate_sensor(std::string_view sensor_id) const {
  const Sensor& s = sensor(sensor_id);
  const Mote& m = mote(s.mote_id);
  const Patch& p = patch(m.patch_id);
  return {p.site_id, p.patch_id, displace(p.reference, m.offset_x_m, m.offset_y_m), s.depth_cm};
}

void Registry::validate_scope(const Event& ev) const {
  if (ev.scope == EventScope::global) {
    if (!ev.scope_id.empty()) throw std::invalid_argument("global events carry no scope identifier");
    return;
  }
  const bool ok = (ev.scope == EventScope::site && site_index_.contains(ev.scope_id)) ||
                  (ev.scope == EventScope::patch && patch_index_.contains(ev.scope_id)) ||
                  (ev.scope == EventScope::mote && mote_index_.contains(ev.scope_id));
  if (!ok) {
    throw UnknownIdError("event scope references unknown " + std::string(to_string(ev.scope)) + " '" +
                         ev.scope_id + "'");
  }
}

void Registry::record_event(Event event) {
  validate_scope(event);
  // Keep the log ordered by timestamp; ties keep arrival order.
  const auto pos = std::upper_bound(events_.begin(), events_.end(), event.timestamp,
                                    [](UtcSeconds t, const Event& e) { return t < e.timestamp; });
  events_.insert(pos, std::move(event));
}

std::vector<Event> Registry::events(EventScope scope, std::string_view scope_id, UtcSeconds from,
                                    UtcSeconds to) const {
  std::vector<Event> out;
  for (const Event& e : events_) {
    if (e.scope == scope && e.scope_id == scope_id && e.timestamp >= from && e.timestamp < to) out.push_back(e);
  }
  return out;
}

bool Registry::operator==(const Registry& other) const {
  return sites_ == other.sites_ && patches_ == other.patches_ && motes_ == other.motes_ &&
         sensors_ == other.sensors_ && events_ == other.events_;
}

}  // namespace soilnet
