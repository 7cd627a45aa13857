#pragma once

#include <filesystem>
#include <sstream>
#include <string>

#include "soilnet/registry.hpp"

namespace fixtures {

inline std::filesystem::path scratch(const std::string& name) {
  const auto dir = std::filesystem::path(SOILNET_SCRATCH_DIR) / name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline constexpr double kThermA = 1.129148e-3;
inline constexpr double kThermB = 2.34125e-4;
inline constexpr double kThermC = 8.76741e-8;

/// One site, one patch. Each mote carries the sensors named in `kinds`
/// (subset of "st sm bt ph bv").
inline std::string mote_block(const std::string& mote, double x, double y, const std::string& kinds,
                              const std::string& patch = "p1") {
  std::ostringstream o;
  o << "[mote]\nmote_id = " << mote << "\npatch_id = " << patch << "\noffset_m = " << x << ", " << y
    << "\ndeploy_date = 2005-11-28\n";
  auto sensor = [&](const char* suffix, const char* type, int channel, int depth, const std::string& extra) {
    o << "[sensor]\nsensor_id = " << mote << "-" << suffix << "\nmote_id = " << mote << "\nsensor_type = " << type
      << "\nadc_channel = " << channel << "\ndepth_cm = " << depth << "\n" << extra;
  };
  const std::string therm = "thermistor_coeffs = 0.001129148, 0.000234125, 0.0000000876741\nprecision = 0.5\n";
  if (kinds.find("st") != std::string::npos) sensor("st", "soil_temperature", 0, 10, therm);
  if (kinds.find("sm") != std::string::npos) {
    sensor("sm", "soil_moisture", 1, 10,
           "watermark_coeffs = 4.093, 3.213, -0.01205, -0.009733\nprecision = 1.0\nwatermark_temp_range_c = -5, 35\n");
  }
  if (kinds.find("bt") != std::string::npos) sensor("bt", "box_temperature", 2, -20, therm);
  if (kinds.find("ph") != std::string::npos) sensor("ph", "photo", 3, -20, "precision = 1\n");
  if (kinds.find("bv") != std::string::npos) sensor("bv", "battery_voltage", 4, 0, "precision = 0.0035\n");
  return o.str();
}

inline std::string site_header() {
  return "[site]\nsite_id = s1\nname = Test site\nlatitude = 39.3289\nlongitude = -76.6206\n"
         "[patch]\npatch_id = p1\nsite_id = s1\nreference_coords = 39.3289, -76.6206\nextent_m = 10, 10\n"
         "land_cover = urban_forest\n";
}

inline soilnet::Registry registry_from(const std::string& text) {
  std::istringstream in(text);
  return soilnet::Registry::parse(in, "fixture");
}

/// Two fully equipped motes plus one with only a moisture sensor.
inline soilnet::Registry standard_registry() {
  return registry_from(site_header() + mote_block("m1", 0, 0, "st sm bt ph bv") +
                       mote_block("m2", 2, 0, "st sm bt ph bv") + mote_block("m3", 4, 0, "sm"));
}

}  // namespace fixtures
