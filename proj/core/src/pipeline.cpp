#include "soilnet/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "soilnet/calibration.hpp"
#include "soilnet/kvconfig.hpp"

namespace soilnet {
namespace {

struct SensorTime {
  Key sensor = 0;
  std::int64_t utc = 0;
  bool operator==(const SensorTime&) const = default;
};

struct SensorTimeHash {
  std::size_t operator()(const SensorTime& k) const noexcept {
    return std::hash<std::uint64_t>{}(static_cast<std::uint64_t>(k.utc) * 0x9E3779B97F4A7C15ULL ^ k.sensor);
  }
};

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

UtcSeconds anchored_utc(const TimeAnchor& anchor, std::uint32_t mote_time_s) {
  return anchor.utc + std::chrono::seconds{static_cast<std::int64_t>(mote_time_s) -
                                           static_cast<std::int64_t>(anchor.mote_time_s)};
}

std::string join_notes(const std::map<std::string, std::size_t>& counts) {
  std::string out;
  for (const auto& [what, n] : counts) {
    if (!out.empty()) out += "; ";
    out += what + ": " + std::to_string(n);
  }
  return out;
}

bool in_interval(UtcSeconds t, const BadDataInterval& b) { return t >= b.start && t < b.end; }

}  // namespace

StageResult stage_and_dedup(const std::filesystem::path& csv_path, Store& store) {
  std::ifstream in(csv_path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + csv_path.string());
  return stage_and_dedup(in, csv_path.filename().string(), store);
}

StageResult stage_and_dedup(std::istream& csv, const std::string& source, Store& store) {
  Level0Read read = read_level0(csv);
  StageResult result;
  result.malformed_dropped = read.malformed;
  for (auto& row : read.rows) {
    const RecordKey key{store.ids.intern(row.mote_id), row.epoch, row.seq};
    if (store.seen(key)) {
      ++result.duplicates_dropped;
      continue;
    }
    store.remember(key);
    store.staging.push_back({std::move(row), source});
    ++result.staged;
  }
  return result;
}

PromoteResult promote_level1(Store& store, const Registry& registry, std::uint64_t load_version) {
  if (load_version < store.next_load_version()) {
    throw std::invalid_argument("load version " + std::to_string(load_version) + " is not newer than the store");
  }
  PromoteResult result;
  if (store.staging.empty()) return result;
  for (const auto& s : store.staging) {
    if (!registry.has_mote(s.row.mote_id)) throw UnknownIdError("unknown mote '" + s.row.mote_id + "' in staging");
  }

  // The anchor shipped with a download belongs to the epoch the mote was in
  // at download time: the highest epoch among that download's rows.
  std::map<std::pair<std::string, std::string>, std::uint32_t> download_epoch;
  for (const auto& s : store.staging) {
    auto& e = download_epoch[{s.row.download_id, s.row.mote_id}];
    e = std::max(e, s.row.epoch);
  }
  UtcSeconds load_time{};
  for (const auto& s : store.staging) {
    if (s.row.epoch == download_epoch[{s.row.download_id, s.row.mote_id}]) {
      store.anchors[{s.row.mote_id, s.row.epoch}] = s.row.anchor;
      load_time = std::max(load_time, s.row.anchor.utc);
    }
  }

  std::vector<std::size_t> order(store.staging.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto& x = store.staging[a].row;
    const auto& y = store.staging[b].row;
    return std::tie(x.mote_id, x.epoch, x.seq) < std::tie(y.mote_id, y.epoch, y.seq);
  });

  std::map<std::pair<Key, std::uint32_t>, std::pair<std::uint64_t, std::uint32_t>> last_clock;
  std::unordered_set<SensorTime, SensorTimeHash> taken;
  for (const auto& m : store.measurements) {
    auto [it, fresh] = last_clock.try_emplace({m.mote, m.epoch}, m.seq, m.mote_time_s);
    if (!fresh && m.seq > it->second.first) it->second = {m.seq, m.mote_time_s};
    taken.insert({m.sensor, to_unix(m.utc)});
  }

  std::map<std::string, std::size_t> notes;
  std::set<std::string> sources;
  auto quarantine = [&](const StagedRow& s, const std::string& reason) {
    store.quarantine.push_back({s.row, reason});
    ++notes[reason];
    ++result.quarantined;
  };

  for (const std::size_t idx : order) {
    const StagedRow& s = store.staging[idx];
    const Level0Row& row = s.row;
    sources.insert(s.source);
    const Key mote = store.ids.intern(row.mote_id);

    TimeAnchor anchor = row.anchor;
    if (row.epoch != download_epoch[{row.download_id, row.mote_id}]) {
      const auto it = store.anchors.find({row.mote_id, row.epoch});
      if (it == store.anchors.end()) {
        quarantine(s, "no time anchor for epoch");
        continue;
      }
      anchor = it->second;
    }

    auto clock = last_clock.find({mote, row.epoch});
    if (clock != last_clock.end() && row.seq > clock->second.first && row.mote_time_s < clock->second.second) {
      quarantine(s, "clock regression within epoch");
      continue;
    }

    const UtcSeconds utc = anchored_utc(anchor, row.mote_time_s);
    const auto sensors = registry.sensors_on_mote(row.mote_id);
    bool collision = false;
    for (const Sensor* sensor : sensors) {
      if (taken.contains({store.ids.intern(sensor->sensor_id), to_unix(utc)})) collision = true;
    }
    if (collision) {
      quarantine(s, "duplicate sensor timestamp");
      continue;
    }

    if (clock == last_clock.end()) {
      last_clock[{mote, row.epoch}] = {row.seq, row.mote_time_s};
    } else if (row.seq > clock->second.first) {
      clock->second = {row.seq, row.mote_time_s};
    }

    for (const Sensor* sensor : sensors) {
      const SensorLocation loc = registry.locate_sensor(sensor->sensor_id);
      Measurement m;
      m.sensor = store.ids.intern(sensor->sensor_id);
      m.mote = mote;
      m.utc = utc;
      m.raw_value = row.adc[reading_index(sensor->sensor_type)];
      m.lat_deg = loc.coords.lat_deg;
      m.lon_deg = loc.coords.lon_deg;
      m.depth_cm = loc.depth_cm;
      m.mote_time_s = row.mote_time_s;
      m.epoch = row.epoch;
      m.seq = row.seq;
      m.load_version = load_version;
      for (const auto& b : store.bad_data) {
        if (b.sensor_id == sensor->sensor_id && in_interval(utc, b)) m.is_bad = true;
      }
      taken.insert({m.sensor, to_unix(utc)});
      store.measurements.push_back(m);
      ++result.promoted;
    }
  }

  std::string filenames;
  for (const auto& name : sources) {
    if (!filenames.empty()) filenames += ';';
    filenames += name;
  }
  store.load_history.push_back({load_version, filenames, load_time, "promote_level1", join_notes(notes)});
  store.staging.clear();
  return result;
}

CalibrateResult calibrate_pending(Store& store, const Registry& registry, const std::string& calib_version) {
  const Key version = store.ids.intern(calib_version);
  CalibrateResult result;
  std::map<std::string, std::size_t> notes;
  UtcSeconds latest{};

  std::unordered_map<Key, const Sensor*> sensors;
  auto sensor_of = [&](Key k) -> const Sensor* {
    auto it = sensors.find(k);
    if (it != sensors.end()) return it->second;
    const std::string& id = store.ids.str(k);
    const Sensor* s = registry.has_sensor(id) ? &registry.sensor(id) : nullptr;
    sensors.emplace(k, s);
    return s;
  };
  auto skip = [&](const std::string& sensor_id, const std::string& reason) {
    ++notes["sensor " + sensor_id + " " + reason];
    ++result.skipped;
  };
  auto emit = [&](Measurement& m, double value, double std_error) {
    store.calibrated.push_back({m.sensor, m.utc, value, std::max(0.0, std_error), version});
    m.processed = true;
    latest = std::max(latest, m.utc);
    ++result.calibrated;
  };

  // Temperatures first: moisture conversion depends on them.
  std::vector<std::size_t> moisture_rows;
  for (std::size_t i = 0; i < store.measurements.size(); ++i) {
    Measurement& m = store.measurements[i];
    if (m.processed || m.is_bad) continue;
    const Sensor* s = sensor_of(m.sensor);
    if (!s) {
      skip(store.ids.str(m.sensor), "not in registry");
      continue;
    }
    const auto& cal = s->calibration;
    switch (s->sensor_type) {
      case SensorType::soil_temperature:
      case SensorType::box_temperature: {
        if (!cal.thermistor_coeffs) {
          skip(s->sensor_id, "missing thermistor coefficients");
          break;
        }
        try {
          const double r = adc_to_resistance(m.raw_value, cal.reference_resistor_ohms, cal.reference_bias_ohms);
          const Estimate e = thermistor_celsius(r, *cal.thermistor_coeffs);
          emit(m, e.value, s->precision > 0 ? s->precision : e.std_error);
        } catch (const std::domain_error& e) {
          skip(s->sensor_id, e.what());
        }
        break;
      }
      case SensorType::soil_moisture:
        moisture_rows.push_back(i);
        break;
      case SensorType::photo:
        emit(m, m.raw_value, s->precision);
        break;
      case SensorType::battery_voltage:
        emit(m, m.raw_value * kBatteryAdcFullScaleV / kAdcMax, s->precision);
        break;
    }
  }

  if (!moisture_rows.empty()) {
    std::map<std::pair<std::string, std::int64_t>, double> mote_temp;
    std::map<std::pair<std::string, std::int64_t>, std::pair<double, std::size_t>> patch_temp;
    for (const auto& c : store.calibrated) {
      const Sensor* s = sensor_of(c.sensor);
      if (!s || s->sensor_type != SensorType::soil_temperature) continue;
      mote_temp[{s->mote_id, to_unix(c.utc)}] = c.value;
      auto& acc = patch_temp[{registry.mote(s->mote_id).patch_id, floor_div(to_unix(c.utc), 600)}];
      acc.first += c.value;
      ++acc.second;
    }
    for (const std::size_t i : moisture_rows) {
      Measurement& m = store.measurements[i];
      const Sensor* s = sensor_of(m.sensor);
      const auto& cal = s->calibration;
      if (!cal.watermark_coeffs) {
        skip(s->sensor_id, "missing watermark coefficients");
        continue;
      }
      double temp_c = 0;
      if (auto it = mote_temp.find({s->mote_id, to_unix(m.utc)}); it != mote_temp.end()) {
        temp_c = it->second;
      } else if (auto pit = patch_temp.find({registry.mote(s->mote_id).patch_id, floor_div(to_unix(m.utc), 600)});
                 pit != patch_temp.end()) {
        temp_c = pit->second.first / static_cast<double>(pit->second.second);
      } else {
        ++result.deferred;
        continue;
      }
      if (temp_c < cal.watermark_min_temp_c || temp_c > cal.watermark_max_temp_c) {
        skip(s->sensor_id, "soil temperature outside calibration range");
        continue;
      }
      try {
        const double r = adc_to_resistance(m.raw_value, cal.reference_resistor_ohms, cal.reference_bias_ohms);
        const Estimate e = watermark_kpa(r, temp_c, *cal.watermark_coeffs, s->precision);
        emit(m, e.value, e.std_error);
      } catch (const std::domain_error& e) {
        skip(s->sensor_id, e.what());
      }
    }
  }

  if (result.calibrated + result.skipped > 0) {
    store.load_history.push_back(
        {store.next_load_version(), "", latest, "calibrate_pending " + calib_version, join_notes(notes)});
  }
  return result;
}

std::size_t mark_bad(Store& store, const BadDataInterval& interval) {
  if (!(interval.start < interval.end)) throw std::invalid_argument("bad-data interval must have start < end");
  if (std::find(store.bad_data.begin(), store.bad_data.end(), interval) == store.bad_data.end()) {
    store.bad_data.push_back(interval);
  }
  const auto key = store.ids.find(interval.sensor_id);
  if (!key) return 0;

  std::size_t flagged = 0;
  for (auto& m : store.measurements) {
    if (m.sensor == *key && !m.is_bad && in_interval(m.utc, interval)) {
      m.is_bad = true;
      ++flagged;
    }
  }
  std::erase_if(store.calibrated,
                [&](const CalibratedValue& c) { return c.sensor == *key && in_interval(c.utc, interval); });
  std::erase_if(store.dataseries, [&](const DataSeriesCell& c) {
    const UtcSeconds start = c.start();
    return c.sensor == *key && start < interval.end && start + std::chrono::seconds{c.step_s} > interval.start;
  });
  return flagged;
}

std::size_t grid_dataseries(Store& store, std::int32_t step_s, GapPolicy policy) {
  if (step_s <= 0 || 3600 % step_s != 0) throw std::invalid_argument("grid step must divide 3600 s");

  std::unordered_set<SensorTime, SensorTimeHash> bad;
  for (const auto& m : store.measurements) {
    if (m.is_bad) bad.insert({m.sensor, to_unix(m.utc)});
  }
  struct Value {
    Key sensor;
    std::int64_t utc;
    double value;
  };
  std::vector<Value> values;
  values.reserve(store.calibrated.size());
  for (const auto& c : store.calibrated) {
    if (!bad.contains({c.sensor, to_unix(c.utc)})) values.push_back({c.sensor, to_unix(c.utc), c.value});
  }
  std::stable_sort(values.begin(), values.end(),
                   [](const Value& a, const Value& b) { return std::tie(a.sensor, a.utc) < std::tie(b.sensor, b.utc); });
  // The most recent calibration of a (sensor, time) wins.
  std::vector<Value> latest;
  latest.reserve(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i + 1 < values.size() && values[i + 1].sensor == values[i].sensor && values[i + 1].utc == values[i].utc) continue;
    latest.push_back(values[i]);
  }

  std::erase_if(store.dataseries, [&](const DataSeriesCell& c) { return c.step_s == step_s; });
  std::size_t cells = 0;
  std::size_t i = 0;
  while (i < latest.size()) {
    const Key sensor = latest[i].sensor;
    std::vector<DataSeriesCell> series;
    while (i < latest.size() && latest[i].sensor == sensor) {
      const std::int64_t step = floor_div(latest[i].utc, step_s);
      std::size_t j = i;
      while (j < latest.size() && latest[j].sensor == sensor && floor_div(latest[j].utc, step_s) == step) ++j;
      const std::size_t n = j - i;
      DataSeriesCell cell;
      cell.sensor = sensor;
      cell.step_index = step;
      cell.step_s = step_s;
      cell.count = static_cast<std::uint32_t>(n);
      double sum = 0;
      cell.min = latest[i].value;
      cell.max = latest[i].value;
      for (std::size_t k = i; k < j; ++k) {
        sum += latest[k].value;
        cell.min = std::min(cell.min, latest[k].value);
        cell.max = std::max(cell.max, latest[k].value);
      }
      cell.mean = sum / static_cast<double>(n);
      if (n > 1) {
        double ss = 0;
        for (std::size_t k = i; k < j; ++k) ss += (latest[k].value - cell.mean) * (latest[k].value - cell.mean);
        cell.stddev = std::sqrt(ss / static_cast<double>(n - 1));
      }
      cell.mean = std::clamp(cell.mean, cell.min, cell.max);
      series.push_back(cell);
      i = j;
    }
    if (policy.kind == GapPolicy::Kind::interpolate) {
      std::vector<DataSeriesCell> filled;
      for (std::size_t k = 0; k < series.size(); ++k) {
        if (k > 0) {
          const auto& a = series[k - 1];
          const auto& b = series[k];
          const std::int64_t gap = b.step_index - a.step_index - 1;
          if (gap >= 1 && gap <= static_cast<std::int64_t>(policy.max_gap_steps)) {
            for (std::int64_t g = 1; g <= gap; ++g) {
              const double frac = static_cast<double>(g) / static_cast<double>(gap + 1);
              DataSeriesCell cell;
              cell.sensor = sensor;
              cell.step_index = a.step_index + g;
              cell.step_s = step_s;
              cell.mean = a.mean + (b.mean - a.mean) * frac;
              cell.min = cell.mean;
              cell.max = cell.mean;
              cell.interpolated = true;
              filled.push_back(cell);
            }
          }
        }
        filled.push_back(series[k]);
      }
      series = std::move(filled);
    }
    cells += series.size();
    store.dataseries.insert(store.dataseries.end(), series.begin(), series.end());
  }
  std::stable_sort(store.dataseries.begin(), store.dataseries.end(), [](const DataSeriesCell& a, const DataSeriesCell& b) {
    return std::tie(a.step_s, a.sensor, a.step_index) < std::tie(b.step_s, b.sensor, b.step_index);
  });
  return cells;
}

std::string format_weather_events(std::uint8_t events) {
  static constexpr std::pair<WeatherEvent, const char*> kNames[] = {
      {kRain, "rain"}, {kSnow, "snow"}, {kThunderstorm, "thunderstorm"}, {kFog, "fog"}};
  std::string out;
  for (const auto& [bit, name] : kNames) {
    if (events & bit) {
      if (!out.empty()) out += ';';
      out += name;
    }
  }
  return out;
}

WeatherResult ingest_weather(const std::filesystem::path& csv_path, Store& store) {
  std::ifstream in(csv_path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + csv_path.string());
  return ingest_weather(in, store);
}

WeatherResult ingest_weather(std::istream& csv, Store& store) {
  WeatherResult result;
  std::string line;
  if (!std::getline(csv, line)) return result;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kWeatherHeader) throw SchemaError("weather header mismatch: '" + line + "'");

  std::map<Date, WeatherDay> parsed;
  while (std::getline(csv, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    const auto f = split(line, ',');
    if (f.size() != 8) {
      ++result.rejected;
      continue;
    }
    WeatherDay d;
    try {
      d.date = parse_date(trim(f[0]));
    } catch (const std::invalid_argument&) {
      ++result.rejected;
      continue;
    }
    double* targets[] = {&d.tmin_c, &d.tmax_c, &d.tavg_c, &d.precipitation_mm, &d.humidity_pct, &d.pressure_hpa};
    bool ok = true;
    for (std::size_t k = 0; k < 6 && ok; ++k) {
      const auto v = parse_number(trim(f[k + 1]));
      ok = v && std::isfinite(*v);
      if (ok) *targets[k] = *v;
    }
    for (const auto& token : split(f[7], ';')) {
      const auto t = trim(token);
      if (t.empty()) continue;
      if (t == "rain") d.events |= kRain;
      else if (t == "snow") d.events |= kSnow;
      else if (t == "thunderstorm") d.events |= kThunderstorm;
      else if (t == "fog") d.events |= kFog;
      else ok = false;
    }
    if (!ok || d.tmin_c > d.tmax_c || d.tavg_c < d.tmin_c || d.tavg_c > d.tmax_c || d.precipitation_mm < 0) {
      ++result.rejected;
      continue;
    }
    parsed[d.date] = d;
  }
  for (const auto& [date, day] : parsed) store.weather[date] = day;
  result.days = parsed.size();
  return result;
}

std::vector<Level0Row> reconstruct_level0(const Store& store, const Registry& registry) {
  std::map<std::tuple<std::string, std::uint32_t, std::uint64_t>, Level0Row> rows;
  for (const auto& m : store.measurements) {
    const std::string& mote = store.ids.str(m.mote);
    auto [it, fresh] = rows.try_emplace({mote, m.epoch, m.seq});
    Level0Row& row = it->second;
    if (fresh) {
      row.mote_id = mote;
      row.epoch = m.epoch;
      row.seq = m.seq;
      row.mote_time_s = m.mote_time_s;
      if (auto a = store.anchors.find({mote, m.epoch}); a != store.anchors.end()) row.anchor = a->second;
    }
    row.adc[reading_index(registry.sensor(store.ids.str(m.sensor)).sensor_type)] = m.raw_value;
  }
  std::vector<Level0Row> out;
  out.reserve(rows.size());
  for (auto& [key, row] : rows) out.push_back(std::move(row));
  return out;
}

}  // namespace soilnet
