#include "soilnet/cube.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <tuple>
#include <variant>

#include "json.hpp"

#include "soilnet/kvconfig.hpp"

namespace soilnet {
namespace {

using namespace std::chrono;

template <typename E, std::size_t N>
std::optional<E> lookup(const std::array<std::pair<E, std::string_view>, N>& table, std::string_view s) {
  for (const auto& [e, name] : table) {
    if (name == s) return e;
  }
  return std::nullopt;
}

template <typename E, std::size_t N>
std::string_view name_of(const std::array<std::pair<E, std::string_view>, N>& table, E e) {
  for (const auto& [v, name] : table) {
    if (v == e) return name;
  }
  return "?";
}

constexpr std::array<std::pair<TimeLevel, std::string_view>, 7> kTimeLevels{{{TimeLevel::slot, "slot"},
                                                                             {TimeLevel::hour, "hour"},
                                                                             {TimeLevel::date, "date"},
                                                                             {TimeLevel::week, "week"},
                                                                             {TimeLevel::season, "season"},
                                                                             {TimeLevel::year, "year"},
                                                                             {TimeLevel::all, "all"}}};
constexpr std::array<std::pair<LocationLevel, std::string_view>, 5> kLocationLevels{{{LocationLevel::sensor, "sensor"},
                                                                                     {LocationLevel::mote, "mote"},
                                                                                     {LocationLevel::patch, "patch"},
                                                                                     {LocationLevel::site, "site"},
                                                                                     {LocationLevel::all, "all"}}};
constexpr std::array<std::pair<Aggregate, std::string_view>, 6> kAggregates{{{Aggregate::average, "average"},
                                                                            {Aggregate::min, "min"},
                                                                            {Aggregate::max, "max"},
                                                                            {Aggregate::median, "median"},
                                                                            {Aggregate::stddev, "stddev"},
                                                                            {Aggregate::count, "count"}}};
constexpr std::array<std::pair<CyclicGroup, std::string_view>, 3> kCyclic{{{CyclicGroup::none, "none"},
                                                                          {CyclicGroup::hour_of_day, "hour_of_day"},
                                                                          {CyclicGroup::week_of_year, "week_of_year"}}};
constexpr std::array<std::string_view, 6> kWeatherFields{"tmin_c",           "tmax_c",       "tavg_c",
                                                         "precipitation_mm", "humidity_pct", "pressure_hpa"};

double weather_value(const WeatherDay& d, std::string_view field) {
  if (field == "tmin_c") return d.tmin_c;
  if (field == "tmax_c") return d.tmax_c;
  if (field == "tavg_c") return d.tavg_c;
  if (field == "precipitation_mm") return d.precipitation_mm;
  if (field == "humidity_pct") return d.humidity_pct;
  return d.pressure_hpa;
}

std::pair<int, unsigned> iso_week(Date d) {
  const weekday wd{d};
  const int iso_wd = static_cast<int>(wd.iso_encoding());
  const Date thursday = d + days{4 - iso_wd};
  const year_month_day ymd{thursday};
  const Date jan1 = sys_days{ymd.year() / January / 1};
  const auto week = static_cast<unsigned>((thursday - jan1).count() / 7 + 1);
  return {static_cast<int>(ymd.year()), week};
}

bool numeric_field(std::string_view f) {
  return f == "depth_cm" || f == "hour" || f == "year" || f == "interpolated";
}

bool sensor_only_field(std::string_view f) {
  return f == "patch" || f == "mote" || f == "sensor" || f == "depth_cm" || f == "land_cover" ||
         f == "manufacturer" || f == "hour" || f == "interpolated";
}

bool known_field(std::string_view f) {
  return sensor_only_field(f) || f == "site" || f == "time" || f == "date" || f == "week" || f == "season" ||
         f == "year";
}

template <typename T>
bool compare(const T& a, Filter::Op op, const T& b) {
  switch (op) {
    case Filter::Op::eq: return a == b;
    case Filter::Op::ne: return a != b;
    case Filter::Op::lt: return a < b;
    case Filter::Op::le: return a <= b;
    case Filter::Op::gt: return a > b;
    case Filter::Op::ge: return a >= b;
  }
  return false;
}

struct Contribution {
  double mean, min, max, stddev, weight;
};

double aggregate(Aggregate agg, std::vector<Contribution>& cs) {
  double w = 0;
  for (const auto& c : cs) w += c.weight;
  switch (agg) {
    case Aggregate::count: return w;
    case Aggregate::min: {
      double v = cs.front().min;
      for (const auto& c : cs) v = std::min(v, c.min);
      return v;
    }
    case Aggregate::max: {
      double v = cs.front().max;
      for (const auto& c : cs) v = std::max(v, c.max);
      return v;
    }
    case Aggregate::average: {
      double s = 0;
      for (const auto& c : cs) s += c.weight * c.mean;
      return s / w;
    }
    case Aggregate::stddev: {
      if (w <= 1) return 0;
      double s = 0;
      for (const auto& c : cs) s += c.weight * c.mean;
      const double grand = s / w;
      double ss = 0;
      for (const auto& c : cs) {
        ss += (c.weight - 1) * c.stddev * c.stddev + c.weight * (c.mean - grand) * (c.mean - grand);
      }
      return std::sqrt(std::max(0.0, ss) / (w - 1));
    }
    case Aggregate::median: {
      std::sort(cs.begin(), cs.end(), [](const Contribution& a, const Contribution& b) { return a.mean < b.mean; });
      const double half = w / 2;
      double cum = 0;
      for (std::size_t i = 0; i < cs.size(); ++i) {
        cum += cs[i].weight;
        if (cum > half) return cs[i].mean;
        if (cum == half) {
          std::size_t j = i + 1;
          while (j < cs.size() && cs[j].weight == 0) ++j;
          return j < cs.size() ? (cs[i].mean + cs[j].mean) / 2 : cs[i].mean;
        }
      }
      return cs.back().mean;
    }
  }
  return 0;
}

std::string fmt_value(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

}  // namespace

std::string_view to_string(TimeLevel v) { return name_of(kTimeLevels, v); }
std::string_view to_string(LocationLevel v) { return name_of(kLocationLevels, v); }
std::string_view to_string(Aggregate v) { return name_of(kAggregates, v); }
std::string_view to_string(CyclicGroup v) { return name_of(kCyclic, v); }
std::optional<TimeLevel> time_level_from_string(std::string_view s) { return lookup(kTimeLevels, s); }
std::optional<LocationLevel> location_level_from_string(std::string_view s) { return lookup(kLocationLevels, s); }
std::optional<Aggregate> aggregate_from_string(std::string_view s) { return lookup(kAggregates, s); }
std::optional<CyclicGroup> cyclic_group_from_string(std::string_view s) { return lookup(kCyclic, s); }

std::string Measure::name() const {
  return sensor_type ? std::string(to_string(*sensor_type)) : weather_field;
}

std::optional<Measure> measure_from_string(std::string_view s) {
  if (auto t = sensor_type_from_string(s)) return Measure::sensor(*t);
  for (const auto f : kWeatherFields) {
    if (f == s) return Measure::weather(std::string(s));
  }
  return std::nullopt;
}

Filter parse_filter(std::string_view text) {
  const auto pos = text.find_first_of("<>=!");
  if (pos == std::string_view::npos) throw QueryError("filter needs an operator: '" + std::string(text) + "'");
  Filter f;
  f.field = std::string(trim(text.substr(0, pos)));
  std::string_view rest = text.substr(pos);
  static constexpr std::pair<std::string_view, Filter::Op> kOps[] = {
      {"<=", Filter::Op::le}, {">=", Filter::Op::ge}, {"!=", Filter::Op::ne},
      {"=", Filter::Op::eq},  {"<", Filter::Op::lt},  {">", Filter::Op::gt}};
  bool matched = false;
  for (const auto& [sym, op] : kOps) {
    if (rest.starts_with(sym)) {
      f.op = op;
      rest.remove_prefix(sym.size());
      matched = true;
      break;
    }
  }
  f.value = std::string(trim(rest));
  if (!matched || f.field.empty() || f.value.empty()) {
    throw QueryError("malformed filter: '" + std::string(text) + "'");
  }
  if (!known_field(f.field)) throw QueryError("unknown filter field '" + f.field + "'");
  if (numeric_field(f.field) && !parse_number(f.value)) {
    throw QueryError("filter on '" + f.field + "' needs a number");
  }
  return f;
}

std::string iso_week_key(Date d) {
  const auto [y, w] = iso_week(d);
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-W%02u", y, w);
  return buf;
}

std::string season_key(Date d) {
  const year_month_day ymd{d};
  const unsigned m = static_cast<unsigned>(ymd.month());
  int y = static_cast<int>(ymd.year());
  const char* name = "DJF";
  if (m == 12) ++y;
  else if (m >= 3 && m <= 5) name = "MAM";
  else if (m >= 6 && m <= 8) name = "JJA";
  else if (m >= 9 && m <= 11) name = "SON";
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%s", y, name);
  return buf;
}

std::string time_key(UtcSeconds t, TimeLevel level, std::int32_t) {
  const Date d = floor<days>(t);
  char buf[32];
  switch (level) {
    case TimeLevel::slot: return format_utc(t);
    case TimeLevel::hour: {
      const hh_mm_ss hms{t - d};
      std::snprintf(buf, sizeof buf, "%sT%02d", format_date(d).c_str(), static_cast<int>(hms.hours().count()));
      return buf;
    }
    case TimeLevel::date: return format_date(d);
    case TimeLevel::week: return iso_week_key(d);
    case TimeLevel::season: return season_key(d);
    case TimeLevel::year:
      std::snprintf(buf, sizeof buf, "%04d", static_cast<int>(year_month_day{d}.year()));
      return buf;
    case TimeLevel::all: return "all";
  }
  return {};
}

std::string cycle_key(UtcSeconds t, CyclicGroup group) {
  const Date d = floor<days>(t);
  char buf[16];
  switch (group) {
    case CyclicGroup::none: return {};
    case CyclicGroup::hour_of_day:
      std::snprintf(buf, sizeof buf, "%02d", static_cast<int>(hh_mm_ss{t - d}.hours().count()));
      return buf;
    case CyclicGroup::week_of_year:
      std::snprintf(buf, sizeof buf, "W%02u", iso_week(d).second);
      return buf;
  }
  return {};
}

Cube Cube::build(std::span<const DataSeriesCell> cells, const StringPool& ids,
                 const std::map<Date, WeatherDay>& weather, const Registry& registry) {
  Cube cube;
  if (!cells.empty()) cube.step_s_ = cells.front().step_s;
  std::map<Key, std::uint32_t> loc_index;
  for (const auto& c : cells) {
    if (c.step_s != cube.step_s_) throw MixedStepError("cube input mixes grid steps");
    auto [it, fresh] = loc_index.try_emplace(c.sensor, static_cast<std::uint32_t>(cube.locations_.size()));
    if (fresh) {
      const Sensor& s = registry.sensor(ids.str(c.sensor));
      const Mote& m = registry.mote(s.mote_id);
      const Patch& p = registry.patch(m.patch_id);
      cube.locations_.push_back({s.sensor_id, m.mote_id, p.patch_id, p.site_id, p.land_cover, s.manufacturer,
                                 s.depth_cm, s.sensor_type});
    }
    cube.facts_.push_back({it->second, c.step_index * c.step_s, c.mean, c.min, c.max, c.stddev, c.count,
                           c.interpolated});
  }
  for (const auto& site : registry.sites()) cube.sites_.push_back(site.site_id);
  for (std::uint32_t s = 0; s < cube.sites_.size(); ++s) {
    for (const auto& [date, day] : weather) cube.weather_.push_back({s, date, day});
  }
  return cube;
}

Cube Cube::build(const Store& store, const Registry& registry, std::int32_t step_s) {
  std::vector<DataSeriesCell> cells;
  for (const auto& c : store.dataseries) {
    if (c.step_s == step_s) cells.push_back(c);
  }
  Cube cube = build(cells, store.ids, store.weather, registry);
  cube.step_s_ = step_s;
  return cube;
}

std::vector<CellResult> Cube::query(const CubeQuery& q) const {
  const bool weather = q.measure.is_weather();
  if (weather) {
    if (std::find(kWeatherFields.begin(), kWeatherFields.end(), q.measure.weather_field) == kWeatherFields.end()) {
      throw QueryError("unknown weather field '" + q.measure.weather_field + "'");
    }
    if (q.time_level == TimeLevel::slot || q.time_level == TimeLevel::hour) {
      throw QueryError("weather is daily; time level must be date or coarser");
    }
    if (q.location_level != LocationLevel::site && q.location_level != LocationLevel::all) {
      throw QueryError("weather is per site; location level must be site or all");
    }
    if (q.cyclic_group == CyclicGroup::hour_of_day) throw QueryError("weather has no hour-of-day cycle");
  }
  if (q.cyclic_group != CyclicGroup::none && (q.time_level == TimeLevel::slot || q.time_level == TimeLevel::hour)) {
    throw QueryError("cyclic grouping needs a time level of date or coarser");
  }
  for (const auto& f : q.filters) {
    if (!known_field(f.field)) throw QueryError("unknown filter field '" + f.field + "'");
    if (weather && sensor_only_field(f.field)) throw QueryError("filter '" + f.field + "' does not apply to weather");
  }

  struct Group {
    std::vector<Contribution> parts;
    std::int64_t first = 0;
  };
  std::map<std::tuple<std::string, std::string, std::string>, Group> groups;

  auto passes = [&](auto&& attr) {
    for (const auto& f : q.filters) {
      const std::string v = attr(f.field);
      if (numeric_field(f.field)) {
        if (!compare(*parse_number(v), f.op, *parse_number(f.value))) return false;
      } else if (!compare(v, f.op, f.value)) {
        return false;
      }
    }
    return true;
  };
  auto add = [&](std::string tk, std::string ck, std::string lk, std::int64_t start, Contribution c) {
    auto [it, fresh] = groups.try_emplace({std::move(tk), std::move(ck), std::move(lk)});
    if (fresh || start < it->second.first) it->second.first = start;
    it->second.parts.push_back(c);
  };

  if (weather) {
    for (const auto& w : weather_) {
      const UtcSeconds t{w.date};
      const std::string& site = sites_[w.site];
      auto attr = [&](const std::string& field) -> std::string {
        if (field == "site") return site;
        if (field == "time") return format_utc(t);
        if (field == "week") return iso_week_key(w.date);
        if (field == "season") return season_key(w.date);
        if (field == "year") return time_key(t, TimeLevel::year);
        return format_date(w.date);
      };
      if (!passes(attr)) continue;
      const double v = weather_value(w.day, q.measure.weather_field);
      add(time_key(t, q.time_level), cycle_key(t, q.cyclic_group),
          q.location_level == LocationLevel::site ? site : "all", to_unix(t), {v, v, v, 0.0, 1.0});
    }
  } else {
    for (const auto& f : facts_) {
      const LocationDim& loc = locations_[f.location];
      if (loc.type != *q.measure.sensor_type) continue;
      if (f.interpolated && !q.include_interpolated) continue;
      const UtcSeconds t = from_unix(f.start);
      auto attr = [&](const std::string& field) -> std::string {
        if (field == "site") return loc.site;
        if (field == "patch") return loc.patch;
        if (field == "mote") return loc.mote;
        if (field == "sensor") return loc.sensor;
        if (field == "depth_cm") return std::to_string(loc.depth_cm);
        if (field == "land_cover") return loc.land_cover;
        if (field == "manufacturer") return loc.manufacturer;
        if (field == "interpolated") return f.interpolated ? "1" : "0";
        if (field == "hour") return cycle_key(t, CyclicGroup::hour_of_day);
        if (field == "time") return format_utc(t);
        if (field == "date") return time_key(t, TimeLevel::date);
        if (field == "week") return time_key(t, TimeLevel::week);
        if (field == "season") return time_key(t, TimeLevel::season);
        return time_key(t, TimeLevel::year);
      };
      if (!passes(attr)) continue;
      std::string lk;
      switch (q.location_level) {
        case LocationLevel::sensor: lk = loc.sensor; break;
        case LocationLevel::mote: lk = loc.mote; break;
        case LocationLevel::patch: lk = loc.patch; break;
        case LocationLevel::site: lk = loc.site; break;
        case LocationLevel::all: lk = "all"; break;
      }
      const double w = f.interpolated ? 1.0 : static_cast<double>(f.count);
      add(time_key(t, q.time_level, step_s_), cycle_key(t, q.cyclic_group), std::move(lk), f.start,
          {f.mean, f.min, f.max, f.stddev, w});
    }
  }

  std::vector<CellResult> out;
  out.reserve(groups.size());
  for (auto& [key, g] : groups) {
    double w = 0;
    for (const auto& c : g.parts) w += c.weight;
    if (w <= 0) continue;
    CellResult r;
    r.time_key = std::get<0>(key);
    r.cycle_key = std::get<1>(key);
    r.location_key = std::get<2>(key);
    r.value = aggregate(q.aggregate, g.parts);
    r.count = static_cast<std::uint64_t>(std::llround(w));
    r.bucket_start = from_unix(g.first);
    out.push_back(std::move(r));
  }
  return out;
}

std::string results_to_csv(const std::vector<CellResult>& rows) {
  std::string out = "time_key,cycle_key,location_key,value,count,bucket_start\n";
  for (const auto& r : rows) {
    out += r.time_key + ',' + r.cycle_key + ',' + r.location_key + ',' + fmt_value(r.value) + ',' +
           std::to_string(r.count) + ',' + format_utc(r.bucket_start) + '\n';
  }
  return out;
}

std::string results_to_json(const std::vector<CellResult>& rows) {
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const auto& r : rows) {
    nlohmann::ordered_json o;
    o["time_key"] = r.time_key;
    o["cycle_key"] = r.cycle_key;
    o["location_key"] = r.location_key;
    o["value"] = r.value;
    o["count"] = r.count;
    o["bucket_start"] = format_utc(r.bucket_start);
    arr.push_back(std::move(o));
  }
  return arr.dump(2) + "\n";
}

}  // namespace soilnet
