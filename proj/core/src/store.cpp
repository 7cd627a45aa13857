#include "soilnet/store.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>

namespace soilnet {
namespace {

enum class ColType : std::uint8_t { u8 = 1, u16, u32, u64, i32, i64, f64, str };

enum class TableTag : std::uint8_t {
  ids = 1, staging, measurement, calibrated, dataseries, load_history, bad_data, weather, quarantine, anchors
};

constexpr char kMagic[4] = {'S', 'N', 'S', 'T'};

class TableWriter {
 public:
  TableWriter(TableTag tag, std::uint64_t rows) : rows_(rows) {
    buf_.append(kMagic, 4);
    put<std::uint8_t>(kStoreFormatVersion);
    put<std::uint8_t>(static_cast<std::uint8_t>(tag));
    put<std::uint16_t>(0);
    put<std::uint64_t>(rows);
    columns_at_ = buf_.size();
    put<std::uint32_t>(0);
  }

  template <ColType T, typename Range, typename Proj>
  void column(std::string_view name, const Range& rows, Proj proj) {
    put<std::uint8_t>(static_cast<std::uint8_t>(T));
    put<std::uint16_t>(static_cast<std::uint16_t>(name.size()));
    buf_.append(name);
    std::uint64_t n = 0;
    for (const auto& row : rows) {
      const auto v = proj(row);
      if constexpr (T == ColType::u8) put<std::uint8_t>(static_cast<std::uint8_t>(v));
      else if constexpr (T == ColType::u16) put<std::uint16_t>(static_cast<std::uint16_t>(v));
      else if constexpr (T == ColType::u32) put<std::uint32_t>(static_cast<std::uint32_t>(v));
      else if constexpr (T == ColType::u64) put<std::uint64_t>(static_cast<std::uint64_t>(v));
      else if constexpr (T == ColType::i32) put<std::uint32_t>(static_cast<std::uint32_t>(static_cast<std::int32_t>(v)));
      else if constexpr (T == ColType::i64) put<std::uint64_t>(static_cast<std::uint64_t>(static_cast<std::int64_t>(v)));
      else if constexpr (T == ColType::f64) put<std::uint64_t>(std::bit_cast<std::uint64_t>(static_cast<double>(v)));
      else {
        const std::string_view s = v;
        put<std::uint32_t>(static_cast<std::uint32_t>(s.size()));
        buf_.append(s);
      }
      ++n;
    }
    if (n != rows_) throw std::logic_error("column row count mismatch");
    ++columns_;
  }

  void write(const std::filesystem::path& path) {
    for (int i = 0; i < 4; ++i) buf_[columns_at_ + i] = static_cast<char>((columns_ >> (8 * i)) & 0xFF);
    const auto tmp = path.string() + ".tmp";
    {
      std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
      if (!out) throw std::runtime_error("cannot write " + tmp);
      out.write(buf_.data(), static_cast<std::streamsize>(buf_.size()));
      if (!out) throw std::runtime_error("write failed: " + tmp);
    }
    std::filesystem::rename(tmp, path);
  }

 private:
  template <typename U>
  void put(U v) {
    for (std::size_t i = 0; i < sizeof(U); ++i) buf_.push_back(static_cast<char>((static_cast<std::uint64_t>(v) >> (8 * i)) & 0xFF));
  }

  std::string buf_;
  std::uint64_t rows_;
  std::size_t columns_at_ = 0;
  std::uint32_t columns_ = 0;
};

struct Column {
  ColType type{};
  std::vector<std::uint64_t> ints;
  std::vector<double> reals;
  std::vector<std::string> strs;
};

class TableReader {
 public:
  TableReader(const std::filesystem::path& path, TableTag tag) : path_(path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw StoreFormatError("cannot open " + path.string());
    data_.assign(std::istreambuf_iterator<char>(in), {});
    if (data_.size() < 20 || std::memcmp(data_.data(), kMagic, 4) != 0) fail("bad magic");
    pos_ = 4;
    if (get<std::uint8_t>() != kStoreFormatVersion) fail("unsupported format version");
    if (get<std::uint8_t>() != static_cast<std::uint8_t>(tag)) fail("unexpected table tag");
    get<std::uint16_t>();
    rows_ = get<std::uint64_t>();
    const auto ncols = get<std::uint32_t>();
    for (std::uint32_t c = 0; c < ncols; ++c) read_column();
    if (pos_ != data_.size()) fail("trailing bytes");
  }

  std::size_t rows() const { return static_cast<std::size_t>(rows_); }

  const std::vector<std::uint64_t>& ints(const std::string& name) const {
    const Column& c = col(name);
    if (c.type == ColType::f64 || c.type == ColType::str) fail("column '" + name + "' is not integral");
    return c.ints;
  }
  const std::vector<double>& reals(const std::string& name) const {
    const Column& c = col(name);
    if (c.type != ColType::f64) fail("column '" + name + "' is not f64");
    return c.reals;
  }
  const std::vector<std::string>& strs(const std::string& name) const {
    const Column& c = col(name);
    if (c.type != ColType::str) fail("column '" + name + "' is not a string column");
    return c.strs;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const {
    throw StoreFormatError(path_.string() + ": " + what);
  }

  const Column& col(const std::string& name) const {
    const auto it = columns_.find(name);
    if (it == columns_.end()) fail("missing column '" + name + "'");
    return it->second;
  }

  template <typename U>
  U get() {
    if (pos_ + sizeof(U) > data_.size()) fail("truncated file");
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(data_[pos_ + i])) << (8 * i);
    pos_ += sizeof(U);
    return static_cast<U>(v);
  }

  std::string get_bytes(std::size_t n) {
    if (pos_ + n > data_.size()) fail("truncated file");
    std::string s = data_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  void read_column() {
    Column c;
    c.type = static_cast<ColType>(get<std::uint8_t>());
    const std::string name = get_bytes(get<std::uint16_t>());
    for (std::uint64_t r = 0; r < rows_; ++r) {
      switch (c.type) {
        case ColType::u8: c.ints.push_back(get<std::uint8_t>()); break;
        case ColType::u16: c.ints.push_back(get<std::uint16_t>()); break;
        case ColType::u32:
        case ColType::i32: {
          const auto raw = get<std::uint32_t>();
          c.ints.push_back(c.type == ColType::i32
                               ? static_cast<std::uint64_t>(static_cast<std::int64_t>(static_cast<std::int32_t>(raw)))
                               : raw);
          break;
        }
        case ColType::u64:
        case ColType::i64: c.ints.push_back(get<std::uint64_t>()); break;
        case ColType::f64: c.reals.push_back(std::bit_cast<double>(get<std::uint64_t>())); break;
        case ColType::str: c.strs.push_back(get_bytes(get<std::uint32_t>())); break;
        default: fail("unknown column type");
      }
    }
    if (!columns_.emplace(name, std::move(c)).second) fail("duplicate column '" + name + "'");
  }

  std::filesystem::path path_;
  std::string data_;
  std::size_t pos_ = 0;
  std::uint64_t rows_ = 0;
  std::map<std::string, Column> columns_;
};

std::int64_t as_i64(std::uint64_t v) { return static_cast<std::int64_t>(v); }

template <typename Row>
void write_level0_columns(TableWriter& w, const std::vector<Row>& rows) {
  w.column<ColType::str>("download_id", rows, [](const Row& r) -> std::string_view { return r.row.download_id; });
  w.column<ColType::str>("mote_id", rows, [](const Row& r) -> std::string_view { return r.row.mote_id; });
  w.column<ColType::u32>("epoch", rows, [](const Row& r) { return r.row.epoch; });
  w.column<ColType::u64>("seq", rows, [](const Row& r) { return r.row.seq; });
  w.column<ColType::u32>("mote_time_s", rows, [](const Row& r) { return r.row.mote_time_s; });
  for (std::size_t i = 0; i < kReadingCount; ++i) {
    w.column<ColType::u16>("adc" + std::to_string(i), rows, [i](const Row& r) { return r.row.adc[i]; });
  }
  w.column<ColType::u32>("anchor_mote_time_s", rows, [](const Row& r) { return r.row.anchor.mote_time_s; });
  w.column<ColType::i64>("anchor_utc", rows, [](const Row& r) { return to_unix(r.row.anchor.utc); });
}

Level0Row read_level0_row(const TableReader& t, std::size_t i) {
  Level0Row r;
  r.download_id = t.strs("download_id")[i];
  r.mote_id = t.strs("mote_id")[i];
  r.epoch = static_cast<std::uint32_t>(t.ints("epoch")[i]);
  r.seq = t.ints("seq")[i];
  r.mote_time_s = static_cast<std::uint32_t>(t.ints("mote_time_s")[i]);
  for (std::size_t k = 0; k < kReadingCount; ++k) {
    r.adc[k] = static_cast<std::uint16_t>(t.ints("adc" + std::to_string(k))[i]);
  }
  r.anchor.mote_time_s = static_cast<std::uint32_t>(t.ints("anchor_mote_time_s")[i]);
  r.anchor.utc = from_unix(as_i64(t.ints("anchor_utc")[i]));
  return r;
}

}  // namespace

Key StringPool::intern(std::string_view s) {
  const auto it = index_.find(std::string(s));
  if (it != index_.end()) return it->second;
  const Key k = static_cast<Key>(values_.size());
  values_.emplace_back(s);
  index_.emplace(values_.back(), k);
  return k;
}

std::optional<Key> StringPool::find(std::string_view s) const {
  const auto it = index_.find(std::string(s));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::size_t RecordKeyHash::operator()(const RecordKey& k) const noexcept {
  std::uint64_t h = k.seq * 0x9E3779B97F4A7C15ULL;
  h ^= (static_cast<std::uint64_t>(k.mote) << 32 | k.epoch) + 0x7F4A7C15ULL + (h << 6) + (h >> 2);
  return static_cast<std::size_t>(h);
}

std::uint64_t Store::next_load_version() const {
  std::uint64_t v = 0;
  for (const auto& r : load_history) v = std::max(v, r.load_version);
  return v + 1;
}

const LoadRecord* Store::load_record(std::uint64_t version) const {
  for (const auto& r : load_history) {
    if (r.load_version == version) return &r;
  }
  return nullptr;
}

void Store::rebuild_seen() {
  seen_.clear();
  for (const auto& m : measurements) seen_.insert({m.mote, m.epoch, m.seq});
  for (const auto& s : staging) seen_.insert({ids.intern(s.row.mote_id), s.row.epoch, s.row.seq});
  for (const auto& q : quarantine) seen_.insert({ids.intern(q.row.mote_id), q.row.epoch, q.row.seq});
}

void Store::save(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);
  {
    TableWriter w(TableTag::ids, ids.size());
    w.column<ColType::str>("value", ids.values(), [](const std::string& s) -> std::string_view { return s; });
    w.write(dir / "ids.tbl");
  }
  {
    TableWriter w(TableTag::staging, staging.size());
    write_level0_columns(w, staging);
    w.column<ColType::str>("source", staging, [](const StagedRow& r) -> std::string_view { return r.source; });
    w.write(dir / "staging.tbl");
  }
  {
    const auto& rows = measurements;
    TableWriter w(TableTag::measurement, rows.size());
    w.column<ColType::u32>("sensor", rows, [](const Measurement& m) { return m.sensor; });
    w.column<ColType::u32>("mote", rows, [](const Measurement& m) { return m.mote; });
    w.column<ColType::i64>("utc", rows, [](const Measurement& m) { return to_unix(m.utc); });
    w.column<ColType::u16>("raw_value", rows, [](const Measurement& m) { return m.raw_value; });
    w.column<ColType::f64>("lat_deg", rows, [](const Measurement& m) { return m.lat_deg; });
    w.column<ColType::f64>("lon_deg", rows, [](const Measurement& m) { return m.lon_deg; });
    w.column<ColType::i32>("depth_cm", rows, [](const Measurement& m) { return m.depth_cm; });
    w.column<ColType::u32>("mote_time_s", rows, [](const Measurement& m) { return m.mote_time_s; });
    w.column<ColType::u32>("epoch", rows, [](const Measurement& m) { return m.epoch; });
    w.column<ColType::u64>("seq", rows, [](const Measurement& m) { return m.seq; });
    w.column<ColType::u64>("load_version", rows, [](const Measurement& m) { return m.load_version; });
    w.column<ColType::u8>("processed", rows, [](const Measurement& m) { return m.processed; });
    w.column<ColType::u8>("is_bad", rows, [](const Measurement& m) { return m.is_bad; });
    w.write(dir / "measurement.tbl");
  }
  {
    const auto& rows = calibrated;
    TableWriter w(TableTag::calibrated, rows.size());
    w.column<ColType::u32>("sensor", rows, [](const CalibratedValue& c) { return c.sensor; });
    w.column<ColType::i64>("utc", rows, [](const CalibratedValue& c) { return to_unix(c.utc); });
    w.column<ColType::f64>("value", rows, [](const CalibratedValue& c) { return c.value; });
    w.column<ColType::f64>("std_error", rows, [](const CalibratedValue& c) { return c.std_error; });
    w.column<ColType::u32>("calib_version", rows, [](const CalibratedValue& c) { return c.calib_version; });
    w.write(dir / "calibrated.tbl");
  }
  {
    const auto& rows = dataseries;
    TableWriter w(TableTag::dataseries, rows.size());
    w.column<ColType::u32>("sensor", rows, [](const DataSeriesCell& c) { return c.sensor; });
    w.column<ColType::i64>("step_index", rows, [](const DataSeriesCell& c) { return c.step_index; });
    w.column<ColType::i32>("step_s", rows, [](const DataSeriesCell& c) { return c.step_s; });
    w.column<ColType::f64>("mean", rows, [](const DataSeriesCell& c) { return c.mean; });
    w.column<ColType::f64>("min", rows, [](const DataSeriesCell& c) { return c.min; });
    w.column<ColType::f64>("max", rows, [](const DataSeriesCell& c) { return c.max; });
    w.column<ColType::f64>("stddev", rows, [](const DataSeriesCell& c) { return c.stddev; });
    w.column<ColType::u32>("count", rows, [](const DataSeriesCell& c) { return c.count; });
    w.column<ColType::u8>("interpolated", rows, [](const DataSeriesCell& c) { return c.interpolated; });
    w.write(dir / "dataseries.tbl");
  }
  {
    const auto& rows = load_history;
    TableWriter w(TableTag::load_history, rows.size());
    w.column<ColType::u64>("load_version", rows, [](const LoadRecord& r) { return r.load_version; });
    w.column<ColType::str>("filename", rows, [](const LoadRecord& r) -> std::string_view { return r.filename; });
    w.column<ColType::i64>("load_time", rows, [](const LoadRecord& r) { return to_unix(r.load_time); });
    w.column<ColType::str>("procedure_name", rows, [](const LoadRecord& r) -> std::string_view { return r.procedure_name; });
    w.column<ColType::str>("error_notes", rows, [](const LoadRecord& r) -> std::string_view { return r.error_notes; });
    w.write(dir / "load_history.tbl");
  }
  {
    const auto& rows = bad_data;
    TableWriter w(TableTag::bad_data, rows.size());
    w.column<ColType::str>("sensor_id", rows, [](const BadDataInterval& b) -> std::string_view { return b.sensor_id; });
    w.column<ColType::i64>("start", rows, [](const BadDataInterval& b) { return to_unix(b.start); });
    w.column<ColType::i64>("end", rows, [](const BadDataInterval& b) { return to_unix(b.end); });
    w.column<ColType::str>("reason", rows, [](const BadDataInterval& b) -> std::string_view { return b.reason; });
    w.write(dir / "bad_data.tbl");
  }
  {
    std::vector<WeatherDay> rows;
    for (const auto& [d, w] : weather) rows.push_back(w);
    TableWriter w(TableTag::weather, rows.size());
    w.column<ColType::i64>("date", rows, [](const WeatherDay& d) { return d.date.time_since_epoch().count(); });
    w.column<ColType::f64>("tmin_c", rows, [](const WeatherDay& d) { return d.tmin_c; });
    w.column<ColType::f64>("tmax_c", rows, [](const WeatherDay& d) { return d.tmax_c; });
    w.column<ColType::f64>("tavg_c", rows, [](const WeatherDay& d) { return d.tavg_c; });
    w.column<ColType::f64>("precipitation_mm", rows, [](const WeatherDay& d) { return d.precipitation_mm; });
    w.column<ColType::f64>("humidity_pct", rows, [](const WeatherDay& d) { return d.humidity_pct; });
    w.column<ColType::f64>("pressure_hpa", rows, [](const WeatherDay& d) { return d.pressure_hpa; });
    w.column<ColType::u8>("events", rows, [](const WeatherDay& d) { return d.events; });
    w.write(dir / "weather.tbl");
  }
  {
    TableWriter w(TableTag::quarantine, quarantine.size());
    write_level0_columns(w, quarantine);
    w.column<ColType::str>("reason", quarantine, [](const QuarantinedRow& r) -> std::string_view { return r.reason; });
    w.write(dir / "quarantine.tbl");
  }
  {
    std::vector<std::pair<std::pair<std::string, std::uint32_t>, TimeAnchor>> rows(anchors.begin(), anchors.end());
    using A = decltype(rows)::value_type;
    TableWriter w(TableTag::anchors, rows.size());
    w.column<ColType::str>("mote_id", rows, [](const A& a) -> std::string_view { return a.first.first; });
    w.column<ColType::u32>("epoch", rows, [](const A& a) { return a.first.second; });
    w.column<ColType::u32>("mote_time_s", rows, [](const A& a) { return a.second.mote_time_s; });
    w.column<ColType::i64>("utc", rows, [](const A& a) { return to_unix(a.second.utc); });
    w.write(dir / "anchors.tbl");
  }
}

Store Store::open(const std::filesystem::path& dir) {
  Store s;
  if (!std::filesystem::exists(dir / "ids.tbl")) return s;
  {
    TableReader t(dir / "ids.tbl", TableTag::ids);
    for (const auto& v : t.strs("value")) s.ids.intern(v);
  }
  {
    TableReader t(dir / "staging.tbl", TableTag::staging);
    for (std::size_t i = 0; i < t.rows(); ++i) s.staging.push_back({read_level0_row(t, i), t.strs("source")[i]});
  }
  {
    TableReader t(dir / "measurement.tbl", TableTag::measurement);
    s.measurements.resize(t.rows());
    const auto& sensor = t.ints("sensor");
    const auto& mote = t.ints("mote");
    const auto& utc = t.ints("utc");
    const auto& raw = t.ints("raw_value");
    const auto& lat = t.reals("lat_deg");
    const auto& lon = t.reals("lon_deg");
    const auto& depth = t.ints("depth_cm");
    const auto& mt = t.ints("mote_time_s");
    const auto& epoch = t.ints("epoch");
    const auto& seq = t.ints("seq");
    const auto& lv = t.ints("load_version");
    const auto& processed = t.ints("processed");
    const auto& bad = t.ints("is_bad");
    for (std::size_t i = 0; i < t.rows(); ++i) {
      auto& m = s.measurements[i];
      m.sensor = static_cast<Key>(sensor[i]);
      m.mote = static_cast<Key>(mote[i]);
      m.utc = from_unix(as_i64(utc[i]));
      m.raw_value = static_cast<std::uint16_t>(raw[i]);
      m.lat_deg = lat[i];
      m.lon_deg = lon[i];
      m.depth_cm = static_cast<std::int32_t>(as_i64(depth[i]));
      m.mote_time_s = static_cast<std::uint32_t>(mt[i]);
      m.epoch = static_cast<std::uint32_t>(epoch[i]);
      m.seq = seq[i];
      m.load_version = lv[i];
      m.processed = processed[i] != 0;
      m.is_bad = bad[i] != 0;
    }
  }
  {
    TableReader t(dir / "calibrated.tbl", TableTag::calibrated);
    for (std::size_t i = 0; i < t.rows(); ++i) {
      s.calibrated.push_back({static_cast<Key>(t.ints("sensor")[i]), from_unix(as_i64(t.ints("utc")[i])),
                              t.reals("value")[i], t.reals("std_error")[i],
                              static_cast<Key>(t.ints("calib_version")[i])});
    }
  }
  {
    TableReader t(dir / "dataseries.tbl", TableTag::dataseries);
    for (std::size_t i = 0; i < t.rows(); ++i) {
      DataSeriesCell c;
      c.sensor = static_cast<Key>(t.ints("sensor")[i]);
      c.step_index = as_i64(t.ints("step_index")[i]);
      c.step_s = static_cast<std::int32_t>(as_i64(t.ints("step_s")[i]));
      c.mean = t.reals("mean")[i];
      c.min = t.reals("min")[i];
      c.max = t.reals("max")[i];
      c.stddev = t.reals("stddev")[i];
      c.count = static_cast<std::uint32_t>(t.ints("count")[i]);
      c.interpolated = t.ints("interpolated")[i] != 0;
      s.dataseries.push_back(c);
    }
  }
  {
    TableReader t(dir / "load_history.tbl", TableTag::load_history);
    for (std::size_t i = 0; i < t.rows(); ++i) {
      s.load_history.push_back({t.ints("load_version")[i], t.strs("filename")[i],
                                from_unix(as_i64(t.ints("load_time")[i])), t.strs("procedure_name")[i],
                                t.strs("error_notes")[i]});
    }
  }
  {
    TableReader t(dir / "bad_data.tbl", TableTag::bad_data);
    for (std::size_t i = 0; i < t.rows(); ++i) {
      s.bad_data.push_back({t.strs("sensor_id")[i], from_unix(as_i64(t.ints("start")[i])),
                            from_unix(as_i64(t.ints("end")[i])), t.strs("reason")[i]});
    }
  }
  {
    TableReader t(dir / "weather.tbl", TableTag::weather);
    for (std::size_t i = 0; i < t.rows(); ++i) {
      WeatherDay d;
      d.date = Date{std::chrono::days{as_i64(t.ints("date")[i])}};
      d.tmin_c = t.reals("tmin_c")[i];
      d.tmax_c = t.reals("tmax_c")[i];
      d.tavg_c = t.reals("tavg_c")[i];
      d.precipitation_mm = t.reals("precipitation_mm")[i];
      d.humidity_pct = t.reals("humidity_pct")[i];
      d.pressure_hpa = t.reals("pressure_hpa")[i];
      d.events = static_cast<std::uint8_t>(t.ints("events")[i]);
      s.weather[d.date] = d;
    }
  }
  {
    TableReader t(dir / "quarantine.tbl", TableTag::quarantine);
    for (std::size_t i = 0; i < t.rows(); ++i) s.quarantine.push_back({read_level0_row(t, i), t.strs("reason")[i]});
  }
  {
    TableReader t(dir / "anchors.tbl", TableTag::anchors);
    for (std::size_t i = 0; i < t.rows(); ++i) {
      s.anchors[{t.strs("mote_id")[i], static_cast<std::uint32_t>(t.ints("epoch")[i])}] =
          TimeAnchor{static_cast<std::uint32_t>(t.ints("mote_time_s")[i]), from_unix(as_i64(t.ints("utc")[i]))};
    }
  }
  s.rebuild_seen();
  return s;
}

bool Store::operator==(const Store& o) const {
  return ids.values() == o.ids.values() && staging == o.staging && measurements == o.measurements &&
         calibrated == o.calibrated && dataseries == o.dataseries && load_history == o.load_history &&
         bad_data == o.bad_data && weather == o.weather && quarantine == o.quarantine && anchors == o.anchors;
}

}  // namespace soilnet
