#include "soilnet/level0.hpp"

#include <fstream>
#include <istream>
#include <sstream>

#include "soilnet/calibration.hpp"
#include "soilnet/kvconfig.hpp"

namespace soilnet {

std::vector<std::uint32_t> assign_epochs(std::span<const SampleRecord> records, std::uint32_t current_epoch) {
  std::vector<std::uint32_t> epochs(records.size(), current_epoch);
  std::uint32_t epoch = current_epoch;
  for (std::size_t i = records.size(); i-- > 1;) {
    epochs[i] = epoch;
    if (records[i].mote_time_s < records[i - 1].mote_time_s && epoch > 0) --epoch;
  }
  if (!records.empty()) epochs[0] = epoch;
  return epochs;
}

std::string format_level0(std::span<const SampleRecord> records, const Level0Export& meta,
                          std::uint32_t current_epoch) {
  for (std::size_t i = 1; i < records.size(); ++i) {
    if (records[i].seq <= records[i - 1].seq) throw std::invalid_argument("Level-0 export requires sequence-ordered records");
  }
  const auto epochs = assign_epochs(records, current_epoch);
  const std::string anchor_utc = format_utc(meta.anchor.utc);
  std::ostringstream out;
  out << kLevel0Header << '\n';
  for (std::size_t i = 0; i < records.size(); ++i) {
    const SampleRecord& r = records[i];
    out << meta.download_id << ',' << meta.mote_id << ',' << epochs[i] << ',' << r.seq << ',' << r.mote_time_s;
    for (auto v : r.readings) out << ',' << v;
    out << ',' << meta.anchor.mote_time_s << ',' << anchor_utc << '\n';
  }
  return out.str();
}

void export_level0(std::span<const SampleRecord> records, const Level0Export& meta, std::uint32_t current_epoch,
                   const std::filesystem::path& path) {
  const std::string text = format_level0(records, meta, current_epoch);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

Level0Read read_level0(std::istream& in) {
  Level0Read result;
  std::string line;
  if (!std::getline(in, line)) return result;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kLevel0Header) throw SchemaError("Level-0 header mismatch: '" + line + "'");
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    const auto f = split(line, ',');
    if (f.size() != 12) {
      ++result.malformed;
      continue;
    }
    Level0Row row;
    row.download_id = f[0];
    row.mote_id = f[1];
    const auto epoch = parse_integer(f[2]);
    const auto seq = parse_integer(f[3]);
    const auto mote_time = parse_integer(f[4]);
    const auto anchor_time = parse_integer(f[10]);
    bool ok = epoch && seq && mote_time && anchor_time && *epoch >= 0 && *seq >= 0 && *mote_time >= 0 &&
              *mote_time <= UINT32_MAX && *anchor_time >= 0 && *anchor_time <= UINT32_MAX && *epoch <= UINT32_MAX &&
              !row.mote_id.empty();
    for (std::size_t i = 0; ok && i < kReadingCount; ++i) {
      const auto v = parse_integer(f[5 + i]);
      ok = v && *v >= 0 && *v <= kAdcMax;
      if (ok) row.adc[i] = static_cast<std::uint16_t>(*v);
    }
    if (ok) {
      try {
        row.anchor.utc = parse_utc(f[11]);
      } catch (const std::invalid_argument&) {
        ok = false;
      }
    }
    if (!ok) {
      ++result.malformed;
      continue;
    }
    row.epoch = static_cast<std::uint32_t>(*epoch);
    row.seq = static_cast<std::uint64_t>(*seq);
    row.mote_time_s = static_cast<std::uint32_t>(*mote_time);
    row.anchor.mote_time_s = static_cast<std::uint32_t>(*anchor_time);
    result.rows.push_back(std::move(row));
  }
  return result;
}

Level0Read read_level0(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return read_level0(in);
}

}  // namespace soilnet
