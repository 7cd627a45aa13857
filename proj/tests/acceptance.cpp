// Acceptance suite: one PASS/FAIL line per criterion.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "cube_oracle.hpp"
#include "soilnet/calibration.hpp"
#include "soilnet/collector.hpp"
#include "soilnet/cube.hpp"
#include "soilnet/energy.hpp"
#include "soilnet/mote_sim.hpp"
#include "soilnet/pipeline.hpp"
#include "soilnet/scenario.hpp"

using namespace soilnet;
namespace fs = std::filesystem;

namespace {

const fs::path kOlin = fs::path(SOILNET_DATA_DIR) / "scenarios" / "olin";
const fs::path kScratch = fs::path(SOILNET_SCRATCH_DIR) / "acceptance";

struct Verdict {
  bool pass = false;
  std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

Registry olin_registry() { return Registry::load(kOlin / "sites.cfg"); }

MoteSim fresh_mote(const Registry& reg, const std::string& id, SimTime boot) {
  return MoteSim(id, boot, MoteHardware::from_registry(reg, id));
}

Verdict download_completeness() {
  const auto t0 = std::chrono::steady_clock::now();
  const Registry reg = olin_registry();
  const SimTime boot{parse_utc("2005-12-01")};
  MoteSim filled = fresh_mote(reg, "m01", boot);
  EnvironmentModel env;
  Rng fill_rng(1);
  while (filled.flash().head_seq() < 11811) filled.advance(env, fill_rng, filled.now() + std::chrono::minutes{1});
  DownloadPolicy unbounded;
  unbounded.max_retries_per_packet = UINT32_MAX;

  bool complete = true;
  double losses_0058 = 0;
  std::uint32_t max_retries_0058 = 0;
  std::string first_failure;
  for (double loss : {0.0, 0.058, 0.3, 0.67}) {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
      MoteSim mote = filled;
      LinkModel link;
      link.loss_prob = loss;
      link.duplicate_prob = 0.01;
      Rng rng(mix_seed(seed, static_cast<std::uint64_t>(loss * 1000)));
      const DownloadResult r = run_download(mote, 0, link, rng, unbounded);
      bool ok = r.phase == DownloadPhase::done && r.records.size() == 11811;
      for (std::size_t i = 0; ok && i < r.records.size(); ++i) ok = r.records[i].seq == i;
      if (!ok && first_failure.empty()) first_failure = fmt(" first failure at loss %.3f seed %llu", loss, seed);
      complete = complete && ok;
      if (loss == 0.058) {
        losses_0058 += static_cast<double>(r.stats.bulk_losses);
        max_retries_0058 = std::max(max_retries_0058, r.stats.max_retries_for_one_packet);
      }
    }
  }
  const double mean = losses_0058 / 20;
  const double elapsed = seconds_since(t0);
  const bool pass = complete && std::abs(mean - 689) <= 76 && elapsed < 30;
  return {pass, fmt("80 downloads of 11811 records %s; mean bulk losses at 0.058 = %.1f (689 +- 76); "
                    "max retries for one packet = %u; %.1f s",
                    complete ? "all gap-free and duplicate-free" : "INCOMPLETE", mean, max_retries_0058, elapsed) +
                    first_failure};
}

Verdict delivery_ratio() {
  const auto t0 = std::chrono::steady_clock::now();
  const Registry reg = olin_registry();
  const ScenarioConfig cfg = ScenarioConfig::load(kOlin / "scenario.cfg");
  const LinkModel& link = cfg.status_link_for("m01");
  const SimTime boot{parse_utc("2005-12-26")};
  MoteSim mote = fresh_mote(reg, "m01", boot);
  Rng sim_rng(2);
  Rng link_rng(3);
  LinkState state;
  std::uint64_t sent = 0, delivered = 0;
  bool six_per_window = true;
  std::map<std::uint64_t, std::uint32_t> window_counts;
  SimTime t = boot;
  while (sent < 100000) {
    t += std::chrono::hours{24};
    for (const Emission& e : mote.advance(cfg.environment, sim_rng, t)) {
      const auto* b = std::get_if<BeaconEmission>(&e);
      if (!b) continue;
      ++sent;
      ++window_counts[b->window];
      delivered += transmit(link, state, link_rng).outcome == Outcome::delivered;
    }
  }
  for (const auto& [w, n] : window_counts) six_per_window = six_per_window && n == 6;
  const double ratio = static_cast<double>(delivered) / static_cast<double>(sent);
  const double elapsed = seconds_since(t0);
  const bool pass = ratio >= 0.29 && ratio <= 0.34 && six_per_window && elapsed < 10;
  return {pass, fmt("%llu beacons in %zu windows (%s), delivery ratio %.4f in [0.29, 0.34]; %.1f s",
                    static_cast<unsigned long long>(sent), window_counts.size(),
                    six_per_window ? "6 per window" : "NOT 6 per window", ratio, elapsed)};
}

Verdict flash_arithmetic() {
  const Registry reg = olin_registry();
  const SimTime boot{parse_utc("2005-12-01")};
  MoteSim mote = fresh_mote(reg, "m01", boot);
  EnvironmentModel env;
  Rng rng(4);
  mote.advance(env, rng, boot + std::chrono::days{1});
  const std::size_t daily = mote.flash().bytes_used();
  // Step sample by sample up to the first overwrite.
  SimTime t = mote.now();
  while (mote.flash().overwritten_count() == 0) {
    t += std::chrono::minutes{1};
    mote.advance(env, rng, t);
  }
  const std::uint64_t at = mote.flash().head_seq();  // records written when the first overwrite happened
  const double days = static_cast<double>(at - 1) * 60.0 / 86400.0;
  const bool pass = daily == 23040 && at - 1 == 32768 && mote.flash().overwritten_count() == 1;
  return {pass, fmt("daily flash growth %zu bytes (23040); ring holds %llu records, first overwrite by record "
                    "%llu, i.e. after %.2f days",
                    daily, static_cast<unsigned long long>(at - 1), static_cast<unsigned long long>(at), days)};
}

Verdict energy_closed_form() {
  const double i = total_avg_current(CurrentBudget::reference_mote());
  const double i3 = std::round(i * 1000) / 1000;
  const BatteryModel battery;
  const double seventy = consumed_mAh(i3, 70 * 24);
  const double from_voltage = consumed_from_voltage(0.2, battery);
  const double week = consumed_mAh(i3, 7 * 24);
  const double week_voltage = consumed_from_voltage(0.02, battery);
  const bool pass = i3 == 0.368 && std::abs(std::round(seventy * 10) / 10 - 618.2) < 1e-9 &&
                    std::abs(from_voltage - 629) / 629 < 0.02 && std::abs(seventy - 629) / 629 < 0.02 &&
                    std::abs(week - week_voltage) / week_voltage < 0.02;
  return {pass, fmt("average current %.6f mA -> %.3f; 70 d: %.1f mAh vs voltage-derived %.1f (target 629, off %.2f%%); "
                    "week: %.1f vs %.1f (off %.2f%%)",
                    i, i3, seventy, from_voltage, 100 * std::abs(seventy - 629) / 629, week, week_voltage,
                    100 * std::abs(week - week_voltage) / week_voltage)};
}

Verdict ledger_vs_closed_form() {
  const Registry reg = olin_registry();
  const SimTime boot{parse_utc("2005-12-01")};
  MoteSim mote = fresh_mote(reg, "m01", boot);
  EnvironmentModel env;
  Rng rng(5);
  mote.advance(env, rng, boot + std::chrono::days{1});
  const double closed = total_avg_current(mote.config().budget) * 24;
  const double ledger = mote.ledger().total_mAh();
  const double rel = std::abs(ledger - closed) / closed;
  const double radio_min = mote.ledger().status_radio_on_s / 60.0;
  const bool pass = rel < 0.005 && radio_min >= 22.8 - 1e-9 && radio_min <= 22.8 * 1.05;
  return {pass, fmt("ledger %.4f mAh vs closed form %.4f mAh (%.4f%%); radio on %.2f min/day (22.8, +5%%)", ledger,
                    closed, 100 * rel, radio_min)};
}

Verdict lifetime_band() {
  const BatteryModel battery;
  const double i = total_avg_current(CurrentBudget::reference_mote());
  const double flash = predict_lifetime_days(battery, i, LifetimeStop::flash_floor);
  const double cutoff = predict_lifetime_days(battery, i, LifetimeStop::pack_cutoff);
  return {flash >= 130 && flash <= 155,
          fmt("to the 2.2 V flash floor: %.1f days in [130, 155] (to pack cutoff: %.1f days)", flash, cutoff)};
}

// kPa = (c0 + c1 Rk) / (1 + c2 T + c3 Rk) solved for Rk.
double oracle_watermark_ohms(double kpa, double t, const WatermarkCoeffs& c) {
  return 1000.0 * (kpa * (1 + c[2] * t) - c[0]) / (c[1] - kpa * c[3]);
}

Verdict calibration_round_trip() {
  const Registry reg = olin_registry();
  const ScenarioConfig cfg = ScenarioConfig::load(kOlin / "scenario.cfg");
  const UtcSeconds start = cfg.start;
  Store store;
  for (const Mote& m : reg.motes()) {
    MoteSim mote = fresh_mote(reg, m.mote_id, SimTime{start});
    Rng rng(6);
    mote.advance(cfg.environment, rng, SimTime{start + std::chrono::days{7}});
    const auto records = mote.flash_read_range(mote.flash().tail_seq(), mote.flash().head_seq());
    std::istringstream csv(format_level0(records, {"week-" + m.mote_id, m.mote_id, {0, start}}, 0));
    stage_and_dedup(csv, "week-" + m.mote_id, store);
  }
  promote_level1(store, reg, store.next_load_version());
  const CalibrateResult cal = calibrate_pending(store, reg, "round-trip");

  std::map<std::pair<Key, std::int64_t>, const Measurement*> raw;
  for (const auto& m : store.measurements) raw[{m.sensor, to_unix(m.utc)}] = &m;
  std::map<std::pair<std::string, std::int64_t>, double> soil_cal;
  double worst_temp = 0;
  std::size_t temps = 0, moistures = 0, outside = 0;
  for (const auto& c : store.calibrated) {
    const Sensor& s = reg.sensor(store.ids.str(c.sensor));
    if (s.sensor_type == SensorType::soil_temperature) soil_cal[{s.mote_id, to_unix(c.utc)}] = c.value;
    if (s.sensor_type != SensorType::soil_temperature && s.sensor_type != SensorType::box_temperature) continue;
    const double truth = s.sensor_type == SensorType::soil_temperature ? cfg.environment.soil_temp_c(c.utc, s.depth_cm)
                                                                       : cfg.environment.box_temp_c(c.utc);
    worst_temp = std::max(worst_temp, std::abs(c.value - truth));
    ++temps;
  }
  double widest = 0;
  for (const auto& c : store.calibrated) {
    const Sensor& s = reg.sensor(store.ids.str(c.sensor));
    if (s.sensor_type != SensorType::soil_moisture) continue;
    ++moistures;
    // Quantization box: moisture ADC +-0.5 count, and the soil temperature
    // used for compensation +-0.5 count of its own thermistor reading.
    const Measurement& m = *raw.at({c.sensor, to_unix(c.utc)});
    const Sensor& st = *reg.sensor_of_type(s.mote_id, SensorType::soil_temperature);
    const Measurement& mt = *raw.at({store.ids.find(st.sensor_id).value(), to_unix(c.utc)});
    const auto& wc = *s.calibration.watermark_coeffs;
    const auto& tc = *st.calibration.thermistor_coeffs;
    const double div_m = s.calibration.divider_ohms();
    const double div_t = st.calibration.divider_ohms();
    double lo = 1e300, hi = -1e300;
    for (double dm : {-0.5, 0.5}) {
      for (double dt : {-0.5, 0.5}) {
        const double am = m.raw_value + dm, at = mt.raw_value + dt;
        const double r = div_m * am / (kAdcMax - am);
        const double lnr = std::log(div_t * at / (kAdcMax - at));
        const double temp = 1.0 / (tc[0] + tc[1] * lnr + tc[2] * lnr * lnr * lnr) - 273.15;
        const double rk = r / 1000.0;
        const double kpa = (wc[0] + wc[1] * rk) / (1 + wc[2] * temp + wc[3] * rk);
        lo = std::min(lo, kpa);
        hi = std::max(hi, kpa);
      }
    }
    widest = std::max(widest, hi - lo);
    const double truth = cfg.environment.moisture_kpa(c.utc);
    if (truth < lo - 1e-9 || truth > hi + 1e-9 || c.value < lo - 1e-9 || c.value > hi + 1e-9) ++outside;
  }

  // Fit: random generating coefficients near the reference set, exact 3 x 3 grids.
  Rng rng(7);
  double worst_fit = 0;
  for (int trial = 0; trial < 50; ++trial) {
    const WatermarkCoeffs gen{4.093 * (0.8 + 0.4 * rng.uniform()), 3.213 * (0.8 + 0.4 * rng.uniform()),
                              -0.01205 * (0.8 + 0.4 * rng.uniform()), -0.009733 * (0.8 + 0.4 * rng.uniform())};
    std::array<WatermarkPoint, 9> pts;
    int k = 0;
    for (double t : {5.0, 15.0, 25.0}) {
      for (double kpa : {10.0, 50.0, 150.0}) pts[k++] = {oracle_watermark_ohms(kpa, t, gen), t, kpa};
    }
    const WatermarkFit fit = fit_watermark(pts);
    for (int j = 0; j < 4; ++j) worst_fit = std::max(worst_fit, std::abs(fit.coeffs[j] - gen[j]) / std::abs(gen[j]));
  }

  const std::size_t expected = 10 * 7 * 1440;
  const bool pass = temps == 2 * expected && moistures == expected && worst_temp <= 0.25 && outside == 0 &&
                    cal.skipped == 0 && cal.deferred == 0 && worst_fit <= 1e-6;
  return {pass, fmt("%zu temperatures, worst error %.3f C (<= 0.25); %zu moisture values, %zu outside the "
                    "quantization bound (widest %.3f kPa); fit worst relative error %.2e over 50 grids",
                    temps, worst_temp, moistures, outside, widest, worst_fit)};
}

Verdict pipeline_hygiene() {
  const Registry reg = olin_registry();
  const ScenarioConfig cfg = ScenarioConfig::load(kOlin / "scenario.cfg");
  const UtcSeconds start = cfg.start;
  std::vector<std::string> level0;
  for (const Mote& m : reg.motes()) {
    MoteSim mote = fresh_mote(reg, m.mote_id, SimTime{start});
    Rng rng(8);
    mote.advance(cfg.environment, rng, SimTime{start + std::chrono::days{2}});
    const auto records = mote.flash_read_range(0, mote.flash().head_seq());
    level0.push_back(format_level0(records, {"d-" + m.mote_id, m.mote_id, {0, start}}, 0));
  }
  Store store;
  for (const auto& b : cfg.bad_data) mark_bad(store, b);
  store.bad_data.push_back({"m02-st", start + std::chrono::hours{5}, start + std::chrono::hours{9}, "test"});
  auto ingest = [&](const std::string& tag) {
    for (std::size_t i = 0; i < level0.size(); ++i) {
      std::istringstream in(level0[i]);
      stage_and_dedup(in, tag + std::to_string(i), store);
    }
    return promote_level1(store, reg, store.next_load_version()).promoted;
  };
  const std::size_t first = ingest("a");
  const bool purged = store.staging.empty();
  const std::size_t second = ingest("b");
  calibrate_pending(store, reg, "v1");
  mark_bad(store, {"m05-sm", start + std::chrono::hours{30}, start + std::chrono::hours{31}, "late"});
  grid_dataseries(store, 600);

  std::set<std::pair<Key, std::int64_t>> bad;
  std::map<std::pair<Key, std::int64_t>, std::uint32_t> good_per_cell;
  for (const auto& m : store.measurements) {
    if (m.is_bad) bad.insert({m.sensor, to_unix(m.utc)});
    else good_per_cell[{m.sensor, to_unix(m.utc) / 600}] += 1;
  }
  std::size_t leaks = 0;
  for (const auto& c : store.calibrated) leaks += bad.contains({c.sensor, to_unix(c.utc)});
  for (const auto& c : store.dataseries) {
    const auto it = good_per_cell.find({c.sensor, c.step_index});
    if (it == good_per_cell.end() || c.count > it->second) ++leaks;
  }

  // Reconstruction over 1e4 random rows spread across motes, epochs and downloads.
  Store rs;
  Rng rng(9);
  std::vector<Level0Row> rows;
  std::ostringstream csv;
  csv << kLevel0Header << '\n';
  std::map<std::string, std::uint64_t> next_seq;
  for (int i = 0; i < 10000; ++i) {
    Level0Row r;
    r.mote_id = reg.motes()[static_cast<std::size_t>(rng.uniform() * reg.motes().size())].mote_id;
    r.download_id = "rand";
    r.epoch = 0;
    r.seq = next_seq[r.mote_id]++;
    r.mote_time_s = static_cast<std::uint32_t>(60 * (r.seq + 1));
    for (auto& a : r.adc) a = static_cast<std::uint16_t>(rng.uniform() * 1024);
    r.anchor = {0, start};
    rows.push_back(r);
    csv << r.download_id << ',' << r.mote_id << ',' << r.epoch << ',' << r.seq << ',' << r.mote_time_s;
    for (auto a : r.adc) csv << ',' << a;
    csv << ',' << r.anchor.mote_time_s << ',' << format_utc(r.anchor.utc) << '\n';
  }
  std::istringstream in(csv.str());
  stage_and_dedup(in, "rand.csv", rs);
  promote_level1(rs, reg, 1);
  auto back = reconstruct_level0(rs, reg);
  std::sort(rows.begin(), rows.end(), [](const Level0Row& a, const Level0Row& b) {
    return std::tie(a.mote_id, a.epoch, a.seq) < std::tie(b.mote_id, b.epoch, b.seq);
  });
  std::size_t mismatched = back.size() == rows.size() ? 0 : rows.size();
  for (std::size_t i = 0; i < std::min(back.size(), rows.size()); ++i) {
    back[i].download_id = rows[i].download_id;
    mismatched += !(back[i] == rows[i]);
  }

  const bool pass = first == 10 * 2880 * 5 && second == 0 && purged && store.staging.empty() && leaks == 0 &&
                    !bad.empty() && mismatched == 0;
  return {pass, fmt("first ingest %zu rows, re-ingest %zu; staging purged: %s; %zu bad rows, %zu leaked into "
                    "Calibrated/DataSeries; reconstruction %zu/%zu rows bit-exact",
                    first, second, purged ? "yes" : "no", bad.size(), leaks, rows.size() - mismatched, rows.size())};
}

Verdict cube_oracle() {
  Rng rng(10);
  const oracle::Fixture f = oracle::make_fixture(rng, 10000);
  const Cube cube = Cube::build(f.cells, f.ids, f.weather, f.registry);
  std::size_t failures = 0;
  std::string first;
  std::set<Aggregate> aggregates;
  for (int i = 0; i < 200; ++i) {
    const CubeQuery q = oracle::random_query(rng);
    aggregates.insert(q.aggregate);
    const std::string d = oracle::diff(cube.query(q), oracle::brute_force(f, q), q.aggregate);
    if (!d.empty()) {
      ++failures;
      if (first.empty()) first = fmt(" first: query %d %s", i, d.c_str());
    }
  }
  const std::string rollup = oracle::rollup_diff(cube, f.registry);
  const bool pass = failures == 0 && rollup.empty() && aggregates.size() == 6 && f.cells.size() <= 10000;
  return {pass, fmt("%zu cells, 200 random queries over %zu aggregates: %zu mismatches; rollup conservation %s",
                    f.cells.size(), aggregates.size(), failures, rollup.empty() ? "holds" : rollup.c_str()) +
                    first};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

Verdict determinism() {
  const auto t0 = std::chrono::steady_clock::now();
  fs::remove_all(kScratch / "run_a");
  fs::remove_all(kScratch / "run_b");
  std::ostringstream log;
  const int a = run_scenario(kOlin / "scenario.cfg", kScratch / "run_a", std::nullopt, log);
  const int b = run_scenario(kOlin / "scenario.cfg", kScratch / "run_b", std::nullopt, log);
  if (a != 0 || b != 0) return {false, "scenario run failed: " + log.str()};
  std::size_t files = 0, differing = 0, level0 = 0;
  std::string first;
  for (const auto& e : fs::recursive_directory_iterator(kScratch / "run_a")) {
    if (!e.is_regular_file()) continue;
    const fs::path rel = fs::relative(e.path(), kScratch / "run_a");
    ++files;
    level0 += rel.begin()->string() == "level0";
    if (!fs::exists(kScratch / "run_b" / rel) || slurp(e.path()) != slurp(kScratch / "run_b" / rel)) {
      ++differing;
      if (first.empty()) first = " first: " + rel.string();
    }
  }
  std::size_t files_b = 0;
  for (const auto& e : fs::recursive_directory_iterator(kScratch / "run_b")) files_b += e.is_regular_file();
  const bool pass = differing == 0 && files == files_b && level0 > 0 &&
                    fs::exists(kScratch / "run_a" / "report_moisture.svg") &&
                    !fs::is_empty(kScratch / "run_a" / "store");
  return {pass, fmt("bundled scenario run twice: %zu files (%zu Level-0 CSVs, store tables, reports, SVG), %zu "
                    "differ; %.1f s",
                    files, level0, differing, seconds_since(t0)) +
                    first};
}

}  // namespace

int main() {
  fs::create_directories(kScratch);
  const std::vector<std::pair<const char*, std::function<Verdict()>>> criteria{
      {"download completeness", download_completeness},
      {"beacon delivery ratio", delivery_ratio},
      {"flash and throughput arithmetic", flash_arithmetic},
      {"energy closed form", energy_closed_form},
      {"ledger vs closed form", ledger_vs_closed_form},
      {"lifetime band", lifetime_band},
      {"calibration round trip", calibration_round_trip},
      {"pipeline hygiene", pipeline_hygiene},
      {"cube oracle equivalence", cube_oracle},
      {"determinism", determinism},
  };
  int failed = 0;
  int n = 0;
  for (const auto& [name, run] : criteria) {
    ++n;
    Verdict v;
    try {
      v = run();
    } catch (const std::exception& e) {
      v = {false, std::string("threw: ") + e.what()};
    }
    failed += !v.pass;
    std::printf("%s %2d %s: %s\n", v.pass ? "PASS" : "FAIL", n, name, v.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%d criteria passed\n", n - failed, n);
  return failed == 0 ? 0 : 1;
}
