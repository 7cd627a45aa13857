#include "soilnet/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <set>

#include "json.hpp"
#include "soilnet/collector.hpp"
#include "soilnet/cube.hpp"
#include "soilnet/level0.hpp"
#include "soilnet/mote_sim.hpp"
#include "soilnet/random.hpp"
#include "soilnet/report.hpp"

namespace soilnet {
namespace {

using namespace std::chrono;

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  std::string s = buf;
  if (s.find_first_not_of("-0.") == std::string::npos && s.front() == '-') s.erase(0, 1);
  return s;
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << content;
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

UtcSeconds utc_entry(const KvSection& s, std::string_view key) {
  try {
    return parse_utc(s.text(key));
  } catch (const std::invalid_argument& e) {
    s.fail(key, e.what());
  }
}

struct MoteRun {
  std::string id;
  MoteSim sim;
  Rng beacon_rng;
  Rng download_rng;
  LinkState status_state;
  std::uint64_t beacons_sent = 0;
  std::uint64_t beacons_received = 0;
  int downloads = 0;
};

}  // namespace

ScenarioConfig ScenarioConfig::load(const std::filesystem::path& path) {
  return from_sections(parse_kv_file(path), path.parent_path());
}

ScenarioConfig ScenarioConfig::from_sections(const std::vector<KvSection>& sections,
                                             const std::filesystem::path& base_dir) {
  ScenarioConfig c;
  const KvSection* scenario = nullptr;
  const KvSection* env = nullptr;
  std::vector<const KvSection*> rain;
  bool custom_budget = false;
  for (const KvSection& s : sections) {
    const std::string& kind = s.name();
    if (kind == "scenario") {
      if (scenario) s.fail("duplicate [scenario] section");
      scenario = &s;
    } else if (kind == "environment") {
      if (env) s.fail("duplicate [environment] section");
      env = &s;
    } else if (kind == "rain") {
      rain.push_back(&s);
    } else if (kind == "link") {
      const std::string name = s.text("name");
      if (c.links.contains(name)) s.fail("name", "duplicate link '" + name + "'");
      c.links.emplace(name, LinkModel::from_config(s));
    } else if (kind == "mote_link") {
      c.mote_links[s.text("mote")] = {s.text_or("status", ""), s.text_or("download", "")};
    } else if (kind == "battery") {
      BatteryModel& b = c.battery;
      b.cells = static_cast<int>(s.integer_or("cells", b.cells));
      b.capacity_mAh = s.number_or("capacity_mAh", b.capacity_mAh);
      b.v_full_cell = s.number_or("v_full_cell", b.v_full_cell);
      b.v_cutoff_cell = s.number_or("v_cutoff_cell", b.v_cutoff_cell);
      b.flash_floor_pack = s.number_or("flash_floor_pack", b.flash_floor_pack);
      b.radio_floor_pack = s.number_or("radio_floor_pack", b.radio_floor_pack);
      b.temp_coeff_mV_per_C = s.number_or("temp_coeff_mV_per_C", b.temp_coeff_mV_per_C);
      c.battery_ref_temp_c = s.number_or("ref_temp_c", c.battery_ref_temp_c);
      try {
        b.validate();
      } catch (const std::invalid_argument& e) {
        s.fail(e.what());
      }
    } else if (kind == "budget_component") {
      if (!custom_budget) {
        c.budget.components.clear();
        custom_budget = true;
      }
      c.budget.components.push_back({s.text("name"), s.number("i_on_mA"), s.number("t_on_s"), s.number("period_s")});
      try {
        c.budget.validate();
      } catch (const std::invalid_argument& e) {
        s.fail(e.what());
      }
    } else if (kind == "bad_data") {
      BadDataInterval b{s.text("sensor_id"), utc_entry(s, "start"), utc_entry(s, "end"), s.text_or("reason", "")};
      if (!(b.start < b.end)) s.fail("end", "interval must have start < end");
      c.bad_data.push_back(std::move(b));
    } else if (kind == "reboot") {
      c.reboots.emplace_back(s.text("mote"), utc_entry(s, "time"));
    } else {
      s.fail("unknown section kind");
    }
  }
  if (!scenario) throw ConfigError(sections.empty() ? "" : sections.front().source(), 0, "missing [scenario] section");
  const KvSection& s = *scenario;

  c.registry_path = base_dir / s.text("registry");
  if (!s.has("seed")) s.fail("seed is mandatory");
  const long long seed = s.integer("seed");
  if (seed < 0) s.fail("seed", "must be non-negative");
  c.seed = static_cast<std::uint64_t>(seed);
  c.start = utc_entry(s, "start_utc");
  c.duration_days = s.number("duration_days");
  if (!(c.duration_days > 0)) s.fail("duration_days", "duration must be positive");
  const long long interval = s.integer_or("sample_interval_s", c.sample_interval_s);
  if (interval < 1) s.fail("sample_interval_s", "must be >= 1");
  c.sample_interval_s = static_cast<std::uint32_t>(interval);
  c.download_interval_days = s.number_or("download_interval_days", c.download_interval_days);
  if (!(c.download_interval_days > 0)) s.fail("download_interval_days", "must be positive");
  c.grid_step_s = static_cast<std::int32_t>(s.integer_or("grid_step_s", c.grid_step_s));
  if (c.grid_step_s <= 0 || 3600 % c.grid_step_s != 0) s.fail("grid_step_s", "must divide 3600");
  c.calib_version = s.text_or("calib_version", c.calib_version);
  const std::string gap = s.text_or("gap_policy", "missing");
  if (gap == "missing") {
    c.gap_policy = GapPolicy::missing();
  } else if (gap.starts_with("interpolate:")) {
    const auto n = parse_integer(gap.substr(12));
    if (!n || *n < 0) s.fail("gap_policy", "expected interpolate:<max gap steps>");
    c.gap_policy = GapPolicy::interpolate(static_cast<std::uint32_t>(*n));
  } else {
    s.fail("gap_policy", "expected 'missing' or 'interpolate:N'");
  }
  c.report_hours = static_cast<int>(s.integer_or("report_hours", c.report_hours));
  if (c.report_hours <= 0 || 24 % c.report_hours != 0) s.fail("report_hours", "must divide 24");
  c.adc_noise_counts = s.number_or("adc_noise_counts", 0.0);
  if (c.adc_noise_counts < 0) s.fail("adc_noise_counts", "must be non-negative");

  if (env) {
    c.environment = EnvironmentModel::from_config(*env, rain);
  } else if (!rain.empty()) {
    const KvSection empty("environment", s.source(), 0);
    c.environment = EnvironmentModel::from_config(empty, rain);
  }
  if (c.environment.reference_time == UtcSeconds{}) c.environment.reference_time = c.start;

  c.status_link = s.text("status_link");
  c.download_link = s.text("download_link");
  auto check_link = [&](const std::string& name, std::string_view key) {
    if (!name.empty() && !c.links.contains(name)) s.fail(key, "unknown link '" + name + "'");
  };
  check_link(c.status_link, "status_link");
  check_link(c.download_link, "download_link");
  for (const auto& [mote, pair] : c.mote_links) {
    check_link(pair.first, "status_link");
    check_link(pair.second, "download_link");
  }
  return c;
}

const LinkModel& ScenarioConfig::status_link_for(const std::string& mote_id) const {
  if (auto it = mote_links.find(mote_id); it != mote_links.end() && !it->second.first.empty()) {
    return links.at(it->second.first);
  }
  return links.at(status_link);
}

const LinkModel& ScenarioConfig::download_link_for(const std::string& mote_id) const {
  if (auto it = mote_links.find(mote_id); it != mote_links.end() && !it->second.second.empty()) {
    return links.at(it->second.second);
  }
  return links.at(download_link);
}

std::string synthesize_weather_csv(const EnvironmentModel& env, Date first, Date last) {
  std::string out = std::string(kWeatherHeader) + "\n";
  for (Date d = first; d <= last; d += days{1}) {
    double lo = 0, hi = 0, sum = 0;
    for (int h = 0; h < 24; ++h) {
      const double t = env.air_temp_c(UtcSeconds{d} + hours{h});
      if (h == 0 || t < lo) lo = t;
      if (h == 0 || t > hi) hi = t;
      sum += t;
    }
    const double avg = sum / 24;
    const double precip = env.rain_mm_on(d);
    const double humidity = precip > 0 ? 92.0 : 74.0;
    const double pressure = 1016.0 - 0.5 * precip;
    std::string events;
    if (precip > 0) events = avg < 0 ? "snow" : "rain";
    out += format_date(d) + ',' + fixed(lo, 2) + ',' + fixed(hi, 2) + ',' + fixed(avg, 2) + ',' + fixed(precip, 2) +
           ',' + fixed(humidity, 2) + ',' + fixed(pressure, 2) + ',' + events + '\n';
  }
  return out;
}

std::string budget_csv(const CurrentBudget& budget) {
  std::string out = "component,i_on_mA,t_on_s,period_s,avg_mA\n";
  for (const auto& c : budget.components) {
    out += c.name + ',' + fixed(c.i_on_mA, 4) + ',' + fixed(c.t_on_s, 4) + ',' + fixed(c.period_s, 4) + ',' +
           fixed(duty_cycle_avg(c.i_on_mA, c.t_on_s, c.period_s), 6) + '\n';
  }
  out += "sleep_floor,,,," + fixed(budget.sleep_floor_mA, 6) + '\n';
  out += "total,,,," + fixed(total_avg_current(budget), 6) + '\n';
  return out;
}

std::string budget_json(const CurrentBudget& budget, const BatteryModel& battery) {
  nlohmann::ordered_json j;
  j["components"] = nlohmann::ordered_json::array();
  for (const auto& c : budget.components) {
    j["components"].push_back({{"name", c.name},
                               {"i_on_mA", c.i_on_mA},
                               {"t_on_s", c.t_on_s},
                               {"period_s", c.period_s},
                               {"avg_mA", duty_cycle_avg(c.i_on_mA, c.t_on_s, c.period_s)}});
  }
  const double total = total_avg_current(budget);
  j["sleep_floor_mA"] = budget.sleep_floor_mA;
  j["total_avg_mA"] = total;
  if (total > 0) {
    j["lifetime_days_flash_floor"] = predict_lifetime_days(battery, total, LifetimeStop::flash_floor);
    j["lifetime_days_pack_cutoff"] = predict_lifetime_days(battery, total, LifetimeStop::pack_cutoff);
  }
  return j.dump(2) + "\n";
}

ScenarioSummary simulate_scenario(const ScenarioConfig& config, const Registry& registry,
                                  const std::filesystem::path& out_dir) {
  namespace fs = std::filesystem;
  config.environment.validate();
  ScenarioSummary summary;
  fs::create_directories(out_dir / "level0");
  fs::create_directories(out_dir / "cube");
  const fs::path store_dir = out_dir / "store";
  if (fs::exists(store_dir)) fs::remove_all(store_dir);
  for (const auto& entry : fs::directory_iterator(out_dir / "level0")) fs::remove(entry.path());

  const SimTime start{config.start};
  const SimTime end = start + milliseconds{std::llround(config.duration_days * 86400000.0)};

  MoteConfig mote_config;
  mote_config.sample_interval_s = config.sample_interval_s;
  mote_config.battery = config.battery;
  mote_config.budget = config.budget;
  mote_config.battery_ref_temp_c = config.battery_ref_temp_c;

  std::vector<MoteRun> motes;
  for (const Mote& m : registry.motes()) {
    MoteHardware hw = MoteHardware::from_registry(registry, m.mote_id);
    hw.adc_noise_counts = config.adc_noise_counts;
    const std::uint64_t stream = stable_hash(m.mote_id);
    motes.push_back(MoteRun{m.mote_id, MoteSim(m.mote_id, start, std::move(hw), mote_config),
                            Rng(mix_seed(config.seed, stream)), Rng(mix_seed(config.seed ^ 0xD0D0ULL, stream)),
                            LinkState{}});
  }

  std::set<SimTime> checkpoints;
  std::set<SimTime> download_times;
  const auto step = milliseconds{std::llround(config.download_interval_days * 86400000.0)};
  for (SimTime t = start + step; t <= end; t += step) download_times.insert(t);
  download_times.insert(end);
  checkpoints.insert(download_times.begin(), download_times.end());
  for (const auto& [mote, at] : config.reboots) {
    if (!registry.has_mote(mote)) throw UnknownIdError("reboot names unknown mote '" + mote + "'");
    if (SimTime{at} > start && SimTime{at} < end) checkpoints.insert(SimTime{at});
  }

  HealthTable health;
  Store store;
  for (const auto& b : config.bad_data) mark_bad(store, b);
  std::string downloads_csv =
      "download_id,mote_id,since_seq,records,packets_expected,bulk_losses,retransmission_requests,"
      "max_retries_one_packet,duplicates_discarded,duration_s,phase,epoch,anchor_mote_time_s,anchor_utc,"
      "evicted_records\n";

  for (const SimTime t : checkpoints) {
    for (MoteRun& m : motes) {
      const LinkModel& link = config.status_link_for(m.id);
      for (const Emission& e : m.sim.advance(config.environment, m.beacon_rng, t)) {
        if (const auto* b = std::get_if<BeaconEmission>(&e)) {
          ++m.beacons_sent;
          const Delivery d = transmit(link, m.status_state, m.beacon_rng);
          if (d.outcome == Outcome::delivered) {
            ++m.beacons_received;
            health.handle_status(b->status, *d.lqi, floor_seconds(b->time));
          }
        }
      }
      for (const auto& [mote, at] : config.reboots) {
        if (mote == m.id && SimTime{at} == t) m.sim.reboot();
      }
    }
    if (!download_times.contains(t)) continue;
    for (MoteRun& m : motes) {
      const std::string download_id = m.id + "-" + std::to_string(++m.downloads);
      std::uint64_t since = m.sim.download_cursor();
      std::uint64_t evicted = 0;
      DownloadResult result;
      try {
        try {
          result = run_download(m.sim, since, config.download_link_for(m.id), m.download_rng);
        } catch (const EvictedError& e) {
          evicted = e.lost_records();
          since = m.sim.flash().tail_seq();
          result = run_download(m.sim, since, config.download_link_for(m.id), m.download_rng);
        }
      } catch (const UnreachableError&) {
        ++summary.failed_downloads;
        downloads_csv += download_id + ',' + m.id + ',' + std::to_string(since) + ",0,0,0,0,0,0,0.000,unreachable,,,," +
                         std::to_string(evicted) + '\n';
        continue;
      }
      ++summary.downloads;
      if (result.phase != DownloadPhase::done) ++summary.failed_downloads;
      summary.records_downloaded += result.records.size();
      const auto& st = result.stats;
      downloads_csv += download_id + ',' + m.id + ',' + std::to_string(since) + ',' +
                       std::to_string(result.records.size()) + ',' + std::to_string(st.packets_expected) + ',' +
                       std::to_string(st.bulk_losses) + ',' + std::to_string(st.retransmission_requests) + ',' +
                       std::to_string(st.max_retries_for_one_packet) + ',' + std::to_string(st.duplicates_discarded) +
                       ',' + fixed(st.duration_s, 3) + ',' + std::string(to_string(result.phase)) + ',' +
                       std::to_string(result.epoch) + ',' + std::to_string(result.anchor.mote_time_s) + ',' +
                       format_utc(result.anchor.utc) + ',' + std::to_string(evicted) + '\n';
      if (result.records.empty()) continue;
      const fs::path file = out_dir / "level0" / (download_id + ".csv");
      export_level0(result.records, Level0Export{download_id, m.id, result.anchor}, result.epoch, file);
      stage_and_dedup(file, store);
      const PromoteResult promoted = promote_level1(store, registry, store.next_load_version());
      summary.quarantined += promoted.quarantined;
    }
  }

  const Date first_day = floor<days>(config.start);
  const Date last_day = floor<days>(floor_seconds(end) - seconds{1});
  const std::string weather = synthesize_weather_csv(config.environment, first_day, last_day);
  write_file(out_dir / "weather.csv", weather);
  ingest_weather(out_dir / "weather.csv", store);

  calibrate_pending(store, registry, config.calib_version);
  summary.cells = grid_dataseries(store, config.grid_step_s, config.gap_policy);
  summary.measurements = store.measurements.size();
  summary.calibrated = store.calibrated.size();
  store.save(store_dir);

  write_file(out_dir / "downloads.csv", downloads_csv);

  std::string health_csv =
      "mote_id,beacons_sent,beacons_received,delivery_ratio,last_seen,battery_adc,stored_records,mean_lqi,"
      "prr_estimate\n";
  for (const MoteRun& m : motes) {
    summary.beacons_sent += m.beacons_sent;
    summary.beacons_received += m.beacons_received;
    const double ratio = m.beacons_sent ? static_cast<double>(m.beacons_received) / m.beacons_sent : 0.0;
    health_csv += m.id + ',' + std::to_string(m.beacons_sent) + ',' + std::to_string(m.beacons_received) + ',' +
                  fixed(ratio, 4) + ',';
    if (const MoteHealth* h = health.find(m.id); h && !h->lqi_history.empty()) {
      double mean = 0;
      for (double v : h->lqi_history) mean += v;
      mean /= static_cast<double>(h->lqi_history.size());
      const std::vector<double> window(h->lqi_history.begin(), h->lqi_history.end());
      health_csv += format_utc(h->last_seen) + ',' + std::to_string(h->last_battery_adc) + ',' +
                    std::to_string(h->stored_records) + ',' + fixed(mean, 2) + ',' + fixed(prr_from_lqi(window), 4);
    } else {
      health_csv += ",,,,";
    }
    health_csv += '\n';
  }
  write_file(out_dir / "health.csv", health_csv);

  const double hours_run = config.duration_days * 24.0;
  const double closed_form = consumed_mAh(total_avg_current(config.budget), hours_run);
  std::string energy_csv =
      "mote_id,sensing_mAh,radio_status_mAh,radio_download_mAh,total_mAh,closed_form_mAh,status_radio_on_s,"
      "download_radio_on_s,battery_v\n";
  nlohmann::ordered_json energy = nlohmann::ordered_json::parse(budget_json(config.budget, config.battery));
  energy["duration_days"] = config.duration_days;
  energy["closed_form_mAh"] = closed_form;
  energy["motes"] = nlohmann::ordered_json::array();
  for (const MoteRun& m : motes) {
    const EnergyLedger& l = m.sim.ledger();
    energy_csv += m.id + ',' + fixed(l.sensing_mAh, 4) + ',' + fixed(l.radio_status_mAh, 4) + ',' +
                  fixed(l.radio_download_mAh, 4) + ',' + fixed(l.total_mAh(), 4) + ',' + fixed(closed_form, 4) + ',' +
                  fixed(l.status_radio_on_s, 1) + ',' + fixed(l.download_radio_on_s, 3) + ',' +
                  fixed(m.sim.battery_voltage(), 4) + '\n';
    energy["motes"].push_back({{"mote_id", m.id},
                               {"sensing_mAh", l.sensing_mAh},
                               {"radio_status_mAh", l.radio_status_mAh},
                               {"radio_download_mAh", l.radio_download_mAh},
                               {"total_mAh", l.total_mAh()},
                               {"battery_v", m.sim.battery_voltage()}});
  }
  write_file(out_dir / "energy.csv", energy_csv);
  write_file(out_dir / "energy.json", energy.dump(2) + "\n");

  const Cube cube = Cube::build(store, registry, config.grid_step_s);
  for (const SensorType type : kAllSensorTypes) {
    CubeQuery q;
    q.measure = Measure::sensor(type);
    q.time_level = TimeLevel::date;
    q.location_level = LocationLevel::mote;
    write_file(out_dir / "cube" / (std::string(to_string(type)) + "_daily_by_mote.csv"),
               results_to_csv(cube.query(q)));
  }
  {
    CubeQuery q;
    q.measure = Measure::weather("precipitation_mm");
    q.time_level = TimeLevel::date;
    q.location_level = LocationLevel::site;
    write_file(out_dir / "cube" / "precipitation_daily_by_site.csv", results_to_csv(cube.query(q)));
  }

  CubeQuery moisture;
  moisture.measure = Measure::sensor(SensorType::soil_moisture);
  moisture.time_level = TimeLevel::slot;
  moisture.location_level = LocationLevel::mote;
  const auto series = resample(cube.query(moisture), config.report_hours);
  ChartOptions chart;
  chart.title = "Soil moisture, " + std::to_string(config.report_hours) + " h averages";
  chart.y_label = "kPa";
  chart.weather = &store.weather;
  write_file(out_dir / "report_moisture.csv", render_report(series, ReportFormat::csv, chart));
  write_file(out_dir / "report_moisture.svg", render_report(series, ReportFormat::svg, chart));

  nlohmann::ordered_json j;
  j["seed"] = config.seed;
  j["start_utc"] = format_utc(config.start);
  j["duration_days"] = config.duration_days;
  j["motes"] = motes.size();
  j["downloads"] = summary.downloads;
  j["failed_downloads"] = summary.failed_downloads;
  j["records_downloaded"] = summary.records_downloaded;
  j["measurements"] = summary.measurements;
  j["calibrated"] = summary.calibrated;
  j["dataseries_cells"] = summary.cells;
  j["quarantined"] = summary.quarantined;
  j["beacons_sent"] = summary.beacons_sent;
  j["beacons_received"] = summary.beacons_received;
  write_file(out_dir / "summary.json", j.dump(2) + "\n");
  return summary;
}

int run_scenario(const std::filesystem::path& config_path, const std::filesystem::path& out_dir,
                 std::optional<std::uint64_t> seed_override, std::ostream& log) {
  ScenarioConfig config;
  Registry registry;
  try {
    config = ScenarioConfig::load(config_path);
    if (seed_override) config.seed = *seed_override;
    registry = Registry::load(config.registry_path);
  } catch (const ConfigError& e) {
    log << "config error: " << e.what() << '\n';
    return 1;
  } catch (const std::invalid_argument& e) {
    log << "config error: " << e.what() << '\n';
    return 1;
  }
  try {
    const ScenarioSummary s = simulate_scenario(config, registry, out_dir);
    log << "downloads " << s.downloads << ", records " << s.records_downloaded << ", measurements "
        << s.measurements << ", calibrated " << s.calibrated << ", cells " << s.cells << '\n';
    return 0;
  } catch (const std::exception& e) {
    log << "run failed: " << e.what() << '\n';
    return 2;
  }
}

}  // namespace soilnet
