#include "doctest.h"
#include "fixtures.hpp"
#include "soilnet/scenario.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"

using namespace soilnet;

namespace {

const std::string kRegistry = std::string(SOILNET_DATA_DIR) + "/scenarios/olin/sites.cfg";

std::string base_config(const std::string& extra_scenario = "") {
  return "[scenario]\nregistry = " + kRegistry +
         "\nseed = 42\nstart_utc = 2006-01-01T00:00:00Z\nduration_days = 2\ndownload_interval_days = 1\n"
         "status_link = beacon\ndownload_link = laptop\n" + extra_scenario +
         "[rain]\ntime = 2006-01-01T12:00:00Z\nmm = 5\n"
         "[link]\nname = beacon\nloss_prob = 0.67\n"
         "[link]\nname = laptop\nloss_prob = 0.058\n";
}

std::filesystem::path write_config(const std::filesystem::path& dir, const std::string& text) {
  const auto path = dir / "scenario.cfg";
  std::ofstream(path) << text;
  return path;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

}  // namespace

TEST_CASE("configuration errors exit with 1") {
  const auto dir = fixtures::scratch("scenario_config");
  const std::pair<const char*, std::string> cases[] = {
      {"zero duration", "[scenario]\nregistry = " + kRegistry +
                            "\nseed = 1\nstart_utc = 2006-01-01\nduration_days = 0\nstatus_link = a\ndownload_link = a\n"
                            "[link]\nname = a\n"},
      {"unknown link", base_config("").replace(base_config("").find("download_link = laptop"), 22,
                                               "download_link = satellite")},
      {"missing seed", "[scenario]\nregistry = " + kRegistry +
                           "\nstart_utc = 2006-01-01\nduration_days = 1\nstatus_link = a\ndownload_link = a\n"
                           "[link]\nname = a\n"},
      {"bad grid step", base_config("grid_step_s = 700\n")},
      {"bad gap policy", base_config("gap_policy = guess\n")},
      {"missing registry", "[scenario]\nregistry = nowhere.cfg\nseed = 1\nstart_utc = 2006-01-01\nduration_days = 1\n"
                           "status_link = a\ndownload_link = a\n[link]\nname = a\n"},
      {"no scenario", "[link]\nname = a\n"},
  };
  for (const auto& [name, text] : cases) {
    CAPTURE(name);
    std::ostringstream log;
    CHECK(run_scenario(write_config(dir, text), dir / "out", std::nullopt, log) == 1);
    CHECK(log.str().find("config error") != std::string::npos);
  }
}

TEST_CASE("config parsing resolves links per mote") {
  std::istringstream in(base_config("gap_policy = interpolate:3\n") +
                        "[mote_link]\nmote = m03\nstatus = laptop\ndownload = beacon\n"
                        "[reboot]\nmote = m02\ntime = 2006-01-01T10:00:00Z\n");
  const auto sections = parse_kv(in, "inline");
  const ScenarioConfig c = ScenarioConfig::from_sections(sections, ".");
  CHECK(c.seed == 42);
  CHECK(c.gap_policy.kind == GapPolicy::Kind::interpolate);
  CHECK(c.gap_policy.max_gap_steps == 3);
  CHECK(c.status_link_for("m01").loss_prob == 0.67);
  CHECK(c.download_link_for("m03").loss_prob == 0.67);
  CHECK(c.status_link_for("m03").loss_prob == 0.058);
  REQUIRE(c.reboots.size() == 1);
  CHECK(c.reboots[0].first == "m02");
  CHECK(c.environment.rain.size() == 1);
}

TEST_CASE("a short run produces every artifact, identically twice") {
  const auto dir = fixtures::scratch("scenario_run");
  const auto cfg = write_config(dir, base_config() + "[bad_data]\nsensor_id = m01-sm\nstart = 2006-01-01T06:00:00Z\n"
                                                      "end = 2006-01-01T07:00:00Z\nreason = test\n");
  std::ostringstream log;
  REQUIRE(run_scenario(cfg, dir / "a", std::nullopt, log) == 0);
  REQUIRE(run_scenario(cfg, dir / "b", std::nullopt, log) == 0);
  for (const char* name : {"weather.csv", "downloads.csv", "health.csv", "energy.csv", "energy.json",
                           "report_moisture.csv", "report_moisture.svg", "summary.json",
                           "cube/soil_moisture_daily_by_mote.csv", "cube/precipitation_daily_by_site.csv",
                           "store/measurement.tbl", "level0/m01-1.csv"}) {
    CAPTURE(name);
    REQUIRE(std::filesystem::exists(dir / "a" / name));
    CHECK(slurp(dir / "a" / name) == slurp(dir / "b" / name));
  }
  const auto summary = nlohmann::json::parse(slurp(dir / "a" / "summary.json"));
  CHECK(summary["motes"] == 10);
  CHECK(summary["downloads"] == 20);
  CHECK(summary["failed_downloads"] == 0);
  // Two days of minute samples from ten motes.
  CHECK(summary["records_downloaded"] == 10 * 2880);
  CHECK(summary["measurements"] == 5 * 10 * 2880);
  CHECK(summary["calibrated"].get<int>() == 5 * 10 * 2880 - 60);
  const Store store = Store::open(dir / "a" / "store");
  CHECK(store.staging.empty());
  CHECK(store.bad_data.size() == 1);

  std::ostringstream other;
  REQUIRE(run_scenario(cfg, dir / "c", 7, other) == 0);
  CHECK(slurp(dir / "a" / "level0" / "m01-1.csv") != slurp(dir / "c" / "level0" / "m01-1.csv"));
}

TEST_CASE("budget exports") {
  const std::string csv = budget_csv(CurrentBudget::reference_mote());
  CHECK(csv.find("radio,22.7000,1.9000,120.0000,0.359417") != std::string::npos);
  const auto j = nlohmann::json::parse(budget_json(CurrentBudget::reference_mote(), BatteryModel{}));
  CHECK(j.dump().find("0.3678") != std::string::npos);
}

TEST_CASE("synthesized weather follows the environment") {
  EnvironmentModel env;
  env.rain = {{parse_utc("2006-01-02T03:00:00Z"), 4.5}};
  const std::string csv = synthesize_weather_csv(env, parse_date("2006-01-01"), parse_date("2006-01-03"));
  std::istringstream in(csv);
  Store store;
  const WeatherResult r = ingest_weather(in, store);
  CHECK(r.days == 3);
  CHECK(r.rejected == 0);
  CHECK(store.weather.at(parse_date("2006-01-02")).precipitation_mm == 4.5);
  CHECK((store.weather.at(parse_date("2006-01-02")).events & kRain) != 0);
  CHECK(store.weather.at(parse_date("2006-01-01")).precipitation_mm == 0);
}
