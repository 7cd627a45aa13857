// soilnet: simulate a deployment and drive the data pipeline from the shell.

#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "soilnet/cube.hpp"
#include "soilnet/energy.hpp"
#include "soilnet/pipeline.hpp"
#include "soilnet/registry.hpp"
#include "soilnet/report.hpp"
#include "soilnet/scenario.hpp"
#include "soilnet/store.hpp"

namespace {

using namespace soilnet;

constexpr int kConfigError = 1;
constexpr int kRuntimeError = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void emit(const std::string& content, const std::string& output) {
  if (output.empty() || output == "-") {
    std::cout << content;
    return;
  }
  std::ofstream out(output, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + output);
  out << content;
}

GapPolicy parse_gap(const std::string& text) {
  if (text == "missing") return GapPolicy::missing();
  if (text.starts_with("interpolate:")) {
    if (auto n = parse_integer(text.substr(12)); n && *n >= 0) {
      return GapPolicy::interpolate(static_cast<std::uint32_t>(*n));
    }
  }
  throw UsageError("--gap expects 'missing' or 'interpolate:N'");
}

struct QueryArgs {
  std::string store;
  std::string registry;
  std::string measure = "soil_temperature";
  std::string aggregate = "average";
  std::string time_level = "all";
  std::string location_level = "all";
  std::string cyclic = "none";
  std::vector<std::string> filters;
  bool exclude_interpolated = false;
  int step = 600;
  std::string format = "csv";
  std::string output;
};

void add_query_options(CLI::App* cmd, QueryArgs& a) {
  cmd->add_option("--store", a.store, "Store directory")->required();
  cmd->add_option("--registry", a.registry, "Site registry config")->required();
  cmd->add_option("--measure", a.measure, "Sensor type or weather field")->capture_default_str();
  cmd->add_option("--aggregate", a.aggregate, "average|min|max|median|stddev|count")->capture_default_str();
  cmd->add_option("--time-level", a.time_level, "slot|hour|date|week|season|year|all")->capture_default_str();
  cmd->add_option("--location-level", a.location_level, "sensor|mote|patch|site|all")->capture_default_str();
  cmd->add_option("--cyclic", a.cyclic, "none|hour_of_day|week_of_year")->capture_default_str();
  cmd->add_option("--filter", a.filters, "Predicate 'field op value' (repeatable)");
  cmd->add_flag("--exclude-interpolated", a.exclude_interpolated, "Ignore interpolated cells");
  cmd->add_option("--step", a.step, "Grid step of the cells to use, seconds")->capture_default_str();
  cmd->add_option("--format", a.format, "Output format")->capture_default_str();
  cmd->add_option("--output", a.output, "Output file (default stdout)");
}

template <typename T>
T require(std::optional<T> v, const std::string& what) {
  if (!v) throw UsageError("unknown " + what);
  return *v;
}

CubeQuery build_query(const QueryArgs& a) {
  CubeQuery q;
  q.measure = require(measure_from_string(a.measure), "measure '" + a.measure + "'");
  q.aggregate = require(aggregate_from_string(a.aggregate), "aggregate '" + a.aggregate + "'");
  q.time_level = require(time_level_from_string(a.time_level), "time level '" + a.time_level + "'");
  q.location_level = require(location_level_from_string(a.location_level), "location level '" + a.location_level + "'");
  q.cyclic_group = require(cyclic_group_from_string(a.cyclic), "cyclic group '" + a.cyclic + "'");
  q.include_interpolated = !a.exclude_interpolated;
  for (const auto& f : a.filters) q.filters.push_back(parse_filter(f));
  return q;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"soilnet: soil-sensing network simulator and data pipeline"};
  app.require_subcommand(1);

  std::string config_path, out_dir;
  std::optional<std::uint64_t> seed;
  auto* simulate = app.add_subcommand("simulate", "Run a scenario end to end and write its artifacts");
  simulate->add_option("--config", config_path, "Scenario config file")->required();
  simulate->add_option("--out", out_dir, "Artifact directory")->required();
  simulate->add_option("--seed", seed, "Override the scenario seed");

  std::string store_dir, registry_path;
  std::vector<std::string> files;
  std::optional<std::uint64_t> load_version;
  auto* ingest = app.add_subcommand("ingest", "Stage Level-0 CSVs, drop duplicates, promote to Level 1");
  ingest->add_option("--store", store_dir, "Store directory")->required();
  ingest->add_option("--registry", registry_path, "Site registry config")->required();
  ingest->add_option("--load-version", load_version, "Load version (default: next free)");
  ingest->add_option("files", files, "Level-0 CSV files")->required()->check(CLI::ExistingFile);

  std::string calib_version = "v1";
  auto* calibrate = app.add_subcommand("calibrate", "Convert pending measurements to physical units");
  calibrate->add_option("--store", store_dir, "Store directory")->required();
  calibrate->add_option("--registry", registry_path, "Site registry config")->required();
  calibrate->add_option("--calib-version", calib_version, "Calibration version label")->capture_default_str();

  int grid_step = 600;
  std::string gap = "missing";
  auto* grid = app.add_subcommand("grid", "Aggregate calibrated values into DataSeries cells");
  grid->add_option("--store", store_dir, "Store directory")->required();
  grid->add_option("--step", grid_step, "Step in seconds; must divide 3600")->capture_default_str();
  grid->add_option("--gap", gap, "missing | interpolate:N")->capture_default_str();

  std::string weather_file;
  auto* weather = app.add_subcommand("weather", "Load a daily weather CSV");
  weather->add_option("--store", store_dir, "Store directory")->required();
  weather->add_option("file", weather_file, "Weather CSV")->required()->check(CLI::ExistingFile);

  QueryArgs query_args;
  auto* query = app.add_subcommand("query", "Aggregate the cube and print the result table");
  add_query_options(query, query_args);

  std::string energy_format = "csv";
  std::string energy_config;
  auto* energy = app.add_subcommand("energy", "Print the current budget and lifetime estimates");
  energy->add_option("--config", energy_config, "Scenario config supplying budget and battery");
  energy->add_option("--format", energy_format, "csv|json")->capture_default_str();

  QueryArgs report_args;
  report_args.time_level = "slot";
  report_args.location_level = "mote";
  report_args.format = "svg";
  bool overlay = false;
  int resample_hours = 0;
  std::string title;
  auto* report = app.add_subcommand("report", "Render a query as CSV, JSON, or an SVG chart");
  add_query_options(report, report_args);
  report->add_flag("--weather-overlay", overlay, "Draw precipitation bars and the temperature band");
  report->add_option("--resample-hours", resample_hours, "Merge points into N-hour buckets");
  report->add_option("--title", title, "Chart title");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*simulate) return run_scenario(config_path, out_dir, seed, std::cerr);

    if (*ingest) {
      const Registry registry = Registry::load(registry_path);
      Store store = Store::open(store_dir);
      for (const auto& f : files) {
        const StageResult r = stage_and_dedup(std::filesystem::path(f), store);
        std::cout << f << ": staged " << r.staged << ", duplicates " << r.duplicates_dropped << ", malformed "
                  << r.malformed_dropped << '\n';
      }
      const PromoteResult p = promote_level1(store, registry, load_version.value_or(store.next_load_version()));
      std::cout << "promoted " << p.promoted << " measurements, quarantined " << p.quarantined << " records\n";
      store.save(store_dir);
      return 0;
    }
    if (*calibrate) {
      const Registry registry = Registry::load(registry_path);
      Store store = Store::open(store_dir);
      const CalibrateResult r = calibrate_pending(store, registry, calib_version);
      std::cout << "calibrated " << r.calibrated << ", skipped " << r.skipped << ", deferred " << r.deferred << '\n';
      store.save(store_dir);
      return 0;
    }
    if (*grid) {
      Store store = Store::open(store_dir);
      const std::size_t cells = grid_dataseries(store, grid_step, parse_gap(gap));
      std::cout << "cells " << cells << '\n';
      store.save(store_dir);
      return 0;
    }
    if (*weather) {
      Store store = Store::open(store_dir);
      const WeatherResult r = ingest_weather(std::filesystem::path(weather_file), store);
      std::cout << "days " << r.days << ", rejected " << r.rejected << '\n';
      store.save(store_dir);
      return 0;
    }
    if (*query) {
      const CubeQuery q = build_query(query_args);
      if (query_args.format != "csv" && query_args.format != "json") throw UsageError("--format must be csv or json");
      const Registry registry = Registry::load(query_args.registry);
      const Store store = Store::open(query_args.store);
      const Cube cube = Cube::build(store, registry, query_args.step);
      const auto rows = cube.query(q);
      emit(query_args.format == "csv" ? results_to_csv(rows) : results_to_json(rows), query_args.output);
      return 0;
    }
    if (*energy) {
      CurrentBudget budget = CurrentBudget::reference_mote();
      BatteryModel battery;
      if (!energy_config.empty()) {
        const ScenarioConfig c = ScenarioConfig::load(energy_config);
        budget = c.budget;
        battery = c.battery;
      }
      if (energy_format == "csv") {
        std::cout << budget_csv(budget);
      } else if (energy_format == "json") {
        std::cout << budget_json(budget, battery);
      } else {
        throw UsageError("--format must be csv or json");
      }
      return 0;
    }
    if (*report) {
      const CubeQuery q = build_query(report_args);
      const ReportFormat format = report_format_from_string(report_args.format);
      const Registry registry = Registry::load(report_args.registry);
      const Store store = Store::open(report_args.store);
      const Cube cube = Cube::build(store, registry, report_args.step);
      auto rows = cube.query(q);
      if (resample_hours > 0) rows = resample(rows, resample_hours);
      ChartOptions chart;
      chart.title = title.empty() ? q.measure.name() : title;
      chart.y_label = q.measure.sensor_type ? std::string(output_unit(*q.measure.sensor_type)) : q.measure.name();
      if (overlay) chart.weather = &store.weather;
      emit(render_report(rows, format, chart), report_args.output);
      return 0;
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kConfigError;
  } catch (const QueryError& e) {
    std::cerr << "query error: " << e.what() << '\n';
    return kConfigError;
  } catch (const ReportError& e) {
    std::cerr << "report error: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kRuntimeError;
  }
  return 0;
}
