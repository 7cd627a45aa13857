#pragma once

// Query-result rendering: CSV and JSON tables, and a fixed-size SVG
// time-series chart with an optional daily weather overlay.
//
// SVG layout (1200 x 400): plot area x in [70, 1130], y in [30, 330].
// The x axis spans the earliest to the latest point (both padded by one
// hour when they coincide). The y axis spans the value range padded by 5%
// on each side (+-1 when flat). With the overlay, daily precipitation
// bars grow upward from the bottom axis to at most 80 px (scaled by the
// wettest day), and the tmin..tmax band is drawn on its own scale against
// the right-hand axis. Numbers are printed with two decimals.

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "soilnet/cube.hpp"

namespace soilnet {

enum class ReportFormat { csv, json, svg };

class ReportError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Throws ReportError for an unknown name.
ReportFormat report_format_from_string(std::string_view name);

/// Merges points of each location into `hours`-wide buckets aligned to
/// midnight UTC, as count-weighted means of the values.
std::vector<CellResult> resample(const std::vector<CellResult>& rows, int hours);

struct ChartOptions {
  std::string title;
  std::string y_label;
  const std::map<Date, WeatherDay>* weather = nullptr;  // overlay when set
};

std::string render_svg(const std::vector<CellResult>& rows, const ChartOptions& options);

std::string render_report(const std::vector<CellResult>& rows, ReportFormat format, const ChartOptions& options);

}  // namespace soilnet
