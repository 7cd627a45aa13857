#include "soilnet/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace soilnet {
namespace {

constexpr double kWidth = 1200, kHeight = 400;
constexpr double kLeft = 70, kRight = 1130, kTop = 30, kBottom = 330;
constexpr double kBarMax = 80;

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e",
                                    "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  std::string s = buf;
  if (s == "-0.00") s = "0.00";
  return s;
}

std::string escape(std::string_view s) {
  std::string out;
  for (const char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

struct Scale {
  double d0, d1, r0, r1;
  double operator()(double v) const { return r0 + (v - d0) / (d1 - d0) * (r1 - r0); }
};

std::pair<double, double> padded(double lo, double hi) {
  if (lo == hi) return {lo - 1, hi + 1};
  const double pad = (hi - lo) * 0.05;
  return {lo - pad, hi + pad};
}

}  // namespace

ReportFormat report_format_from_string(std::string_view name) {
  if (name == "csv") return ReportFormat::csv;
  if (name == "json") return ReportFormat::json;
  if (name == "svg") return ReportFormat::svg;
  throw ReportError("unknown report format '" + std::string(name) + "'");
}

std::vector<CellResult> resample(const std::vector<CellResult>& rows, int hours) {
  if (hours <= 0 || 24 % hours != 0) throw ReportError("resample hours must divide 24");
  const std::int64_t width = static_cast<std::int64_t>(hours) * 3600;
  struct Acc {
    double sum = 0;
    std::uint64_t count = 0;
  };
  std::map<std::tuple<std::string, std::string, std::int64_t>, Acc> buckets;
  for (const auto& r : rows) {
    std::int64_t t = to_unix(r.bucket_start);
    t -= ((t % width) + width) % width;
    auto& a = buckets[{r.location_key, r.cycle_key, t}];
    a.sum += r.value * static_cast<double>(r.count);
    a.count += r.count;
  }
  std::vector<CellResult> out;
  for (const auto& [key, a] : buckets) {
    if (a.count == 0) continue;
    CellResult r;
    r.bucket_start = from_unix(std::get<2>(key));
    r.time_key = format_utc(r.bucket_start);
    r.cycle_key = std::get<1>(key);
    r.location_key = std::get<0>(key);
    r.value = a.sum / static_cast<double>(a.count);
    r.count = a.count;
    out.push_back(std::move(r));
  }
  std::stable_sort(out.begin(), out.end(), [](const CellResult& a, const CellResult& b) {
    return std::tie(a.time_key, a.cycle_key, a.location_key) < std::tie(b.time_key, b.cycle_key, b.location_key);
  });
  return out;
}

std::string render_svg(const std::vector<CellResult>& rows, const ChartOptions& options) {
  std::string svg;
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"1200\" height=\"400\" viewBox=\"0 0 1200 400\">\n";
  svg += "<rect x=\"0\" y=\"0\" width=\"" + num(kWidth) + "\" height=\"" + num(kHeight) + "\" fill=\"white\"/>\n";
  svg += "<text x=\"600.00\" y=\"18.00\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"14\">" +
         escape(options.title) + "</text>\n";
  svg += "<line x1=\"" + num(kLeft) + "\" y1=\"" + num(kBottom) + "\" x2=\"" + num(kRight) + "\" y2=\"" +
         num(kBottom) + "\" stroke=\"black\"/>\n";
  svg += "<line x1=\"" + num(kLeft) + "\" y1=\"" + num(kTop) + "\" x2=\"" + num(kLeft) + "\" y2=\"" + num(kBottom) +
         "\" stroke=\"black\"/>\n";
  svg += "<text x=\"15.00\" y=\"180.00\" transform=\"rotate(-90 15.00 180.00)\" text-anchor=\"middle\" "
         "font-family=\"sans-serif\" font-size=\"12\">" +
         escape(options.y_label) + "</text>\n";

  if (rows.empty()) {
    svg += "</svg>\n";
    return svg;
  }

  std::int64_t t0 = to_unix(rows.front().bucket_start), t1 = t0;
  double v0 = rows.front().value, v1 = v0;
  std::map<std::string, std::vector<const CellResult*>> series;
  for (const auto& r : rows) {
    t0 = std::min(t0, to_unix(r.bucket_start));
    t1 = std::max(t1, to_unix(r.bucket_start));
    v0 = std::min(v0, r.value);
    v1 = std::max(v1, r.value);
    series[r.location_key].push_back(&r);
  }
  if (t0 == t1) {
    t0 -= 3600;
    t1 += 3600;
  }
  const auto [y0, y1] = padded(v0, v1);
  const Scale x{static_cast<double>(t0), static_cast<double>(t1), kLeft, kRight};
  const Scale y{y0, y1, kBottom, kTop};

  for (int k = 0; k <= 4; ++k) {
    const double v = y0 + (y1 - y0) * k / 4.0;
    svg += "<text x=\"" + num(kLeft - 5) + "\" y=\"" + num(y(v) + 4) +
           "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"10\">" + num(v) + "</text>\n";
  }
  for (int k = 0; k <= 4; ++k) {
    const auto t = static_cast<std::int64_t>(std::llround(t0 + (t1 - t0) * k / 4.0));
    svg += "<text x=\"" + num(x(static_cast<double>(t))) + "\" y=\"" + num(kBottom + 16) +
           "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"10\">" +
           format_date(std::chrono::floor<std::chrono::days>(from_unix(t))) + "</text>\n";
  }

  if (options.weather) {
    const Date first = std::chrono::floor<std::chrono::days>(from_unix(t0));
    const Date last = std::chrono::floor<std::chrono::days>(from_unix(t1));
    std::vector<const WeatherDay*> days;
    for (auto it = options.weather->lower_bound(first); it != options.weather->end() && it->first <= last; ++it) {
      days.push_back(&it->second);
    }
    if (!days.empty()) {
      double wettest = 0, tlo = days.front()->tmin_c, thi = days.front()->tmax_c;
      for (const auto* d : days) {
        wettest = std::max(wettest, d->precipitation_mm);
        tlo = std::min(tlo, d->tmin_c);
        thi = std::max(thi, d->tmax_c);
      }
      const auto [b0, b1] = padded(tlo, thi);
      const Scale ty{b0, b1, kBottom, kTop};
      const double day_px = 86400.0 / static_cast<double>(t1 - t0) * (kRight - kLeft);
      std::string upper, lower;
      for (const auto* d : days) {
        const double noon = x(static_cast<double>(to_unix(UtcSeconds{d->date}) + 43200));
        if (noon < kLeft || noon > kRight) continue;
        upper += num(noon) + "," + num(ty(d->tmax_c)) + " ";
        lower = num(noon) + "," + num(ty(d->tmin_c)) + " " + lower;
      }
      if (!upper.empty()) {
        svg += "<polygon class=\"temperature-band\" points=\"" + upper + lower +
               "\" fill=\"#ffcc80\" fill-opacity=\"0.35\" stroke=\"none\"/>\n";
      }
      for (int k = 0; k <= 4; ++k) {
        const double v = b0 + (b1 - b0) * k / 4.0;
        svg += "<text x=\"" + num(kRight + 5) + "\" y=\"" + num(ty(v) + 4) +
               "\" font-family=\"sans-serif\" font-size=\"10\">" + num(v) + "</text>\n";
      }
      if (wettest > 0) {
        const double bar_w = std::max(1.0, day_px * 0.6);
        for (const auto* d : days) {
          if (d->precipitation_mm <= 0) continue;
          const double cx = x(static_cast<double>(to_unix(UtcSeconds{d->date}) + 43200));
          if (cx < kLeft || cx > kRight) continue;
          const double h = d->precipitation_mm / wettest * kBarMax;
          svg += "<rect class=\"precipitation\" x=\"" + num(cx - bar_w / 2) + "\" y=\"" + num(kBottom - h) +
                 "\" width=\"" + num(bar_w) + "\" height=\"" + num(h) + "\" fill=\"#4a90d9\" fill-opacity=\"0.6\">" +
                 "<title>" + format_date(d->date) + " " + num(d->precipitation_mm) + " mm</title></rect>\n";
        }
      }
    }
  }

  std::size_t color = 0;
  double legend_y = kTop + 10;
  for (const auto& [name, points] : series) {
    std::vector<const CellResult*> sorted = points;
    std::stable_sort(sorted.begin(), sorted.end(),
                     [](const CellResult* a, const CellResult* b) { return a->bucket_start < b->bucket_start; });
    const char* stroke = kPalette[color++ % std::size(kPalette)];
    std::string pts;
    for (const auto* p : sorted) {
      if (!pts.empty()) pts += ' ';
      pts += num(x(static_cast<double>(to_unix(p->bucket_start)))) + "," + num(y(p->value));
    }
    svg += "<polyline class=\"series\" data-location=\"" + escape(name) + "\" points=\"" + pts +
           "\" fill=\"none\" stroke=\"" + stroke + "\" stroke-width=\"1.5\"/>\n";
    svg += "<text x=\"" + num(kLeft + 10) + "\" y=\"" + num(legend_y) + "\" fill=\"" + stroke +
           "\" font-family=\"sans-serif\" font-size=\"11\">" + escape(name) + "</text>\n";
    legend_y += 14;
  }
  svg += "</svg>\n";
  return svg;
}

std::string render_report(const std::vector<CellResult>& rows, ReportFormat format, const ChartOptions& options) {
  switch (format) {
    case ReportFormat::csv: return results_to_csv(rows);
    case ReportFormat::json: return results_to_json(rows);
    case ReportFormat::svg: return render_svg(rows, options);
  }
  throw ReportError("unknown report format");
}

}  // namespace soilnet
