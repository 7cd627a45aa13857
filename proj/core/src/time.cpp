#include "soilnet/time.hpp"

#include <charconv>
#include <cstdio>
#include <stdexcept>

namespace soilnet {
namespace {

int parse_field(std::string_view text, std::size_t pos, std::size_t len) {
  if (pos + len > text.size()) throw std::invalid_argument("truncated timestamp: " + std::string(text));
  int value = 0;
  const char* first = text.data() + pos;
  auto [ptr, ec] = std::from_chars(first, first + len, value);
  if (ec != std::errc{} || ptr != first + len) {
    throw std::invalid_argument("bad timestamp field in: " + std::string(text));
  }
  return value;
}

void expect(std::string_view text, std::size_t pos, char c) {
  if (pos >= text.size() || text[pos] != c) {
    throw std::invalid_argument("malformed timestamp: " + std::string(text));
  }
}

}  // namespace

Date parse_date(std::string_view text) {
  using namespace std::chrono;
  if (text.size() < 10) throw std::invalid_argument("malformed date: " + std::string(text));
  const int y = parse_field(text, 0, 4);
  expect(text, 4, '-');
  const int m = parse_field(text, 5, 2);
  expect(text, 7, '-');
  const int d = parse_field(text, 8, 2);
  const year_month_day ymd{year{y}, month{static_cast<unsigned>(m)}, day{static_cast<unsigned>(d)}};
  if (!ymd.ok()) throw std::invalid_argument("invalid calendar date: " + std::string(text));
  return sys_days{ymd};
}

UtcSeconds parse_utc(std::string_view text) {
  using namespace std::chrono;
  const Date date = parse_date(text);
  if (text.size() == 10) return UtcSeconds{date};
  expect(text, 10, 'T');
  const int hh = parse_field(text, 11, 2);
  expect(text, 13, ':');
  const int mm = parse_field(text, 14, 2);
  expect(text, 16, ':');
  const int ss = parse_field(text, 17, 2);
  if (text.size() > 19 && !(text.size() == 20 && text[19] == 'Z')) {
    throw std::invalid_argument("unsupported timestamp suffix: " + std::string(text));
  }
  if (hh > 23 || mm > 59 || ss > 59) throw std::invalid_argument("time out of range: " + std::string(text));
  return UtcSeconds{date} + hours{hh} + minutes{mm} + seconds{ss};
}

std::string format_date(Date d) {
  using namespace std::chrono;
  const year_month_day ymd{d};
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
  return buf;
}

std::string format_utc(UtcSeconds t) {
  using namespace std::chrono;
  const Date d = floor<days>(t);
  const hh_mm_ss hms{t - d};
  char buf[32];
  std::snprintf(buf, sizeof buf, "%sT%02d:%02d:%02dZ", format_date(d).c_str(),
                static_cast<int>(hms.hours().count()), static_cast<int>(hms.minutes().count()),
                static_cast<int>(hms.seconds().count()));
  return buf;
}

}  // namespace soilnet
