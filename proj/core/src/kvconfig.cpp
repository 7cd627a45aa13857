#include "soilnet/kvconfig.hpp"

#include <charconv>
#include <fstream>
#include <istream>

namespace soilnet {

ConfigError::ConfigError(std::string source, int line, const std::string& what)
    : std::runtime_error(source + ":" + std::to_string(line) + ": " + what),
      source_(std::move(source)),
      line_(line) {}

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split(std::string_view s, char delim) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(delim, start);
    out.emplace_back(trim(s.substr(start, pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::optional<double> parse_number(std::string_view text) {
  text = trim(text);
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  double value = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (text.empty() || ec != std::errc{} || ptr != text.data() + text.size()) return std::nullopt;
  return value;
}

std::optional<long long> parse_integer(std::string_view text) {
  text = trim(text);
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  long long value = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (text.empty() || ec != std::errc{} || ptr != text.data() + text.size()) return std::nullopt;
  return value;
}

KvSection::KvSection(std::string name, std::string source, int line)
    : name_(std::move(name)), source_(std::move(source)), line_(line) {}

void KvSection::add(KvEntry entry) {
  if (const KvEntry* prior = find(entry.key)) {
    throw ConfigError(source_, entry.line,
                      "duplicate key '" + entry.key + "' (first set on line " +
                          std::to_string(prior->line) + ")");
  }
  entries_.push_back(std::move(entry));
}

const KvEntry* KvSection::find(std::string_view key) const {
  for (const auto& e : entries_) {
    if (e.key == key) return &e;
  }
  return nullptr;
}

void KvSection::fail(std::string_view key, const std::string& what) const {
  const KvEntry* e = find(key);
  throw ConfigError(source_, e ? e->line : line_, "[" + name_ + "] " + std::string(key) + ": " + what);
}

void KvSection::fail(const std::string& what) const {
  throw ConfigError(source_, line_, "[" + name_ + "] " + what);
}

const std::string& KvSection::text(std::string_view key) const {
  const KvEntry* e = find(key);
  if (!e) fail(key, "missing required key");
  return e->value;
}

std::string KvSection::text_or(std::string_view key, std::string fallback) const {
  const KvEntry* e = find(key);
  return e ? e->value : std::move(fallback);
}

double KvSection::number(std::string_view key) const {
  const auto v = parse_number(text(key));
  if (!v) fail(key, "expected a decimal number, got '" + text(key) + "'");
  return *v;
}

double KvSection::number_or(std::string_view key, double fallback) const {
  return has(key) ? number(key) : fallback;
}

long long KvSection::integer(std::string_view key) const {
  const auto v = parse_integer(text(key));
  if (!v) fail(key, "expected an integer, got '" + text(key) + "'");
  return *v;
}

long long KvSection::integer_or(std::string_view key, long long fallback) const {
  return has(key) ? integer(key) : fallback;
}

std::vector<double> KvSection::numbers(std::string_view key, std::size_t expected) const {
  std::vector<double> out;
  for (const auto& part : split(text(key), ',')) {
    const auto v = parse_number(part);
    if (!v) fail(key, "expected comma-separated numbers");
    out.push_back(*v);
  }
  if (out.size() != expected) {
    fail(key, "expected " + std::to_string(expected) + " values, got " + std::to_string(out.size()));
  }
  return out;
}

std::vector<std::string> KvSection::list(std::string_view key) const {
  if (!has(key)) return {};
  auto parts = split(text(key), ',');
  std::erase_if(parts, [](const std::string& s) { return s.empty(); });
  return parts;
}

std::vector<KvSection> parse_kv(std::istream& in, const std::string& source) {
  std::vector<KvSection> sections;
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line = trim(raw);
    if (line_no == 1 && line.starts_with("\xEF\xBB\xBF")) line = trim(line.substr(3));
    if (line.empty() || line.front() == '#' || line.front() == ';') continue;
    if (line.front() == '[') {
      if (line.back() != ']' || line.size() < 3) {
        throw ConfigError(source, line_no, "malformed section header '" + std::string(line) + "'");
      }
      sections.emplace_back(std::string(trim(line.substr(1, line.size() - 2))), source, line_no);
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError(source, line_no, "expected 'key = value', got '" + std::string(line) + "'");
    }
    if (sections.empty()) throw ConfigError(source, line_no, "key outside of any [section]");
    const auto key = trim(line.substr(0, eq));
    if (key.empty()) throw ConfigError(source, line_no, "empty key");
    sections.back().add(KvEntry{std::string(key), std::string(trim(line.substr(eq + 1))), line_no});
  }
  return sections;
}

std::vector<KvSection> parse_kv_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path.string(), 0, "cannot open file");
  return parse_kv(in, path.string());
}

}  // namespace soilnet
