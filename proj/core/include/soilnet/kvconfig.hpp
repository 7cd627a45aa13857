#pragma once

// Sectioned key-value text format shared by site configs and scenarios:
//
//   # comment
//   [section]
//   key = value
//
// Sections may repeat; each occurrence is one entity.

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace soilnet {

class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string source, int line, const std::string& what);
  const std::string& source() const noexcept { return source_; }
  int line() const noexcept { return line_; }

 private:
  std::string source_;
  int line_;
};

struct KvEntry {
  std::string key;
  std::string value;
  int line = 0;
};

class KvSection {
 public:
  KvSection(std::string name, std::string source, int line);

  const std::string& name() const { return name_; }
  const std::string& source() const { return source_; }
  int line() const { return line_; }
  const std::vector<KvEntry>& entries() const { return entries_; }

  void add(KvEntry entry);
  bool has(std::string_view key) const { return find(key) != nullptr; }
  const KvEntry* find(std::string_view key) const;

  // The typed getters throw ConfigError naming the entry's line.
  const std::string& text(std::string_view key) const;
  std::string text_or(std::string_view key, std::string fallback) const;
  double number(std::string_view key) const;
  double number_or(std::string_view key, double fallback) const;
  long long integer(std::string_view key) const;
  long long integer_or(std::string_view key, long long fallback) const;
  std::vector<double> numbers(std::string_view key, std::size_t expected) const;
  std::vector<std::string> list(std::string_view key) const;

  [[noreturn]] void fail(std::string_view key, const std::string& what) const;
  [[noreturn]] void fail(const std::string& what) const;

 private:
  std::string name_;
  std::string source_;
  int line_;
  std::vector<KvEntry> entries_;
};

std::vector<KvSection> parse_kv(std::istream& in, const std::string& source);
std::vector<KvSection> parse_kv_file(const std::filesystem::path& path);

std::optional<double> parse_number(std::string_view text);
std::optional<long long> parse_integer(std::string_view text);
std::string_view trim(std::string_view s);
std::vector<std::string> split(std::string_view s, char delim);

}  // namespace soilnet
