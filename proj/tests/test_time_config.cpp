#include <sstream>

#include "doctest.h"
#include "soilnet/kvconfig.hpp"
#include "soilnet/random.hpp"
#include "soilnet/time.hpp"

using namespace soilnet;

TEST_CASE("utc parse and format round trip") {
  const UtcSeconds t = parse_utc("2005-12-01T01:00:00Z");
  CHECK(to_unix(t) == 1133398800);
  CHECK(format_utc(t) == "2005-12-01T01:00:00Z");
  CHECK(to_unix(parse_utc("2005-12-01")) == 1133395200);
  CHECK(format_date(parse_date("2006-01-18")) == "2006-01-18");
  CHECK(to_unix(parse_utc("1970-01-01T00:00:00")) == 0);
}

TEST_CASE("malformed timestamps are rejected") {
  CHECK_THROWS_AS(parse_utc("2005-13-01T00:00:00Z"), std::invalid_argument);
  CHECK_THROWS_AS(parse_utc("2005-02-30"), std::invalid_argument);
  CHECK_THROWS_AS(parse_utc("yesterday"), std::invalid_argument);
  CHECK_THROWS_AS(parse_utc("2005-12-01T25:00:00Z"), std::invalid_argument);
}

TEST_CASE("kv sections, typed getters, and line-numbered errors") {
  std::istringstream in("# header\n[a]\nx = 1.5\nname = hello\n\n[b]\nlist = 1, 2 ,3\n[a]\nx = 2\n");
  const auto sections = parse_kv(in, "mem");
  REQUIRE(sections.size() == 3);
  CHECK(sections[0].name() == "a");
  CHECK(sections[0].number("x") == 1.5);
  CHECK(sections[0].text("name") == "hello");
  CHECK(sections[0].number_or("missing", 7.0) == 7.0);
  CHECK(sections[1].numbers("list", 3) == std::vector<double>{1, 2, 3});
  CHECK(sections[2].integer("x") == 2);

  try {
    sections[0].integer("x");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(e.line() == 3);
    CHECK(e.source() == "mem");
  }
  CHECK_THROWS_AS(sections[0].text("absent"), ConfigError);
}

TEST_CASE("kv structural errors") {
  std::istringstream orphan("x = 1\n");
  CHECK_THROWS_AS(parse_kv(orphan, "mem"), ConfigError);
  std::istringstream dup("[a]\nx = 1\nx = 2\n");
  CHECK_THROWS_AS(parse_kv(dup, "mem"), ConfigError);
  std::istringstream header("[a\n");
  CHECK_THROWS_AS(parse_kv(header, "mem"), ConfigError);
}

TEST_CASE("rng is reproducible and roughly uniform") {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) CHECK(a.next() == b.next());
  Rng r(1);
  double sum = 0, sq = 0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double z = r.normal(0, 1);
    sum += z;
    sq += z * z;
  }
  CHECK(std::abs(sum / n) < 0.01);
  CHECK(std::abs(sq / n - 1) < 0.02);
  CHECK(mix_seed(1, 2) != mix_seed(1, 3));
  CHECK(stable_hash("m01") == stable_hash("m01"));
  CHECK(stable_hash("") == 0xcbf29ce484222325ULL);
}
