#include "doctest.h"
#include "cube_oracle.hpp"
#include "fixtures.hpp"
#include "soilnet/cube.hpp"

using namespace soilnet;

namespace {

Cube build(const oracle::Fixture& f) { return Cube::build(f.cells, f.ids, f.weather, f.registry); }

}  // namespace

TEST_CASE("calendar keys") {
  CHECK(iso_week_key(parse_date("2005-01-01")) == "2004-W53");
  CHECK(iso_week_key(parse_date("2006-01-01")) == "2005-W52");
  CHECK(iso_week_key(parse_date("2006-01-02")) == "2006-W01");
  CHECK(iso_week_key(parse_date("2008-12-29")) == "2009-W01");
  CHECK(season_key(parse_date("2005-12-26")) == "2006-DJF");
  CHECK(season_key(parse_date("2006-02-28")) == "2006-DJF");
  CHECK(season_key(parse_date("2006-03-01")) == "2006-MAM");
  CHECK(season_key(parse_date("2006-10-15")) == "2006-SON");
  const UtcSeconds t = parse_utc("2006-01-03T07:40:00Z");
  CHECK(time_key(t, TimeLevel::slot) == "2006-01-03T07:40:00Z");
  CHECK(time_key(t, TimeLevel::hour) == "2006-01-03T07");
  CHECK(time_key(t, TimeLevel::date) == "2006-01-03");
  CHECK(time_key(t, TimeLevel::year) == "2006");
  CHECK(time_key(t, TimeLevel::all) == "all");
  CHECK(cycle_key(t, CyclicGroup::hour_of_day) == "07");
  CHECK(cycle_key(t, CyclicGroup::week_of_year) == "W01");
}

TEST_CASE("week keys agree with strftime over several years") {
  for (std::int64_t day = 12000; day < 12000 + 3 * 366; ++day) {
    const Date d{std::chrono::days{day}};
    CHECK(iso_week_key(d) == oracle::strf(day * 86400, "%G-W%V"));
  }
}

TEST_CASE("empty cube") {
  const Registry reg = fixtures::standard_registry();
  const Cube cube = Cube::build(Store{}, reg);
  CHECK(cube.sensor_facts() == 0);
  CHECK(cube.query(CubeQuery{}).empty());
  CHECK(results_to_csv({}) == "time_key,cycle_key,location_key,value,count,bucket_start\n");
}

TEST_CASE("mixed steps are refused") {
  const Registry reg = fixtures::standard_registry();
  StringPool ids;
  const Key k = ids.intern("m1-st");
  const std::vector<DataSeriesCell> cells{{k, 0, 600, 1, 1, 1, 0, 1, false}, {k, 0, 3600, 1, 1, 1, 0, 1, false}};
  CHECK_THROWS_AS(Cube::build(cells, ids, {}, reg), MixedStepError);
}

TEST_CASE("small worked example") {
  const Registry reg = fixtures::standard_registry();
  StringPool ids;
  const Key a = ids.intern("m1-st");
  const Key b = ids.intern("m2-st");
  const std::int64_t s0 = to_unix(parse_utc("2005-12-01")) / 600;
  const std::vector<DataSeriesCell> cells{
      {a, s0, 600, 2.0, 1.0, 3.0, 1.0, 3, false},
      {a, s0 + 1, 600, 4.0, 4.0, 4.0, 0.0, 0, true},
      {b, s0, 600, 6.0, 5.0, 7.0, 1.0, 2, false},
  };
  const Cube cube = Cube::build(cells, ids, {}, reg);
  CubeQuery q;
  q.location_level = LocationLevel::mote;
  auto r = cube.query(q);
  REQUIRE(r.size() == 2);
  CHECK(r[0].location_key == "m1");
  CHECK(r[0].count == 4);
  CHECK(r[0].value == doctest::Approx((3 * 2.0 + 4.0) / 4));
  CHECK(r[1].value == 6.0);

  q.location_level = LocationLevel::all;
  q.aggregate = Aggregate::median;
  // Weighted means: 2 x3, 4 x1, 6 x2 -> six values, middle pair (2, 4).
  CHECK(cube.query(q)[0].value == 3.0);
  q.aggregate = Aggregate::stddev;
  // Pooled: rebuild from within-cell and between-cell sums of squares.
  const double grand = (3 * 2.0 + 4.0 + 2 * 6.0) / 6;
  const double ss = 2 * 1.0 + 1 * 1.0 + 3 * (2 - grand) * (2 - grand) + (4 - grand) * (4 - grand) +
                    2 * (6 - grand) * (6 - grand);
  CHECK(cube.query(q)[0].value == doctest::Approx(std::sqrt(ss / 5)));
  q.include_interpolated = false;
  q.aggregate = Aggregate::count;
  CHECK(cube.query(q)[0].value == 5);
  q.aggregate = Aggregate::max;
  q.filters = {parse_filter("mote = m1")};
  CHECK(cube.query(q)[0].value == 3.0);

  const std::string csv = results_to_csv(cube.query(q));
  CHECK(csv == "time_key,cycle_key,location_key,value,count,bucket_start\nall,,all,3,3,2005-12-01T00:00:00Z\n");
  const std::string json = results_to_json(cube.query(q));
  CHECK(json.find("\"time_key\": \"all\"") < json.find("\"value\": 3.0"));
}

TEST_CASE("weather sits beside soil data by date") {
  const Registry reg = fixtures::standard_registry();
  Store store;
  store.weather[parse_date("2005-12-01")] = {parse_date("2005-12-01"), -1, 5, 2, 7.5, 80, 1010, kRain};
  store.dataseries.push_back({store.ids.intern("m1-sm"), to_unix(parse_utc("2005-12-01T12:00:00Z")) / 600, 600,
                              30, 30, 30, 0, 10, false});
  const Cube cube = Cube::build(store, reg);
  CHECK(cube.weather_facts() == 1);
  CubeQuery rain;
  rain.measure = *measure_from_string("precipitation_mm");
  rain.time_level = TimeLevel::date;
  rain.location_level = LocationLevel::site;
  CubeQuery moist;
  moist.measure = *measure_from_string("soil_moisture");
  moist.time_level = TimeLevel::date;
  const auto r = cube.query(rain);
  const auto m = cube.query(moist);
  REQUIRE(r.size() == 1);
  REQUIRE(m.size() == 1);
  CHECK(r[0].time_key == m[0].time_key);
  CHECK(r[0].location_key == "s1");
  CHECK(r[0].value == 7.5);
  CHECK(m[0].value == 30);
}

TEST_CASE("invalid queries") {
  Rng rng(1);
  const oracle::Fixture f = oracle::make_fixture(rng, 200);
  const Cube cube = build(f);
  CubeQuery q;
  q.measure = Measure::weather("tavg_c");
  q.time_level = TimeLevel::hour;
  CHECK_THROWS_AS(cube.query(q), QueryError);
  q.time_level = TimeLevel::date;
  q.location_level = LocationLevel::mote;
  CHECK_THROWS_AS(cube.query(q), QueryError);
  q.location_level = LocationLevel::site;
  q.cyclic_group = CyclicGroup::hour_of_day;
  CHECK_THROWS_AS(cube.query(q), QueryError);
  q.cyclic_group = CyclicGroup::none;
  q.filters = {parse_filter("mote = a1")};
  CHECK_THROWS_AS(cube.query(q), QueryError);
  q.measure = Measure::weather("snowfall");
  q.filters.clear();
  CHECK_THROWS_AS(cube.query(q), QueryError);

  CubeQuery s;
  s.time_level = TimeLevel::slot;
  s.cyclic_group = CyclicGroup::week_of_year;
  CHECK_THROWS_AS(cube.query(s), QueryError);

  CHECK_THROWS_AS(parse_filter("depth_cm"), QueryError);
  CHECK_THROWS_AS(parse_filter("colour = red"), QueryError);
  CHECK_THROWS_AS(parse_filter("depth_cm > deep"), QueryError);
  CHECK_THROWS_AS(parse_filter("mote ="), QueryError);
  const Filter ok = parse_filter(" depth_cm>=10 ");
  CHECK(ok.field == "depth_cm");
  CHECK(ok.op == Filter::Op::ge);
  CHECK(ok.value == "10");
  CHECK_FALSE(measure_from_string("wind"));
  CHECK(aggregate_from_string("median") == Aggregate::median);
  CHECK(to_string(TimeLevel::season) == "season");
}

TEST_CASE("randomized queries match the brute-force scan") {
  Rng rng(2024);
  const oracle::Fixture f = oracle::make_fixture(rng, 3000);
  const Cube cube = build(f);
  CHECK(cube.sensor_facts() == f.cells.size());
  for (int i = 0; i < 100; ++i) {
    const CubeQuery q = oracle::random_query(rng);
    const std::string d = oracle::diff(cube.query(q), oracle::brute_force(f, q), q.aggregate);
    CAPTURE(i);
    CHECK_MESSAGE(d.empty(), d);
  }
}

TEST_CASE("rollups conserve counts and sums at every node") {
  Rng rng(7);
  const oracle::Fixture f = oracle::make_fixture(rng, 4000);
  const std::string d = oracle::rollup_diff(build(f), f.registry);
  CHECK_MESSAGE(d.empty(), d);
}
