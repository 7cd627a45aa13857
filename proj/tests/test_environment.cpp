#include <cmath>

#include "doctest.h"
#include "soilnet/environment.hpp"

using namespace soilnet;

namespace {

EnvironmentModel with_rain() {
  EnvironmentModel env;
  env.reference_time = parse_utc("2005-12-01");
  env.rain = {{parse_utc("2005-12-03T12:00:00Z"), 10.0}};
  return env;
}

}  // namespace

TEST_CASE("air temperature peaks at the configured hour") {
  EnvironmentModel env;
  env.reference_time = parse_utc("2005-12-01");
  CHECK(env.air_temp_c(parse_utc("2005-12-01T20:00:00Z")) == doctest::Approx(8.0));
  CHECK(env.air_temp_c(parse_utc("2005-12-01T08:00:00Z")) == doctest::Approx(-2.0));
  env.seasonal_drift_c_per_day = 0.5;
  // 2 days 20 h after the reference.
  CHECK(env.air_temp_c(parse_utc("2005-12-03T20:00:00Z")) == doctest::Approx(8.0 + 0.5 * 68.0 / 24.0));
}

TEST_CASE("soil swing is damped and lagged with depth") {
  EnvironmentModel env;
  env.reference_time = parse_utc("2005-12-01");
  // 10 cm: amplitude 5 * 0.35, peak 3 h after the air.
  CHECK(env.soil_temp_c(parse_utc("2005-12-01T23:00:00Z"), 10) == doctest::Approx(3.0 + 1.75));
  CHECK(env.soil_temp_c(parse_utc("2005-12-01T20:00:00Z"), 0) == doctest::Approx(8.0));
  double lo = 1e9, hi = -1e9;
  for (int m = 0; m < 1440; m += 10) {
    const double v = env.soil_temp_c(parse_utc("2005-12-01") + std::chrono::minutes{m}, 20);
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  CHECK((hi - lo) / 2 == doctest::Approx(5.0 * 0.35 * 0.35).epsilon(0.01));
}

TEST_CASE("moisture wets quickly and dries slowly") {
  const EnvironmentModel env = with_rain();
  const UtcSeconds rain = parse_utc("2005-12-03T12:00:00Z");
  CHECK(env.moisture_kpa(rain - std::chrono::seconds{1}) == doctest::Approx(80.0));
  // 10 mm wets by 0.8 of the dry-wet span (0.08 per mm).
  CHECK(env.moisture_kpa(rain) == doctest::Approx(80.0 - 70.0 * 0.8));
  // Drying constant 6 h per mm: after one 60 h tau the wetness is 0.8 / e.
  CHECK(env.moisture_kpa(rain + std::chrono::hours{60}) == doctest::Approx(80.0 - 70.0 * 0.8 * std::exp(-1.0)));
  double prev = env.moisture_kpa(rain);
  for (int h = 1; h <= 240; ++h) {
    const double v = env.moisture_kpa(rain + std::chrono::hours{h});
    CHECK(v > prev);
    prev = v;
  }
}

TEST_CASE("photoperiod and daily rain totals") {
  const EnvironmentModel env = with_rain();
  CHECK(env.daylight(parse_utc("2005-12-01T17:00:00Z")) == doctest::Approx(1.0));
  CHECK(env.daylight(parse_utc("2005-12-01T05:00:00Z")) == 0.0);
  CHECK(env.photo_raw(parse_utc("2005-12-01T05:00:00Z")) == doctest::Approx(20.0));
  CHECK(env.box_temp_c(parse_utc("2005-12-01T17:00:00Z")) ==
        doctest::Approx(env.air_temp_c(parse_utc("2005-12-01T17:00:00Z")) + 4.0));
  CHECK(env.rain_mm_on(parse_date("2005-12-03")) == 10.0);
  CHECK(env.rain_mm_on(parse_date("2005-12-04")) == 0.0);
}

TEST_CASE("validation") {
  EnvironmentModel env;
  env.soil_damping = 1.5;
  CHECK_THROWS_AS(env.validate(), std::invalid_argument);
  env = EnvironmentModel{};
  env.rain = {{parse_utc("2005-12-02"), 1}, {parse_utc("2005-12-01"), 1}};
  CHECK_THROWS_AS(env.validate(), std::invalid_argument);
  env = EnvironmentModel{};
  env.drying_tau_h_per_mm = 0;
  CHECK_THROWS_AS(env.validate(), std::invalid_argument);
}
