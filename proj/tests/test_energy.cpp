#include "doctest.h"
#include "soilnet/energy.hpp"

#include <cmath>
#include <vector>

using namespace soilnet;

namespace {

double round3(double v) { return std::round(v * 1000.0) / 1000.0; }

}  // namespace

TEST_CASE("reference budget averages 0.368 mA") {
  const CurrentBudget b = CurrentBudget::reference_mote();
  // Radio 22.7 mA for 1.9 s of 120 s; sensing 0.64 mA for 0.79 s of 60 s.
  const double radio = 22.7 * 1.9 / 120.0;
  const double sensing = 0.64 * 0.79 / 60.0;
  CHECK(duty_cycle_avg(22.7, 1.9, 120.0) == doctest::Approx(radio).epsilon(1e-12));
  CHECK(round3(radio) == doctest::Approx(0.359));
  CHECK(total_avg_current(b) == doctest::Approx(radio + sensing).epsilon(1e-12));
  CHECK(round3(total_avg_current(b)) == doctest::Approx(0.368));
}

TEST_CASE("seventy days and one week of consumption") {
  const double i = round3(total_avg_current(CurrentBudget::reference_mote()));
  CHECK(consumed_mAh(i, 70 * 24) == doctest::Approx(618.24));
  CHECK(consumed_mAh(i, 7 * 24) == doctest::Approx(61.824));
  const BatteryModel battery;
  // 0.2 V per cell out of a 0.7 V usable span of 2200 mAh.
  CHECK(consumed_from_voltage(0.2, battery) == doctest::Approx(2200.0 * 0.2 / 0.7));
  CHECK(std::abs(consumed_from_voltage(0.2, battery) - 629.0) / 629.0 < 0.02);
  CHECK(consumed_from_voltage(0.02, battery) == doctest::Approx(62.857).epsilon(1e-4));
  CHECK_THROWS_AS(consumed_from_voltage(0.8, battery), std::invalid_argument);
  CHECK_THROWS_AS(consumed_from_voltage(-0.1, battery), std::invalid_argument);
}

TEST_CASE("lifetime to the flash floor and to cutoff") {
  const BatteryModel battery;
  const double i = total_avg_current(CurrentBudget::reference_mote());
  const double flash_days = 2200.0 * (3.0 - 2.2) / (3.0 - 1.6) / i / 24.0;
  const double cutoff_days = 2200.0 / i / 24.0;
  CHECK(predict_lifetime_days(battery, i, LifetimeStop::flash_floor) == doctest::Approx(flash_days));
  CHECK(predict_lifetime_days(battery, i, LifetimeStop::pack_cutoff) == doctest::Approx(cutoff_days));
  CHECK(flash_days == doctest::Approx(142.4).epsilon(0.001));
  CHECK(cutoff_days == doctest::Approx(249.2).epsilon(0.001));
  CHECK_THROWS_AS(predict_lifetime_days(battery, 0.0, LifetimeStop::flash_floor), std::invalid_argument);
}

TEST_CASE("pack voltage is linear in charge with a temperature term") {
  const BatteryModel battery;
  CHECK(battery.pack_voltage(0) == doctest::Approx(3.0));
  CHECK(battery.pack_voltage(2200) == doctest::Approx(1.6));
  CHECK(battery.pack_voltage(0, 10.0) == doctest::Approx(3.0 + 2 * 0.004 * 10));
  CHECK(battery.consumed_at(battery.pack_voltage(777)) == doctest::Approx(777));

  const std::vector<double> temps{10, 10, 20};
  const auto trace = voltage_trace(battery, 1.0, temps, 3600, 10);
  REQUIRE(trace.size() == 3);
  CHECK(trace[0] == doctest::Approx(3.0));
  CHECK(trace[1] == doctest::Approx(3.0 - 1.4 / 2200));
  CHECK(trace[2] == doctest::Approx(3.0 - 2 * 1.4 / 2200 + 0.08));
}

TEST_CASE("budget validation") {
  CHECK_THROWS_AS(duty_cycle_avg(1, 2, 1), std::invalid_argument);
  CHECK_THROWS_AS(duty_cycle_avg(1, 0, 0), std::invalid_argument);
  CurrentBudget b{{{"x", 1, 5, 4}}, 0};
  CHECK_THROWS_AS(b.validate(), std::invalid_argument);
  BatteryModel m;
  m.flash_floor_pack = 3.5;
  CHECK_THROWS_AS(m.validate(), std::invalid_argument);
  CHECK(CurrentBudget{{}, 0.01}.find("radio") == nullptr);
  CHECK(total_avg_current(CurrentBudget{{}, 0.01}) == doctest::Approx(0.01));
}
