#include "doctest.h"
#include "soilnet/channel.hpp"

#include <vector>

using namespace soilnet;

TEST_CASE("delivery ratio tracks the loss probability") {
  LinkModel link;
  link.loss_prob = 0.3;
  Rng rng(7);
  LinkState state;
  int delivered = 0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) delivered += transmit(link, state, rng).outcome == Outcome::delivered;
  CHECK(delivered / double(n) == doctest::Approx(0.7).epsilon(0.01));
}

TEST_CASE("corruption applies only to frames that were not lost") {
  LinkModel link;
  link.loss_prob = 0.5;
  link.corrupt_prob = 0.5;
  Rng rng(11);
  int lost = 0, corrupted = 0, delivered = 0;
  for (int i = 0; i < 100000; ++i) {
    const Delivery d = transmit(link, rng);
    switch (d.outcome) {
      case Outcome::lost: ++lost; CHECK_FALSE(d.lqi.has_value()); break;
      case Outcome::corrupted: ++corrupted; CHECK(d.lqi.has_value()); CHECK_FALSE(d.duplicated); break;
      case Outcome::delivered: ++delivered; break;
    }
  }
  CHECK(lost / 1e5 == doctest::Approx(0.5).epsilon(0.02));
  CHECK(corrupted / 1e5 == doctest::Approx(0.25).epsilon(0.03));
  CHECK(delivered / 1e5 == doctest::Approx(0.25).epsilon(0.03));
}

TEST_CASE("LQI stays within the radio's reported range") {
  LinkModel link;
  link.lqi_mean_good = 110;
  link.lqi_mean_bad = 50;
  link.lqi_sigma = 30;
  link.quality_mixture = 0.5;
  Rng rng(3);
  for (int i = 0; i < 20000; ++i) {
    const Delivery d = transmit(link, rng);
    REQUIRE(d.lqi);
    CHECK(*d.lqi >= kLqiMin);
    CHECK(*d.lqi <= kLqiMax);
  }
}

TEST_CASE("quality mixture shapes the LQI distribution") {
  LinkModel link;
  link.quality_mixture = 0.25;
  link.lqi_sigma = 0;
  Rng rng(5);
  int good = 0;
  for (int i = 0; i < 40000; ++i) good += *transmit(link, rng).lqi == link.lqi_mean_good;
  CHECK(good / 40000.0 == doctest::Approx(0.25).epsilon(0.03));
}

TEST_CASE("same seed, same frames") {
  LinkModel link;
  link.loss_prob = 0.4;
  link.duplicate_prob = 0.1;
  Rng a(99), b(99);
  for (int i = 0; i < 1000; ++i) {
    const Delivery x = transmit(link, a);
    const Delivery y = transmit(link, b);
    CHECK(x.outcome == y.outcome);
    CHECK(x.lqi == y.lqi);
    CHECK(x.duplicated == y.duplicated);
  }
}

TEST_CASE("prr from an LQI window") {
  const std::vector<double> mid{78, 82};
  CHECK(prr_from_lqi(mid) == doctest::Approx(0.5));
  const std::vector<double> high{105};
  CHECK(prr_from_lqi(high) == doctest::Approx(1.0 / (1.0 + std::exp(-25.0 / 4.0))));
  const std::vector<double> low{55, 55};
  CHECK(prr_from_lqi(low) < 0.01);
  CHECK_THROWS_AS(prr_from_lqi(std::vector<double>{}), std::invalid_argument);
}

TEST_CASE("link validation") {
  LinkModel link;
  link.loss_prob = 1.2;
  CHECK_THROWS_AS(link.validate(), std::invalid_argument);
  link = LinkModel{};
  link.lqi_mean_bad = 20;
  CHECK_THROWS_AS(link.validate(), std::invalid_argument);
  link = LinkModel{};
  link.lqi_sigma = -1;
  CHECK_THROWS_AS(link.validate(), std::invalid_argument);
}
