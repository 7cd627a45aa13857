#include "soilnet/channel.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace soilnet {
namespace {

constexpr double kPrrMidpointLqi = 80.0;
constexpr double kPrrScaleLqi = 4.0;

bool is_probability(double p) { return p >= 0.0 && p <= 1.0; }

}  // namespace

void LinkModel::validate() const {
  for (double p : {loss_prob, corrupt_prob, quality_mixture, state_persistence, duplicate_prob}) {
    if (!is_probability(p)) throw std::invalid_argument("link probabilities must lie in [0, 1]");
  }
  for (double m : {lqi_mean_good, lqi_mean_bad}) {
    if (m < kLqiMin || m > kLqiMax) throw std::invalid_argument("LQI means must lie within [50, 110]");
  }
  if (lqi_sigma < 0) throw std::invalid_argument("LQI spread must be >= 0");
}

LinkModel LinkModel::from_config(const KvSection& s) {
  LinkModel link;
  link.loss_prob = s.number_or("loss_prob", link.loss_prob);
  link.corrupt_prob = s.number_or("corrupt_prob", link.corrupt_prob);
  link.lqi_mean_good = s.number_or("lqi_mean_good", link.lqi_mean_good);
  link.lqi_mean_bad = s.number_or("lqi_mean_bad", link.lqi_mean_bad);
  link.lqi_sigma = s.number_or("lqi_sigma", link.lqi_sigma);
  link.quality_mixture = s.number_or("quality_mixture", link.quality_mixture);
  link.state_persistence = s.number_or("state_persistence", link.state_persistence);
  link.duplicate_prob = s.number_or("duplicate_prob", link.duplicate_prob);
  try {
    link.validate();
  } catch (const std::invalid_argument& e) {
    s.fail(e.what());
  }
  return link;
}

Delivery transmit(const LinkModel& link, LinkState& state, Rng& rng) {
  if (!state.started || !rng.bernoulli(link.state_persistence)) {
    state.good = rng.bernoulli(link.quality_mixture);
    state.started = true;
  }
  Delivery d;
  if (rng.bernoulli(link.loss_prob)) {
    d.outcome = Outcome::lost;
    return d;
  }
  d.outcome = rng.bernoulli(link.corrupt_prob) ? Outcome::corrupted : Outcome::delivered;
  const double mean = state.good ? link.lqi_mean_good : link.lqi_mean_bad;
  d.lqi = std::clamp(rng.normal(mean, link.lqi_sigma), kLqiMin, kLqiMax);
  d.duplicated = d.outcome == Outcome::delivered && rng.bernoulli(link.duplicate_prob);
  return d;
}

Delivery transmit(const LinkModel& link, Rng& rng) {
  LinkState state;
  return transmit(link, state, rng);
}

double prr_from_lqi(std::span<const double> lqi_window) {
  if (lqi_window.empty()) throw std::invalid_argument("LQI window is empty");
  const double mean = std::accumulate(lqi_window.begin(), lqi_window.end(), 0.0) / lqi_window.size();
  return 1.0 / (1.0 + std::exp(-(mean - kPrrMidpointLqi) / kPrrScaleLqi));
}

}  // namespace soilnet
