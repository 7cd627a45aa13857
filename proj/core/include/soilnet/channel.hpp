#pragma once

// Lossy single-hop link: Bernoulli loss and CRC corruption, with a two-state
// (good/bad) link-quality process that drives the LQI annotation.

#include <optional>
#include <span>
#include <stdexcept>

#include "soilnet/kvconfig.hpp"
#include "soilnet/random.hpp"

namespace soilnet {

inline constexpr double kLqiMin = 50.0;
inline constexpr double kLqiMax = 110.0;

struct LinkModel {
  double loss_prob = 0.0;
  double corrupt_prob = 0.0;       // among frames that are not lost
  double lqi_mean_good = 105.0;
  double lqi_mean_bad = 75.0;
  double lqi_sigma = 2.0;
  double quality_mixture = 1.0;    // long-run fraction of frames in the good state
  /// Probability the good/bad state carries over to the next frame instead
  /// of being redrawn; 0 makes frames independent.
  double state_persistence = 0.0;
  /// Probability a delivered frame arrives twice (exercises receiver dedup).
  double duplicate_prob = 0.0;

  void validate() const;
  static LinkModel from_config(const KvSection& section);
};

enum class Outcome { delivered, lost, corrupted };

struct Delivery {
  Outcome outcome = Outcome::lost;
  std::optional<double> lqi;  // absent when lost
  bool duplicated = false;
};

/// Good/bad state carried between frames on one link.
struct LinkState {
  bool good = true;
  bool started = false;
};

/// Draws one frame's fate. Loss and corruption are independent of the
/// quality state; the state only shapes the LQI distribution.
Delivery transmit(const LinkModel& link, LinkState& state, Rng& rng);
Delivery transmit(const LinkModel& link, Rng& rng);

/// Delivery-probability estimate from a window of recent LQI values: a
/// logistic curve in the window mean, centred at 80 with scale 4.
/// Throws std::invalid_argument on an empty window.
double prr_from_lqi(std::span<const double> lqi_window);

}  // namespace soilnet
