#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string_view>

namespace soilnet {

/// Seeded generator threaded through every stochastic component.
///
/// The engine is std::mt19937_64, whose output sequence is fixed by the
/// standard. The standard distributions are not, so the conversions to
/// uniform/normal variates are done here to keep runs bit-identical across
/// standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }
  /// Uniform on [0, 1) with 53 bits of resolution.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  bool bernoulli(double p) { return uniform() < p; }
  double normal(double mean, double sigma);

 private:
  std::mt19937_64 engine_;
  std::optional<double> spare_;
};

/// SplitMix64 finaliser; derives independent stream seeds from one master seed.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);
/// FNV-1a, used to turn identifiers into stream numbers.
std::uint64_t stable_hash(std::string_view text);

}  // namespace soilnet
