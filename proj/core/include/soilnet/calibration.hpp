#pragma once

// Pure conversion math for the resistive sensors: divider, thermistor, and
// the temperature-compensated moisture regression. Forward directions are
// what the pipeline applies; inverses are what the mote simulator uses to
// synthesize ADC counts from ground truth.

#include <array>
#include <cstdint>
#include <span>
#include <stdexcept>

namespace soilnet {

inline constexpr int kAdcMax = 1023;
/// Full-scale pack voltage of the battery channel (count = 1023 * V / 3.6).
inline constexpr double kBatteryAdcFullScaleV = 3.6;
/// Thermistor precision reported with every calibrated temperature.
inline constexpr double kThermistorStdErrorC = 0.5;

using ThermistorCoeffs = std::array<double, 3>;  // A, B, C
using WatermarkCoeffs = std::array<double, 4>;   // c0, c1, c2, c3

struct Estimate {
  double value = 0;
  double std_error = 0;
};

/// adc == 1023 means the sensor side of the divider reads as an open circuit.
class OpenCircuitError : public std::domain_error {
 public:
  OpenCircuitError() : std::domain_error("ADC at full scale: open circuit") {}
};

class CalibrationDomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

class SingularFitError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// R = (r_ref + bias) * adc / (1023 - adc). Ratiometric: independent of supply.
double adc_to_resistance(int adc, double r_ref_ohms, double bias_ohms);
/// Continuous inverse of adc_to_resistance; callers round and clamp.
double resistance_to_adc(double r_ohms, double divider_ohms);
/// Rounded and clamped to [0, 1023].
std::uint16_t quantize_adc(double continuous_count);

Estimate thermistor_celsius(double r_ohms, const ThermistorCoeffs& coeffs);
/// Solves C x^3 + B x + (A - 1/T) = 0 for x = ln R (real root, Cardano).
double thermistor_resistance(double celsius, const ThermistorCoeffs& coeffs);

/// kPa = (c0 + c1 Rk) / (1 + c2 T + c3 Rk) with Rk = r_ohms / 1000.
Estimate watermark_kpa(double r_ohms, double soil_temp_c, const WatermarkCoeffs& coeffs,
                       double std_error = 0.0);
double watermark_resistance(double kpa, double soil_temp_c, const WatermarkCoeffs& coeffs);

struct WatermarkPoint {
  double r_ohms = 0;
  double temp_c = 0;
  double kpa = 0;
};

struct WatermarkFit {
  WatermarkCoeffs coeffs{};
  std::array<double, 9> residuals_kpa{};  // model minus observation, per input point
  double rms_residual_kpa = 0;
};

/// Least-squares fit of the rational regression to a 3 x 3 calibration grid
/// (three moisture levels at each of three temperatures), linearised as
///   c0 + c1 Rk - c2 kPa T - c3 kPa Rk = kPa.
/// Rank-deficient but consistent data (e.g. constant kPa) yields the
/// minimum-norm coefficients. Throws SingularFitError if the grid is not
/// 3 x 3 or repeats an (R, T) point.
WatermarkFit fit_watermark(std::span<const WatermarkPoint, 9> points);

}  // namespace soilnet
