#include "soilnet/calibration.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <map>
#include <set>

namespace soilnet {
namespace {
constexpr double kKelvin = 273.15;
constexpr double kDenominatorEpsilon = 1e-9;
}  // namespace

double adc_to_resistance(int adc, double r_ref_ohms, double bias_ohms) {
  if (adc < 0 || adc > kAdcMax) throw std::out_of_range("ADC count outside 0..1023");
  if (adc == kAdcMax) throw OpenCircuitError();
  return (r_ref_ohms + bias_ohms) * adc / static_cast<double>(kAdcMax - adc);
}

double resistance_to_adc(double r_ohms, double divider_ohms) {
  if (r_ohms <= 0) return 0.0;
  return kAdcMax * r_ohms / (r_ohms + divider_ohms);
}

std::uint16_t quantize_adc(double continuous_count) {
  const double clamped = std::clamp(std::round(continuous_count), 0.0, static_cast<double>(kAdcMax));
  return static_cast<std::uint16_t>(clamped);
}

Estimate thermistor_celsius(double r_ohms, const ThermistorCoeffs& c) {
  if (!(r_ohms > 0)) throw CalibrationDomainError("thermistor resistance must be positive");
  const double x = std::log(r_ohms);
  const double inv_t = c[0] + c[1] * x + c[2] * x * x * x;
  if (!(inv_t > 0)) throw CalibrationDomainError("thermistor regression outside its domain");
  return {1.0 / inv_t - kKelvin, kThermistorStdErrorC};
}

double thermistor_resistance(double celsius, const ThermistorCoeffs& c) {
  const double inv_t = 1.0 / (celsius + kKelvin);
  if (c[2] == 0.0) {
    if (c[1] == 0.0) throw CalibrationDomainError("degenerate thermistor coefficients");
    return std::exp((inv_t - c[0]) / c[1]);
  }
  // Depressed cubic x^3 + p x + q = 0.
  const double p = c[1] / c[2];
  const double q = (c[0] - inv_t) / c[2];
  const double disc = q * q / 4.0 + p * p * p / 27.0;
  if (disc < 0) throw CalibrationDomainError("thermistor inverse has no unique real root");
  const double s = std::sqrt(disc);
  const double x = std::cbrt(-q / 2.0 + s) + std::cbrt(-q / 2.0 - s);
  return std::exp(x);
}

Estimate watermark_kpa(double r_ohms, double soil_temp_c, const WatermarkCoeffs& c, double std_error) {
  if (!(r_ohms > 0)) throw CalibrationDomainError("moisture resistance must be positive");
  const double rk = r_ohms / 1000.0;
  const double denom = 1.0 + c[2] * soil_temp_c + c[3] * rk;
  if (std::abs(denom) < kDenominatorEpsilon) {
    throw CalibrationDomainError("moisture regression denominator vanishes");
  }
  return {(c[0] + c[1] * rk) / denom, std_error};
}

double watermark_resistance(double kpa, double soil_temp_c, const WatermarkCoeffs& c) {
  // kPa (1 + c2 T + c3 Rk) = c0 + c1 Rk  =>  Rk = (c0 - kPa (1 + c2 T)) / (kPa c3 - c1)
  const double denom = kpa * c[3] - c[1];
  if (std::abs(denom) < kDenominatorEpsilon) {
    throw CalibrationDomainError("moisture regression is not invertible here");
  }
  return 1000.0 * (c[0] - kpa * (1.0 + c[2] * soil_temp_c)) / denom;
}

WatermarkFit fit_watermark(std::span<const WatermarkPoint, 9> points) {
  std::set<std::pair<double, double>> seen;
  std::map<double, int> per_temperature;
  for (const auto& pt : points) {
    if (!(pt.r_ohms > 0)) throw SingularFitError("calibration resistance must be positive");
    if (!seen.emplace(pt.r_ohms, pt.temp_c).second) {
      throw SingularFitError("duplicate (R, T) calibration point");
    }
    ++per_temperature[pt.temp_c];
  }
  if (per_temperature.size() != 3 ||
      std::any_of(per_temperature.begin(), per_temperature.end(), [](const auto& kv) { return kv.second != 3; })) {
    throw SingularFitError("calibration points do not form a 3 x 3 (moisture x temperature) grid");
  }

  Eigen::Matrix<double, 9, 4> design;
  Eigen::Matrix<double, 9, 1> rhs;
  for (int i = 0; i < 9; ++i) {
    const auto& pt = points[i];
    const double rk = pt.r_ohms / 1000.0;
    design(i, 0) = 1.0;
    design(i, 1) = rk;
    design(i, 2) = -pt.kpa * pt.temp_c;
    design(i, 3) = -pt.kpa * rk;
    rhs(i) = pt.kpa;
  }
  // Columns 0..1 depend only on the grid; if they are degenerate there is
  // nothing to fit.
  Eigen::ColPivHouseholderQR<Eigen::Matrix<double, 9, 2>> base(design.leftCols<2>());
  if (base.rank() < 2) throw SingularFitError("singular calibration design matrix");

  const Eigen::CompleteOrthogonalDecomposition<Eigen::Matrix<double, 9, 4>> cod(design);
  const Eigen::Vector4d x = cod.solve(rhs);

  WatermarkFit fit;
  fit.coeffs = {x(0), x(1), x(2), x(3)};
  double sum_sq = 0;
  for (int i = 0; i < 9; ++i) {
    const auto& pt = points[i];
    const double rk = pt.r_ohms / 1000.0;
    const double model = (x(0) + x(1) * rk) / (1.0 + x(2) * pt.temp_c + x(3) * rk);
    fit.residuals_kpa[i] = model - pt.kpa;
    sum_sq += fit.residuals_kpa[i] * fit.residuals_kpa[i];
  }
  fit.rms_residual_kpa = std::sqrt(sum_sq / 9.0);
  return fit;
}

}  // namespace soilnet
