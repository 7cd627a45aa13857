#include <benchmark/benchmark.h>

#include "soilnet/calibration.hpp"

using namespace soilnet;

static void BM_Thermistor(benchmark::State& state) {
  const ThermistorCoeffs c{1.129148e-3, 2.34125e-4, 8.76741e-8};
  int adc = 1;
  double acc = 0;
  for (auto _ : state) {
    acc += thermistor_celsius(adc_to_resistance(adc, 10000, 0), c).value;
    adc = adc % 1021 + 1;
  }
  benchmark::DoNotOptimize(acc);
}
BENCHMARK(BM_Thermistor);

static void BM_Watermark(benchmark::State& state) {
  const WatermarkCoeffs c{4.093, 3.213, -0.01205, -0.009733};
  int adc = 100;
  double acc = 0;
  for (auto _ : state) {
    acc += watermark_kpa(adc_to_resistance(adc, 10000, 0), 5.0, c).value;
    adc = adc % 600 + 100;
  }
  benchmark::DoNotOptimize(acc);
}
BENCHMARK(BM_Watermark);

static void BM_FitWatermark(benchmark::State& state) {
  const WatermarkCoeffs c{4.093, 3.213, -0.01205, -0.009733};
  std::array<WatermarkPoint, 9> pts;
  int i = 0;
  for (double t : {0.0, 15.0, 35.0}) {
    for (double kpa : {10.0, 40.0, 120.0}) {
      pts[i++] = {watermark_resistance(kpa, t, c), t, kpa};
    }
  }
  for (auto _ : state) {
    auto fit = fit_watermark(std::span<const WatermarkPoint, 9>(pts));
    benchmark::DoNotOptimize(fit.coeffs);
  }
}
BENCHMARK(BM_FitWatermark);

BENCHMARK_MAIN();
