#include <benchmark/benchmark.h>

#include "soilnet/collector.hpp"
#include "soilnet/environment.hpp"

using namespace soilnet;

namespace {

MoteSim filled_mote(std::uint64_t records) {
  MoteSim mote("m01", SimTime{parse_utc("2006-01-01T00:00:00Z")}, MoteHardware{});
  EnvironmentModel env;
  for (std::uint64_t i = 0; i < records; ++i) mote.take_sample(env, from_unix(static_cast<std::int64_t>(i) * 60));
  return mote;
}

}  // namespace

static void BM_Download(benchmark::State& state) {
  const MoteSim base = filled_mote(11811);
  LinkModel link;
  link.loss_prob = static_cast<double>(state.range(0)) / 1000.0;
  std::uint64_t seed = 1;
  for (auto _ : state) {
    MoteSim mote = base;
    Rng rng(seed++);
    auto result = run_download(mote, 0, link, rng);
    benchmark::DoNotOptimize(result.records.data());
  }
  state.SetItemsProcessed(state.iterations() * 11811);
}
BENCHMARK(BM_Download)->Arg(0)->Arg(58)->Arg(300)->Arg(670)->Unit(benchmark::kMillisecond);

static void BM_BeaconChannel(benchmark::State& state) {
  LinkModel link;
  link.loss_prob = 0.67;
  Rng rng(7);
  LinkState ls;
  std::uint64_t delivered = 0;
  for (auto _ : state) {
    delivered += transmit(link, ls, rng).outcome == Outcome::delivered;
  }
  benchmark::DoNotOptimize(delivered);
}
BENCHMARK(BM_BeaconChannel);

BENCHMARK_MAIN();
