#include <benchmark/benchmark.h>

#include <sstream>

#include "soilnet/cube.hpp"
#include "soilnet/random.hpp"

using namespace soilnet;

namespace {

const char* kRegistry = R"(
[site]
site_id = s1
latitude = 39.3
longitude = -76.6
[patch]
patch_id = p1
site_id = s1
reference_coords = 39.3, -76.6
extent_m = 10, 10
[mote]
mote_id = m1
patch_id = p1
offset_m = 1, 1
deploy_date = 2005-12-01
[mote]
mote_id = m2
patch_id = p1
offset_m = 3, 1
deploy_date = 2005-12-01
[sensor]
sensor_id = m1-st
mote_id = m1
sensor_type = soil_temperature
adc_channel = 0
[sensor]
sensor_id = m2-st
mote_id = m2
sensor_type = soil_temperature
adc_channel = 0
)";

struct Fixture {
  Registry registry;
  Store store;
};

Fixture make_fixture(std::int64_t slots) {
  std::istringstream in(kRegistry);
  Fixture f{Registry::parse(in, "bench"), {}};
  Rng rng(3);
  const std::int64_t base = to_unix(parse_utc("2006-01-01T00:00:00Z")) / 600;
  for (const char* id : {"m1-st", "m2-st"}) {
    const Key k = f.store.ids.intern(id);
    for (std::int64_t s = 0; s < slots; ++s) {
      const double v = rng.normal(5, 2);
      f.store.dataseries.push_back({k, base + s, 600, v, v - 0.5, v + 0.5, 0.3, 10, false});
    }
  }
  return f;
}

}  // namespace

static void BM_CubeQuery(benchmark::State& state) {
  const Fixture f = make_fixture(state.range(0));
  const Cube cube = Cube::build(f.store, f.registry);
  CubeQuery q;
  q.aggregate = static_cast<Aggregate>(state.range(1));
  q.time_level = TimeLevel::week;
  q.location_level = LocationLevel::mote;
  for (auto _ : state) {
    auto rows = cube.query(q);
    benchmark::DoNotOptimize(rows.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0) * 2);
}
BENCHMARK(BM_CubeQuery)
    ->Args({4032, static_cast<int>(Aggregate::average)})
    ->Args({4032, static_cast<int>(Aggregate::median)})
    ->Args({52560, static_cast<int>(Aggregate::average)})
    ->Unit(benchmark::kMillisecond);

static void BM_CubeBuild(benchmark::State& state) {
  const Fixture f = make_fixture(state.range(0));
  for (auto _ : state) {
    Cube cube = Cube::build(f.store, f.registry);
    benchmark::DoNotOptimize(cube.sensor_facts());
  }
}
BENCHMARK(BM_CubeBuild)->Arg(4032)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
