#include <benchmark/benchmark.h>

#include <random>

#include "famsim/dcache.hpp"
#include "famsim/famnode.hpp"
#include "famsim/simulation.hpp"
#include "famsim/spp.hpp"

using namespace famsim;

static void BM_SppTrainPredict(benchmark::State& state) {
  SppConfig c;
  c.block_size = static_cast<std::uint32_t>(state.range(0));
  SignaturePathPrefetcher spp(c);
  std::uint64_t addr = 0;
  for (auto _ : state) {
    addr += c.block_size * 2;
    spp.train(addr);
    benchmark::DoNotOptimize(spp.predict(addr));
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_SppTrainPredict)->Arg(64)->Arg(256)->Arg(1024);

static void BM_DcacheLookupAllocate(benchmark::State& state) {
  DcacheMeta m(DcacheGeometry{});
  std::mt19937_64 rng(1);
  const std::uint64_t universe = m.geometry().entries() * 2;
  for (auto _ : state) {
    const std::uint64_t a = rng() % universe * m.geometry().block_size;
    if (!m.lookup(a)) benchmark::DoNotOptimize(m.allocate(a, false));
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_DcacheLookupAllocate);

static void BM_DwrrSaturated(benchmark::State& state) {
  DwrrConfig c;
  c.weight = 2;
  c.size_ratio = 4;
  DwrrScheduler s(c);
  RequestId next = 0;
  for (auto _ : state) {
    while (s.depth() < 32) {
      s.enqueue(Ticket{next++, 1, RequestClass::demand});
      s.enqueue(Ticket{next++, 4, RequestClass::dram_prefetch});
    }
    benchmark::DoNotOptimize(s.issue_cycle());
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_DwrrSaturated);

static void BM_SimulationFourNodes(benchmark::State& state) {
  ExperimentConfig c;
  c.nodes = 4;
  c.workload = "mixed:0.3:256";
  c.duration_accesses = 20'000;
  std::uint64_t events = 0;
  for (auto _ : state) events += run_experiment(c).events;
  state.counters["events_per_s"] = benchmark::Counter(static_cast<double>(events), benchmark::Counter::kIsRate);
}
BENCHMARK(BM_SimulationFourNodes)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
