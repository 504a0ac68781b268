#include <gtest/gtest.h>

#include "famsim/experiment.hpp"
#include "famsim/simulation.hpp"

using namespace famsim;

namespace {

ExperimentConfig base(const std::string& workload, std::uint64_t accesses = 20000) {
  ExperimentConfig c;
  c.workload = workload;
  c.duration_accesses = accesses;
  return c;
}

void expect_conserved(const RunRecord& r) {
  for (RequestClass k : kAllRequestClasses) {
    const auto& c = r.stats.of(k);
    EXPECT_EQ(c.created, c.completed + c.dropped) << to_string(k);
  }
}

}  // namespace

TEST(Simulation, SingleNodeStrideCompletes) {
  const auto r = run_experiment(base("stride:256"));
  expect_conserved(r);
  const auto& s = r.stats;
  EXPECT_EQ(s.demand_lookups + s.local_reads, 20000u);
  EXPECT_GT(s.of(RequestClass::dram_prefetch).issued, 0u);
  EXPECT_GT(s.end_time, 0u);
  EXPECT_TRUE(s.mean_fam_latency_ns());
}

TEST(Simulation, FourNodesWeightedFair) {
  auto c = base("mixed:0.3:256");
  c.nodes = 4;
  c.set("scheduler", "wfq");
  c.set("wfq_weight", "2");
  const auto r = run_experiment(c);
  expect_conserved(r);
  EXPECT_EQ(r.stats.demand_lookups + r.stats.local_reads, 4u * 20000u);
  EXPECT_GT(r.stats.fam_prefetch_lane_bytes, 0u);
  EXPECT_GT(r.stats.fam_demand_lane_bytes, 0u);
}

TEST(Simulation, AllLocalLeavesFractionsUndefined) {
  auto c = base("random");
  c.allocation_ratio = 0;
  const auto r = run_experiment(c);
  EXPECT_EQ(r.stats.demand_lookups, 0u);
  EXPECT_EQ(r.stats.local_reads, 20000u);
  EXPECT_FALSE(r.stats.demand_hit_fraction());
  EXPECT_FALSE(r.stats.mean_fam_latency_ns());
  EXPECT_EQ(r.stats.link_bytes_to_fam, 0u);
}

TEST(Simulation, PrefetchingBeatsBaselineOnStrides) {
  // A compute-bound core leaves room for prefetches to land ahead of use.
  auto c = base("stride:256");
  c.set("issue_gap_ps", "40000");
  const auto run = run_experiment(c);
  const auto baseline = run_experiment(baseline_of(c));
  EXPECT_EQ(run.workload_fingerprint, baseline.workload_fingerprint);
  ASSERT_TRUE(run.stats.mean_demand_latency_ns() && baseline.stats.mean_demand_latency_ns());
  EXPECT_LT(*run.stats.mean_demand_latency_ns(), *baseline.stats.mean_demand_latency_ns());
  EXPECT_EQ(baseline.stats.of(RequestClass::dram_prefetch).created, 0u);
}

TEST(Simulation, SecondPassOverCachedFootprintHits) {
  // 1 MiB footprint fits the 16 MiB DRAM cache; the second pass should hit.
  // The first block of each page is never predicted, so it misses both times.
  auto c = base("sequential", 2 * (1u << 20) / 64);
  c.footprint_bytes = 1u << 20;
  const auto r = run_experiment(c);
  const auto& s = r.stats;
  ASSERT_GT(s.demand_lookups, 0u);
  EXPECT_GE(static_cast<double>(s.demand_hits + s.demand_merges), 0.9 * static_cast<double>(s.demand_lookups));
  EXPECT_GE(*s.demand_hit_fraction(), 0.45);
  EXPECT_EQ(s.prefetch_evicted_unused, 0u);
}

TEST(Simulation, RunsAreDeterministic) {
  auto c = base("zipf:0.9");
  c.nodes = 3;
  c.write_fraction = 0.25;
  c.core_prefetcher = true;
  c.set("adaptation", "on");
  const auto a = run_experiment(c);
  const auto b = run_experiment(c);
  EXPECT_EQ(a.event_digest, b.event_digest);
  EXPECT_EQ(a.events, b.events);
  EXPECT_EQ(to_csv({report_row(a)}), to_csv({report_row(b)}));
  c.seed = 2;
  EXPECT_NE(run_experiment(c).workload_fingerprint, a.workload_fingerprint);
}

TEST(Simulation, AdaptationParametersInertWhenDisabled) {
  auto c = base("mixed:0.3:256");
  c.nodes = 2;
  const auto a = run_experiment(c);
  c.set("k", "0.9");
  c.set("rate_min", "7");
  c.set("min_window", "5");
  const auto b = run_experiment(c);
  EXPECT_EQ(a.event_digest, b.event_digest);
  EXPECT_EQ(b.stats.adapt_samples, 0u);
}

TEST(Simulation, MechanismsDoNotChangeTheAccessStream) {
  auto c = base("random");
  c.nodes = 2;
  const auto fp = run_experiment(c).workload_fingerprint;
  for (const auto& [k, v] : std::vector<std::pair<std::string, std::string>>{
           {"block_size", "1024"}, {"scheduler", "wfq"}, {"adaptation", "on"}, {"cache_size", "4194304"},
           {"dram_prefetcher", "off"}}) {
    auto d = c;
    d.set(k, v);
    EXPECT_EQ(run_experiment(d).workload_fingerprint, fp) << k;
  }
}

TEST(Simulation, CorePrefetcherAndWritesFlow) {
  auto c = base("sequential", 2 * (1u << 20) / 64);
  c.footprint_bytes = 1u << 20;
  c.core_prefetcher = true;
  c.write_fraction = 0.3;
  const auto r = run_experiment(c);
  expect_conserved(r);
  const auto& s = r.stats;
  EXPECT_GT(s.of(RequestClass::core_prefetch).created, 0u);
  EXPECT_GT(s.core_prefetch_lookups, 0u);
  EXPECT_GT(s.of(RequestClass::writeback).created, 0u);
  EXPECT_GT(s.writeback_hits, 0u);
  EXPECT_GT(s.local_writes + s.local_reads, 0u);
}

TEST(Simulation, DirtyBlocksWrittenBackOnEviction) {
  auto c = base("random", 100000);
  c.write_fraction = 0.5;
  c.set("cache_size", "1048576");
  const auto r = run_experiment(c);
  expect_conserved(r);
  EXPECT_GT(r.stats.dirty_evictions, 0u);
  EXPECT_EQ(r.stats.of(RequestClass::eviction_writeback).created, r.stats.dirty_evictions);
}
