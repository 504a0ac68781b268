// Acceptance criteria. Prints one PASS/FAIL line per criterion; exits
// nonzero if any fails.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "famsim/dcache.hpp"
#include "famsim/experiment.hpp"
#include "famsim/famnode.hpp"
#include "famsim/metrics.hpp"
#include "famsim/simulation.hpp"
#include "famsim/spp.hpp"
#include "oracles.hpp"

using namespace famsim;

namespace {

// Pinned tolerances.
constexpr double kDwrrRatioTolerance = 0.05;
constexpr std::uint64_t kDwrrCycles = 100'000;
constexpr double kWorkConservationTolerance = 0.01;
constexpr double kPrefetchUsedFloor = 0.95;
constexpr SimTime kUnloadedLatency = 189'272;
constexpr double kAdaptPrefetchCut = 0.10;
constexpr double kAdaptWallSeconds = 60.0;
constexpr double kPageOverLineFloor = 5.0;
constexpr std::uint32_t kPayloadBitsCeiling = 56;
constexpr std::uint64_t kDcacheEntries = 65536;

struct Outcome {
  bool pass;
  std::string detail;
};

std::array<std::uint64_t, 2> saturate(IssueScheduler& s, std::uint32_t r, std::uint64_t cycles, bool demand,
                                      bool prefetch) {
  std::array<std::uint64_t, 2> served{0, 0};
  RequestId next = 0;
  std::size_t prefetch_queued = 0;
  for (std::uint64_t c = 0; c < cycles; ++c) {
    while (demand && s.depth() < 64) s.enqueue(Ticket{next++, 1, RequestClass::demand});
    while (prefetch && prefetch_queued < 8) {
      s.enqueue(Ticket{next++, r, RequestClass::dram_prefetch});
      ++prefetch_queued;
    }
    if (auto t = s.issue_cycle()) {
      served[static_cast<int>(lane_of(t->cls))] += t->units;
      if (lane_of(t->cls) == Lane::prefetch) --prefetch_queued;
    }
  }
  return served;
}

DwrrConfig dwrr(std::uint32_t w, std::uint32_t r) {
  DwrrConfig c;
  c.weight = w;
  c.size_ratio = r;
  return c;
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

Outcome c1_dwrr_ratio() {
  double worst = 0;
  for (std::uint32_t w : {1u, 2u, 3u, 4u}) {
    for (std::uint32_t r : {1u, 2u, 4u, 8u}) {
      DwrrScheduler s(dwrr(w, r));
      const auto served = saturate(s, r, kDwrrCycles, true, true);
      const double ratio = static_cast<double>(served[0]) / static_cast<double>(served[1]);
      worst = std::max(worst, std::abs(ratio - w) / w);
    }
  }
  return {worst <= kDwrrRatioTolerance, "worst relative error " + fmt(worst)};
}

Outcome c2_work_conservation() {
  double worst = 0;
  for (std::uint32_t r : {1u, 2u, 4u, 8u}) {
    for (std::uint32_t w : {1u, 3u}) {
      DwrrScheduler wfq(dwrr(w, r));
      FifoScheduler fifo(std::max(8u, r));
      const double a = static_cast<double>(saturate(wfq, r, kDwrrCycles, false, true)[1]);
      const double b = static_cast<double>(saturate(fifo, r, kDwrrCycles, false, true)[1]);
      worst = std::max(worst, std::abs(a - b) / b);
    }
  }
  return {worst <= kWorkConservationTolerance, "worst throughput gap " + fmt(worst)};
}

Outcome c3_signature() {
  bool ok = update_signature(0x000, +2) == 0x002 && update_signature(0x002, +4) == 0x024;
  oracle::Gen gen(7);
  int mismatches = 0;
  for (int i = 0; i < 1000; ++i) {
    const auto sig = static_cast<std::uint16_t>(gen.below(4096));
    int delta = 0;
    while (delta == 0) delta = static_cast<int>(gen.range(-63, 63));
    if (update_signature(sig, delta) != oracle::update_signature(sig, delta)) ++mismatches;
  }
  return {ok && mismatches == 0, "worked chain " + std::string(ok ? "ok" : "wrong") + ", " +
                                     std::to_string(mismatches) + "/1000 mismatches"};
}

Outcome c4_stride_prefetch_use() {
  ExperimentConfig c;
  c.workload = "stride:256";
  c.duration_accesses = 200'000;
  const auto r = run_experiment(c);
  const auto issued = r.stats.of(RequestClass::dram_prefetch).issued;
  const double used = issued ? static_cast<double>(r.stats.prefetch_used) / static_cast<double>(issued) : 0;
  return {issued > 0 && used >= kPrefetchUsedFloor,
          std::to_string(r.stats.prefetch_used) + "/" + std::to_string(issued) + " used (" + fmt(used) + ")"};
}

Outcome c5_dcache_differential() {
  const DcacheGeometry g{1ULL << 16, 256, 4};
  DcacheMeta m(g);
  oracle::RecencyCache ref(g.capacity, g.block_size, g.ways);
  oracle::Gen gen(11);
  std::uint64_t mismatches = 0;
  for (int op = 0; op < 100'000; ++op) {
    const std::uint64_t addr = gen.below(g.entries() * 3) * g.block_size;
    switch (gen.below(3)) {
      case 0: mismatches += m.lookup(addr).has_value() != ref.lookup(addr); break;
      case 1: mismatches += m.write_hit(addr) != ref.write_hit(addr); break;
      default: {
        if (ref.contains(addr)) {
          mismatches += !m.contains(addr);
          break;
        }
        const bool dirty = gen.chance(0.3);
        const auto got = m.allocate(addr, dirty);
        const auto want = ref.allocate(addr, dirty);
        if (got.evicted.has_value() != want.has_value() ||
            (want && (got.evicted->block_address != want->block || got.evicted->was_dirty != want->dirty)))
          ++mismatches;
      }
    }
  }
  return {mismatches == 0, std::to_string(mismatches) + " mismatches over 100000 ops"};
}

Outcome c6_unloaded_latency() {
  for (std::uint64_t seed = 1; seed < 64; ++seed) {
    ExperimentConfig c;
    c.seed = seed;
    c.duration_accesses = 1;
    c.workload = "random";
    const auto r = run_experiment(c);
    if (r.stats.demand_lookups != 1) continue;
    const SimTime got = r.stats.demand_fam_latency.max();
    return {r.stats.demand_fam_latency.count() == 1 && got == kUnloadedLatency,
            std::to_string(got) + " ps, expected " + std::to_string(kUnloadedLatency)};
  }
  return {false, "no seed produced a FAM access"};
}

Outcome c7_adaptation() {
  const auto t0 = std::chrono::steady_clock::now();
  ExperimentConfig c;
  c.nodes = 4;
  c.workload = "mixed:0.3:256";
  c.duration_accesses = 200'000;
  auto on = c;
  on.set("adaptation", "on");
  const auto runs = run_all({{"off", c}, {"on", on}}, 2);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const double off_pf = static_cast<double>(runs[0].stats.of(RequestClass::dram_prefetch).issued);
  const double on_pf = static_cast<double>(runs[1].stats.of(RequestClass::dram_prefetch).issued);
  const double off_lat = runs[0].stats.mean_demand_latency_ns().value_or(0);
  const double on_lat = runs[1].stats.mean_demand_latency_ns().value_or(0);
  const double cut = off_pf > 0 ? 1.0 - on_pf / off_pf : 0;
  const bool ok = cut >= kAdaptPrefetchCut && on_lat < off_lat && secs < kAdaptWallSeconds;
  return {ok, "prefetches " + fmt(off_pf) + " -> " + fmt(on_pf) + " (cut " + fmt(cut) + "), demand latency " +
                  fmt(off_lat) + " -> " + fmt(on_lat) + " ns, " + fmt(secs) + " s"};
}

Outcome c8_block_size_sweep() {
  ExperimentConfig c;
  c.nodes = 4;
  c.workload = "random";
  c.duration_accesses = 100'000;
  const unsigned jobs = std::max(1u, std::min(8u, std::thread::hardware_concurrency()));
  const auto res = run_sweep(c, SweepAxis::block_size, parse_values("64,128,256,512,1024,2048,4096"), jobs);
  std::vector<double> rel;
  std::string detail;
  for (const auto& p : res.points) {
    rel.push_back(p.relative_fam_latency.value_or(0));
    detail += p.value + ":" + fmt(rel.back()) + " ";
  }
  bool ok = rel.size() == 7 && rel[0] > 0;
  for (std::size_t i = 4; ok && i < rel.size(); ++i) ok = rel[i] >= rel[i - 1];  // from 512 B up
  ok = ok && rel.back() >= kPageOverLineFloor * rel.front();
  return {ok, detail};
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Outcome c9_reproducible_reports() {
  ExperimentConfig c;
  c.nodes = 2;
  c.workload = "zipf:0.9";
  c.write_fraction = 0.2;
  c.duration_accesses = 50'000;
  c.set("scheduler", "wfq");
  c.set("adaptation", "on");
  const auto dir = std::filesystem::temp_directory_path() / "famsim_acceptance_c9";
  std::filesystem::create_directories(dir);
  bool same = true;
  for (auto f : {ReportFormat::csv, ReportFormat::json}) {
    const std::string ext = f == ReportFormat::csv ? ".csv" : ".json";
    emit_report(run_experiment(c), f, dir / ("a" + ext));
    emit_report(run_experiment(c), f, dir / ("b" + ext));
    const auto a = slurp(dir / ("a" + ext));
    same = same && !a.empty() && a == slurp(dir / ("b" + ext));
  }
  std::filesystem::remove_all(dir);
  return {same, same ? "csv and json identical" : "reports differ"};
}

Outcome c10_metadata() {
  DcacheMeta m(DcacheGeometry{});
  const auto bits = m.entry_payload_bits();
  const auto entries = m.geometry().entries();
  return {bits <= kPayloadBitsCeiling && entries == kDcacheEntries,
          std::to_string(bits) + " bits/entry, " + std::to_string(entries) + " entries"};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"dwrr_byte_ratio", c1_dwrr_ratio},
      {"dwrr_work_conserving", c2_work_conservation},
      {"spp_signature_oracle", c3_signature},
      {"stride_prefetches_used", c4_stride_prefetch_use},
      {"dcache_lru_differential", c5_dcache_differential},
      {"unloaded_fam_latency", c6_unloaded_latency},
      {"adaptation_reduces_prefetch_and_latency", c7_adaptation},
      {"block_size_sweep_shape", c8_block_size_sweep},
      {"reports_byte_identical", c9_reproducible_reports},
      {"dcache_metadata_budget", c10_metadata},
  };
  int failures = 0;
  int index = 0;
  for (const auto& [name, fn] : criteria) {
    ++index;
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += !o.pass;
    std::printf("%s %2d %s: %s\n", o.pass ? "PASS" : "FAIL", index, name.c_str(), o.detail.c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
