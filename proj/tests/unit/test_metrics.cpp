#include <gtest/gtest.h>

#include <json.hpp>
#include <sstream>

#include "famsim/metrics.hpp"
#include "famsim/simulation.hpp"

using namespace famsim;

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (char c : line) {
    if (c == '"') {
      quoted = !quoted;
    } else if (c == ',' && !quoted) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

RunRecord small_run(const std::string& workload = "stride:256", double ratio = 8) {
  ExperimentConfig c;
  c.workload = workload;
  c.duration_accesses = 20000;
  c.allocation_ratio = ratio;
  return run_experiment(c);
}

}  // namespace

TEST(Histogram, BucketsAndMoments) {
  LatencyHistogram h;
  EXPECT_FALSE(h.mean_ns());
  h.add(5 * kNanosecond);
  h.add(200 * kNanosecond);
  h.add(1'000'000 * kNanosecond);
  EXPECT_EQ(h.count(), 3u);
  EXPECT_EQ(h.min(), 5 * kNanosecond);
  EXPECT_EQ(h.max(), 1'000'000 * kNanosecond);
  EXPECT_EQ(h.buckets()[0], 1u);
  EXPECT_EQ(h.buckets()[LatencyHistogram::kBuckets - 1], 1u);
  EXPECT_NEAR(LatencyHistogram::bucket_floor_ns(0), 10.0, 1e-9);
  EXPECT_NEAR(LatencyHistogram::bucket_floor_ns(64), 100'000.0, 1e-6);
  for (std::size_t i = 1; i < 64; ++i) {
    const auto t = static_cast<SimTime>(LatencyHistogram::bucket_floor_ns(i) * 1000 * 1.0001);
    EXPECT_EQ(LatencyHistogram::bucket_of(t), i);
  }
}

TEST(Metrics, HitFractionNotApplicableWithoutFamTraffic) {
  const auto run = small_run("stride:256", 0);
  EXPECT_FALSE(run.stats.demand_hit_fraction());
  const auto row = report_row(run);
  for (const auto& [k, v] : row)
    if (k == "demand_hit_fraction") EXPECT_TRUE(std::holds_alternative<std::monostate>(v));
}

TEST(Metrics, RelativeLatencyIdentityAndFingerprintGuard) {
  const auto a = small_run();
  EXPECT_DOUBLE_EQ(*relative_fam_latency(a, a), 1.0);
  const auto b = small_run("random");
  EXPECT_THROW(relative_fam_latency(a, b), FingerprintMismatch);
}

TEST(Metrics, CsvAndJsonCarryIdenticalValues) {
  const auto run = small_run();
  const auto row = report_row(run, &run, &run);
  std::istringstream csv(to_csv({row}));
  std::string header, values;
  std::getline(csv, header);
  std::getline(csv, values);
  const auto keys = split_csv_line(header);
  const auto vals = split_csv_line(values);
  ASSERT_EQ(keys.size(), vals.size());
  const auto doc = nlohmann::ordered_json::parse(to_json(row));
  ASSERT_EQ(doc.size(), keys.size());
  std::size_t i = 0;
  for (const auto& [key, value] : doc.items()) {
    ASSERT_EQ(key, keys[i]);
    if (value.is_null()) {
      EXPECT_EQ(vals[i], "NA") << key;
    } else if (value.is_string()) {
      EXPECT_EQ(value.get<std::string>(), vals[i]) << key;
    } else if (value.is_number_unsigned()) {
      EXPECT_EQ(value.get<std::uint64_t>(), std::stoull(vals[i])) << key;
    } else {
      EXPECT_EQ(value.get<double>(), std::stod(vals[i])) << key;
    }
    ++i;
  }
  EXPECT_EQ(doc["schema_version"], kReportSchemaVersion);
  EXPECT_TRUE(doc.contains("demand_hit_fraction"));
  EXPECT_TRUE(doc.contains("core_prefetch_hit_fraction"));
  EXPECT_DOUBLE_EQ(doc["relative_fam_latency"].get<double>(), 1.0);
  EXPECT_DOUBLE_EQ(doc["relative_prefetches_issued"].get<double>(), 1.0);
}

TEST(Metrics, EmitReportRejectsUnwritablePath) {
  const auto run = small_run();
  EXPECT_THROW(emit_report(run, ReportFormat::csv, "/nonexistent-dir/x/report.csv"), std::runtime_error);
}

TEST(Metrics, GitBlobHash) {
  EXPECT_EQ(git_blob_hash(""), "e69de29bb2d1d6434b8b29ae775ad8c2e48c5391");
  EXPECT_EQ(git_blob_hash("hello\n"), "ce013625030ba8dba906f756967f9e9ca394464a");
}

TEST(Metrics, StatInvariantsHoldAfterRuns) {
  for (const std::string w : {"stride:256", "random", "mixed:0.3:256", "zipf:1.0"}) {
    ExperimentConfig c;
    c.workload = w;
    c.nodes = 2;
    c.write_fraction = 0.2;
    c.core_prefetcher = true;
    c.duration_accesses = 20000;
    const auto run = run_experiment(c);
    const auto& s = run.stats;
    for (RequestClass k : kAllRequestClasses) {
      EXPECT_LE(s.of(k).completed, s.of(k).issued) << w;
      EXPECT_LE(s.of(k).issued, s.of(k).created) << w;
    }
    EXPECT_LE(s.demand_hits, s.demand_lookups);
    EXPECT_LE(s.core_prefetch_hits, s.core_prefetch_lookups);
    EXPECT_LE(s.prefetch_used + s.prefetch_evicted_unused, s.of(RequestClass::dram_prefetch).completed);
  }
}
