#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "famsim/engine.hpp"
#include "famsim/request.hpp"

namespace famsim {

struct ClassCounters {
  std::uint64_t created = 0;
  std::uint64_t issued = 0;
  std::uint64_t completed = 0;
  std::uint64_t dropped = 0;
};

/// Latency accumulator with 64 log-spaced buckets from 10 ns to 100 us.
/// Samples outside the range land in the first or last bucket.
class LatencyHistogram {
 public:
  static constexpr std::size_t kBuckets = 64;
  static constexpr double kLowNs = 10.0;
  static constexpr double kHighNs = 100'000.0;

  void add(SimTime latency);

  std::uint64_t count() const { return count_; }
  SimTime sum() const { return sum_; }
  SimTime min() const { return count_ ? min_ : 0; }
  SimTime max() const { return max_; }
  /// Mean in nanoseconds; nullopt when empty.
  std::optional<double> mean_ns() const;
  const std::array<std::uint64_t, kBuckets>& buckets() const { return buckets_; }
  static std::size_t bucket_of(SimTime latency);
  /// Lower edge of bucket `i` in nanoseconds.
  static double bucket_floor_ns(std::size_t i);

 private:
  std::array<std::uint64_t, kBuckets> buckets_{};
  std::uint64_t count_ = 0;
  SimTime sum_ = 0;
  SimTime min_ = ~SimTime{0};
  SimTime max_ = 0;
};

/// Everything a run counts. Owned by one simulation instance.
struct StatSet {
  std::array<ClassCounters, kRequestClassCount> classes{};
  ClassCounters& of(RequestClass c) { return classes[index_of(c)]; }
  const ClassCounters& of(RequestClass c) const { return classes[index_of(c)]; }

  // Reads that reach the root complex for a FAM page.
  LatencyHistogram demand_latency;      // every path
  LatencyHistogram demand_fam_latency;  // served by FAM
  LatencyHistogram demand_hit_latency;  // served from the DRAM cache
  LatencyHistogram local_latency;       // local-page demand reads

  std::uint64_t demand_lookups = 0;
  std::uint64_t demand_hits = 0;
  std::uint64_t demand_merges = 0;
  std::uint64_t core_prefetch_lookups = 0;
  std::uint64_t core_prefetch_hits = 0;
  std::uint64_t core_prefetch_merges = 0;
  std::uint64_t writeback_hits = 0;
  std::uint64_t local_reads = 0;
  std::uint64_t local_writes = 0;

  std::uint64_t prefetch_dropped_resident = 0;
  std::uint64_t prefetch_dropped_inflight = 0;
  std::uint64_t prefetch_dropped_threshold = 0;
  std::uint64_t prefetch_dropped_budget = 0;
  std::uint64_t prefetch_used = 0;
  std::uint64_t prefetch_evicted_unused = 0;
  std::uint64_t dirty_evictions = 0;
  std::uint64_t prefetch_queue_peak = 0;

  std::uint64_t fam_demand_lane_bytes = 0;
  std::uint64_t fam_prefetch_lane_bytes = 0;
  long double fam_queue_depth_integral = 0;  // request-picoseconds
  std::uint64_t fam_queue_peak = 0;

  std::uint64_t link_bytes_to_fam = 0;
  std::uint64_t link_bytes_to_host = 0;

  std::uint64_t adapt_samples = 0;
  double adapt_final_rate = 0;
  double adapt_min_rate = 0;

  SimTime end_time = 0;

  std::optional<double> demand_hit_fraction() const;
  std::optional<double> core_prefetch_hit_fraction() const;
  std::optional<double> mean_fam_latency_ns() const { return demand_fam_latency.mean_ns(); }
  std::optional<double> mean_demand_latency_ns() const { return demand_latency.mean_ns(); }
  std::optional<double> fam_queue_depth_avg() const;
  /// Completed FAM-bound demand reads per microsecond of simulated time.
  std::optional<double> demand_throughput_per_us() const;
};

/// Result of one simulation, with the identity needed to pair it against a
/// baseline.
struct RunRecord {
  std::string label;
  std::string config_text;       // canonical serialization
  std::string config_hash;       // git blob hash of config_text
  std::string input_hash;        // git blob hash of config plus trace files
  std::uint64_t seed = 0;
  std::uint64_t workload_fingerprint = 0;
  std::uint64_t event_digest = 0;
  std::uint64_t events = 0;
  StatSet stats;
};

class FingerprintMismatch : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Mean FAM-served demand latency of `run` over `baseline`. Throws
/// FingerprintMismatch when the two runs consumed different access streams.
std::optional<double> relative_fam_latency(const RunRecord& run, const RunRecord& baseline);

/// DRAM-cache prefetches issued by `run` over those of `reference`.
std::optional<double> relative_prefetches_issued(const RunRecord& run, const RunRecord& reference);

using ReportValue = std::variant<std::monostate, std::uint64_t, double, std::string>;
using ReportRow = std::vector<std::pair<std::string, ReportValue>>;

inline constexpr int kReportSchemaVersion = 1;

/// Flat, stably ordered key/value view of a run. Missing fractions are
/// std::monostate ("NA" in CSV, null in JSON). The relative columns are
/// filled when a paired baseline / reference run is supplied.
ReportRow report_row(const RunRecord& run, const RunRecord* baseline = nullptr,
                     const RunRecord* reference = nullptr);

std::string format_value(const ReportValue& v);
std::string to_csv(const std::vector<ReportRow>& rows);
std::string to_json(const ReportRow& row);

enum class ReportFormat : std::uint8_t { csv, json };

/// Writes one report. Throws std::runtime_error if the path is not writable.
void emit_report(const RunRecord& run, ReportFormat format, const std::filesystem::path& path,
                 const RunRecord* baseline = nullptr, const RunRecord* reference = nullptr);
void write_text_file(const std::filesystem::path& path, const std::string& text);

/// Git blob object id (SHA-1 over "blob <len>\0" + content), lowercase hex.
std::string git_blob_hash(const std::string& content);

}  // namespace famsim
