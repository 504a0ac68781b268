#include "famsim/metrics.hpp"

#include <openssl/evp.h>

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace famsim {

namespace {

const double kLogLow = std::log(LatencyHistogram::kLowNs);
const double kLogStep =
    (std::log(LatencyHistogram::kHighNs) - std::log(LatencyHistogram::kLowNs)) / LatencyHistogram::kBuckets;

std::optional<double> ratio(std::uint64_t num, std::uint64_t den) {
  if (den == 0) return std::nullopt;
  return static_cast<double>(num) / static_cast<double>(den);
}

ReportValue opt(std::optional<double> v) {
  if (!v) return std::monostate{};
  return *v;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

void LatencyHistogram::add(SimTime latency) {
  ++buckets_[bucket_of(latency)];
  ++count_;
  sum_ += latency;
  min_ = std::min(min_, latency);
  max_ = std::max(max_, latency);
}

std::optional<double> LatencyHistogram::mean_ns() const {
  if (count_ == 0) return std::nullopt;
  return static_cast<double>(sum_) / static_cast<double>(count_) / static_cast<double>(kNanosecond);
}

std::size_t LatencyHistogram::bucket_of(SimTime latency) {
  const double ns = static_cast<double>(latency) / static_cast<double>(kNanosecond);
  if (ns <= kLowNs) return 0;
  const auto i = static_cast<long>(std::floor((std::log(ns) - kLogLow) / kLogStep));
  return static_cast<std::size_t>(std::clamp<long>(i, 0, kBuckets - 1));
}

double LatencyHistogram::bucket_floor_ns(std::size_t i) { return std::exp(kLogLow + kLogStep * i); }

std::optional<double> StatSet::demand_hit_fraction() const { return ratio(demand_hits, demand_lookups); }

std::optional<double> StatSet::core_prefetch_hit_fraction() const {
  return ratio(core_prefetch_hits, core_prefetch_lookups);
}

std::optional<double> StatSet::fam_queue_depth_avg() const {
  if (end_time == 0) return std::nullopt;
  return static_cast<double>(fam_queue_depth_integral / static_cast<long double>(end_time));
}

std::optional<double> StatSet::demand_throughput_per_us() const {
  if (end_time == 0) return std::nullopt;
  return static_cast<double>(demand_fam_latency.count()) /
         (static_cast<double>(end_time) / static_cast<double>(kMicrosecond));
}

std::optional<double> relative_fam_latency(const RunRecord& run, const RunRecord& baseline) {
  if (run.workload_fingerprint != baseline.workload_fingerprint) {
    throw FingerprintMismatch("runs consumed different access streams");
  }
  const auto a = run.stats.mean_fam_latency_ns();
  const auto b = baseline.stats.mean_fam_latency_ns();
  if (!a || !b || *b == 0) return std::nullopt;
  return *a / *b;
}

std::optional<double> relative_prefetches_issued(const RunRecord& run, const RunRecord& reference) {
  if (run.workload_fingerprint != reference.workload_fingerprint) {
    throw FingerprintMismatch("runs consumed different access streams");
  }
  return ratio(run.stats.of(RequestClass::dram_prefetch).issued,
               reference.stats.of(RequestClass::dram_prefetch).issued);
}

ReportRow report_row(const RunRecord& run, const RunRecord* baseline, const RunRecord* reference) {
  const StatSet& s = run.stats;
  ReportRow row;
  auto put = [&row](std::string key, ReportValue v) { row.emplace_back(std::move(key), std::move(v)); };
  put("schema_version", std::uint64_t{kReportSchemaVersion});
  put("label", run.label);
  put("seed", run.seed);
  put("config_hash", run.config_hash);
  put("input_hash", run.input_hash);
  put("workload_fingerprint", hex64(run.workload_fingerprint));
  put("event_digest", hex64(run.event_digest));
  put("events", run.events);
  put("end_time_ps", s.end_time);
  for (RequestClass c : kAllRequestClasses) {
    const std::string p(to_string(c));
    const auto& k = s.of(c);
    put(p + "_created", k.created);
    put(p + "_issued", k.issued);
    put(p + "_completed", k.completed);
    put(p + "_dropped", k.dropped);
  }
  put("demand_lookups", s.demand_lookups);
  put("demand_hits", s.demand_hits);
  put("demand_merges", s.demand_merges);
  put("demand_hit_fraction", opt(s.demand_hit_fraction()));
  put("core_prefetch_lookups", s.core_prefetch_lookups);
  put("core_prefetch_hits", s.core_prefetch_hits);
  put("core_prefetch_merges", s.core_prefetch_merges);
  put("core_prefetch_hit_fraction", opt(s.core_prefetch_hit_fraction()));
  put("mean_demand_latency_ns", opt(s.mean_demand_latency_ns()));
  put("mean_fam_latency_ns", opt(s.mean_fam_latency_ns()));
  put("mean_dcache_hit_latency_ns", opt(s.demand_hit_latency.mean_ns()));
  put("mean_local_latency_ns", opt(s.local_latency.mean_ns()));
  put("max_fam_latency_ns", opt(s.demand_fam_latency.count()
                                    ? std::optional(static_cast<double>(s.demand_fam_latency.max()) / kNanosecond)
                                    : std::nullopt));
  put("demand_fam_throughput_per_us", opt(s.demand_throughput_per_us()));
  put("writeback_hits", s.writeback_hits);
  put("local_reads", s.local_reads);
  put("local_writes", s.local_writes);
  put("dram_prefetch_filled", s.of(RequestClass::dram_prefetch).completed);
  put("dram_prefetch_used", s.prefetch_used);
  put("dram_prefetch_evicted_unused", s.prefetch_evicted_unused);
  put("prefetch_dropped_resident", s.prefetch_dropped_resident);
  put("prefetch_dropped_inflight", s.prefetch_dropped_inflight);
  put("prefetch_dropped_threshold", s.prefetch_dropped_threshold);
  put("prefetch_dropped_budget", s.prefetch_dropped_budget);
  put("prefetch_queue_peak", s.prefetch_queue_peak);
  put("dirty_evictions", s.dirty_evictions);
  put("fam_demand_lane_bytes", s.fam_demand_lane_bytes);
  put("fam_prefetch_lane_bytes", s.fam_prefetch_lane_bytes);
  put("fam_queue_depth_avg", opt(s.fam_queue_depth_avg()));
  put("fam_queue_peak", s.fam_queue_peak);
  put("link_bytes_to_fam", s.link_bytes_to_fam);
  put("link_bytes_to_host", s.link_bytes_to_host);
  put("adapt_samples", s.adapt_samples);
  put("adapt_final_rate", s.adapt_samples ? ReportValue{s.adapt_final_rate} : ReportValue{});
  put("adapt_min_rate", s.adapt_samples ? ReportValue{s.adapt_min_rate} : ReportValue{});
  put("relative_fam_latency", baseline ? opt(relative_fam_latency(run, *baseline)) : ReportValue{});
  put("relative_prefetches_issued",
      reference ? opt(relative_prefetches_issued(run, *reference)) : ReportValue{});
  return row;
}

std::string format_value(const ReportValue& v) {
  struct Visitor {
    std::string operator()(std::monostate) const { return "NA"; }
    std::string operator()(std::uint64_t x) const { return std::to_string(x); }
    std::string operator()(double x) const {
      char buf[64];
      auto res = std::to_chars(buf, buf + sizeof buf, x);
      return std::string(buf, res.ptr);
    }
    std::string operator()(const std::string& x) const { return x; }
  };
  return std::visit(Visitor{}, v);
}

std::string to_csv(const std::vector<ReportRow>& rows) {
  std::string out;
  if (rows.empty()) return out;
  for (std::size_t i = 0; i < rows.front().size(); ++i) {
    if (i) out += ',';
    out += rows.front()[i].first;
  }
  out += '\n';
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out += ',';
      out += csv_escape(format_value(row[i].second));
    }
    out += '\n';
  }
  return out;
}

std::string to_json(const ReportRow& row) {
  nlohmann::ordered_json doc = nlohmann::ordered_json::object();
  for (const auto& [key, value] : row) {
    std::visit(
        [&doc, &k = key](const auto& x) {
          using T = std::decay_t<decltype(x)>;
          if constexpr (std::is_same_v<T, std::monostate>) {
            doc[k] = nullptr;
          } else {
            doc[k] = x;
          }
        },
        value);
  }
  return doc.dump(2) + "\n";
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  out.flush();
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

void emit_report(const RunRecord& run, ReportFormat format, const std::filesystem::path& path,
                 const RunRecord* baseline, const RunRecord* reference) {
  const ReportRow row = report_row(run, baseline, reference);
  write_text_file(path, format == ReportFormat::csv ? to_csv({row}) : to_json(row));
}

std::string git_blob_hash(const std::string& content) {
  const std::string header = "blob " + std::to_string(content.size()) + '\0';
  const std::string object = header + content;
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(object.data(), object.size(), digest, &len, EVP_sha1(), nullptr) != 1) {
    throw std::runtime_error("sha1 digest failed");
  }
  std::string hex;
  char buf[3];
  for (unsigned int i = 0; i < len; ++i) {
    const unsigned char b = digest[i];
    std::snprintf(buf, sizeof buf, "%02x", b);
    hex += buf;
  }
  return hex;
}

}  // namespace famsim
