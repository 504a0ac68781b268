#include "famsim/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

namespace famsim {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string fmt_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::uint64_t to_u64(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc{} || res.ptr != v.data() + v.size() || v.empty())
    throw ConfigError(key, "expected a non-negative integer, got '" + v + "'");
  return out;
}

std::uint32_t to_u32(const std::string& key, const std::string& v) {
  const std::uint64_t x = to_u64(key, v);
  if (x > 0xffffffffULL) throw ConfigError(key, "value out of range: " + v);
  return static_cast<std::uint32_t>(x);
}

double to_double(const std::string& key, const std::string& v) {
  double out = 0;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc{} || res.ptr != v.data() + v.size() || v.empty() || !std::isfinite(out))
    throw ConfigError(key, "expected a number, got '" + v + "'");
  return out;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "on" || v == "true" || v == "1") return true;
  if (v == "off" || v == "false" || v == "0") return false;
  throw ConfigError(key, "expected on|off, got '" + v + "'");
}

std::string from_bool(bool b) { return b ? "on" : "off"; }

SimTime ns_to_ps(const std::string& key, const std::string& v) {
  const double ns = to_double(key, v);
  if (ns < 0) throw ConfigError(key, "must be >= 0");
  return static_cast<SimTime>(std::llround(ns * 1000.0));
}

std::string ps_to_ns(SimTime ps) { return fmt_double(static_cast<double>(ps) / 1000.0); }

std::uint64_t gbps_to_bps(const std::string& key, const std::string& v) {
  const double g = to_double(key, v);
  if (!(g > 0)) throw ConfigError(key, "must be positive");
  return static_cast<std::uint64_t>(std::llround(g * 1e9));
}

std::string bps_to_gbps(std::uint64_t b) { return fmt_double(static_cast<double>(b) / 1e9); }

struct Field {
  std::string key;
  std::function<std::string(const ExperimentConfig&)> get;
  std::function<void(ExperimentConfig&, const std::string&, const std::string&)> set;
};

#define U64_FIELD(name, member)                                                          \
  Field{name, [](const ExperimentConfig& c) { return std::to_string(c.member); },        \
        [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.member = to_u64(k, v); }}
#define U32_FIELD(name, member)                                                          \
  Field{name, [](const ExperimentConfig& c) { return std::to_string(c.member); },        \
        [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.member = to_u32(k, v); }}
#define DBL_FIELD(name, member)                                                          \
  Field{name, [](const ExperimentConfig& c) { return fmt_double(c.member); },            \
        [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.member = to_double(k, v); }}
#define BOOL_FIELD(name, member)                                                         \
  Field{name, [](const ExperimentConfig& c) { return from_bool(c.member); },             \
        [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.member = to_bool(k, v); }}
#define NS_FIELD(name, member)                                                           \
  Field{name, [](const ExperimentConfig& c) { return ps_to_ns(c.member); },              \
        [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.member = ns_to_ps(k, v); }}
#define GBPS_FIELD(name, member)                                                         \
  Field{name, [](const ExperimentConfig& c) { return bps_to_gbps(c.member); },           \
        [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.member = gbps_to_bps(k, v); }}

const std::vector<Field>& fields() {
  static const std::vector<Field> table = {
      U64_FIELD("seed", seed),
      U32_FIELD("nodes", nodes),
      U64_FIELD("duration_accesses", duration_accesses),
      Field{"workload", [](const ExperimentConfig& c) { return c.workload; },
            [](ExperimentConfig& c, const std::string& k, const std::string& v) {
              try {
                GeneratorSpec::parse(v);
              } catch (const std::exception& e) {
                throw ConfigError(k, e.what());
              }
              c.workload = v;
            }},
      U64_FIELD("footprint_bytes", footprint_bytes),
      DBL_FIELD("write_fraction", write_fraction),
      DBL_FIELD("allocation_ratio", allocation_ratio),
      U32_FIELD("max_outstanding", core.max_outstanding),
      Field{"issue_gap_ps", [](const ExperimentConfig& c) { return std::to_string(c.core.issue_gap); },
            [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.core.issue_gap = to_u64(k, v); }},
      BOOL_FIELD("core_prefetcher", core_prefetcher),
      U32_FIELD("core_prefetch_degree", core_prefetch_degree),
      BOOL_FIELD("dram_prefetcher", root.dram_prefetcher),
      U32_FIELD("block_size", root.dcache.block_size),
      U64_FIELD("cache_size", root.dcache.capacity),
      U32_FIELD("cache_ways", root.dcache.ways),
      U32_FIELD("prefetch_degree", root.spp.degree),
      DBL_FIELD("confidence_floor", root.spp.confidence_floor),
      BOOL_FIELD("bootstrap", root.spp.bootstrap),
      U32_FIELD("queue_capacity", root.queue_capacity),
      DBL_FIELD("drop_threshold", root.drop_threshold),
      BOOL_FIELD("adaptation", root.adapt.enabled),
      NS_FIELD("sampling_period_ns", root.adapt.sampling_period),
      DBL_FIELD("ema_alpha", root.adapt.ema_alpha),
      U32_FIELD("min_window", root.adapt.min_window),
      DBL_FIELD("k", root.adapt.decrease_gain),
      DBL_FIELD("latency_threshold", root.adapt.latency_threshold),
      DBL_FIELD("increase_factor", root.adapt.increase_factor),
      DBL_FIELD("rate_min", root.adapt.rate_min),
      DBL_FIELD("rate_max", root.adapt.rate_max),
      NS_FIELD("latency_ns", link.propagation),
      GBPS_FIELD("bandwidth_GBps", link.bandwidth),
      U32_FIELD("flit_bytes", link.flit_bytes),
      U32_FIELD("min_packet_bytes", link.min_packet_bytes),
      Field{"scheduler",
            [](const ExperimentConfig& c) { return std::string(c.fam.scheduler == SchedulerKind::wfq ? "wfq" : "fifo"); },
            [](ExperimentConfig& c, const std::string& k, const std::string& v) {
              if (v == "fifo") {
                c.fam.scheduler = SchedulerKind::fifo;
              } else if (v == "wfq") {
                c.fam.scheduler = SchedulerKind::wfq;
              } else {
                throw ConfigError(k, "expected fifo|wfq, got '" + v + "'");
              }
            }},
      U32_FIELD("wfq_weight", fam.dwrr.weight),
      U32_FIELD("quantum", fam.dwrr.quantum),
      U32_FIELD("max_demand_deficit", fam.dwrr.max_demand_deficit),
      U32_FIELD("max_prefetch_deficit", fam.dwrr.max_prefetch_deficit),
      U32_FIELD("fam_channels", fam.channels),
      NS_FIELD("fam_latency_ns", fam.access_latency),
      GBPS_FIELD("fam_channel_GBps", fam.channel_bandwidth),
      U32_FIELD("local_channels", root.local.channels),
      NS_FIELD("local_latency_ns", root.local.access_latency),
      GBPS_FIELD("local_channel_GBps", root.local.channel_bandwidth),
  };
  return table;
}

const Field* find_field(const std::string& key) {
  for (const auto& f : fields())
    if (f.key == key) return &f;
  return nullptr;
}

constexpr std::string_view kNodeWorkloadPrefix = "workload.";

}  // namespace

const std::vector<std::string>& ExperimentConfig::keys() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> out;
    for (const auto& f : fields()) out.push_back(f.key);
    return out;
  }();
  return names;
}

void ExperimentConfig::set(const std::string& key, const std::string& value) {
  if (key.rfind(kNodeWorkloadPrefix, 0) == 0) {
    const std::string index = key.substr(kNodeWorkloadPrefix.size());
    const std::uint32_t node = to_u32(key, index);
    try {
      GeneratorSpec::parse(value);
    } catch (const std::exception& e) {
      throw ConfigError(key, e.what());
    }
    node_workloads[node] = value;
    return;
  }
  const Field* f = find_field(key);
  if (f == nullptr) throw ConfigError(key, "unknown configuration key");
  f->set(*this, key, value);
}

std::string ExperimentConfig::get(const std::string& key) const {
  if (key.rfind(kNodeWorkloadPrefix, 0) == 0) {
    const auto it = node_workloads.find(to_u32(key, key.substr(kNodeWorkloadPrefix.size())));
    if (it == node_workloads.end()) throw ConfigError(key, "no per-node workload set");
    return it->second;
  }
  const Field* f = find_field(key);
  if (f == nullptr) throw ConfigError(key, "unknown configuration key");
  return f->get(*this);
}

ExperimentConfig ExperimentConfig::parse(const std::string& text) {
  ExperimentConfig cfg;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  std::set<std::string> seen;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(lineno), "expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (!seen.insert(key).second) throw ConfigError(key, "duplicate key");
    cfg.set(key, value);
  }
  return cfg;
}

ExperimentConfig ExperimentConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("--config", "cannot open " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

std::string ExperimentConfig::to_text() const {
  std::string out;
  for (const auto& f : fields()) out += f.key + " = " + f.get(*this) + "\n";
  for (const auto& [node, spec] : node_workloads)
    out += std::string(kNodeWorkloadPrefix) + std::to_string(node) + " = " + spec + "\n";
  return out;
}

std::string ExperimentConfig::workload_for(std::uint32_t node) const {
  const auto it = node_workloads.find(node);
  return it == node_workloads.end() ? workload : it->second;
}

std::vector<std::string> ExperimentConfig::trace_paths() const {
  std::set<std::string> paths;
  for (std::uint32_t n = 0; n < nodes; ++n) {
    const auto spec = GeneratorSpec::parse(workload_for(n));
    if (spec.kind == GeneratorKind::trace) paths.insert(spec.trace_path);
  }
  return {paths.begin(), paths.end()};
}

void ExperimentConfig::validate() const {
  auto wrap = [](const std::string& key, auto&& fn) {
    try {
      fn();
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception& e) {
      throw ConfigError(key, e.what());
    }
  };
  if (nodes < 1 || nodes > 16) throw ConfigError("nodes", "must be in 1..16");
  for (const auto& [node, spec] : node_workloads)
    if (node >= nodes) throw ConfigError("workload." + std::to_string(node), "node index beyond 'nodes'");
  if (footprint_bytes < kPageBytes) throw ConfigError("footprint_bytes", "must be at least one page");
  if (!(write_fraction >= 0 && write_fraction <= 1)) throw ConfigError("write_fraction", "must be in [0, 1]");
  if (!(allocation_ratio >= 0)) throw ConfigError("allocation_ratio", "must be >= 0");
  if (core.max_outstanding == 0) throw ConfigError("max_outstanding", "must be >= 1");
  if (core_prefetch_degree == 0 && core_prefetcher) throw ConfigError("core_prefetch_degree", "must be >= 1");
  wrap("block_size", [&] { root.dcache.validate(); });
  if (root.spp.degree == 0) throw ConfigError("prefetch_degree", "must be >= 1");
  if (!(root.spp.confidence_floor >= 0 && root.spp.confidence_floor <= 1))
    throw ConfigError("confidence_floor", "must be in [0, 1]");
  if (root.queue_capacity == 0) throw ConfigError("queue_capacity", "must be >= 1");
  if (!(root.drop_threshold > 0 && root.drop_threshold <= 1)) throw ConfigError("drop_threshold", "must be in (0, 1]");
  wrap("adaptation", [&] { root.adapt.validate(); });
  wrap("latency_ns", [&] { link.validate(); });
  if (fam.dwrr.weight < 1 || fam.dwrr.weight > 64) throw ConfigError("wfq_weight", "must be in 1..64");
  if (fam.dwrr.quantum == 0) throw ConfigError("quantum", "must be >= 1");
  const std::uint32_t r = root.dcache.block_size / fam.demand_block;
  if (fam.dwrr.max_demand_deficit != 0 && fam.dwrr.max_demand_deficit < r)
    throw ConfigError("max_demand_deficit", "must be >= block_size / 64");
  if (fam.dwrr.max_prefetch_deficit != 0 && fam.dwrr.max_prefetch_deficit < r)
    throw ConfigError("max_prefetch_deficit", "must be >= block_size / 64");
  if (fam.channels == 0) throw ConfigError("fam_channels", "must be >= 1");
  if (root.local.channels == 0) throw ConfigError("local_channels", "must be >= 1");
  wrap("workload", [&] {
    for (std::uint32_t n = 0; n < nodes; ++n) GeneratorSpec::parse(workload_for(n));
  });
}

}  // namespace famsim
