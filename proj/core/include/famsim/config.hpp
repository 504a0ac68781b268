#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "famsim/fabric.hpp"
#include "famsim/famnode.hpp"
#include "famsim/rootcomplex.hpp"
#include "famsim/workload.hpp"

namespace famsim {

/// Raised for unknown keys, malformed values and failed validation. The
/// message always names the offending key.
class ConfigError : public std::invalid_argument {
 public:
  ConfigError(const std::string& key, const std::string& what)
      : std::invalid_argument(key + ": " + what), key_(key) {}
  const std::string& key() const { return key_; }

 private:
  std::string key_;
};

/// Everything one simulation run needs. Defaults follow the reference
/// system: 128 GB/s / 70 ns links, 256-entry prefetch queues, 16 MiB DRAM
/// caches with 256 B blocks, two DDR4-2400 FAM channels.
struct ExperimentConfig {
  std::uint64_t seed = 1;
  std::uint32_t nodes = 1;
  std::uint64_t duration_accesses = 1'000'000;

  std::string workload = "sequential";
  std::map<std::uint32_t, std::string> node_workloads;  // workload.<n> overrides
  std::uint64_t footprint_bytes = 64ULL << 20;
  double write_fraction = 0.0;
  double allocation_ratio = 8.0;
  CoreConfig core;

  bool core_prefetcher = false;
  std::uint32_t core_prefetch_degree = 2;

  RootComplexConfig root;
  LinkConfig link;
  FamConfig fam;

  /// Parses a `key = value` document on top of the defaults. '#' starts a
  /// comment. Unknown keys are rejected.
  static ExperimentConfig parse(const std::string& text);
  static ExperimentConfig load(const std::string& path);

  /// Sets one key from its textual value.
  void set(const std::string& key, const std::string& value);
  std::string get(const std::string& key) const;

  /// Canonical serialization: every key, fixed order, one per line.
  std::string to_text() const;

  /// Cross-field checks (geometry, ranges, node count). Throws ConfigError.
  void validate() const;

  std::string workload_for(std::uint32_t node) const;
  /// Trace files referenced by any node, sorted and de-duplicated.
  std::vector<std::string> trace_paths() const;

  static const std::vector<std::string>& keys();
};

}  // namespace famsim
