#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "famsim/config.hpp"
#include "famsim/metrics.hpp"

namespace famsim {

enum class SweepAxis : std::uint8_t { block_size, allocation_ratio, nodes, wfq_weight, cache_size, adaptation };

SweepAxis parse_axis(const std::string& name);
std::string to_string(SweepAxis axis);
/// Config key the axis writes.
std::string axis_key(SweepAxis axis);

/// Splits "a,b,c"; throws std::invalid_argument on an empty list.
std::vector<std::string> parse_values(const std::string& list);

/// Config with the studied mechanisms off: no DRAM-cache prefetcher, no core
/// prefetcher, FIFO scheduling, no adaptation. Workload is untouched.
ExperimentConfig baseline_of(const ExperimentConfig& config);
/// Same config with FIFO scheduling and adaptation off, prefetchers kept.
ExperimentConfig reference_of(const ExperimentConfig& config);

struct SweepPoint {
  std::string value;
  RunRecord run;
  RunRecord baseline;
  RunRecord reference;
  std::optional<double> relative_fam_latency;
  std::optional<double> relative_prefetches_issued;
};

struct SweepResult {
  SweepAxis axis;
  std::vector<SweepPoint> points;
};

/// Runs every config in `configs` (label, config) on up to `jobs` worker
/// threads. Each simulation is independent. Results keep input order.
std::vector<RunRecord> run_all(const std::vector<std::pair<std::string, ExperimentConfig>>& configs,
                               unsigned jobs);

/// One run per value plus its paired baseline and reference runs.
/// Identical configs are simulated once.
SweepResult run_sweep(const ExperimentConfig& config, SweepAxis axis, const std::vector<std::string>& values,
                      unsigned jobs = 1);

std::string sweep_summary_csv(const SweepResult& result);

}  // namespace famsim
