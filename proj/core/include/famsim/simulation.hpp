#pragma once

#include <memory>
#include <string>
#include <vector>

#include "famsim/config.hpp"
#include "famsim/engine.hpp"
#include "famsim/fabric.hpp"
#include "famsim/famnode.hpp"
#include "famsim/metrics.hpp"
#include "famsim/rootcomplex.hpp"
#include "famsim/spp.hpp"
#include "famsim/workload.hpp"

namespace famsim {

/// One self-contained N-node system: per-node core model, root complex and
/// link, plus the shared FAM node. Single-threaded; instances share nothing.
class Simulation {
 public:
  explicit Simulation(const ExperimentConfig& config, std::string label = "run");
  ~Simulation();
  Simulation(const Simulation&) = delete;
  Simulation& operator=(const Simulation&) = delete;

  /// Runs every node to the end of its access budget and drains all
  /// outstanding traffic. Call once.
  RunRecord run();

  /// Starts the cores and samplers without dispatching anything, for callers
  /// that step engine() themselves before run() drains the rest.
  void start();

  Engine& engine() { return engine_; }
  StatSet& stats() { return stats_; }
  RequestPool& pool() { return pool_; }
  FamNode& fam() { return *fam_; }
  RootComplex& root_complex(std::uint32_t node);
  CoreModel& core(std::uint32_t node);
  Link& link(std::uint32_t node);
  const AddressMap& address_map() const { return map_; }
  std::uint32_t nodes() const { return config_.nodes; }
  const ExperimentConfig& config() const { return config_; }

  /// Combined fingerprint of every node's emitted access stream.
  std::uint64_t workload_fingerprint() const;

 private:
  class Node;

  ExperimentConfig config_;
  std::string label_;
  Engine engine_;
  StatSet stats_;
  RequestPool pool_;
  AddressMap map_;
  std::unique_ptr<FamNode> fam_;
  std::vector<std::unique_ptr<Node>> nodes_;
  bool started_ = false;
  bool ran_ = false;
};

/// Convenience wrapper: build, run, return the record.
RunRecord run_experiment(const ExperimentConfig& config, const std::string& label = "run");

}  // namespace famsim
