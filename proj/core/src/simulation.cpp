#include "famsim/simulation.hpp"

#include <deque>
#include <fstream>
#include <sstream>
#include <unordered_set>

namespace famsim {

namespace {

RootComplexConfig root_config(const ExperimentConfig& cfg) {
  RootComplexConfig rc = cfg.root;
  rc.spp.block_size = rc.dcache.block_size;
  return rc;
}

FamConfig fam_config(const ExperimentConfig& cfg) {
  FamConfig fc = cfg.fam;
  fc.dwrr.size_ratio = std::max<std::uint32_t>(1, cfg.root.dcache.block_size / fc.demand_block);
  return fc;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace

/// Glue between one core model and its root complex: HDM-style routing of
/// each access to local DRAM or FAM, plus the optional per-core prefetcher.
class Simulation::Node final : public MemoryPort {
 public:
  Node(Simulation& sim, std::uint32_t index)
      : sim_(sim),
        index_(index),
        link_(sim.config_.link),
        rc_(sim.engine_, index, root_config(sim.config_), sim.pool_, sim.stats_, link_) {
    StreamParams params;
    params.node = index;
    params.seed = sim.config_.seed;
    params.footprint_bytes = sim.config_.footprint_bytes;
    params.write_fraction = sim.config_.write_fraction;
    auto stream = make_stream(GeneratorSpec::parse(sim.config_.workload_for(index)), params);
    CoreConfig cc = sim.config_.core;
    cc.access_budget = sim.config_.duration_accesses;
    core_ = std::make_unique<CoreModel>(sim.engine_, cc, std::move(stream), *this);
    rc_.set_demand_callback([this] { core_->on_read_complete(); });
    rc_.set_activity_probe([this] { return !core_->finished(); });
    if (sim.config_.core_prefetcher) {
      SppConfig sc;
      sc.block_size = kLineBytes;
      sc.degree = sim.config_.core_prefetch_degree;
      sc.confidence_floor = sim.config_.root.spp.confidence_floor;
      sc.bootstrap = sim.config_.root.spp.bootstrap;
      core_spp_ = std::make_unique<SignaturePathPrefetcher>(sc);
    }
  }

  void read(const AccessRecord& rec) override {
    if (sim_.map_.classify(rec.address) == AddressMap::Target::local) {
      rc_.handle_local_read(rec.address);
    } else {
      issue_llc_miss(RequestClass::demand, rec.address / kLineBytes * kLineBytes);
    }
    if (core_spp_) core_prefetch(rec.address);
  }

  void write(const AccessRecord& rec) override {
    if (sim_.map_.classify(rec.address) == AddressMap::Target::local) {
      rc_.handle_local_write(rec.address);
    } else {
      rc_.handle_writeback(rec.address);
    }
  }

  RootComplex& rc() { return rc_; }
  CoreModel& core() { return *core_; }
  Link& link() { return link_; }

 private:
  void issue_llc_miss(RequestClass cls, std::uint64_t address) {
    Request req;
    req.node = index_;
    req.cls = cls;
    req.address = address;
    req.size = kLineBytes;
    req.created = sim_.engine_.now();
    ++sim_.stats_.of(cls).created;
    rc_.handle_llc_miss(sim_.pool_.acquire(req));
  }

  // Recently prefetched lines are not prefetched again; the LLC itself is not
  // modeled, so this stands in for the core prefetcher's own filtering.
  void core_prefetch(std::uint64_t address) {
    core_spp_->train(address);
    for (const auto& cand : core_spp_->predict(address)) {
      if (sim_.map_.classify(cand.block_address) != AddressMap::Target::fam) continue;
      if (!recent_.insert(cand.block_address).second) continue;
      recent_order_.push_back(cand.block_address);
      if (recent_order_.size() > kRecentLines) {
        recent_.erase(recent_order_.front());
        recent_order_.pop_front();
      }
      issue_llc_miss(RequestClass::core_prefetch, cand.block_address);
    }
  }

  static constexpr std::size_t kRecentLines = 256;

  Simulation& sim_;
  std::uint32_t index_;
  Link link_;
  RootComplex rc_;
  std::unique_ptr<CoreModel> core_;
  std::unique_ptr<SignaturePathPrefetcher> core_spp_;
  std::unordered_set<std::uint64_t> recent_;
  std::deque<std::uint64_t> recent_order_;
};

Simulation::Simulation(const ExperimentConfig& config, std::string label)
    : config_(config), label_(std::move(label)), map_(config.allocation_ratio, config.seed) {
  config_.validate();
  fam_ = std::make_unique<FamNode>(engine_, fam_config(config_), pool_, stats_);
  for (std::uint32_t n = 0; n < config_.nodes; ++n) {
    nodes_.push_back(std::make_unique<Node>(*this, n));
    nodes_.back()->rc().connect(fam_->id());
    fam_->connect(n, nodes_.back()->link(), nodes_.back()->rc().id());
  }
}

Simulation::~Simulation() = default;

RootComplex& Simulation::root_complex(std::uint32_t node) { return nodes_.at(node)->rc(); }
CoreModel& Simulation::core(std::uint32_t node) { return nodes_.at(node)->core(); }
Link& Simulation::link(std::uint32_t node) { return nodes_.at(node)->link(); }

std::uint64_t Simulation::workload_fingerprint() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& n : nodes_) {
    const std::uint64_t v = n->core().fingerprint() ^ (n->core().emitted() * 0x9e3779b97f4a7c15ULL);
    for (int i = 0; i < 8; ++i) {
      h ^= (v >> (8 * i)) & 0xff;
      h *= 0x100000001b3ULL;
    }
  }
  return h;
}

void Simulation::start() {
  if (started_) return;
  started_ = true;
  for (auto& n : nodes_) {
    n->core().start(0);
    n->rc().start_sampling();
  }
}

RunRecord Simulation::run() {
  FAMSIM_CHECK(!ran_, "a simulation instance runs once");
  ran_ = true;
  start();
  engine_.run();
  fam_->finish(engine_.now());
  stats_.end_time = engine_.now();

  for (auto& n : nodes_) {
    FAMSIM_CHECK(n->core().finished(), "core did not finish its access stream");
    FAMSIM_CHECK(n->rc().prefetch_queue_occupancy() == 0, "prefetch queue not drained");
  }
  FAMSIM_CHECK(pool_.live() == 0, "requests still live after drain");
  for (RequestClass c : kAllRequestClasses) {
    const auto& k = stats_.of(c);
    FAMSIM_CHECK(k.created == k.completed + k.dropped, "request conservation violated");
  }

  RunRecord rec;
  rec.label = label_;
  rec.config_text = config_.to_text();
  rec.config_hash = git_blob_hash(rec.config_text);
  std::string inputs = rec.config_text;
  for (const auto& path : config_.trace_paths()) inputs += read_file(path);
  rec.input_hash = git_blob_hash(inputs);
  rec.seed = config_.seed;
  rec.workload_fingerprint = workload_fingerprint();
  rec.event_digest = engine_.log_digest();
  rec.events = engine_.dispatched();
  rec.stats = stats_;
  return rec;
}

RunRecord run_experiment(const ExperimentConfig& config, const std::string& label) {
  Simulation sim(config, label);
  return sim.run();
}

}  // namespace famsim
