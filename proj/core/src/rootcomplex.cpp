#include "famsim/rootcomplex.hpp"

#include <algorithm>
#include <stdexcept>

namespace famsim {

namespace {
constexpr std::uint64_t kFromDcache = 0;
constexpr std::uint64_t kFromLocalPage = 1;

SppConfig with_block(SppConfig spp, std::uint32_t block) {
  spp.block_size = block;
  return spp;
}
}  // namespace

void RootComplexConfig::validate() const {
  dcache.validate();
  with_block(spp, dcache.block_size).validate();
  adapt.validate();
  if (queue_capacity == 0) throw std::invalid_argument("prefetch queue capacity must be >= 1");
  if (!(drop_threshold > 0 && drop_threshold <= 1))
    throw std::invalid_argument("drop threshold must be in (0, 1]");
  if (local.channels == 0 || local.channel_bandwidth == 0)
    throw std::invalid_argument("local memory needs channels and bandwidth");
}

RootComplex::RootComplex(Engine& engine, std::uint32_t node, RootComplexConfig config, RequestPool& pool,
                         StatSet& stats, Link& link)
    : engine_(engine),
      node_(node),
      config_((config.validate(), config)),
      pool_(pool),
      stats_(stats),
      link_(link),
      dcache_(config_.dcache),
      spp_(with_block(config_.spp, config_.dcache.block_size)),
      local_(config_.local.channels, config_.local.access_latency, config_.local.channel_bandwidth),
      adapt_(config_.adapt, config_.queue_capacity) {
  id_ = engine_.attach(*this);
}

void RootComplex::connect(ComponentId fam) {
  fam_ = fam;
  connected_ = true;
}

void RootComplex::start_sampling() {
  if (config_.adapt.enabled) engine_.schedule_after(config_.adapt.sampling_period, id_, Message{kSample, 0, 0});
}

void RootComplex::on_event(const Message& msg) {
  switch (msg.kind) {
    case FamNode::kResponseKind: on_fam_response(msg.arg0); break;
    case kLocalDone:
      if (msg.arg1 == kFromLocalPage) {
        Request& req = pool_.get(msg.arg0);
        req.completed = engine_.now();
        stats_.local_latency.add(req.completed - req.created);
        pool_.release(msg.arg0);
        if (on_demand_done_) on_demand_done_();
      } else {
        complete_read(msg.arg0, ServePath::dcache_hit);
      }
      break;
    case kFillDone: {
      auto it = fill_ready_.find(msg.arg0);
      if (it != fill_ready_.end() && it->second <= engine_.now()) fill_ready_.erase(it);
      break;
    }
    case kSample: sample(); break;
    default: FAMSIM_CHECK(false, "root complex received an unknown message");
  }
}

void RootComplex::send_to_fam(RequestId id) {
  FAMSIM_CHECK(connected_, "root complex not connected to a FAM node");
  const Request& req = pool_.get(id);
  const std::uint32_t bytes = wire_size(req, Direction::to_fam, link_.to_fam.config());
  stats_.link_bytes_to_fam += bytes;
  const SimTime delivery = link_.to_fam.transmit(bytes, engine_.now());
  engine_.schedule(delivery, fam_, Message{FamNode::kArrive, id, 0});
}

void RootComplex::handle_llc_miss(RequestId id) {
  Request& req = pool_.get(id);
  FAMSIM_CHECK(req.cls == RequestClass::demand || req.cls == RequestClass::core_prefetch,
               "llc miss must be a demand or core prefetch");
  const bool is_demand = req.cls == RequestClass::demand;
  const std::uint64_t address = req.address;
  const std::uint64_t block = block_of(address);
  ++stats_.of(req.cls).issued;
  if (is_demand) {
    ++stats_.demand_lookups;
    adapt_.on_demand_arrival();
  } else {
    ++stats_.core_prefetch_lookups;
  }

  if (dcache_.lookup(block)) {
    ++(is_demand ? stats_.demand_hits : stats_.core_prefetch_hits);
    mark_used(block);
    SimTime start = engine_.now();
    if (auto it = fill_ready_.find(block); it != fill_ready_.end()) start = std::max(start, it->second);
    const auto svc = local_.service(req.size, start);
    engine_.schedule(svc.completion, id_, Message{kLocalDone, id, kFromDcache});
  } else if (auto it = prefetch_queue_.find(block); it != prefetch_queue_.end()) {
    ++(is_demand ? stats_.demand_merges : stats_.core_prefetch_merges);
    it->second.waiters.push_back(id);
  } else {
    if (is_demand) adapt_.on_demand_issued();
    send_to_fam(id);
  }

  // The prefetcher trains and predicts on every FAM-bound miss, hit or not.
  if (config_.dram_prefetcher) {
    spp_.train(address);
    if (spp_.blocks_per_page() == 1) {
      // A page-sized block has no intra-page deltas to learn: the page
      // moves to the DRAM cache on touch.
      maybe_issue_prefetches({PrefetchCandidate{block, 1.0, 1}});
    } else {
      maybe_issue_prefetches(spp_.predict(address));
    }
  }
}

std::size_t RootComplex::maybe_issue_prefetches(std::vector<PrefetchCandidate> candidates) {
  std::stable_sort(candidates.begin(), candidates.end(),
                   [](const auto& a, const auto& b) { return a.confidence > b.confidence; });
  auto& counters = stats_.of(RequestClass::dram_prefetch);
  const double limit = config_.drop_threshold * config_.queue_capacity;
  std::size_t issued = 0;
  for (const auto& c : candidates) {
    ++counters.created;
    const std::uint64_t block = block_of(c.block_address);
    if (dcache_.contains(block)) {
      ++stats_.prefetch_dropped_resident;
    } else if (prefetch_queue_.count(block) != 0) {
      ++stats_.prefetch_dropped_inflight;
    } else if (static_cast<double>(prefetch_queue_.size()) >= limit ||
               prefetch_queue_.size() >= config_.queue_capacity) {
      ++stats_.prefetch_dropped_threshold;
    } else if (config_.adapt.enabled && !adapt_.try_consume_token()) {
      ++stats_.prefetch_dropped_budget;
    } else {
      Request proto;
      proto.node = node_;
      proto.cls = RequestClass::dram_prefetch;
      proto.address = block;
      proto.size = config_.dcache.block_size;
      proto.created = engine_.now();
      const RequestId id = pool_.acquire(proto);
      prefetch_queue_.emplace(block, InFlightPrefetch{id, engine_.now(), {}});
      stats_.prefetch_queue_peak = std::max<std::uint64_t>(stats_.prefetch_queue_peak, prefetch_queue_.size());
      ++counters.issued;
      adapt_.on_prefetch_issued();
      if (log_prefetches_) prefetch_log_.emplace_back(engine_.now(), block);
      send_to_fam(id);
      ++issued;
      continue;
    }
    ++counters.dropped;
  }
  return issued;
}

void RootComplex::on_fam_response(RequestId id) {
  const Request& req = pool_.get(id);
  switch (req.cls) {
    case RequestClass::dram_prefetch: on_prefetch_response(id); break;
    case RequestClass::demand:
      adapt_.on_demand_returned(engine_.now() - req.created);
      complete_read(id, ServePath::fam);
      break;
    case RequestClass::core_prefetch: complete_read(id, ServePath::fam); break;
    default: FAMSIM_CHECK(false, "response for a write request");
  }
}

void RootComplex::on_prefetch_response(RequestId id) {
  const std::uint64_t block = pool_.get(id).address;
  auto it = prefetch_queue_.find(block);
  FAMSIM_CHECK(it != prefetch_queue_.end() && it->second.id == id, "response for unknown prefetch entry");
  std::vector<RequestId> waiters = std::move(it->second.waiters);
  prefetch_queue_.erase(it);

  Request& req = pool_.get(id);
  req.completed = engine_.now();
  ++stats_.of(RequestClass::dram_prefetch).completed;

  const AllocateResult fill = dcache_.allocate(block, false);
  if (fill.evicted) {
    const std::uint64_t victim = fill.evicted->block_address;
    fill_ready_.erase(victim);
    if (unused_prefetched_.erase(victim) != 0) ++stats_.prefetch_evicted_unused;
    if (fill.evicted->was_dirty) {
      ++stats_.dirty_evictions;
      Request wb;
      wb.node = node_;
      wb.cls = RequestClass::eviction_writeback;
      wb.address = victim;
      wb.size = config_.dcache.block_size;
      wb.created = engine_.now();
      auto& counters = stats_.of(RequestClass::eviction_writeback);
      ++counters.created;
      ++counters.issued;
      send_to_fam(pool_.acquire(wb));
    }
  }
  const auto svc = local_.service(config_.dcache.block_size, engine_.now());
  fill_ready_[block] = svc.completion;
  engine_.schedule(svc.completion, id_, Message{kFillDone, block, 0});
  unused_prefetched_.insert(block);
  adapt_.on_fill(block);
  pool_.release(id);

  for (RequestId w : waiters) {
    mark_used(block);
    complete_read(w, ServePath::merged);
  }
}

void RootComplex::mark_used(std::uint64_t block) {
  if (unused_prefetched_.erase(block) == 0) return;
  ++stats_.prefetch_used;
  adapt_.on_use(block);
}

void RootComplex::complete_read(RequestId id, ServePath path) {
  Request& req = pool_.get(id);
  req.completed = engine_.now();
  ++stats_.of(req.cls).completed;
  if (log_paths_) path_log_.emplace_back(id, path);
  if (req.cls == RequestClass::demand) {
    const SimTime latency = req.completed - req.created;
    stats_.demand_latency.add(latency);
    if (path == ServePath::fam) stats_.demand_fam_latency.add(latency);
    if (path == ServePath::dcache_hit) stats_.demand_hit_latency.add(latency);
    pool_.release(id);
    if (on_demand_done_) on_demand_done_();
    return;
  }
  pool_.release(id);
}

void RootComplex::handle_writeback(std::uint64_t address) {
  auto& counters = stats_.of(RequestClass::writeback);
  ++counters.created;
  ++counters.issued;
  const std::uint64_t block = block_of(address);
  if (dcache_.write_hit(block)) {
    ++stats_.writeback_hits;
    ++counters.completed;
    local_.service(kLineBytes, engine_.now());
    return;
  }
  Request wb;
  wb.node = node_;
  wb.cls = RequestClass::writeback;
  wb.address = address / kLineBytes * kLineBytes;
  wb.size = kLineBytes;
  wb.created = engine_.now();
  send_to_fam(pool_.acquire(wb));
}

void RootComplex::handle_local_read(std::uint64_t address) {
  ++stats_.local_reads;
  Request req;
  req.node = node_;
  req.cls = RequestClass::demand;
  req.address = address;
  req.created = engine_.now();
  const RequestId id = pool_.acquire(req);
  const auto svc = local_.service(kLineBytes, engine_.now());
  engine_.schedule(svc.completion, id_, Message{kLocalDone, id, kFromLocalPage});
}

void RootComplex::handle_local_write(std::uint64_t /*address*/) {
  ++stats_.local_writes;
  local_.service(kLineBytes, engine_.now());
}

void RootComplex::sample() {
  adapt_.sampling_tick();
  ++stats_.adapt_samples;
  stats_.adapt_final_rate = adapt_.rate();
  stats_.adapt_min_rate = stats_.adapt_samples == 1 ? adapt_.rate() : std::min(stats_.adapt_min_rate, adapt_.rate());
  if (!active_ || active_()) engine_.schedule_after(config_.adapt.sampling_period, id_, Message{kSample, 0, 0});
}

}  // namespace famsim
