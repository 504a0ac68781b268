#include "famsim/famnode.hpp"

#include <algorithm>
#include <stdexcept>

namespace famsim {

// ---------------------------------------------------------------------------
// FIFO

FifoScheduler::FifoScheduler(std::uint32_t max_units) : cap_(std::max<std::uint32_t>(1, max_units)) {}

void FifoScheduler::enqueue(const Ticket& t) {
  FAMSIM_CHECK(t.units >= 1 && t.units <= cap_, "request larger than the controller credit cap");
  queue_.push_back(t);
}

std::optional<Ticket> FifoScheduler::issue_cycle() {
  credit_ = std::min(cap_, credit_ + 1);
  if (queue_.empty() || credit_ < queue_.front().units) return std::nullopt;
  Ticket t = queue_.front();
  queue_.pop_front();
  credit_ -= t.units;
  return t;
}

void FifoScheduler::idle_cycles(std::uint64_t n) {
  credit_ = static_cast<std::uint32_t>(std::min<std::uint64_t>(cap_, credit_ + n));
}

// ---------------------------------------------------------------------------
// DWRR

void DwrrConfig::validate() const {
  if (weight == 0) throw std::invalid_argument("wfq weight must be >= 1");
  if (quantum == 0) throw std::invalid_argument("wfq quantum must be >= 1");
  if (size_ratio == 0) throw std::invalid_argument("prefetch/demand size ratio must be >= 1");
  if (max_demand_deficit != 0 && max_demand_deficit < size_ratio)
    throw std::invalid_argument("max demand deficit must cover one block-sized writeback");
  if (max_prefetch_deficit != 0 && max_prefetch_deficit < size_ratio)
    throw std::invalid_argument("max prefetch deficit must be >= r");
}

std::uint32_t DwrrConfig::demand_cap() const {
  return max_demand_deficit != 0 ? max_demand_deficit : std::max(8 * quantum, size_ratio);
}

std::uint32_t DwrrConfig::prefetch_cap() const {
  return max_prefetch_deficit != 0 ? max_prefetch_deficit : std::max(2 * size_ratio, quantum);
}

DwrrScheduler::DwrrScheduler(DwrrConfig config) : config_(config) {
  config_.validate();
  cap_ = {config_.demand_cap(), config_.prefetch_cap()};
}

void DwrrScheduler::enqueue(const Ticket& t) {
  const auto lane = static_cast<int>(lane_of(t.cls));
  FAMSIM_CHECK(t.units >= 1 && t.units <= cap_[lane], "request larger than its lane's deficit cap");
  queues_[lane].push_back(t);
}

bool DwrrScheduler::can_issue(Lane lane) const {
  const auto i = static_cast<int>(lane);
  return !queues_[i].empty() && deficit_[i] >= queues_[i].front().units;
}

Ticket DwrrScheduler::take(Lane lane) {
  const auto i = static_cast<int>(lane);
  Ticket t = queues_[i].front();
  queues_[i].pop_front();
  deficit_[i] -= t.units;
  return t;
}

void DwrrScheduler::credit(Lane lane) {
  const auto i = static_cast<int>(lane);
  deficit_[i] = std::min(cap_[i], deficit_[i] + config_.quantum);
}

std::optional<Ticket> DwrrScheduler::issue_cycle() {
  round_ = (round_ + 1) % (config_.weight + 1);
  const Lane preferred = round_ != 0 ? Lane::demand : Lane::prefetch;
  const Lane other = round_ != 0 ? Lane::prefetch : Lane::demand;

  // A round whose preferred lane is empty donates its quantum to the other
  // lane, so a lone class gets the full controller rate.
  const bool donate = queues_[static_cast<int>(preferred)].empty() &&
                      !queues_[static_cast<int>(other)].empty();
  credit(donate ? other : preferred);

  if (can_issue(preferred)) return take(preferred);
  if (can_issue(other)) return take(other);
  return std::nullopt;
}

void DwrrScheduler::idle_cycles(std::uint64_t n) {
  const std::uint64_t window = config_.weight + 1;
  const std::uint64_t saturate = window * (std::max(cap_[0], cap_[1]) + 1);
  const std::uint64_t stepped = std::min(n, saturate);
  for (std::uint64_t i = 0; i < stepped; ++i) {
    round_ = (round_ + 1) % (config_.weight + 1);
    credit(round_ != 0 ? Lane::demand : Lane::prefetch);
  }
  round_ = static_cast<std::uint32_t>((round_ + (n - stepped)) % window);
}

// ---------------------------------------------------------------------------
// Backend

MemBackend::MemBackend(std::uint32_t channels, SimTime access_latency, std::uint64_t channel_bandwidth)
    : free_(channels, 0), access_latency_(access_latency), bandwidth_(channel_bandwidth) {
  if (channels == 0 || channel_bandwidth == 0)
    throw std::invalid_argument("memory backend needs channels and bandwidth");
}

MemBackend::Service MemBackend::service(std::uint32_t bytes, SimTime now) {
  std::uint32_t best = 0;
  for (std::uint32_t c = 1; c < free_.size(); ++c)
    if (std::max(free_[c], now) < std::max(free_[best], now)) best = c;
  const SimTime start = std::max(free_[best], now);
  free_[best] = start + serialization_time(bytes, bandwidth_);
  return Service{best, free_[best] + access_latency_};
}

// ---------------------------------------------------------------------------
// FAM node

void FamConfig::validate() const {
  if (scheduler == SchedulerKind::wfq) dwrr.validate();
  if (demand_block == 0 || channels == 0 || channel_bandwidth == 0)
    throw std::invalid_argument("fam block size, channels and bandwidth must be positive");
}

std::unique_ptr<IssueScheduler> make_scheduler(const FamConfig& config) {
  if (config.scheduler == SchedulerKind::wfq) return std::make_unique<DwrrScheduler>(config.dwrr);
  DwrrConfig caps = config.dwrr;
  return std::make_unique<FifoScheduler>(caps.demand_cap());
}

FamNode::FamNode(Engine& engine, FamConfig config, RequestPool& pool, StatSet& stats)
    : engine_(engine),
      config_(config),
      pool_(pool),
      stats_(stats),
      scheduler_((config.validate(), make_scheduler(config))),
      backend_(config.channels, config.access_latency, config.channel_bandwidth) {
  id_ = engine_.attach(*this);
}

void FamNode::connect(std::uint32_t node, Link& link, ComponentId root_complex) {
  if (links_.size() <= node) {
    links_.resize(node + 1, nullptr);
    clients_.resize(node + 1, 0);
  }
  links_[node] = &link;
  clients_[node] = root_complex;
}

SimTime FamNode::cycle_time(std::uint64_t k) const {
  const Wide num = static_cast<Wide>(k) * config_.demand_block * 1'000'000'000'000ULL;
  const std::uint64_t den = config_.total_bandwidth();
  return static_cast<SimTime>((num + den - 1) / den);
}

void FamNode::track_depth() {
  const SimTime now = engine_.now();
  stats_.fam_queue_depth_integral += static_cast<long double>(now - depth_since_) * depth_;
  depth_since_ = now;
  depth_ = scheduler_->depth();
  stats_.fam_queue_peak = std::max<std::uint64_t>(stats_.fam_queue_peak, depth_);
}

void FamNode::finish(SimTime now) {
  stats_.fam_queue_depth_integral += static_cast<long double>(now - depth_since_) * depth_;
  depth_since_ = now;
}

void FamNode::on_event(const Message& msg) {
  switch (msg.kind) {
    case kArrive: arrive(msg.arg0); break;
    case kTick: tick(); break;
    case kBackendDone: complete(msg.arg0); break;
    default: FAMSIM_CHECK(false, "fam node received an unknown message");
  }
}

void FamNode::arrive(RequestId id) {
  const Request& req = pool_.get(id);
  const std::uint32_t units = (req.size + config_.demand_block - 1) / config_.demand_block;
  scheduler_->enqueue(Ticket{id, units, req.cls});
  track_depth();
  if (ticking_) return;

  // Wake from idle: account for the cycles that passed with empty queues,
  // then restart the cycle clock at this arrival.
  const SimTime now = engine_.now();
  if (ever_ticked_ && now > last_tick_) {
    const Wide span = static_cast<Wide>(now - last_tick_ - 1) * config_.total_bandwidth();
    const Wide per_cycle = static_cast<Wide>(config_.demand_block) * 1'000'000'000'000ULL;
    scheduler_->idle_cycles(static_cast<std::uint64_t>(span / per_cycle));
  } else if (!ever_ticked_) {
    const Wide span = static_cast<Wide>(now) * config_.total_bandwidth();
    const Wide per_cycle = static_cast<Wide>(config_.demand_block) * 1'000'000'000'000ULL;
    scheduler_->idle_cycles(static_cast<std::uint64_t>(span / per_cycle));
  }
  origin_ = now;
  cycle_index_ = 0;
  ticking_ = true;
  tick();
}

void FamNode::tick() {
  const SimTime now = engine_.now();
  ever_ticked_ = true;
  last_tick_ = now;
  ++cycles_run_;
  if (auto ticket = scheduler_->issue_cycle()) {
    Request& req = pool_.get(ticket->id);
    req.issued = now;
    if (lane_of(req.cls) == Lane::demand) {
      stats_.fam_demand_lane_bytes += req.size;
    } else {
      stats_.fam_prefetch_lane_bytes += req.size;
    }
    if (log_issues_) issue_log_.push_back(ticket->id);
    const auto svc = backend_.service(req.size, now);
    engine_.schedule(svc.completion, id_, Message{kBackendDone, ticket->id, svc.channel});
    track_depth();
  }
  ++cycle_index_;
  if (scheduler_->empty()) {
    ticking_ = false;
    return;
  }
  engine_.schedule(origin_ + cycle_time(cycle_index_), id_, Message{kTick, 0, 0});
}

void FamNode::complete(RequestId id) {
  Request& req = pool_.get(id);
  if (is_write(req.cls)) {
    req.completed = engine_.now();
    ++stats_.of(req.cls).completed;
    pool_.release(id);
    return;
  }
  FAMSIM_CHECK(req.node < links_.size() && links_[req.node] != nullptr, "response for unconnected node");
  const std::uint32_t bytes = wire_size(req, Direction::to_host, links_[req.node]->to_host.config());
  stats_.link_bytes_to_host += bytes;
  const SimTime delivery = links_[req.node]->to_host.transmit(bytes, engine_.now());
  engine_.schedule(delivery, clients_[req.node], Message{kResponseKind, id, 0});
}

}  // namespace famsim
