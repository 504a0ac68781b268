#pragma once

#include <array>
#include <cstdint>
#include <deque>
#include <memory>
#include <optional>
#include <vector>

#include "famsim/engine.hpp"
#include "famsim/fabric.hpp"
#include "famsim/metrics.hpp"
#include "famsim/request.hpp"

namespace famsim {

enum class SchedulerKind : std::uint8_t { fifo, wfq };

enum class Lane : std::uint8_t { demand = 0, prefetch = 1 };

/// Demands, writebacks and eviction writebacks share the demand lane; both
/// prefetch classes share the prefetch lane.
constexpr Lane lane_of(RequestClass c) { return is_prefetch(c) ? Lane::prefetch : Lane::demand; }

/// A queued request as the issue logic sees it: `units` is its size in
/// demand blocks (64 B).
struct Ticket {
  RequestId id = 0;
  std::uint32_t units = 1;
  RequestClass cls = RequestClass::demand;
};

/// Controller issue logic, stepped once per issue cycle. A cycle grants one
/// demand-block unit of service; multi-unit requests wait until enough has
/// accumulated.
class IssueScheduler {
 public:
  virtual ~IssueScheduler() = default;
  virtual void enqueue(const Ticket& t) = 0;
  virtual std::optional<Ticket> issue_cycle() = 0;
  /// Advances state across `n` cycles during which every queue was empty.
  virtual void idle_cycles(std::uint64_t n) = 0;
  virtual std::size_t depth() const = 0;
  bool empty() const { return depth() == 0; }
};

/// Single input queue in arrival order.
class FifoScheduler final : public IssueScheduler {
 public:
  explicit FifoScheduler(std::uint32_t max_units = 8);

  void enqueue(const Ticket& t) override;
  std::optional<Ticket> issue_cycle() override;
  void idle_cycles(std::uint64_t n) override;
  std::size_t depth() const override { return queue_.size(); }
  std::uint32_t credit() const { return credit_; }

 private:
  std::deque<Ticket> queue_;
  std::uint32_t credit_ = 0;
  std::uint32_t cap_;
};

struct DwrrConfig {
  std::uint32_t weight = 2;               // W
  std::uint32_t quantum = 1;
  std::uint32_t max_demand_deficit = 0;   // 0 = max(8 * quantum, r)
  std::uint32_t max_prefetch_deficit = 0; // 0 = max(2 * r, quantum)
  std::uint32_t size_ratio = 4;           // r = prefetch block / demand block

  void validate() const;
  std::uint32_t demand_cap() const;
  std::uint32_t prefetch_cap() const;
};

/// Work-conserving deficit weighted round robin over a demand and a prefetch
/// queue. Rounds 1..W prefer demand, round 0 prefers prefetch. Each issued
/// request is charged its size in units against its lane's deficit.
class DwrrScheduler final : public IssueScheduler {
 public:
  explicit DwrrScheduler(DwrrConfig config);

  void enqueue(const Ticket& t) override;
  std::optional<Ticket> issue_cycle() override;
  void idle_cycles(std::uint64_t n) override;
  std::size_t depth() const override { return queues_[0].size() + queues_[1].size(); }

  std::size_t depth(Lane lane) const { return queues_[static_cast<int>(lane)].size(); }
  std::uint32_t current_round() const { return round_; }
  std::uint32_t deficit(Lane lane) const { return deficit_[static_cast<int>(lane)]; }
  const DwrrConfig& config() const { return config_; }

 private:
  bool can_issue(Lane lane) const;
  Ticket take(Lane lane);
  void credit(Lane lane);

  DwrrConfig config_;
  std::array<std::deque<Ticket>, 2> queues_;
  std::array<std::uint32_t, 2> deficit_{0, 0};
  std::array<std::uint32_t, 2> cap_{};
  std::uint32_t round_ = 0;
};

/// FIFO DDR channels behind the controller, abstracted to an access latency
/// plus per-channel serialization.
class MemBackend {
 public:
  MemBackend(std::uint32_t channels, SimTime access_latency, std::uint64_t channel_bandwidth);

  struct Service {
    std::uint32_t channel = 0;
    SimTime completion = 0;
  };
  /// Sends `bytes` to the least-loaded channel (lowest index on ties).
  Service service(std::uint32_t bytes, SimTime now);

  std::uint32_t channels() const { return static_cast<std::uint32_t>(free_.size()); }
  SimTime channel_free(std::uint32_t ch) const { return free_[ch]; }
  SimTime access_latency() const { return access_latency_; }
  std::uint64_t channel_bandwidth() const { return bandwidth_; }

 private:
  std::vector<SimTime> free_;
  SimTime access_latency_;
  std::uint64_t bandwidth_;
};

struct FamConfig {
  SchedulerKind scheduler = SchedulerKind::fifo;
  DwrrConfig dwrr;
  std::uint32_t demand_block = kLineBytes;
  std::uint32_t channels = 2;
  SimTime access_latency = 45 * kNanosecond;
  std::uint64_t channel_bandwidth = 19'200'000'000ULL;

  std::uint64_t total_bandwidth() const { return channel_bandwidth * channels; }
  void validate() const;
};

std::unique_ptr<IssueScheduler> make_scheduler(const FamConfig& config);

/// Shared FAM endpoint. Requests arrive over each node's link, pass the issue
/// scheduler at the aggregate-bandwidth cycle rate, and are served by the
/// backend; read responses go back over the requester's link.
class FamNode final : public EventSink {
 public:
  /// Message kinds accepted by on_event().
  enum : std::uint32_t { kArrive = 1, kTick = 2, kBackendDone = 3 };
  /// Message kind delivered to a node's root complex for a read response.
  static constexpr std::uint32_t kResponseKind = 100;

  FamNode(Engine& engine, FamConfig config, RequestPool& pool, StatSet& stats);

  /// Registers the link and root-complex component of node `node`.
  void connect(std::uint32_t node, Link& link, ComponentId root_complex);

  void on_event(const Message& msg) override;
  ComponentId id() const { return id_; }

  /// Period of one issue cycle: demand block over aggregate bandwidth.
  SimTime cycle_time(std::uint64_t k) const;

  const IssueScheduler& scheduler() const { return *scheduler_; }
  const MemBackend& backend() const { return backend_; }
  void enable_issue_log(bool on) { log_issues_ = on; }
  const std::vector<RequestId>& issue_log() const { return issue_log_; }
  std::uint64_t cycles() const { return cycles_run_; }

  /// Closes the queue-depth integral at `now`.
  void finish(SimTime now);

 private:
  void arrive(RequestId id);
  void tick();
  void complete(RequestId id);
  void track_depth();

  Engine& engine_;
  FamConfig config_;
  RequestPool& pool_;
  StatSet& stats_;
  ComponentId id_;
  std::unique_ptr<IssueScheduler> scheduler_;
  MemBackend backend_;
  std::vector<Link*> links_;
  std::vector<ComponentId> clients_;

  bool ticking_ = false;
  bool ever_ticked_ = false;
  SimTime origin_ = 0;
  std::uint64_t cycle_index_ = 0;
  SimTime last_tick_ = 0;
  std::uint64_t cycles_run_ = 0;

  SimTime depth_since_ = 0;
  std::size_t depth_ = 0;

  bool log_issues_ = false;
  std::vector<RequestId> issue_log_;
};

}  // namespace famsim
