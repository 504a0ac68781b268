#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "famsim/adapt.hpp"
#include "famsim/dcache.hpp"
#include "famsim/engine.hpp"
#include "famsim/fabric.hpp"
#include "famsim/famnode.hpp"
#include "famsim/metrics.hpp"
#include "famsim/request.hpp"
#include "famsim/spp.hpp"

namespace famsim {

struct LocalMemoryConfig {
  std::uint32_t channels = 2;
  SimTime access_latency = 45 * kNanosecond;
  std::uint64_t channel_bandwidth = 25'600'000'000ULL;  // DDR4-3200
};

struct RootComplexConfig {
  bool dram_prefetcher = true;
  DcacheGeometry dcache;
  SppConfig spp;  // block_size follows dcache.block_size
  std::uint32_t queue_capacity = 256;
  double drop_threshold = 0.95;
  AdaptConfig adapt;
  LocalMemoryConfig local;

  void validate() const;
};

/// How a FAM-page read was served.
enum class ServePath : std::uint8_t { dcache_hit, merged, fam };

/// Per-node root complex with the DRAM-cache prefetcher: routes LLC misses to
/// the DRAM cache, the prefetch queue or the fabric, issues and fills
/// sub-page prefetches, and runs the prefetch rate control loop.
class RootComplex final : public EventSink {
 public:
  enum : std::uint32_t { kLocalDone = 1, kFillDone = 2, kSample = 3 };

  RootComplex(Engine& engine, std::uint32_t node, RootComplexConfig config, RequestPool& pool,
              StatSet& stats, Link& link);

  /// Must be called before the first request; `fam` is the FAM node id.
  void connect(ComponentId fam);

  /// Called once per completed demand read (any path, local pages included).
  void set_demand_callback(std::function<void()> cb) { on_demand_done_ = std::move(cb); }
  /// Polled at every sampling tick; sampling stops once it returns false.
  void set_activity_probe(std::function<bool()> probe) { active_ = std::move(probe); }
  void start_sampling();

  /// Entry points for requests leaving the LLC.
  void handle_llc_miss(RequestId id);
  void handle_writeback(std::uint64_t address);
  void handle_local_read(std::uint64_t address);
  void handle_local_write(std::uint64_t address);

  /// Filters and issues candidates; returns how many went out.
  std::size_t maybe_issue_prefetches(std::vector<PrefetchCandidate> candidates);

  void on_event(const Message& msg) override;
  ComponentId id() const { return id_; }

  std::uint64_t block_of(std::uint64_t address) const {
    return address / config_.dcache.block_size * config_.dcache.block_size;
  }
  bool in_prefetch_queue(std::uint64_t block) const { return prefetch_queue_.count(block) != 0; }
  std::size_t prefetch_queue_occupancy() const { return prefetch_queue_.size(); }

  DcacheMeta& dcache() { return dcache_; }
  const DcacheMeta& dcache() const { return dcache_; }
  AdaptController& adapt() { return adapt_; }
  const AdaptController& adapt() const { return adapt_; }
  const SignaturePathPrefetcher& prefetcher() const { return spp_; }
  const RootComplexConfig& config() const { return config_; }

  /// Each issued DRAM-cache prefetch as (time, block), for audits.
  void enable_prefetch_log(bool on) { log_prefetches_ = on; }
  const std::vector<std::pair<SimTime, std::uint64_t>>& prefetch_log() const { return prefetch_log_; }

  /// Serve path of every completed FAM-page demand read, in completion order.
  void enable_path_log(bool on) { log_paths_ = on; }
  const std::vector<std::pair<RequestId, ServePath>>& path_log() const { return path_log_; }

 private:
  struct InFlightPrefetch {
    RequestId id;
    SimTime issued;
    std::vector<RequestId> waiters;
  };

  void send_to_fam(RequestId id);
  void on_fam_response(RequestId id);
  void on_prefetch_response(RequestId id);
  void complete_read(RequestId id, ServePath path);
  void mark_used(std::uint64_t block);
  void sample();

  Engine& engine_;
  std::uint32_t node_;
  RootComplexConfig config_;
  RequestPool& pool_;
  StatSet& stats_;
  Link& link_;
  ComponentId id_;
  ComponentId fam_ = 0;
  bool connected_ = false;

  DcacheMeta dcache_;
  SignaturePathPrefetcher spp_;
  MemBackend local_;
  AdaptController adapt_;

  std::map<std::uint64_t, InFlightPrefetch> prefetch_queue_;
  std::unordered_map<std::uint64_t, SimTime> fill_ready_;
  std::unordered_set<std::uint64_t> unused_prefetched_;

  std::function<void()> on_demand_done_;
  std::function<bool()> active_;

  bool log_prefetches_ = false;
  std::vector<std::pair<SimTime, std::uint64_t>> prefetch_log_;
  bool log_paths_ = false;
  std::vector<std::pair<RequestId, ServePath>> path_log_;
};

}  // namespace famsim
