#pragma once

#include <cstdint>
#include <deque>
#include <optional>
#include <unordered_map>

#include "famsim/engine.hpp"

namespace famsim {

struct AdaptConfig {
  bool enabled = false;
  SimTime sampling_period = 10 * kMicrosecond;
  double ema_alpha = 0.25;
  std::uint32_t min_window = 64;    // sampling cycles remembered for the latency floor
  double decrease_gain = 0.5;       // k
  double latency_threshold = 1.25;  // congestion when L > threshold * L_min
  double increase_factor = 1.125;
  double rate_min = 1.0;
  double rate_max = 0.0;  // 0 = 4 x prefetch queue capacity
  std::size_t accuracy_window = 1024;

  void validate() const;
};

/// Multiplicative decrease applied when L exceeds threshold * L_min:
/// clamp(1 - k * excess * (1 - accuracy), 0.5, 1) with
/// excess = min(1, (L - threshold * L_min) / (threshold * L_min)).
double decrease_factor(double latency, double min_latency, double accuracy, double gain,
                       double threshold = 1.25);

/// Instantaneous count reset every sampling cycle plus its moving average.
struct EventCounter {
  std::uint64_t instant = 0;
  double average = 0;
  bool seeded = false;

  void add(std::uint64_t n = 1) { instant += n; }
  void fold(double alpha);
};

/// Fraction of the most recent fills whose block was later used by a demand
/// or core prefetch.
class AccuracyTracker {
 public:
  explicit AccuracyTracker(std::size_t window) : window_(window) {}

  void on_fill(std::uint64_t block);
  void on_use(std::uint64_t block);
  /// nullopt before the first fill.
  std::optional<double> accuracy() const;

 private:
  struct Fill {
    std::uint64_t block;
    bool used;
  };
  std::size_t window_;
  std::deque<Fill> fills_;
  std::uint64_t first_seq_ = 0;
  std::unordered_map<std::uint64_t, std::uint64_t> latest_;  // block -> seq
  std::size_t used_ = 0;
};

/// Source-side prefetch rate control: event counters, a windowed latency
/// floor and MIMD adjustment of a per-cycle token budget.
class AdaptController {
 public:
  AdaptController(AdaptConfig config, std::uint32_t queue_capacity);

  void on_demand_arrival() { demand_total_.add(); }
  void on_demand_issued() { demand_issued_.add(); }
  void on_demand_returned(SimTime latency) {
    demand_returned_.add();
    latency_sum_ += static_cast<double>(latency);
  }
  void on_prefetch_issued() { prefetch_issued_.add(); }
  void on_fill(std::uint64_t block) { accuracy_.on_fill(block); }
  void on_use(std::uint64_t block) { accuracy_.on_use(block); }

  bool try_consume_token();

  /// Folds the cycle's counters and adjusts the rate. Returns the new rate.
  double sampling_tick();

  /// The rate decision alone, for a given latency, floor and accuracy.
  double adjust(double latency, double min_latency, double accuracy);

  double rate() const { return rate_; }
  double rate_min() const { return config_.rate_min; }
  double rate_max() const { return rate_max_; }
  std::uint64_t tokens() const { return tokens_; }
  std::optional<double> latency_ema() const { return latency_seeded_ ? std::optional(latency_ema_) : std::nullopt; }
  std::optional<double> min_latency() const;
  double accuracy() const { return accuracy_.accuracy().value_or(0.0); }
  std::uint64_t samples() const { return samples_; }

  const EventCounter& demand_requests_issued() const { return demand_issued_; }
  const EventCounter& demand_requests_returned() const { return demand_returned_; }
  const EventCounter& demand_requests_total() const { return demand_total_; }
  const EventCounter& prefetch_requests_issued() const { return prefetch_issued_; }
  const AdaptConfig& config() const { return config_; }

 private:
  AdaptConfig config_;
  double rate_max_;
  double rate_;
  std::uint64_t tokens_;

  EventCounter demand_issued_;
  EventCounter demand_returned_;
  EventCounter demand_total_;
  EventCounter prefetch_issued_;
  double latency_sum_ = 0;
  double latency_ema_ = 0;
  bool latency_seeded_ = false;
  std::deque<double> latency_history_;
  AccuracyTracker accuracy_;
  std::uint64_t samples_ = 0;
};

}  // namespace famsim
