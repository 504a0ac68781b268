#include "famsim/adapt.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace famsim {

void AdaptConfig::validate() const {
  if (sampling_period == 0) throw std::invalid_argument("sampling period must be positive");
  if (!(ema_alpha > 0 && ema_alpha <= 1)) throw std::invalid_argument("ema_alpha must be in (0, 1]");
  if (min_window == 0) throw std::invalid_argument("min_window must be >= 1");
  if (!(decrease_gain >= 0)) throw std::invalid_argument("k must be >= 0");
  if (!(latency_threshold >= 1)) throw std::invalid_argument("latency threshold must be >= 1");
  if (!(increase_factor >= 1)) throw std::invalid_argument("increase factor must be >= 1");
  if (!(rate_min > 0)) throw std::invalid_argument("rate_min must be positive");
  if (rate_max != 0 && rate_max < rate_min) throw std::invalid_argument("rate_max must be >= rate_min");
  if (accuracy_window == 0) throw std::invalid_argument("accuracy window must be >= 1");
}

double decrease_factor(double latency, double min_latency, double accuracy, double gain, double threshold) {
  const double floor = threshold * min_latency;
  const double excess = std::clamp((latency - floor) / floor, 0.0, 1.0);
  const double acc = std::clamp(accuracy, 0.0, 1.0);
  return std::clamp(1.0 - gain * excess * (1.0 - acc), 0.5, 1.0);
}

void EventCounter::fold(double alpha) {
  const auto x = static_cast<double>(instant);
  average = seeded ? alpha * x + (1.0 - alpha) * average : x;
  seeded = true;
  instant = 0;
}

void AccuracyTracker::on_fill(std::uint64_t block) {
  const std::uint64_t seq = first_seq_ + fills_.size();
  fills_.push_back(Fill{block, false});
  latest_[block] = seq;
  if (fills_.size() > window_) {
    const Fill& old = fills_.front();
    if (old.used) --used_;
    auto it = latest_.find(old.block);
    if (it != latest_.end() && it->second == first_seq_) latest_.erase(it);
    fills_.pop_front();
    ++first_seq_;
  }
}

void AccuracyTracker::on_use(std::uint64_t block) {
  auto it = latest_.find(block);
  if (it == latest_.end()) return;
  Fill& f = fills_[it->second - first_seq_];
  if (!f.used) {
    f.used = true;
    ++used_;
  }
}

std::optional<double> AccuracyTracker::accuracy() const {
  if (fills_.empty()) return std::nullopt;
  return static_cast<double>(used_) / static_cast<double>(fills_.size());
}

AdaptController::AdaptController(AdaptConfig config, std::uint32_t queue_capacity)
    : config_(config), accuracy_(config.accuracy_window) {
  config_.validate();
  rate_max_ = config_.rate_max != 0 ? config_.rate_max : 4.0 * queue_capacity;
  rate_max_ = std::max(rate_max_, config_.rate_min);
  // Slow start: the latency floor is learned before prefetch traffic ramps up.
  rate_ = config_.rate_min;
  tokens_ = static_cast<std::uint64_t>(std::llround(rate_));
}

bool AdaptController::try_consume_token() {
  if (tokens_ == 0) return false;
  --tokens_;
  return true;
}

std::optional<double> AdaptController::min_latency() const {
  if (latency_history_.empty()) return std::nullopt;
  return *std::min_element(latency_history_.begin(), latency_history_.end());
}

double AdaptController::adjust(double latency, double min_latency, double accuracy) {
  if (latency > config_.latency_threshold * min_latency) {
    rate_ *= decrease_factor(latency, min_latency, accuracy, config_.decrease_gain, config_.latency_threshold);
  } else {
    rate_ *= config_.increase_factor;
  }
  rate_ = std::clamp(rate_, config_.rate_min, rate_max_);
  tokens_ = static_cast<std::uint64_t>(std::llround(rate_));
  return rate_;
}

double AdaptController::sampling_tick() {
  ++samples_;
  const std::uint64_t returned = demand_returned_.instant;
  if (returned > 0) {
    const double sample = latency_sum_ / static_cast<double>(returned);
    latency_ema_ = latency_seeded_ ? config_.ema_alpha * sample + (1.0 - config_.ema_alpha) * latency_ema_ : sample;
    latency_seeded_ = true;
  }
  latency_sum_ = 0;
  demand_issued_.fold(config_.ema_alpha);
  demand_returned_.fold(config_.ema_alpha);
  demand_total_.fold(config_.ema_alpha);
  prefetch_issued_.fold(config_.ema_alpha);

  if (!latency_seeded_) {
    rate_ = std::clamp(rate_ * config_.increase_factor, config_.rate_min, rate_max_);
    tokens_ = static_cast<std::uint64_t>(std::llround(rate_));
    return rate_;
  }
  latency_history_.push_back(latency_ema_);
  if (latency_history_.size() > config_.min_window) latency_history_.pop_front();
  return adjust(latency_ema_, *min_latency(), accuracy());
}

}  // namespace famsim
