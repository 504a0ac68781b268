#include "famsim/engine.hpp"

namespace famsim {

ComponentId Engine::attach(EventSink& sink) {
  sinks_.push_back(&sink);
  return static_cast<ComponentId>(sinks_.size() - 1);
}

EventId Engine::schedule(SimTime at, ComponentId target, Message payload) {
  if (at < now_) {
    throw std::invalid_argument("event scheduled at " + std::to_string(at) +
                                " ps, before current time " + std::to_string(now_) + " ps");
  }
  if (target >= sinks_.size()) throw std::invalid_argument("unknown component id");
  const EventId id = next_sequence_++;
  queue_.push(Event{at, id, target, payload});
  live_.insert(id);
  return id;
}

bool Engine::cancel(EventId id) {
  if (live_.erase(id) == 0) return false;
  cancelled_.insert(id);
  return true;
}

void Engine::mix(std::uint64_t v) {
  for (int i = 0; i < 8; ++i) {
    digest_ ^= (v >> (8 * i)) & 0xff;
    digest_ *= 0x100000001b3ULL;
  }
}

bool Engine::dispatch_next(SimTime limit) {
  while (!queue_.empty()) {
    const Event ev = queue_.top();
    if (ev.fire_time > limit) return false;
    queue_.pop();
    if (cancelled_.erase(ev.sequence) != 0) continue;
    live_.erase(ev.sequence);
    FAMSIM_CHECK(ev.fire_time >= now_, "event queue produced a time in the past");
    now_ = ev.fire_time;
    ++dispatched_;
    mix(ev.fire_time);
    mix(ev.sequence);
    mix(ev.target);
    mix(ev.payload.kind);
    mix(ev.payload.arg0);
    mix(ev.payload.arg1);
    sinks_[ev.target]->on_event(ev.payload);
    return true;
  }
  return false;
}

std::uint64_t Engine::run_until(SimTime limit) {
  stop_requested_ = false;
  std::uint64_t count = 0;
  while (!stop_requested_ && dispatch_next(limit)) ++count;
  if (!stop_requested_ && limit > now_) now_ = limit;
  return count;
}

std::uint64_t Engine::run() {
  stop_requested_ = false;
  std::uint64_t count = 0;
  while (!stop_requested_ && dispatch_next(~SimTime{0})) ++count;
  return count;
}

}  // namespace famsim
