#pragma once

#include <cstdint>
#include <queue>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <vector>

namespace famsim {

__extension__ typedef unsigned __int128 Wide;

/// Simulated time in picoseconds since the start of the run.
using SimTime = std::uint64_t;

inline constexpr SimTime kPicosecond = 1;
inline constexpr SimTime kNanosecond = 1000;
inline constexpr SimTime kMicrosecond = 1000 * kNanosecond;

/// Time to move `bytes` across a pipe of `bytes_per_second`, rounded up to
/// the next whole picosecond.
constexpr SimTime serialization_time(std::uint64_t bytes, std::uint64_t bytes_per_second) {
  const std::uint64_t num = bytes * 1'000'000'000'000ULL;
  return (num + bytes_per_second - 1) / bytes_per_second;
}

/// Raised when the simulation reaches a state its own bookkeeping forbids.
class InvariantViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

#define FAMSIM_CHECK(cond, msg)                                      \
  do {                                                               \
    if (!(cond)) throw ::famsim::InvariantViolation(std::string(msg)); \
  } while (0)

using ComponentId = std::uint32_t;
using EventId = std::uint64_t;

/// Small fixed payload routed to a component. `kind` is component-defined.
struct Message {
  std::uint32_t kind = 0;
  std::uint64_t arg0 = 0;
  std::uint64_t arg1 = 0;
};

struct Event {
  SimTime fire_time = 0;
  EventId sequence = 0;
  ComponentId target = 0;
  Message payload;
};

class EventSink {
 public:
  virtual ~EventSink() = default;
  virtual void on_event(const Message& msg) = 0;
};

/// Single-queue discrete-event scheduler. Events fire in (time, sequence)
/// order, so equal-time events dispatch in insertion order.
class Engine {
 public:
  Engine() = default;
  Engine(const Engine&) = delete;
  Engine& operator=(const Engine&) = delete;

  ComponentId attach(EventSink& sink);

  /// Throws std::invalid_argument if `at` is earlier than now().
  EventId schedule(SimTime at, ComponentId target, Message payload);
  EventId schedule_after(SimTime delay, ComponentId target, Message payload) {
    return schedule(now_ + delay, target, payload);
  }

  /// Returns false if the event already fired, was cancelled, or never existed.
  bool cancel(EventId id);

  /// Dispatches every event with fire_time <= limit, then advances the clock
  /// to `limit`. Returns the number of events dispatched.
  std::uint64_t run_until(SimTime limit);

  /// Dispatches until the queue is empty. The clock stays at the last event.
  std::uint64_t run();

  /// Stops run()/run_until() after the event currently being dispatched.
  void stop() { stop_requested_ = true; }

  SimTime now() const { return now_; }
  std::size_t pending() const { return queue_.size() - cancelled_.size(); }
  std::uint64_t dispatched() const { return dispatched_; }

  /// FNV-1a digest over every dispatched (time, sequence, target, payload).
  std::uint64_t log_digest() const { return digest_; }

 private:
  struct Later {
    bool operator()(const Event& a, const Event& b) const {
      if (a.fire_time != b.fire_time) return a.fire_time > b.fire_time;
      return a.sequence > b.sequence;
    }
  };

  bool dispatch_next(SimTime limit);
  void mix(std::uint64_t v);

  std::priority_queue<Event, std::vector<Event>, Later> queue_;
  std::unordered_set<EventId> cancelled_;
  std::unordered_set<EventId> live_;
  std::vector<EventSink*> sinks_;
  SimTime now_ = 0;
  EventId next_sequence_ = 0;
  std::uint64_t dispatched_ = 0;
  std::uint64_t digest_ = 0xcbf29ce484222325ULL;
  bool stop_requested_ = false;
};

}  // namespace famsim
