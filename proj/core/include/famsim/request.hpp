#pragma once

#include <array>
#include <cstdint>
#include <string_view>
#include <vector>

#include "famsim/engine.hpp"

namespace famsim {

enum class RequestClass : std::uint8_t {
  demand,
  core_prefetch,
  dram_prefetch,
  writeback,
  eviction_writeback,
};

inline constexpr std::size_t kRequestClassCount = 5;
inline constexpr std::uint32_t kLineBytes = 64;
inline constexpr std::uint64_t kPageBytes = 4096;
inline constexpr std::uint64_t kAddressLimit = 1ULL << 48;

inline constexpr std::array<RequestClass, kRequestClassCount> kAllRequestClasses = {
    RequestClass::demand, RequestClass::core_prefetch, RequestClass::dram_prefetch,
    RequestClass::writeback, RequestClass::eviction_writeback};

constexpr std::string_view to_string(RequestClass c) {
  switch (c) {
    case RequestClass::demand: return "demand";
    case RequestClass::core_prefetch: return "core_prefetch";
    case RequestClass::dram_prefetch: return "dram_prefetch";
    case RequestClass::writeback: return "writeback";
    case RequestClass::eviction_writeback: return "eviction_writeback";
  }
  return "unknown";
}

constexpr std::size_t index_of(RequestClass c) { return static_cast<std::size_t>(c); }

/// Reads carry no payload toward FAM and return data; writes carry data and
/// never get a response.
constexpr bool is_write(RequestClass c) {
  return c == RequestClass::writeback || c == RequestClass::eviction_writeback;
}

constexpr bool is_prefetch(RequestClass c) {
  return c == RequestClass::core_prefetch || c == RequestClass::dram_prefetch;
}

using RequestId = std::uint64_t;

struct Request {
  RequestId id = 0;
  std::uint32_t node = 0;
  RequestClass cls = RequestClass::demand;
  std::uint64_t address = 0;
  std::uint32_t size = kLineBytes;
  SimTime created = 0;
  SimTime issued = 0;
  SimTime completed = 0;
};

}  // namespace famsim

namespace famsim {

/// Slot pool for live requests. Ids are slot indices and are recycled once
/// released.
class RequestPool {
 public:
  RequestId acquire(const Request& proto) {
    RequestId id;
    if (free_.empty()) {
      id = slots_.size();
      slots_.push_back(proto);
      live_flags_.push_back(true);
    } else {
      id = free_.back();
      free_.pop_back();
      slots_[id] = proto;
      live_flags_[id] = true;
    }
    slots_[id].id = id;
    ++live_;
    return id;
  }

  Request& get(RequestId id) {
    FAMSIM_CHECK(id < slots_.size() && live_flags_[id], "access to a released request");
    return slots_[id];
  }
  const Request& get(RequestId id) const {
    FAMSIM_CHECK(id < slots_.size() && live_flags_[id], "access to a released request");
    return slots_[id];
  }

  void release(RequestId id) {
    FAMSIM_CHECK(id < slots_.size() && live_flags_[id], "double release of a request");
    live_flags_[id] = false;
    free_.push_back(id);
    --live_;
  }

  std::size_t live() const { return live_; }

 private:
  std::vector<Request> slots_;
  std::vector<bool> live_flags_;
  std::vector<RequestId> free_;
  std::size_t live_ = 0;
};

}  // namespace famsim
