#pragma once

#include <cstdint>
#include <vector>

#include "famsim/engine.hpp"
#include "famsim/request.hpp"

namespace famsim {

struct LinkConfig {
  SimTime propagation = 70 * kNanosecond;
  std::uint64_t bandwidth = 128'000'000'000ULL;  // bytes/s per direction
  std::uint32_t flit_bytes = 256;
  std::uint32_t min_packet_bytes = 28;

  void validate() const;
};

enum class Direction : std::uint8_t { to_fam, to_host };

/// Bytes on the wire for a message carrying `payload` data bytes: header-only
/// messages are one minimum packet; larger messages round up to whole flits
/// once they no longer fit in one.
std::uint32_t wire_bytes(std::uint32_t payload, const LinkConfig& config);

/// Requests toward FAM carry data only for writes; responses toward the host
/// carry data only for reads.
std::uint32_t wire_size(const Request& req, Direction direction, const LinkConfig& config);

struct Transmission {
  SimTime start = 0;  // first bit on the wire
  SimTime end = 0;    // last bit on the wire
  SimTime delivery = 0;
  std::uint32_t bytes = 0;
};

/// One direction of a link: store-and-forward FIFO serialization followed by
/// a fixed propagation delay.
class LinkChannel {
 public:
  explicit LinkChannel(const LinkConfig& config) : config_(&config) {}

  /// Returns the delivery time of a packet handed to the link at `at`.
  SimTime transmit(std::uint32_t bytes, SimTime at);

  const LinkConfig& config() const { return *config_; }
  SimTime free_time() const { return free_time_; }
  std::uint64_t bytes_sent() const { return bytes_sent_; }
  std::uint64_t packets_sent() const { return packets_sent_; }

  void enable_log(bool on) { logging_ = on; }
  const std::vector<Transmission>& log() const { return log_; }

 private:
  const LinkConfig* config_;
  SimTime free_time_ = 0;
  std::uint64_t bytes_sent_ = 0;
  std::uint64_t packets_sent_ = 0;
  bool logging_ = false;
  std::vector<Transmission> log_;
};

/// Private full-duplex link between one compute node and the FAM node.
struct Link {
  explicit Link(const LinkConfig& config) : to_fam(config), to_host(config) {}
  LinkChannel to_fam;
  LinkChannel to_host;
};

}  // namespace famsim
