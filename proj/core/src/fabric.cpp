#include "famsim/fabric.hpp"

#include <algorithm>
#include <stdexcept>

namespace famsim {

void LinkConfig::validate() const {
  if (propagation == 0 || bandwidth == 0 || flit_bytes == 0 || min_packet_bytes == 0)
    throw std::invalid_argument("link latency, bandwidth, flit and packet sizes must be positive");
  if (min_packet_bytes > flit_bytes)
    throw std::invalid_argument("minimum packet must fit in one flit");
}

std::uint32_t wire_bytes(std::uint32_t payload, const LinkConfig& config) {
  const std::uint32_t raw = config.min_packet_bytes + payload;
  if (raw <= config.flit_bytes) return raw;
  return (raw + config.flit_bytes - 1) / config.flit_bytes * config.flit_bytes;
}

std::uint32_t wire_size(const Request& req, Direction direction, const LinkConfig& config) {
  const bool carries_data = direction == Direction::to_fam ? is_write(req.cls) : !is_write(req.cls);
  return wire_bytes(carries_data ? req.size : 0, config);
}

SimTime LinkChannel::transmit(std::uint32_t bytes, SimTime at) {
  FAMSIM_CHECK(bytes >= config_->min_packet_bytes, "packet below minimum size");
  const SimTime start = std::max(at, free_time_);
  free_time_ = start + serialization_time(bytes, config_->bandwidth);
  bytes_sent_ += bytes;
  ++packets_sent_;
  const SimTime delivery = free_time_ + config_->propagation;
  if (logging_) log_.push_back(Transmission{start, free_time_, delivery, bytes});
  return delivery;
}

}  // namespace famsim
