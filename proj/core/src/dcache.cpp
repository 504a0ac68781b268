#include "famsim/dcache.hpp"

#include <bit>
#include <stdexcept>
#include <string>

#include "famsim/request.hpp"

namespace famsim {

void DcacheGeometry::validate() const {
  if (!std::has_single_bit(capacity) || !std::has_single_bit(block_size) || !std::has_single_bit(ways))
    throw std::invalid_argument("dram cache capacity, block size and ways must be powers of two");
  if (block_size < kLineBytes || block_size > kPageBytes)
    throw std::invalid_argument("dram cache block size must be in [64, 4096], got " +
                                std::to_string(block_size));
  if (ways > 256) throw std::invalid_argument("dram cache associativity above 256 is not supported");
  if (sets() < 1)
    throw std::invalid_argument("dram cache capacity too small for block size x ways");
}

DcacheMeta::DcacheMeta(DcacheGeometry geometry) : geometry_(geometry) {
  geometry_.validate();
  block_bits_ = static_cast<std::uint32_t>(std::countr_zero(geometry_.block_size));
  set_bits_ = static_cast<std::uint32_t>(std::countr_zero(geometry_.sets()));
  slots_.resize(geometry_.entries());
  valid_in_set_.assign(geometry_.sets(), 0);
}

std::uint64_t DcacheMeta::block_number(std::uint64_t block_address) const {
  if (block_address % geometry_.block_size != 0)
    throw std::invalid_argument("unaligned dram cache block address");
  return block_address >> block_bits_;
}

std::uint64_t DcacheMeta::fold(std::uint64_t value) const {
  if (set_bits_ == 0) return 0;
  const std::uint64_t mask = (1ULL << set_bits_) - 1;
  std::uint64_t out = 0;
  while (value != 0) {
    out ^= value & mask;
    value >>= set_bits_;
  }
  return out;
}

// The tag keeps every block-number bit above the set field, so
// (set, tag) identifies the block exactly: low = set ^ fold(tag).
std::uint64_t DcacheMeta::set_index(std::uint64_t block_address) const {
  return fold(block_number(block_address));
}

std::uint64_t DcacheMeta::tag_of(std::uint64_t block_address) const {
  return set_bits_ == 0 ? block_number(block_address) : block_number(block_address) >> set_bits_;
}

std::uint64_t DcacheMeta::address_of(std::uint64_t set, std::uint64_t tag) const {
  if (set_bits_ == 0) return tag << block_bits_;
  const std::uint64_t low = set ^ fold(tag);
  return ((tag << set_bits_) | low) << block_bits_;
}

std::optional<std::uint32_t> DcacheMeta::find(std::uint64_t set, std::uint64_t tag) const {
  const MetaSlot* base = &slots_[set * geometry_.ways];
  for (std::uint32_t w = 0; w < geometry_.ways; ++w)
    if (base[w].valid && base[w].tag == tag) return w;
  return std::nullopt;
}

void DcacheMeta::promote(std::uint64_t set, std::uint32_t way) {
  MetaSlot* base = &slots_[set * geometry_.ways];
  const std::uint8_t old = base[way].lru_rank;
  for (std::uint32_t w = 0; w < geometry_.ways; ++w)
    if (w != way && base[w].valid && base[w].lru_rank < old) ++base[w].lru_rank;
  base[way].lru_rank = 0;
}

std::optional<std::uint64_t> DcacheMeta::lookup(std::uint64_t block_address) {
  const std::uint64_t set = set_index(block_address);
  const auto way = find(set, tag_of(block_address));
  if (!way) return std::nullopt;
  promote(set, *way);
  return slot_address(set, *way);
}

bool DcacheMeta::contains(std::uint64_t block_address) const {
  return find(set_index(block_address), tag_of(block_address)).has_value();
}

AllocateResult DcacheMeta::allocate(std::uint64_t block_address, bool dirty) {
  const std::uint64_t set = set_index(block_address);
  const std::uint64_t tag = tag_of(block_address);
  if (find(set, tag)) throw std::logic_error("allocate of a block that is already resident");

  MetaSlot* base = &slots_[set * geometry_.ways];
  AllocateResult result;
  std::uint32_t way = geometry_.ways;
  if (valid_in_set_[set] < geometry_.ways) {
    for (std::uint32_t w = 0; w < geometry_.ways; ++w) {
      if (!base[w].valid) {
        way = w;
        break;
      }
    }
    base[way] = MetaSlot{true, dirty, tag, static_cast<std::uint8_t>(valid_in_set_[set])};
    ++valid_in_set_[set];
    ++resident_;
  } else {
    for (std::uint32_t w = 0; w < geometry_.ways; ++w) {
      if (base[w].lru_rank == geometry_.ways - 1) {
        way = w;
        break;
      }
    }
    result.evicted = EvictedBlock{address_of(set, base[way].tag), base[way].dirty};
    base[way].dirty = dirty;
    base[way].tag = tag;
  }
  promote(set, way);
  result.slot_address = slot_address(set, way);
  return result;
}

bool DcacheMeta::write_hit(std::uint64_t block_address) {
  const std::uint64_t set = set_index(block_address);
  const auto way = find(set, tag_of(block_address));
  if (!way) return false;
  slots_[set * geometry_.ways + *way].dirty = true;
  promote(set, *way);
  return true;
}

std::uint32_t DcacheMeta::entry_payload_bits() const {
  constexpr std::uint32_t kAddressBits = 48;
  const std::uint32_t tag_bits = kAddressBits - block_bits_ - set_bits_;
  const std::uint32_t lru_bits = static_cast<std::uint32_t>(std::bit_width(geometry_.ways - 1u));
  return 1 + 1 + tag_bits + lru_bits;
}

}  // namespace famsim
