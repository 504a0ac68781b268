#pragma once

#include <cstdint>
#include <optional>
#include <vector>

namespace famsim {

struct DcacheGeometry {
  std::uint64_t capacity = 16ULL << 20;
  std::uint32_t block_size = 256;
  std::uint32_t ways = 16;

  std::uint64_t sets() const { return capacity / (static_cast<std::uint64_t>(block_size) * ways); }
  std::uint64_t entries() const { return sets() * ways; }
  /// Throws std::invalid_argument unless every field is a power of two and
  /// the geometry yields at least one set.
  void validate() const;
};

/// Per-slot metadata. `lru_rank` 0 is most recently used.
struct MetaSlot {
  bool valid = false;
  bool dirty = false;
  std::uint64_t tag = 0;
  std::uint8_t lru_rank = 0;
};

struct EvictedBlock {
  std::uint64_t block_address = 0;
  bool was_dirty = false;
};

struct AllocateResult {
  std::uint64_t slot_address = 0;
  std::optional<EvictedBlock> evicted;
};

/// Set-associative LRU metadata for the DRAM cache. Maps FAM block addresses
/// to slot addresses inside the node's DRAM-cache region; holds no data.
class DcacheMeta {
 public:
  explicit DcacheMeta(DcacheGeometry geometry);

  /// Hit returns the slot address and promotes the block to MRU.
  std::optional<std::uint64_t> lookup(std::uint64_t block_address);
  /// Residency check without touching LRU state.
  bool contains(std::uint64_t block_address) const;
  /// Precondition: block not resident (throws std::logic_error otherwise).
  AllocateResult allocate(std::uint64_t block_address, bool dirty);
  /// Marks a resident block dirty and promotes it; false if absent.
  bool write_hit(std::uint64_t block_address);

  std::uint64_t set_index(std::uint64_t block_address) const;
  std::uint64_t tag_of(std::uint64_t block_address) const;

  const DcacheGeometry& geometry() const { return geometry_; }
  std::uint64_t resident() const { return resident_; }
  const MetaSlot& slot(std::uint64_t set, std::uint32_t way) const {
    return slots_[set * geometry_.ways + way];
  }

  /// Semantic bits per metadata entry for a 48-bit FAM address space:
  /// valid + dirty + tag + LRU rank.
  std::uint32_t entry_payload_bits() const;
  std::uint64_t metadata_bytes() const {
    return geometry_.entries() * ((entry_payload_bits() + 7) / 8);
  }

 private:
  std::uint64_t fold(std::uint64_t value) const;
  std::uint64_t block_number(std::uint64_t block_address) const;
  std::uint64_t address_of(std::uint64_t set, std::uint64_t tag) const;
  std::uint64_t slot_address(std::uint64_t set, std::uint32_t way) const {
    return (set * geometry_.ways + way) * geometry_.block_size;
  }
  void promote(std::uint64_t set, std::uint32_t way);
  std::optional<std::uint32_t> find(std::uint64_t set, std::uint64_t tag) const;

  DcacheGeometry geometry_;
  std::uint32_t block_bits_;
  std::uint32_t set_bits_;
  std::vector<MetaSlot> slots_;
  std::vector<std::uint32_t> valid_in_set_;
  std::uint64_t resident_ = 0;
};

}  // namespace famsim
