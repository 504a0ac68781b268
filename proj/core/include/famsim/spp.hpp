#pragma once

#include <array>
#include <cstdint>
#include <deque>
#include <list>
#include <optional>
#include <unordered_map>
#include <vector>

namespace famsim {

inline constexpr std::uint16_t kSignatureMask = 0xfff;
inline constexpr std::size_t kDeltaSlots = 4;

/// 7-bit sign-magnitude delta code: bit 6 is the sign, bits 0..5 the magnitude.
std::uint16_t encode_delta(int delta);

/// ((sig << 4) ^ encode(delta)) truncated to 12 bits. Throws
/// std::invalid_argument for delta == 0.
std::uint16_t update_signature(std::uint16_t sig, int delta);

struct SppConfig {
  std::uint32_t block_size = 256;
  std::size_t signature_entries = 256;
  std::size_t pattern_entries = 512;
  std::uint32_t counter_max = 255;
  std::uint32_t degree = 4;
  double confidence_floor = 0.25;
  bool bootstrap = true;
  std::size_t history_entries = 8;

  void validate() const;
};

struct SignatureTableEntry {
  std::uint64_t page = 0;
  std::uint32_t last_offset = 0;
  std::uint16_t signature = 0;
};

struct DeltaSlot {
  int delta = 0;
  std::uint32_t weight = 0;
};

struct PatternTableEntry {
  bool valid = false;
  std::uint16_t signature = 0;
  std::uint32_t sig_weight = 0;
  std::array<DeltaSlot, kDeltaSlots> slots{};

  std::uint32_t max_slot_weight() const;
};

struct PrefetchCandidate {
  std::uint64_t block_address = 0;
  double confidence = 0;
  std::uint32_t depth = 0;
};

/// Train-on-miss, predict-on-miss prefetcher interface. Addresses are byte
/// addresses; candidates come back aligned to the engine's block size.
class Prefetcher {
 public:
  virtual ~Prefetcher() = default;
  virtual void train(std::uint64_t miss_address) = 0;
  virtual std::vector<PrefetchCandidate> predict(std::uint64_t current_address) const = 0;
};

/// Signature path prefetcher working on `block_size` granules within 4 KiB
/// pages. The same engine serves the per-core (64 B) and DRAM-cache
/// (sub-page) instances.
class SignaturePathPrefetcher final : public Prefetcher {
 public:
  explicit SignaturePathPrefetcher(SppConfig config);

  void train(std::uint64_t miss_address) override;
  std::vector<PrefetchCandidate> predict(std::uint64_t current_address) const override {
    return predict(current_address, config_.degree, config_.confidence_floor);
  }
  std::vector<PrefetchCandidate> predict(std::uint64_t current_address, std::uint32_t degree,
                                         double confidence_floor) const;

  const SignatureTableEntry* signature_entry(std::uint64_t page) const;
  const PatternTableEntry* pattern_entry(std::uint16_t signature) const;

  std::uint32_t blocks_per_page() const { return blocks_per_page_; }
  const SppConfig& config() const { return config_; }

  /// Hardware budget of the tables in bits (tags, offsets, signatures,
  /// counters and LRU state).
  std::size_t storage_bits() const;

 private:
  struct HistoryEntry {
    std::uint16_t signature;
    std::uint32_t last_offset;
    int delta;
  };

  PatternTableEntry& pattern_slot(std::uint16_t signature);
  void update_pattern(std::uint16_t signature, int delta);
  std::optional<std::uint16_t> bootstrap_signature(std::uint32_t offset) const;
  void record_history(std::uint16_t signature, std::uint32_t offset, int delta);

  SppConfig config_;
  std::uint32_t blocks_per_page_;
  std::list<SignatureTableEntry> signature_lru_;  // front = MRU
  std::unordered_map<std::uint64_t, std::list<SignatureTableEntry>::iterator> signature_index_;
  std::vector<PatternTableEntry> pattern_table_;
  std::deque<HistoryEntry> history_;  // front = most recent
};

}  // namespace famsim
