#include "famsim/spp.hpp"

#include <algorithm>
#include <bit>
#include <stdexcept>
#include <string>

#include "famsim/request.hpp"

namespace famsim {

std::uint16_t encode_delta(int delta) {
  const unsigned magnitude = static_cast<unsigned>(delta < 0 ? -delta : delta) & 0x3f;
  return static_cast<std::uint16_t>((delta < 0 ? 0x40u : 0u) | magnitude);
}

std::uint16_t update_signature(std::uint16_t sig, int delta) {
  if (delta == 0) throw std::invalid_argument("signature update with zero delta");
  return static_cast<std::uint16_t>(((sig << 4) ^ encode_delta(delta)) & kSignatureMask);
}

void SppConfig::validate() const {
  if (block_size < kLineBytes || block_size > kPageBytes || !std::has_single_bit(block_size))
    throw std::invalid_argument("spp block size must be a power of two in [64, 4096], got " +
                                std::to_string(block_size));
  if (signature_entries == 0 || pattern_entries == 0)
    throw std::invalid_argument("spp tables must be non-empty");
  if (counter_max < 2) throw std::invalid_argument("spp counter_max must be >= 2");
  if (!(confidence_floor >= 0 && confidence_floor <= 1))
    throw std::invalid_argument("spp confidence floor must be in [0, 1]");
}

std::uint32_t PatternTableEntry::max_slot_weight() const {
  std::uint32_t m = 0;
  for (const auto& s : slots) m = std::max(m, s.weight);
  return m;
}

SignaturePathPrefetcher::SignaturePathPrefetcher(SppConfig config)
    : config_((config.validate(), config)),
      blocks_per_page_(static_cast<std::uint32_t>(kPageBytes / config.block_size)),
      pattern_table_(config.pattern_entries) {}

const SignatureTableEntry* SignaturePathPrefetcher::signature_entry(std::uint64_t page) const {
  const auto it = signature_index_.find(page);
  return it == signature_index_.end() ? nullptr : &*it->second;
}

const PatternTableEntry* SignaturePathPrefetcher::pattern_entry(std::uint16_t signature) const {
  const auto& e = pattern_table_[signature % pattern_table_.size()];
  return (e.valid && e.signature == signature) ? &e : nullptr;
}

PatternTableEntry& SignaturePathPrefetcher::pattern_slot(std::uint16_t signature) {
  auto& e = pattern_table_[signature % pattern_table_.size()];
  if (!e.valid || e.signature != signature) {
    e = PatternTableEntry{};
    e.valid = true;
    e.signature = signature;
  }
  return e;
}

void SignaturePathPrefetcher::update_pattern(std::uint16_t signature, int delta) {
  auto& e = pattern_slot(signature);
  if (e.sig_weight >= config_.counter_max) {
    e.sig_weight /= 2;
    for (auto& s : e.slots) s.weight /= 2;
  }
  ++e.sig_weight;

  DeltaSlot* match = nullptr;
  DeltaSlot* victim = &e.slots[0];
  for (auto& s : e.slots) {
    if (s.weight > 0 && s.delta == delta) {
      match = &s;
      break;
    }
    if (s.weight < victim->weight) victim = &s;
  }
  if (match) {
    ++match->weight;
  } else {
    *victim = DeltaSlot{delta, 1};
  }
}

std::optional<std::uint16_t> SignaturePathPrefetcher::bootstrap_signature(std::uint32_t offset) const {
  const auto bpp = static_cast<long>(blocks_per_page_);
  for (const auto& h : history_) {
    const long projected = static_cast<long>(h.last_offset) + h.delta;
    if (projected - bpp == static_cast<long>(offset) || projected + bpp == static_cast<long>(offset))
      return update_signature(h.signature, h.delta);
  }
  return std::nullopt;
}

void SignaturePathPrefetcher::record_history(std::uint16_t signature, std::uint32_t offset, int delta) {
  const long projected = static_cast<long>(offset) + delta;
  if (projected >= 0 && projected < static_cast<long>(blocks_per_page_)) return;
  history_.push_front(HistoryEntry{signature, offset, delta});
  if (history_.size() > config_.history_entries) history_.pop_back();
}

void SignaturePathPrefetcher::train(std::uint64_t miss_address) {
  const std::uint64_t page = miss_address / kPageBytes;
  const auto offset = static_cast<std::uint32_t>((miss_address % kPageBytes) / config_.block_size);

  auto it = signature_index_.find(page);
  if (it == signature_index_.end()) {
    SignatureTableEntry fresh{page, offset, 0};
    if (config_.bootstrap) {
      if (auto sig = bootstrap_signature(offset)) fresh.signature = *sig;
    }
    if (signature_lru_.size() >= config_.signature_entries) {
      signature_index_.erase(signature_lru_.back().page);
      signature_lru_.pop_back();
    }
    signature_lru_.push_front(fresh);
    signature_index_[page] = signature_lru_.begin();
    return;
  }

  signature_lru_.splice(signature_lru_.begin(), signature_lru_, it->second);
  auto& entry = *it->second;
  const int delta = static_cast<int>(offset) - static_cast<int>(entry.last_offset);
  if (delta == 0) return;

  update_pattern(entry.signature, delta);
  entry.signature = update_signature(entry.signature, delta);
  entry.last_offset = offset;
  if (config_.bootstrap) record_history(entry.signature, offset, delta);
}

std::vector<PrefetchCandidate> SignaturePathPrefetcher::predict(std::uint64_t current_address,
                                                                std::uint32_t degree,
                                                                double confidence_floor) const {
  std::vector<PrefetchCandidate> out;
  const std::uint64_t page = current_address / kPageBytes;
  const SignatureTableEntry* st = signature_entry(page);
  if (st == nullptr) return out;

  const auto origin = static_cast<long>((current_address % kPageBytes) / config_.block_size);
  long cursor = origin;
  std::uint16_t sig = st->signature;
  double confidence = 1.0;

  for (std::uint32_t depth = 1; depth <= degree; ++depth) {
    const PatternTableEntry* pt = pattern_entry(sig);
    if (pt == nullptr || pt->sig_weight == 0) break;
    const DeltaSlot* best = nullptr;
    for (const auto& s : pt->slots)
      if (s.weight > 0 && (best == nullptr || s.weight > best->weight)) best = &s;
    if (best == nullptr) break;

    confidence *= static_cast<double>(best->weight) / static_cast<double>(pt->sig_weight);
    if (confidence < confidence_floor) break;
    cursor += best->delta;
    if (cursor < 0 || cursor >= static_cast<long>(blocks_per_page_)) break;

    const std::uint64_t block = page * kPageBytes + static_cast<std::uint64_t>(cursor) * config_.block_size;
    const bool seen = cursor == origin || std::any_of(out.begin(), out.end(), [&](const auto& c) {
                        return c.block_address == block;
                      });
    if (!seen) out.push_back(PrefetchCandidate{block, confidence, depth});
    sig = update_signature(sig, best->delta);
  }
  return out;
}

std::size_t SignaturePathPrefetcher::storage_bits() const {
  constexpr std::size_t kPageTagBits = 16;
  const std::size_t offset_bits = std::bit_width(blocks_per_page_ - 1u);
  const std::size_t counter_bits = std::bit_width(config_.counter_max);
  const std::size_t lru_bits = std::bit_width(config_.signature_entries - 1);
  const std::size_t st = config_.signature_entries * (1 + kPageTagBits + offset_bits + 12 + lru_bits);
  const std::size_t pt = config_.pattern_entries * (1 + 12 + counter_bits + kDeltaSlots * (7 + counter_bits));
  const std::size_t ghr = config_.bootstrap ? config_.history_entries * (12 + offset_bits + 7) : 0;
  return st + pt + ghr;
}

}  // namespace famsim
