#include <gtest/gtest.h>

#include <map>
#include <set>

#include "famsim/request.hpp"
#include "famsim/spp.hpp"
#include "oracles.hpp"

using namespace famsim;

namespace {

SppConfig cfg(std::uint32_t block, bool bootstrap = false) {
  SppConfig c;
  c.block_size = block;
  c.bootstrap = bootstrap;
  return c;
}

// Straight-line model of the table updates (no bootstrap, at most
// `signature_entries` pages touched so no LRU eviction occurs).
struct ReferenceSpp {
  struct Pt {
    std::uint16_t sig;
    std::uint32_t sig_weight = 0;
    std::vector<std::pair<int, std::uint32_t>> slots = std::vector<std::pair<int, std::uint32_t>>(4, {0, 0});
  };
  std::uint32_t block;
  std::uint32_t cap;
  std::map<std::uint64_t, std::pair<std::uint32_t, std::uint16_t>> st;  // page -> (offset, sig)
  std::map<std::uint32_t, Pt> pt;                                        // index -> entry

  void train(std::uint64_t addr) {
    const std::uint64_t page = addr / 4096;
    const std::uint32_t off = static_cast<std::uint32_t>(addr % 4096 / block);
    auto it = st.find(page);
    if (it == st.end()) {
      st[page] = {off, 0};
      return;
    }
    const int delta = static_cast<int>(off) - static_cast<int>(it->second.first);
    if (delta == 0) return;
    const std::uint16_t sig = it->second.second;
    auto& e = pt[sig % 512];
    if (e.sig_weight == 0 || e.sig != sig) e = Pt{sig};
    if (e.sig_weight == cap) {
      e.sig_weight /= 2;
      for (auto& s : e.slots) s.second /= 2;
    }
    e.sig_weight += 1;
    int match = -1;
    for (int i = 0; i < 4; ++i)
      if (e.slots[i].second > 0 && e.slots[i].first == delta) {
        match = i;
        break;
      }
    if (match >= 0) {
      e.slots[match].second += 1;
    } else {
      int victim = 0;
      for (int i = 1; i < 4; ++i)
        if (e.slots[i].second < e.slots[victim].second) victim = i;
      e.slots[victim] = {delta, 1};
    }
    it->second = {off, oracle::update_signature(sig, delta)};
  }
};

}  // namespace

TEST(SppSignature, WorkedChain) {
  EXPECT_EQ(update_signature(0x000, +2), 0x002);
  EXPECT_EQ(update_signature(0x002, +4), 0x024);
  EXPECT_EQ(update_signature(0xfff, +1), 0xff1);
  EXPECT_EQ(encode_delta(-3), 0x43);
  EXPECT_THROW(update_signature(0x123, 0), std::invalid_argument);
}

TEST(SppSignature, MatchesBitLevelOracle) {
  oracle::Gen gen(2024);
  for (int i = 0; i < 1000; ++i) {
    const auto sig = static_cast<std::uint16_t>(gen.below(4096));
    int delta = 0;
    while (delta == 0) delta = static_cast<int>(gen.range(-63, 63));
    ASSERT_EQ(update_signature(sig, delta), oracle::update_signature(sig, delta)) << sig << " " << delta;
  }
}

TEST(SppTrain, FirstTouchThenDelta) {
  SignaturePathPrefetcher spp(cfg(64));
  const std::uint64_t base = 0xA000;
  spp.train(base + 3 * 64);
  const auto* st = spp.signature_entry(base / kPageBytes);
  ASSERT_NE(st, nullptr);
  EXPECT_EQ(st->signature, 0);
  EXPECT_EQ(st->last_offset, 3u);
  EXPECT_EQ(spp.pattern_entry(0), nullptr);

  spp.train(base + 5 * 64);
  const auto* pt = spp.pattern_entry(0);
  ASSERT_NE(pt, nullptr);
  EXPECT_EQ(pt->sig_weight, 1u);
  EXPECT_EQ(pt->slots[0].delta, 2);
  EXPECT_EQ(pt->slots[0].weight, 1u);
  EXPECT_EQ(spp.signature_entry(base / kPageBytes)->signature, 0x002);
  EXPECT_EQ(spp.signature_entry(base / kPageBytes)->last_offset, 5u);
}

TEST(SppTrain, RepeatedPatternReachesCounterCap) {
  SignaturePathPrefetcher spp(cfg(256));
  std::uint32_t peak = 0;
  for (std::uint64_t page = 0; page < 300; ++page) {
    for (std::uint32_t off : {0u, 1u, 2u}) spp.train(page * kPageBytes + off * 256);
    const auto* pt = spp.pattern_entry(0);
    ASSERT_NE(pt, nullptr);
    ASSERT_LE(pt->max_slot_weight(), pt->sig_weight);
    ASSERT_LE(pt->sig_weight, spp.config().counter_max);
    peak = std::max(peak, pt->max_slot_weight());
  }
  EXPECT_EQ(peak, spp.config().counter_max);
}

TEST(SppTrain, DifferentialAgainstReferenceModel) {
  for (std::uint64_t seed = 1; seed <= 30; ++seed) {
    oracle::Gen gen(seed);
    const std::uint32_t block = 64u << gen.below(4);
    SignaturePathPrefetcher spp(cfg(block));
    ReferenceSpp ref{block, spp.config().counter_max, {}, {}};
    const std::uint64_t pages = 1 + gen.below(200);
    for (int i = 0; i < 5000; ++i) {
      const std::uint64_t addr = gen.below(pages) * kPageBytes + gen.below(kPageBytes);
      spp.train(addr);
      ref.train(addr);
      const auto* st = spp.signature_entry(addr / kPageBytes);
      ASSERT_NE(st, nullptr);
      const auto& r = ref.st.at(addr / kPageBytes);
      ASSERT_EQ(st->last_offset, r.first);
      ASSERT_EQ(st->signature, r.second);
    }
    for (const auto& [index, e] : ref.pt) {
      const auto* pt = spp.pattern_entry(e.sig);
      ASSERT_NE(pt, nullptr);
      EXPECT_EQ(pt->sig_weight, e.sig_weight);
      for (int s = 0; s < 4; ++s) {
        EXPECT_EQ(pt->slots[s].weight, e.slots[s].second);
        if (e.slots[s].second) EXPECT_EQ(pt->slots[s].delta, e.slots[s].first);
      }
    }
  }
}

TEST(SppPredict, UntrainedIsEmpty) {
  SignaturePathPrefetcher spp(cfg(256, true));
  EXPECT_TRUE(spp.predict(0x12345).empty());
}

TEST(SppPredict, TrainedStrideReturnsNextBlocks) {
  SignaturePathPrefetcher spp(cfg(256));
  for (std::uint64_t page = 0; page < 20; ++page)
    for (std::uint32_t off = 0; off < 16; ++off) spp.train(page * kPageBytes + off * 256);
  const std::uint64_t page = 100 * kPageBytes;
  for (std::uint32_t off = 0; off < 4; ++off) spp.train(page + off * 256);
  const auto c = spp.predict(page + 3 * 256, 4, 0.0);
  ASSERT_EQ(c.size(), 4u);
  for (std::uint32_t i = 0; i < 4; ++i) {
    EXPECT_EQ(c[i].block_address, page + (4 + i) * 256);
    if (i) EXPECT_LE(c[i].confidence, c[i - 1].confidence);
  }
}

TEST(SppPredict, PageCrossingCandidatesDropped) {
  SignaturePathPrefetcher spp(cfg(256));
  for (std::uint64_t page = 0; page < 20; ++page)
    for (std::uint32_t off = 0; off < 16; ++off) spp.train(page * kPageBytes + off * 256);
  const std::uint64_t page = 100 * kPageBytes;
  for (std::uint32_t off = 10; off < 14; ++off) spp.train(page + off * 256);
  const auto c = spp.predict(page + 13 * 256, 4, 0.0);
  ASSERT_EQ(c.size(), 2u);
  EXPECT_EQ(c[0].block_address, page + 14 * 256);
  EXPECT_EQ(c[1].block_address, page + 15 * 256);
}

TEST(SppPredict, StrideConfidenceAfterWarmup) {
  for (int stride : {1, 2, 3}) {
    SignaturePathPrefetcher spp(cfg(64, true));
    std::uint64_t addr = 0;
    for (int i = 0; i < 64; ++i) {
      spp.train(addr);
      addr += stride * 64;
    }
    // Query mid-page so the next block stays inside the page.
    while ((addr % kPageBytes) / 64 + stride >= 64 || (addr % kPageBytes) / 64 < static_cast<unsigned>(stride)) {
      spp.train(addr);
      addr += stride * 64;
    }
    spp.train(addr);
    const auto c = spp.predict(addr, 1, 0.0);
    ASSERT_EQ(c.size(), 1u) << stride;
    EXPECT_EQ(c[0].block_address, addr + stride * 64);
    EXPECT_GE(c[0].confidence, 0.9);
  }
}

TEST(SppProperty, CandidatesUniqueAlignedInPageMonotone) {
  for (std::uint64_t seed = 1; seed <= 40; ++seed) {
    oracle::Gen gen(seed);
    const std::uint32_t block = 64u << gen.below(6);
    SppConfig c = cfg(block, gen.chance(0.5));
    SignaturePathPrefetcher spp(c);
    const std::uint64_t pages = 1 + gen.below(400);
    std::uint64_t addr = 0;
    for (int i = 0; i < 3000; ++i) {
      if (gen.chance(0.2)) {
        addr = gen.below(pages) * kPageBytes + gen.below(kPageBytes);
      } else {
        addr = (addr + static_cast<std::uint64_t>(gen.range(1, 3)) * block) % (pages * kPageBytes);
      }
      spp.train(addr);
      const auto cands = spp.predict(addr, 1 + static_cast<std::uint32_t>(gen.below(8)), gen.chance(0.5) ? 0.0 : 0.25);
      std::set<std::uint64_t> seen;
      std::uint32_t last_depth = 0;
      for (std::size_t k = 0; k < cands.size(); ++k) {
        const auto& cand = cands[k];
        ASSERT_EQ(cand.block_address % block, 0u);
        ASSERT_EQ(cand.block_address / kPageBytes, addr / kPageBytes);
        ASSERT_NE(cand.block_address, addr / block * block);
        ASSERT_TRUE(seen.insert(cand.block_address).second);
        ASSERT_GE(cand.confidence, 0.0);
        ASSERT_LE(cand.confidence, 1.0);
        ASSERT_GT(cand.depth, last_depth);
        last_depth = cand.depth;
        if (k) ASSERT_LE(cand.confidence, cands[k - 1].confidence);
      }
      const auto* st = spp.signature_entry(addr / kPageBytes);
      ASSERT_NE(st, nullptr);
      ASSERT_LT(st->last_offset, spp.blocks_per_page());
      if (const auto* pt = spp.pattern_entry(st->signature)) {
        ASSERT_GE(pt->sig_weight, pt->max_slot_weight());
      }
    }
  }
}

TEST(SppProperty, SignatureTableIsBoundedLru) {
  SignaturePathPrefetcher spp(cfg(256));
  for (std::uint64_t page = 0; page < 300; ++page) spp.train(page * kPageBytes);
  EXPECT_EQ(spp.signature_entry(0), nullptr);
  EXPECT_EQ(spp.signature_entry(43), nullptr);
  EXPECT_NE(spp.signature_entry(44), nullptr);
  EXPECT_NE(spp.signature_entry(299), nullptr);
}

TEST(SppBootstrap, NewPageInheritsCrossPageSignature) {
  SignaturePathPrefetcher on(cfg(256, true));
  SignaturePathPrefetcher off(cfg(256, false));
  for (auto* spp : {&on, &off}) {
    for (std::uint32_t off_ = 12; off_ < 16; ++off_) spp->train(off_ * 256);
    spp->train(2 * kPageBytes + 0 * 256);  // 15 + 1 wraps to offset 0 of a new page
  }
  EXPECT_NE(on.signature_entry(2)->signature, 0);
  EXPECT_EQ(off.signature_entry(2)->signature, 0);
}

TEST(SppConfig, RejectsBadBlockSizes) {
  for (std::uint32_t b : {0u, 32u, 96u, 8192u}) EXPECT_THROW(SignaturePathPrefetcher(cfg(b)), std::invalid_argument);
  EXPECT_GT(SignaturePathPrefetcher(cfg(256, true)).storage_bits(), 0u);
}
