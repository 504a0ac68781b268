#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "famsim/config.hpp"

using namespace famsim;

TEST(Config, CanonicalTextRoundTrips) {
  ExperimentConfig c;
  c.nodes = 4;
  c.set("scheduler", "wfq");
  c.set("wfq_weight", "3");
  c.set("workload.2", "random");
  c.set("fam_latency_ns", "50.5");
  const std::string text = c.to_text();
  EXPECT_EQ(ExperimentConfig::parse(text).to_text(), text);
  EXPECT_EQ(c.workload_for(2), "random");
  EXPECT_EQ(c.workload_for(1), "sequential");
  EXPECT_EQ(c.fam.access_latency, 50'500u);
}

TEST(Config, EveryKeyReadsBackWhatWasSet) {
  const ExperimentConfig d;
  for (const auto& key : ExperimentConfig::keys()) {
    ExperimentConfig c;
    c.set(key, d.get(key));
    EXPECT_EQ(c.get(key), d.get(key)) << key;
  }
}

TEST(Config, UnknownKeyNamed) {
  try {
    ExperimentConfig::parse("nodes = 2\nwfq_wieght = 2\n");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.key(), "wfq_wieght");
    EXPECT_NE(std::string(e.what()).find("wfq_wieght"), std::string::npos);
  }
}

TEST(Config, BadValuesNamed) {
  const std::pair<std::string, std::string> bad[] = {
      {"nodes", "0"},         {"nodes", "17"},          {"block_size", "96"},  {"block_size", "8192"},
      {"scheduler", "rr"},    {"adaptation", "maybe"},  {"seed", "-1"},      {"drop_threshold", "1.5"},
      {"workload", "bogus"},    {"wfq_weight", "0"}, {"allocation_ratio", "x"},
      {"workload.20", "random"}};
  for (const auto& [key, value] : bad) {
    try {
      ExperimentConfig c = ExperimentConfig::parse(key + " = " + value + "\n");
      c.validate();
      FAIL() << key << "=" << value;
    } catch (const ConfigError& e) {
      EXPECT_EQ(e.key(), key) << value;
    }
  }
}

TEST(Config, DuplicateKeyRejected) {
  EXPECT_THROW(ExperimentConfig::parse("nodes = 2\nnodes = 3\n"), ConfigError);
}

TEST(Config, CommentsAndBlankLines) {
  const auto c = ExperimentConfig::parse("# c\n\nnodes = 3   # trailing\n");
  EXPECT_EQ(c.nodes, 3u);
}

TEST(Config, CheckedInDefaultMatchesBuiltInDefaults) {
  const auto c = ExperimentConfig::load(FAMSIM_SOURCE_DIR "/configs/default.conf");
  EXPECT_EQ(c.to_text(), ExperimentConfig{}.to_text());
}

TEST(Config, ReferenceDefaults) {
  const ExperimentConfig c;
  EXPECT_EQ(c.link.propagation, 70'000u);
  EXPECT_EQ(c.link.bandwidth, 128'000'000'000ULL);
  EXPECT_EQ(c.link.flit_bytes, 256u);
  EXPECT_EQ(c.link.min_packet_bytes, 28u);
  EXPECT_EQ(c.root.queue_capacity, 256u);
  EXPECT_EQ(c.root.dcache.capacity, 16ULL << 20);
  EXPECT_EQ(c.root.dcache.block_size, 256u);
  EXPECT_EQ(c.core.max_outstanding, 16u);
  EXPECT_EQ(c.fam.channels, 2u);
}
