#pragma once

#include <cstdint>
#include <deque>
#include <filesystem>
#include <memory>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "famsim/engine.hpp"

namespace famsim {

enum class AccessKind : std::uint8_t { read, write };

/// One LLC miss (read) or LLC writeback (write) in node physical address space.
struct AccessRecord {
  AccessKind kind = AccessKind::read;
  std::uint64_t address = 0;
  std::uint32_t node = 0;

  friend bool operator==(const AccessRecord&, const AccessRecord&) = default;
};

/// Thin wrapper over mt19937_64 with conversions that do not depend on the
/// standard library's distribution implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }
  /// Uniform in [0, bound).
  std::uint64_t below(std::uint64_t bound);
  /// Uniform in [0, 1).
  double unit() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

 private:
  std::mt19937_64 engine_;
};

std::uint64_t mix64(std::uint64_t x);

enum class GeneratorKind : std::uint8_t {
  sequential,
  stride,
  random,
  zipf,
  pointer_chase,
  mixed,
  trace,
};

/// Textual workload description, e.g. "stride:256", "zipf:1.0",
/// "mixed:0.3:256", "trace:/path/to/file".
struct GeneratorSpec {
  GeneratorKind kind = GeneratorKind::sequential;
  std::uint64_t stride_bytes = 64;
  double zipf_alpha = 1.0;
  double jump_probability = 0.0;
  std::string trace_path;

  static GeneratorSpec parse(const std::string& text);
  std::string to_string() const;
};

struct StreamParams {
  std::uint32_t node = 0;
  std::uint64_t seed = 1;
  std::uint64_t footprint_bytes = 64ULL << 20;
  double write_fraction = 0.0;
};

class AccessStream {
 public:
  virtual ~AccessStream() = default;
  virtual std::optional<AccessRecord> next() = 0;
  /// True when each read's address depends on the previous read's data,
  /// so reads must be serialized.
  virtual bool dependent() const { return false; }
};

class TraceParseError : public std::runtime_error {
 public:
  TraceParseError(const std::string& path, std::size_t line, const std::string& what)
      : std::runtime_error(path + ":" + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

/// Parses `<node_id> <R|W> <hex address>` lines. Blank lines and lines
/// starting with '#' are skipped.
std::vector<AccessRecord> parse_trace(std::istream& in, const std::string& name = "<trace>");
std::vector<AccessRecord> load_trace(const std::filesystem::path& path);

std::unique_ptr<AccessStream> make_stream(const GeneratorSpec& spec, const StreamParams& params);

/// Replays the records of one node from a parsed trace, in file order.
class TraceStream final : public AccessStream {
 public:
  TraceStream(std::vector<AccessRecord> records, std::uint32_t node);
  std::optional<AccessRecord> next() override;

 private:
  std::vector<AccessRecord> records_;
  std::size_t pos_ = 0;
};

/// Splits node physical pages between local DRAM and FAM at ratio X:1.
class AddressMap {
 public:
  enum class Target : std::uint8_t { local, fam };

  AddressMap(double allocation_ratio, std::uint64_t seed);

  Target classify(std::uint64_t address) const;
  double allocation_ratio() const { return ratio_; }

 private:
  double ratio_;
  std::uint64_t seed_;
  std::uint64_t threshold_;  // page goes to FAM when hash < threshold_
  bool all_fam_;
};

struct CoreConfig {
  std::uint32_t max_outstanding = 16;
  SimTime issue_gap = 303 * kPicosecond;  // one 3.3 GHz cycle
  std::uint64_t access_budget = 1'000'000;
};

/// Where the core model sends its accesses.
class MemoryPort {
 public:
  virtual ~MemoryPort() = default;
  virtual void read(const AccessRecord& rec) = 0;
  virtual void write(const AccessRecord& rec) = 0;
};

/// LLC-miss source with a bounded number of in-flight reads. Reads complete
/// through on_read_complete(); writes are fire-and-forget.
class CoreModel final : public EventSink {
 public:
  CoreModel(Engine& engine, CoreConfig config, std::unique_ptr<AccessStream> stream,
            MemoryPort& port);

  void start(SimTime at = 0);
  void on_read_complete();
  void on_event(const Message& msg) override;

  bool finished() const { return exhausted_ && outstanding_ == 0 && !held_; }
  std::uint64_t emitted() const { return emitted_; }
  std::uint32_t outstanding() const { return outstanding_; }
  std::uint32_t peak_outstanding() const { return peak_outstanding_; }
  std::uint64_t fingerprint() const { return fingerprint_; }
  ComponentId id() const { return id_; }

 private:
  void try_issue();
  void arm(SimTime at);
  std::uint32_t read_limit() const;

  Engine& engine_;
  CoreConfig config_;
  std::unique_ptr<AccessStream> stream_;
  MemoryPort& port_;
  ComponentId id_;
  std::optional<AccessRecord> held_;
  std::uint32_t outstanding_ = 0;
  std::uint32_t peak_outstanding_ = 0;
  std::uint64_t emitted_ = 0;
  std::uint64_t fingerprint_ = 0xcbf29ce484222325ULL;
  SimTime next_allowed_ = 0;
  bool armed_ = false;
  bool exhausted_ = false;
};

}  // namespace famsim
