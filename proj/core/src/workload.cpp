#include "famsim/workload.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "famsim/request.hpp"

namespace famsim {

std::uint64_t Rng::below(std::uint64_t bound) {
  if (bound == 0) return 0;
  // Multiply-shift; the bias is below 2^-64 * bound and deterministic.
  const Wide wide = static_cast<Wide>(engine_()) * bound;
  return static_cast<std::uint64_t>(wide >> 64);
}

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// ---------------------------------------------------------------------------
// Generator spec

namespace {

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : text) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

double parse_double(const std::string& s, const std::string& what) {
  std::size_t used = 0;
  double v = 0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != s.size() || s.empty()) throw std::invalid_argument("bad " + what + ": '" + s + "'");
  return v;
}

std::uint64_t parse_u64(const std::string& s, const std::string& what) {
  std::size_t used = 0;
  unsigned long long v = 0;
  try {
    v = std::stoull(s, &used, 0);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != s.size() || s.empty() || s[0] == '-')
    throw std::invalid_argument("bad " + what + ": '" + s + "'");
  return v;
}

std::string format_double(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

GeneratorSpec GeneratorSpec::parse(const std::string& text) {
  GeneratorSpec spec;
  if (text.rfind("trace:", 0) == 0) {
    spec.kind = GeneratorKind::trace;
    spec.trace_path = text.substr(6);
    if (spec.trace_path.empty()) throw std::invalid_argument("trace generator needs a path");
    return spec;
  }
  const auto parts = split(text, ':');
  const std::string& name = parts[0];
  auto expect_args = [&](std::size_t n) {
    if (parts.size() != n + 1)
      throw std::invalid_argument("generator '" + name + "' takes " + std::to_string(n) +
                                  " argument(s): '" + text + "'");
  };
  if (name == "sequential") {
    expect_args(0);
    spec.kind = GeneratorKind::sequential;
  } else if (name == "stride") {
    expect_args(1);
    spec.kind = GeneratorKind::stride;
    spec.stride_bytes = parse_u64(parts[1], "stride");
    if (spec.stride_bytes == 0) throw std::invalid_argument("stride must be positive");
  } else if (name == "random") {
    expect_args(0);
    spec.kind = GeneratorKind::random;
  } else if (name == "zipf") {
    expect_args(1);
    spec.kind = GeneratorKind::zipf;
    spec.zipf_alpha = parse_double(parts[1], "zipf alpha");
    if (!(spec.zipf_alpha >= 0)) throw std::invalid_argument("zipf alpha must be >= 0");
  } else if (name == "pointer_chase") {
    expect_args(0);
    spec.kind = GeneratorKind::pointer_chase;
  } else if (name == "mixed") {
    expect_args(2);
    spec.kind = GeneratorKind::mixed;
    spec.jump_probability = parse_double(parts[1], "jump probability");
    spec.stride_bytes = parse_u64(parts[2], "stride");
    if (!(spec.jump_probability >= 0 && spec.jump_probability <= 1))
      throw std::invalid_argument("jump probability must be in [0, 1]");
    if (spec.stride_bytes == 0) throw std::invalid_argument("stride must be positive");
  } else {
    throw std::invalid_argument("unknown generator '" + name + "'");
  }
  return spec;
}

std::string GeneratorSpec::to_string() const {
  switch (kind) {
    case GeneratorKind::sequential: return "sequential";
    case GeneratorKind::stride: return "stride:" + std::to_string(stride_bytes);
    case GeneratorKind::random: return "random";
    case GeneratorKind::zipf: return "zipf:" + format_double(zipf_alpha);
    case GeneratorKind::pointer_chase: return "pointer_chase";
    case GeneratorKind::mixed:
      return "mixed:" + format_double(jump_probability) + ":" + std::to_string(stride_bytes);
    case GeneratorKind::trace: return "trace:" + trace_path;
  }
  return "?";
}

// ---------------------------------------------------------------------------
// Trace files

std::vector<AccessRecord> parse_trace(std::istream& in, const std::string& name) {
  std::vector<AccessRecord> records;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;

    std::istringstream fields(line);
    std::string node_text, kind_text, addr_text, extra;
    if (!(fields >> node_text >> kind_text >> addr_text))
      throw TraceParseError(name, lineno, "expected '<node_id> <R|W> <hex address>'");
    if (fields >> extra) throw TraceParseError(name, lineno, "trailing field '" + extra + "'");

    AccessRecord rec;
    try {
      std::size_t used = 0;
      const unsigned long node = std::stoul(node_text, &used, 10);
      if (used != node_text.size() || node_text[0] == '-' || node > 0xffffffffUL)
        throw std::invalid_argument("node");
      rec.node = static_cast<std::uint32_t>(node);
    } catch (const std::exception&) {
      throw TraceParseError(name, lineno, "bad node id '" + node_text + "'");
    }

    if (kind_text == "R" || kind_text == "r") {
      rec.kind = AccessKind::read;
    } else if (kind_text == "W" || kind_text == "w") {
      rec.kind = AccessKind::write;
    } else {
      throw TraceParseError(name, lineno, "access kind must be R or W, got '" + kind_text + "'");
    }

    std::string hex = addr_text;
    if (hex.size() > 2 && hex[0] == '0' && (hex[1] == 'x' || hex[1] == 'X')) hex = hex.substr(2);
    try {
      std::size_t used = 0;
      if (hex.empty() || hex[0] == '-' || hex[0] == '+') throw std::invalid_argument("addr");
      rec.address = std::stoull(hex, &used, 16);
      if (used != hex.size()) throw std::invalid_argument("addr");
    } catch (const std::exception&) {
      throw TraceParseError(name, lineno, "bad hex address '" + addr_text + "'");
    }
    if (rec.address >= kAddressLimit)
      throw TraceParseError(name, lineno, "address " + addr_text + " exceeds 48 bits");
    records.push_back(rec);
  }
  return records;
}

std::vector<AccessRecord> load_trace(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open trace file " + path.string());
  return parse_trace(in, path.string());
}

TraceStream::TraceStream(std::vector<AccessRecord> records, std::uint32_t node) {
  for (const auto& r : records)
    if (r.node == node) records_.push_back(r);
}

std::optional<AccessRecord> TraceStream::next() {
  if (pos_ >= records_.size()) return std::nullopt;
  return records_[pos_++];
}

// ---------------------------------------------------------------------------
// Synthetic generators

namespace {

class SyntheticStream : public AccessStream {
 public:
  explicit SyntheticStream(const StreamParams& p)
      : params_(p),
        lines_(std::max<std::uint64_t>(1, p.footprint_bytes / kLineBytes)),
        rng_(mix64(p.seed) ^ mix64(0x5eed0000ULL + p.node)),
        write_rng_(mix64(p.seed + 0x77) ^ mix64(0xacce55ULL + p.node)) {}

  std::optional<AccessRecord> next() final {
    AccessRecord rec;
    rec.node = params_.node;
    rec.address = next_address() % (lines_ * kLineBytes);
    rec.kind = (params_.write_fraction > 0 && write_rng_.unit() < params_.write_fraction)
                   ? AccessKind::write
                   : AccessKind::read;
    return rec;
  }

 protected:
  virtual std::uint64_t next_address() = 0;

  StreamParams params_;
  std::uint64_t lines_;
  Rng rng_;

 private:
  Rng write_rng_;
};

class StrideStream final : public SyntheticStream {
 public:
  StrideStream(const StreamParams& p, std::uint64_t stride) : SyntheticStream(p), stride_(stride) {}

 private:
  std::uint64_t next_address() override {
    const std::uint64_t a = cursor_;
    cursor_ = (cursor_ + stride_) % (lines_ * kLineBytes);
    return a;
  }
  std::uint64_t stride_;
  std::uint64_t cursor_ = 0;
};

class RandomStream : public SyntheticStream {
 public:
  using SyntheticStream::SyntheticStream;

 private:
  std::uint64_t next_address() override { return rng_.below(lines_) * kLineBytes; }
};

class PointerChaseStream final : public RandomStream {
 public:
  using RandomStream::RandomStream;
  bool dependent() const override { return true; }
};

class ZipfStream final : public SyntheticStream {
 public:
  ZipfStream(const StreamParams& p, double alpha) : SyntheticStream(p) {
    const std::uint64_t pages = std::max<std::uint64_t>(1, p.footprint_bytes / kPageBytes);
    cdf_.resize(pages);
    double sum = 0;
    for (std::uint64_t r = 0; r < pages; ++r) {
      sum += 1.0 / std::pow(static_cast<double>(r + 1), alpha);
      cdf_[r] = sum;
    }
    for (auto& c : cdf_) c /= sum;
    // Scatter the hot ranks over the footprint.
    page_of_rank_.resize(pages);
    for (std::uint64_t i = 0; i < pages; ++i) page_of_rank_[i] = i;
    for (std::uint64_t i = pages; i > 1; --i) std::swap(page_of_rank_[i - 1], page_of_rank_[rng_.below(i)]);
  }

 private:
  std::uint64_t next_address() override {
    const double u = rng_.unit();
    const auto it = std::lower_bound(cdf_.begin(), cdf_.end(), u);
    const std::uint64_t rank =
        std::min<std::uint64_t>(static_cast<std::uint64_t>(it - cdf_.begin()), cdf_.size() - 1);
    const std::uint64_t line = rng_.below(kPageBytes / kLineBytes);
    return page_of_rank_[rank] * kPageBytes + line * kLineBytes;
  }
  std::vector<double> cdf_;
  std::vector<std::uint64_t> page_of_rank_;
};

/// Strided runs broken by random jumps with a fixed per-access probability.
class MixedStream final : public SyntheticStream {
 public:
  MixedStream(const StreamParams& p, double jump, std::uint64_t stride)
      : SyntheticStream(p), jump_(jump), stride_(stride) {
    cursor_ = rng_.below(lines_) * kLineBytes;
  }

 private:
  std::uint64_t next_address() override {
    if (rng_.unit() < jump_) {
      cursor_ = rng_.below(lines_) * kLineBytes;
    } else {
      cursor_ = (cursor_ + stride_) % (lines_ * kLineBytes);
    }
    return cursor_;
  }
  double jump_;
  std::uint64_t stride_;
  std::uint64_t cursor_ = 0;
};

}  // namespace

std::unique_ptr<AccessStream> make_stream(const GeneratorSpec& spec, const StreamParams& params) {
  switch (spec.kind) {
    case GeneratorKind::sequential: return std::make_unique<StrideStream>(params, kLineBytes);
    case GeneratorKind::stride: return std::make_unique<StrideStream>(params, spec.stride_bytes);
    case GeneratorKind::random: return std::make_unique<RandomStream>(params);
    case GeneratorKind::zipf: return std::make_unique<ZipfStream>(params, spec.zipf_alpha);
    case GeneratorKind::pointer_chase: return std::make_unique<PointerChaseStream>(params);
    case GeneratorKind::mixed:
      return std::make_unique<MixedStream>(params, spec.jump_probability, spec.stride_bytes);
    case GeneratorKind::trace:
      return std::make_unique<TraceStream>(load_trace(spec.trace_path), params.node);
  }
  throw std::invalid_argument("unhandled generator kind");
}

// ---------------------------------------------------------------------------
// Address map

AddressMap::AddressMap(double allocation_ratio, std::uint64_t seed)
    : ratio_(allocation_ratio), seed_(mix64(seed ^ 0xadd7e55a110cULL)), threshold_(0), all_fam_(false) {
  if (!(allocation_ratio >= 0)) throw std::invalid_argument("allocation ratio must be >= 0");
  const double fam_share = std::isinf(allocation_ratio) ? 1.0 : allocation_ratio / (allocation_ratio + 1.0);
  const double scaled = std::ldexp(fam_share, 64);
  if (scaled >= std::ldexp(1.0, 64)) {
    all_fam_ = true;
  } else {
    threshold_ = static_cast<std::uint64_t>(scaled);
  }
}

AddressMap::Target AddressMap::classify(std::uint64_t address) const {
  if (all_fam_) return Target::fam;
  const std::uint64_t page = address / kPageBytes;
  return mix64(page ^ seed_) < threshold_ ? Target::fam : Target::local;
}

// ---------------------------------------------------------------------------
// Core model

namespace {
constexpr std::uint32_t kIssueEvent = 1;
}

CoreModel::CoreModel(Engine& engine, CoreConfig config, std::unique_ptr<AccessStream> stream,
                     MemoryPort& port)
    : engine_(engine), config_(config), stream_(std::move(stream)), port_(port) {
  if (config_.max_outstanding == 0) throw std::invalid_argument("max_outstanding must be >= 1");
  id_ = engine_.attach(*this);
}

std::uint32_t CoreModel::read_limit() const {
  return stream_->dependent() ? 1 : config_.max_outstanding;
}

void CoreModel::start(SimTime at) { arm(at); }

void CoreModel::arm(SimTime at) {
  if (armed_ || exhausted_) return;
  armed_ = true;
  engine_.schedule(std::max({at, next_allowed_, engine_.now()}), id_, Message{kIssueEvent, 0, 0});
}

void CoreModel::on_event(const Message& msg) {
  if (msg.kind != kIssueEvent) return;
  armed_ = false;
  try_issue();
}

void CoreModel::try_issue() {
  if (!held_) {
    if (emitted_ >= config_.access_budget) {
      exhausted_ = true;
      return;
    }
    held_ = stream_->next();
    if (!held_) {
      exhausted_ = true;
      return;
    }
  }
  if (held_->kind == AccessKind::read && outstanding_ >= read_limit()) return;

  const AccessRecord rec = *held_;
  held_.reset();
  ++emitted_;
  for (std::uint64_t v : {static_cast<std::uint64_t>(rec.kind), rec.address}) {
    for (int i = 0; i < 8; ++i) {
      fingerprint_ ^= (v >> (8 * i)) & 0xff;
      fingerprint_ *= 0x100000001b3ULL;
    }
  }
  next_allowed_ = engine_.now() + config_.issue_gap;
  if (rec.kind == AccessKind::read) {
    ++outstanding_;
    FAMSIM_CHECK(outstanding_ <= config_.max_outstanding, "outstanding read bound exceeded");
    peak_outstanding_ = std::max(peak_outstanding_, outstanding_);
    port_.read(rec);
  } else {
    port_.write(rec);
  }
  arm(next_allowed_);
}

void CoreModel::on_read_complete() {
  FAMSIM_CHECK(outstanding_ > 0, "read completion with no outstanding reads");
  --outstanding_;
  if (held_) arm(engine_.now());
}

}  // namespace famsim
