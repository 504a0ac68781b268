#include "famsim/experiment.hpp"

#include <atomic>
#include <exception>
#include <map>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "famsim/simulation.hpp"

namespace famsim {

namespace {

struct AxisName {
  SweepAxis axis;
  const char* name;
  const char* key;
};

constexpr AxisName kAxes[] = {
    {SweepAxis::block_size, "block_size", "block_size"},
    {SweepAxis::allocation_ratio, "allocation_ratio", "allocation_ratio"},
    {SweepAxis::nodes, "nodes", "nodes"},
    {SweepAxis::wfq_weight, "wfq_weight", "wfq_weight"},
    {SweepAxis::cache_size, "cache_size", "cache_size"},
    {SweepAxis::adaptation, "adaptation", "adaptation"},
};

}  // namespace

SweepAxis parse_axis(const std::string& name) {
  for (const auto& a : kAxes) {
    if (name == a.name) return a.axis;
  }
  throw std::invalid_argument("unknown sweep axis '" + name + "'");
}

std::string to_string(SweepAxis axis) {
  for (const auto& a : kAxes) {
    if (a.axis == axis) return a.name;
  }
  return "unknown";
}

std::string axis_key(SweepAxis axis) {
  for (const auto& a : kAxes) {
    if (a.axis == axis) return a.key;
  }
  return "";
}

std::vector<std::string> parse_values(const std::string& list) {
  std::vector<std::string> out;
  std::stringstream in(list);
  std::string item;
  while (std::getline(in, item, ',')) {
    const auto b = item.find_first_not_of(" \t");
    if (b == std::string::npos) continue;
    out.push_back(item.substr(b, item.find_last_not_of(" \t") - b + 1));
  }
  if (out.empty()) throw std::invalid_argument("sweep value list is empty");
  return out;
}

ExperimentConfig baseline_of(const ExperimentConfig& config) {
  ExperimentConfig b = config;
  b.root.dram_prefetcher = false;
  b.core_prefetcher = false;
  b.fam.scheduler = SchedulerKind::fifo;
  b.root.adapt.enabled = false;
  return b;
}

ExperimentConfig reference_of(const ExperimentConfig& config) {
  ExperimentConfig r = config;
  r.fam.scheduler = SchedulerKind::fifo;
  r.root.adapt.enabled = false;
  return r;
}

std::vector<RunRecord> run_all(const std::vector<std::pair<std::string, ExperimentConfig>>& configs,
                               unsigned jobs) {
  std::vector<RunRecord> out(configs.size());
  std::vector<std::exception_ptr> errors(configs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < configs.size(); i = next++) {
      try {
        out[i] = run_experiment(configs[i].second, configs[i].first);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const unsigned n = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(configs.size())));
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < n; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

SweepResult run_sweep(const ExperimentConfig& config, SweepAxis axis, const std::vector<std::string>& values,
                      unsigned jobs) {
  if (values.empty()) throw std::invalid_argument("sweep value list is empty");
  const std::string key = axis_key(axis);

  std::vector<std::pair<std::string, ExperimentConfig>> unique;
  std::map<std::string, std::size_t> index_of_text;
  auto intern = [&](const std::string& label, const ExperimentConfig& c) {
    c.validate();
    const std::string text = c.to_text();
    auto [it, fresh] = index_of_text.emplace(text, unique.size());
    if (fresh) unique.emplace_back(label, c);
    return it->second;
  };

  struct Slots {
    std::size_t run, baseline, reference;
  };
  std::vector<Slots> slots;
  for (const auto& v : values) {
    ExperimentConfig c = config;
    c.set(key, v);
    const std::string label = key + "=" + v;
    Slots s;
    s.run = intern(label, c);
    s.baseline = intern(label + ":baseline", baseline_of(c));
    s.reference = intern(label + ":reference", reference_of(c));
    slots.push_back(s);
  }

  const std::vector<RunRecord> runs = run_all(unique, jobs);
  SweepResult result{axis, {}};
  for (std::size_t i = 0; i < values.size(); ++i) {
    SweepPoint p;
    p.value = values[i];
    p.run = runs[slots[i].run];
    p.run.label = key + "=" + values[i];
    p.baseline = runs[slots[i].baseline];
    p.reference = runs[slots[i].reference];
    p.relative_fam_latency = relative_fam_latency(p.run, p.baseline);
    p.relative_prefetches_issued = relative_prefetches_issued(p.run, p.reference);
    result.points.push_back(std::move(p));
  }
  return result;
}

std::string sweep_summary_csv(const SweepResult& result) {
  std::vector<ReportRow> rows;
  for (const auto& p : result.points) {
    ReportRow row;
    row.emplace_back("axis", to_string(result.axis));
    row.emplace_back("value", p.value);
    for (auto& kv : report_row(p.run, &p.baseline, &p.reference)) row.push_back(std::move(kv));
    row.emplace_back("baseline_mean_fam_latency_ns",
                     p.baseline.stats.mean_fam_latency_ns() ? ReportValue{*p.baseline.stats.mean_fam_latency_ns()}
                                                            : ReportValue{});
    rows.push_back(std::move(row));
  }
  return to_csv(rows);
}

}  // namespace famsim
