#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "famsim/config.hpp"
#include "famsim/experiment.hpp"
#include "famsim/metrics.hpp"
#include "famsim/simulation.hpp"

namespace fs = std::filesystem;
using namespace famsim;

namespace {

struct Overrides {
  std::optional<std::string> seed, nodes, scheduler, wfq_weight, adaptation, block_size, cache_size,
      allocation_ratio, trace, duration_accesses;
  std::vector<std::string> sets;
};

void apply(ExperimentConfig& cfg, const Overrides& o) {
  auto put = [&cfg](const char* key, const std::optional<std::string>& v) {
    if (v) cfg.set(key, *v);
  };
  put("seed", o.seed);
  put("nodes", o.nodes);
  put("scheduler", o.scheduler);
  put("wfq_weight", o.wfq_weight);
  put("adaptation", o.adaptation);
  put("block_size", o.block_size);
  put("cache_size", o.cache_size);
  put("allocation_ratio", o.allocation_ratio);
  put("duration_accesses", o.duration_accesses);
  if (o.trace) cfg.set("workload", "trace:" + *o.trace);
  for (const auto& kv : o.sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ConfigError(kv, "expected KEY=VALUE");
    cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
}

std::string sanitize(std::string s) {
  for (char& c : s) {
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '.' && c != '-' && c != '_') c = '_';
  }
  return s;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"famsim: discrete-event simulator of nodes sharing CXL fabric-attached memory"};
  std::string config_path;
  std::string out_dir = ".";
  std::string format = "csv";
  std::string sweep_axis;
  std::string sweep_values;
  unsigned jobs = 1;
  bool paired = false;
  bool dump_config = false;
  Overrides o;

  app.add_option("--config", config_path, "Config file (flat key = value)");
  app.add_option("--out", out_dir, "Output directory for reports");
  app.add_option("--format", format, "Report format")->check(CLI::IsMember({"csv", "json"}));
  app.add_option("--seed", o.seed, "Workload seed");
  app.add_option("--nodes", o.nodes, "Compute node count (1..16)");
  app.add_option("--scheduler", o.scheduler, "FAM scheduler")->check(CLI::IsMember({"fifo", "wfq"}));
  app.add_option("--wfq-weight", o.wfq_weight, "Demand:prefetch weight W");
  app.add_option("--adaptation", o.adaptation, "Prefetch bandwidth adaptation")->check(CLI::IsMember({"on", "off"}));
  app.add_option("--block-size", o.block_size, "DRAM cache block size in bytes");
  app.add_option("--cache-size", o.cache_size, "DRAM cache capacity in bytes");
  app.add_option("--allocation-ratio", o.allocation_ratio, "FAM:local page ratio X");
  app.add_option("--trace", o.trace, "Replay a trace file on every node");
  app.add_option("--duration-accesses", o.duration_accesses, "Accesses per node");
  app.add_option("--set", o.sets, "Override any config key (KEY=VALUE)");
  auto* sweep = app.add_option("--sweep", sweep_axis, "Sweep axis")
                    ->check(CLI::IsMember({"block_size", "allocation_ratio", "nodes", "wfq_weight", "cache_size",
                                           "adaptation"}));
  app.add_option("--values", sweep_values, "Comma-separated sweep values")->needs(sweep);
  app.add_option("--jobs", jobs, "Concurrent simulations during a sweep")->check(CLI::PositiveNumber);
  app.add_flag("--paired", paired, "Also run the baseline and reference to fill relative columns");
  app.add_flag("--dump-config", dump_config, "Print the effective config and exit");
  CLI11_PARSE(app, argc, argv);

  try {
    ExperimentConfig cfg = config_path.empty() ? ExperimentConfig{} : ExperimentConfig::load(config_path);
    apply(cfg, o);
    cfg.validate();
    if (dump_config) {
      std::cout << cfg.to_text();
      return 0;
    }
    fs::create_directories(out_dir);
    const ReportFormat fmt = format == "json" ? ReportFormat::json : ReportFormat::csv;
    const std::string ext = format == "json" ? ".json" : ".csv";

    if (!sweep_axis.empty()) {
      if (sweep_values.empty()) throw std::invalid_argument("--sweep requires --values");
      const SweepAxis axis = parse_axis(sweep_axis);
      const SweepResult result = run_sweep(cfg, axis, parse_values(sweep_values), jobs);
      for (const auto& p : result.points) {
        const fs::path path = fs::path(out_dir) / (sanitize(sweep_axis + "_" + p.value) + ext);
        emit_report(p.run, fmt, path, &p.baseline, &p.reference);
      }
      const fs::path summary = fs::path(out_dir) / ("sweep_" + sweep_axis + ".csv");
      write_text_file(summary, sweep_summary_csv(result));
      for (const auto& p : result.points) {
        const auto rel = p.relative_fam_latency;
        std::cout << sweep_axis << '=' << p.value << " relative_fam_latency="
                  << (rel ? format_value(*rel) : std::string("NA")) << '\n';
      }
      std::cout << "summary: " << summary.string() << '\n';
      return 0;
    }

    const fs::path path = fs::path(out_dir) / ("report" + ext);
    if (paired) {
      const auto runs = run_all({{"run", cfg}, {"baseline", baseline_of(cfg)}, {"reference", reference_of(cfg)}}, jobs);
      emit_report(runs[0], fmt, path, &runs[1], &runs[2]);
    } else {
      emit_report(run_experiment(cfg), fmt, path);
    }
    std::cout << "report: " << path.string() << '\n';
    return 0;
  } catch (const ConfigError& e) {
    std::cerr << "famsim: invalid config key '" << e.key() << "': " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "famsim: " << e.what() << '\n';
    return 1;
  }
}
