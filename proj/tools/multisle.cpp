// multisle: command-line front end for the multiple-SLE laboratory.
//
//   multisle crossing  --model percolation --grid 9
//   multisle simulate  --kappa 6 --x 0.3 --samples 2000
//   multisle partition --kappa 3 --partition fourpoint:1,1 --grid 9
//   multisle arch      --n 6 --m 3
//   multisle classical --points 0,1
//
// Settings come from an optional flat key = value file (--config) with flags
// taking precedence. Errors go to stderr as one JSON object.

#include <cmath>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <memory>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "multisle/arch.hpp"
#include "multisle/classical.hpp"
#include "multisle/config.hpp"
#include "multisle/crossing.hpp"
#include "multisle/errors.hpp"
#include "multisle/harness.hpp"
#include "multisle/io.hpp"
#include "multisle/number.hpp"
#include "multisle/partition.hpp"

namespace {

using namespace multisle;

enum ExitCode { kOk = 0, kModuleError = 1, kConfigError = 2, kHarnessError = 3 };

struct FlagSet {
  std::map<std::string, std::string> values;
  std::map<std::string, CLI::Option*> options;
  std::string config_file;
  std::string outcomes_file;
  std::string traces_file;
  bool show_defaults = false;
};

struct FlagSpec {
  const char* key;
  const char* flag;
  const char* help;
};

const FlagSpec kFlags[] = {
    {"kappa", "--kappa", "SLE parameter, 0 < κ < 8"},
    {"points", "--points", "comma-separated increasing boundary points"},
    {"speeds", "--speeds", "comma-separated growth speeds (rescaled to sum 1)"},
    {"partition", "--partition", "Z0, Z2, mixture:l,m, chordal, triple, fourpoint:pI,pII"},
    {"x", "--x", "three-point shorthand: points (0, x, 1)"},
    {"model", "--model", "percolation, ising, fk_ising, potts:Q, generic:κ,pI,pII"},
    {"grid", "--grid", "number of interior grid points in (0,1)"},
    {"n", "--n", "point count (arch, classical)"},
    {"m", "--m", "arch count (arch)"},
    {"samples", "--samples", "Monte-Carlo sample count"},
    {"seed", "--seed", "master seed"},
    {"dt", "--dt", "base time step"},
    {"epsilon", "--epsilon", "collision threshold (0: 1e-4 x spread)"},
    {"cap", "--cap", "capacity cap on 2t"},
    {"gap_scale", "--gap-scale", "gap scale of the adaptive step (0: initial min gap)"},
    {"threads", "--threads", "worker threads (0: all cores; MULTISLE_THREADS caps)"},
    {"trace_samples", "--trace-samples", "reconstruct traces for this many samples"},
    {"trace_stride", "--trace-stride", "keep every k-th slit in traces"},
    {"out", "--out", "output file (default stdout)"},
    {"format", "--format", "csv or json"},
};

void add_flags(CLI::App* app, FlagSet& set) {
  for (const FlagSpec& f : kFlags) set.options[f.key] = app->add_option(f.flag, set.values[f.key], f.help);
  app->add_option("--config", set.config_file, "flat key = value settings file");
  app->add_flag("--show-defaults", set.show_defaults, "print the effective settings and exit");
}

Settings collect(const FlagSet& set) {
  Settings s = set.config_file.empty() ? Settings{} : read_config_file(set.config_file);
  for (const auto& [key, opt] : set.options)
    if (opt->count() > 0) s[key] = set.values.at(key);
  return s;
}

void emit(const RunConfig& cfg, const std::string& text) {
  if (cfg.out.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(cfg.out);
  if (!out) throw ConfigError({"cannot write '" + cfg.out + "'"});
  out << text;
}

void report_error(const char* kind, const std::string& message, const std::vector<std::string>& problems = {}) {
  nlohmann::json j = {{"error", kind}, {"message", message}};
  if (!problems.empty()) j["problems"] = problems;
  std::cerr << j.dump() << '\n';
}

int run_crossing(const RunConfig& cfg) {
  const CrossingModel model = parse_crossing_model(cfg.model);
  std::vector<CrossingRow> rows;
  for (double x : unit_grid(cfg.grid)) rows.push_back({x, model.probability(x)});
  emit(cfg, cfg.format == "csv" ? crossing_to_csv(rows) : crossing_to_json(cfg, rows));
  return kOk;
}

std::map<std::string, double> analytic_probabilities(const SleParameters& p) {
  std::map<std::string, double> out;
  const auto& x = p.points;
  using Kind = PartitionSelection::Kind;
  if (p.partition.kind == Kind::FourPoint) {
    const double x4 = x.size() == 4 ? x[3] : std::numeric_limits<double>::infinity();
    const double u = harmonic_ratio(x[0], x[1], x[2], x4);
    const double pI = generic_crossing(u, p.kappa, p.partition.first, p.partition.second);
    if (x.size() == 3) {
      out["(1,2)|3"] = pI;
      out["(2,3)|1"] = 1.0 - pI;
    } else {
      out["(1,2)(3,4)"] = pI;
      out["(1,4)(2,3)"] = 1.0 - pI;
    }
  } else if (p.partition.kind == Kind::Mixture && p.kappa < 8.0) {
    out["(1,2)"] = hitting_probability_mixed(p.kappa, p.partition.first, p.partition.second, x[1] - x[0]);
  }
  return out;
}

int run_simulate(const RunConfig& cfg, const FlagSet& flags) {
  EstimationPlan plan = to_plan(cfg);
  plan.keep_samples = !flags.outcomes_file.empty();
  if (!flags.traces_file.empty() && plan.trace_samples == 0) plan.trace_samples = 1;
  const ArchEstimate est = estimate_arch_probabilities(plan);

  if (!flags.outcomes_file.empty()) {
    std::ofstream out(flags.outcomes_file);
    if (!out) throw ConfigError({"cannot write '" + flags.outcomes_file + "'"});
    for (const SampleSummary& s : est.samples) out << outcome_to_json_line(s);
  }
  if (!flags.traces_file.empty()) {
    std::ofstream out(flags.traces_file);
    if (!out) throw ConfigError({"cannot write '" + flags.traces_file + "'"});
    out << kTraceHeader << '\n';
    for (std::size_t i = 0; i < std::min(plan.trace_samples, est.samples.size()); ++i)
      write_trace_csv(out, trace_rows(i, est.samples[i].traces), false);
  }
  emit(cfg, cfg.format == "csv" ? report_to_csv(est) : report_to_json(cfg, est, analytic_probabilities(plan.params)));
  return kOk;
}

int run_partition(const RunConfig& cfg) {
  const PartitionSelection sel = parse_partition_selection(cfg.partition);
  std::vector<std::vector<double>> configurations;
  if (!cfg.points.empty()) {
    configurations.push_back(cfg.points);
  } else {
    for (double x : unit_grid(cfg.grid)) configurations.push_back({0.0, x, 1.0});
  }
  const PartitionPtr z = make_partition_function(sel, cfg.kappa, static_cast<int>(configurations.front().size()));
  std::vector<PartitionRow> rows;
  for (const auto& pts : configurations) {
    PartitionRow row;
    row.points = pts;
    row.log_value = z->log_value(pts);
    row.gradient = grad_log_z(*z, pts);
    for (std::size_t i = 0; i < pts.size(); ++i) row.residuals.push_back(null_vector_residual(*z, pts, i));
    rows.push_back(std::move(row));
  }
  emit(cfg, cfg.format == "csv" ? partition_to_csv(rows) : partition_to_json(cfg, z->label(), rows));
  return kOk;
}

int run_arch(const RunConfig& cfg) {
  const auto arches = enumerate_arches(cfg.n, cfg.m);
  emit(cfg, cfg.format == "csv" ? arch_list_to_csv(arches) : arch_list_to_json(cfg, arches));
  return kOk;
}

int run_classical(const RunConfig& cfg) {
  const std::vector<double> points = resolved_points(cfg);
  const ClassicalSolveReport solved = solve_classical_report(points);
  std::vector<ClassicalRunSummary> runs;
  for (const ClassicalGradient& branch : solved.branches) {
    ClassicalRunOptions options;
    options.speeds = cfg.speeds;
    options.capacity_cap = cfg.cap;
    options.dt_base = cfg.dt;
    options.collision_epsilon = cfg.epsilon;
    const ClassicalRun run = integrate_classical(branch, options);
    runs.push_back({branch.label, to_string(run.outcome.reason), run.outcome.tau, run.outcome.collisions, run.path,
                    run.outcome.diagnostics.failure});
  }
  if (cfg.format == "csv") {
    std::ostringstream os;
    os << "branch,index,point,U\n";
    for (const ClassicalGradient& b : solved.branches)
      for (std::size_t i = 0; i < b.values.size(); ++i)
        os << '"' << b.label << '"' << ',' << i + 1 << ',' << format_number(b.points[i]) << ','
           << format_number(b.values[i]) << '\n';
    emit(cfg, os.str());
  } else {
    emit(cfg, classical_to_json(cfg, solved, runs));
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"multisle: multiple-SLE simulation and crossing formulas"};
  app.require_subcommand(1);

  struct Command {
    const char* name;
    const char* help;
    CLI::App* app = nullptr;
    FlagSet flags;
  };
  std::vector<std::unique_ptr<Command>> commands;
  for (auto [name, help] : std::initializer_list<std::pair<const char*, const char*>>{
           {"crossing", "tabulate a closed-form crossing probability"},
           {"simulate", "Monte-Carlo arch probabilities"},
           {"partition", "partition function values, gradients and null-vector residuals"},
           {"arch", "enumerate arch configurations"},
           {"classical", "κ→0 gradient branches and deterministic runs"}}) {
    auto cmd = std::make_unique<Command>();
    cmd->name = name;
    cmd->help = help;
    cmd->app = app.add_subcommand(name, help);
    add_flags(cmd->app, cmd->flags);
    if (std::string(name) == "simulate") {
      cmd->app->add_option("--outcomes", cmd->flags.outcomes_file, "write one JSON line per sample");
      cmd->app->add_option("--traces", cmd->flags.traces_file, "write trace polylines as CSV");
    }
    commands.push_back(std::move(cmd));
  }

  CLI11_PARSE(app, argc, argv);

  for (const auto& cmd : commands) {
    if (!cmd->app->parsed()) continue;
    try {
      const RunConfig cfg = make_run_config(cmd->name, collect(cmd->flags));
      if (cmd->flags.show_defaults) {
        std::cout << format_config(cfg);
        return kOk;
      }
      for (const std::string& w : cfg.warnings) std::cerr << "warning: " << w << '\n';
      const std::string name = cmd->name;
      if (name == "crossing") return run_crossing(cfg);
      if (name == "simulate") return run_simulate(cfg, cmd->flags);
      if (name == "partition") return run_partition(cfg);
      if (name == "arch") return run_arch(cfg);
      if (name == "classical") return run_classical(cfg);
    } catch (const ConfigError& e) {
      report_error("config", e.what(), e.problems());
      return kConfigError;
    } catch (const HarnessError& e) {
      report_error("harness", e.what());
      return kHarnessError;
    } catch (const std::exception& e) {
      report_error("module", e.what());
      return kModuleError;
    }
  }
  return kOk;
}
