#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "multisle/crossing.hpp"
#include "multisle/harness.hpp"
#include "multisle/partition.hpp"

namespace multisle {

/// Effective settings of one CLI invocation.
struct RunConfig {
  std::string command;

  double kappa = 6.0;
  std::vector<double> points;  // empty: derived from x, or 0..n-1 for classical
  std::vector<double> speeds;  // empty: equal speeds
  std::string partition = "fourpoint:1,1";
  double x = 0.5;              // three-point shorthand (0, x, 1)
  std::string model = "percolation";
  int grid = 9;
  int n = 4;
  int m = 2;

  std::size_t samples = 1000;
  std::uint64_t seed = 1;
  double dt = 1e-4;
  double epsilon = 0.0;
  double cap = 100.0;
  double gap_scale = 0.0;
  unsigned threads = 0;
  std::size_t trace_samples = 0;
  std::size_t trace_stride = 10;

  std::string out;  // empty: stdout
  std::string format = "json";  // crossing defaults to csv

  /// Non-fatal adjustments made during validation (e.g. speed renormalization).
  std::vector<std::string> warnings;
};

using Settings = std::map<std::string, std::string>;

/// Every recognised key, in the order `--show-defaults` prints them.
const std::vector<std::string>& config_keys();

/// Parse a flat `key = value` file body. Blank lines and `#` comments are skipped.
/// Unknown keys and malformed lines are reported together in one ConfigError.
Settings parse_config_text(std::string_view text);
Settings read_config_file(const std::string& path);

/// Apply settings over the defaults and validate for `command`. Every violated
/// constraint is collected into one ConfigError. Speeds that do not sum to 1
/// are rescaled with a warning.
RunConfig make_run_config(const std::string& command, const Settings& settings);

/// Resolved point set: explicit points, else (0, x, 1).
std::vector<double> resolved_points(const RunConfig& config);

/// `key = value` lines with the effective values.
std::string format_config(const RunConfig& config);

/// Engine parameters and estimation plan for `simulate`.
SleParameters to_sle_parameters(const RunConfig& config);
EstimationPlan to_plan(const RunConfig& config);

}  // namespace multisle
