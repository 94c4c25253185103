#include "multisle/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "multisle/errors.hpp"
#include "multisle/number.hpp"

namespace multisle {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

template <class T>
bool parse_value(std::string_view text, T& out) {
  text = trim(text);
  if (text.empty()) return false;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
  return ec == std::errc() && ptr == text.data() + text.size();
}

bool parse_list(std::string_view text, std::vector<double>& out) {
  out.clear();
  text = trim(text);
  if (text.empty()) return true;
  while (true) {
    const auto comma = text.find(',');
    double v = 0.0;
    if (!parse_value(text.substr(0, comma), v)) return false;
    out.push_back(v);
    if (comma == std::string_view::npos) return true;
    text = text.substr(comma + 1);
  }
}

std::string join(const std::vector<double>& v) {
  std::ostringstream os;
  for (std::size_t i = 0; i < v.size(); ++i) os << (i ? "," : "") << format_number(v[i]);
  return os.str();
}

bool is_known_command(const std::string& c) {
  return c == "crossing" || c == "simulate" || c == "partition" || c == "arch" || c == "classical";
}

}  // namespace

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = {
      "kappa", "points", "speeds", "partition", "x", "model", "grid", "n", "m", "samples", "seed",
      "dt", "epsilon", "cap", "gap_scale", "threads", "trace_samples", "trace_stride", "out", "format"};
  return keys;
}

Settings parse_config_text(std::string_view text) {
  Settings settings;
  std::vector<std::string> problems;
  const auto& keys = config_keys();
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      problems.push_back("line " + std::to_string(line_no) + ": expected key = value");
      continue;
    }
    const std::string key(trim(line.substr(0, eq)));
    if (std::find(keys.begin(), keys.end(), key) == keys.end()) {
      problems.push_back("line " + std::to_string(line_no) + ": unknown key '" + key + "'");
      continue;
    }
    settings[key] = std::string(trim(line.substr(eq + 1)));
  }
  if (!problems.empty()) throw ConfigError(std::move(problems));
  return settings;
}

Settings read_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError({"cannot read config file '" + path + "'"});
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config_text(buffer.str());
}

std::vector<double> resolved_points(const RunConfig& c) {
  if (!c.points.empty()) return c.points;
  if (c.command == "classical") {
    std::vector<double> p(static_cast<std::size_t>(std::max(c.n, 1)));
    std::iota(p.begin(), p.end(), 0.0);
    return p;
  }
  return {0.0, c.x, 1.0};
}

RunConfig make_run_config(const std::string& command, const Settings& settings) {
  RunConfig c;
  c.command = command;
  if (command == "crossing") c.format = "csv";
  std::vector<std::string> problems;
  if (!is_known_command(command))
    problems.push_back("unknown command '" + command + "' (expected crossing, simulate, partition, arch, classical)");

  const auto& keys = config_keys();
  for (const auto& [key, value] : settings) {
    if (std::find(keys.begin(), keys.end(), key) == keys.end()) {
      problems.push_back("unknown key '" + key + "'");
      continue;
    }
    auto bad = [&] { problems.push_back(key + ": cannot parse '" + value + "'"); };
    if (key == "kappa") { if (!parse_value(value, c.kappa)) bad(); }
    else if (key == "points") { if (!parse_list(value, c.points)) bad(); }
    else if (key == "speeds") { if (!parse_list(value, c.speeds)) bad(); }
    else if (key == "partition") c.partition = value;
    else if (key == "x") { if (!parse_value(value, c.x)) bad(); }
    else if (key == "model") c.model = value;
    else if (key == "grid") { if (!parse_value(value, c.grid)) bad(); }
    else if (key == "n") { if (!parse_value(value, c.n)) bad(); }
    else if (key == "m") { if (!parse_value(value, c.m)) bad(); }
    else if (key == "samples") { if (!parse_value(value, c.samples)) bad(); }
    else if (key == "seed") { if (!parse_value(value, c.seed)) bad(); }
    else if (key == "dt") { if (!parse_value(value, c.dt)) bad(); }
    else if (key == "epsilon") { if (!parse_value(value, c.epsilon)) bad(); }
    else if (key == "cap") { if (!parse_value(value, c.cap)) bad(); }
    else if (key == "gap_scale") { if (!parse_value(value, c.gap_scale)) bad(); }
    else if (key == "threads") { if (!parse_value(value, c.threads)) bad(); }
    else if (key == "trace_samples") { if (!parse_value(value, c.trace_samples)) bad(); }
    else if (key == "trace_stride") { if (!parse_value(value, c.trace_stride)) bad(); }
    else if (key == "out") c.out = value;
    else if (key == "format") c.format = value;
  }

  if (c.format != "csv" && c.format != "json") problems.push_back("format must be csv or json");
  const bool needs_kappa = command != "arch" && command != "classical";
  if (needs_kappa && !(c.kappa > 0.0 && c.kappa < 8.0)) problems.push_back("κ must lie in (0,8)");

  if (command == "crossing") {
    try {
      (void)parse_crossing_model(c.model);
    } catch (const DomainError& e) {
      problems.push_back(std::string("model: ") + e.what());
    }
    if (c.grid < 1) problems.push_back("grid must be at least 1");
  }

  if (command == "arch") {
    if (c.n < 1 || c.n > 62) problems.push_back("n must lie in [1,62]");
    if (c.m < 0 || 2 * c.m > c.n) problems.push_back("m must satisfy 0 <= m <= n/2");
  }

  const bool uses_points = command == "simulate" || command == "partition" || command == "classical";
  if (uses_points) {
    if (c.points.empty() && command != "classical" && !(c.x > 0.0 && c.x < 1.0))
      problems.push_back("x must lie in (0,1)");
    if (command == "classical" && c.points.empty() && (c.n < 1 || c.n > 6))
      problems.push_back("n must lie in [1,6] for classical");
    const std::vector<double> pts = resolved_points(c);
    bool ordered = !pts.empty();
    for (std::size_t i = 0; i < pts.size(); ++i)
      if (!std::isfinite(pts[i]) || (i > 0 && !(pts[i - 1] < pts[i]))) ordered = false;
    if (!ordered) problems.push_back("points must be finite and strictly increasing");
    if (command == "classical" && pts.size() > 6) problems.push_back("classical supports at most 6 points");

    if (!c.speeds.empty()) {
      if (c.speeds.size() != pts.size()) {
        problems.push_back("expected " + std::to_string(pts.size()) + " speeds, got " + std::to_string(c.speeds.size()));
      } else {
        const bool nonneg = std::all_of(c.speeds.begin(), c.speeds.end(), [](double a) { return a >= 0.0 && std::isfinite(a); });
        const double sum = std::accumulate(c.speeds.begin(), c.speeds.end(), 0.0);
        if (!nonneg) {
          problems.push_back("speeds must be non-negative");
        } else if (!(sum > 0.0)) {
          problems.push_back("speeds must not all be zero");
        } else if (std::fabs(sum - 1.0) > 1e-12) {
          for (double& a : c.speeds) a /= sum;
          std::ostringstream os;
          os << "speeds summed to " << sum << "; rescaled to sum 1";
          c.warnings.push_back(os.str());
        }
      }
    }

    if (command != "classical") {
      try {
        (void)make_partition_function(parse_partition_selection(c.partition), c.kappa > 0.0 ? c.kappa : 1.0,
                                      static_cast<int>(pts.size()));
      } catch (const DomainError& e) {
        problems.push_back(std::string("partition: ") + e.what());
      }
    }
    if (command == "partition" && c.points.empty() && c.grid < 1) problems.push_back("grid must be at least 1");
  }

  if (command == "simulate" || command == "classical") {
    if (!(c.dt > 0.0)) problems.push_back("dt must be positive");
    if (!(c.epsilon >= 0.0)) problems.push_back("epsilon must be non-negative (0 selects the default)");
    if (!(c.cap > 0.0) || !std::isfinite(c.cap)) problems.push_back("cap must be positive and finite");
    if (!(c.gap_scale >= 0.0)) problems.push_back("gap_scale must be non-negative");
  }
  if (command == "simulate" && c.samples < 1) problems.push_back("samples must be at least 1");

  if (!problems.empty()) throw ConfigError(std::move(problems));
  return c;
}

std::string format_config(const RunConfig& c) {
  std::ostringstream os;
  os << "kappa = " << format_number(c.kappa) << '\n'
     << "points = " << join(c.points) << '\n'
     << "speeds = " << join(c.speeds) << '\n'
     << "partition = " << c.partition << '\n'
     << "x = " << format_number(c.x) << '\n'
     << "model = " << c.model << '\n'
     << "grid = " << c.grid << '\n'
     << "n = " << c.n << '\n'
     << "m = " << c.m << '\n'
     << "samples = " << c.samples << '\n'
     << "seed = " << c.seed << '\n'
     << "dt = " << format_number(c.dt) << '\n'
     << "epsilon = " << format_number(c.epsilon) << '\n'
     << "cap = " << format_number(c.cap) << '\n'
     << "gap_scale = " << format_number(c.gap_scale) << '\n'
     << "threads = " << c.threads << '\n'
     << "trace_samples = " << c.trace_samples << '\n'
     << "trace_stride = " << c.trace_stride << '\n'
     << "out = " << c.out << '\n'
     << "format = " << c.format << '\n';
  return os.str();
}

SleParameters to_sle_parameters(const RunConfig& c) {
  SleParameters p;
  p.kappa = c.kappa;
  p.points = resolved_points(c);
  p.speeds = c.speeds.empty() ? std::vector<double>(p.points.size(), 1.0 / static_cast<double>(p.points.size()))
                              : c.speeds;
  p.partition = parse_partition_selection(c.partition);
  p.dt_base = c.dt;
  p.collision_epsilon = c.epsilon;
  p.capacity_cap = c.cap;
  p.gap_scale = c.gap_scale;
  p.seed = c.seed;
  return p;
}

EstimationPlan to_plan(const RunConfig& c) {
  EstimationPlan plan;
  plan.params = to_sle_parameters(c);
  plan.n_samples = c.samples;
  plan.master_seed = c.seed;
  plan.threads = c.threads;
  plan.trace_samples = c.trace_samples;
  plan.trace_stride = c.trace_stride;
  return plan;
}

}  // namespace multisle
