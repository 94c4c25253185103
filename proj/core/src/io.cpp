#include "multisle/io.hpp"

#include <istream>
#include <ostream>
#include <sstream>

#include "json.hpp"
#include "multisle/errors.hpp"
#include "multisle/number.hpp"

namespace multisle {

using nlohmann::json;

namespace {

json parse_json(std::string_view text, const char* what) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw DomainError(std::string(what) + ": " + e.what());
  }
}

// Field access with a DomainError naming the document on any type mismatch.
template <class F>
auto guarded(const char* what, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const json::exception& e) {
    throw DomainError(std::string(what) + ": " + e.what());
  }
}

void require_schema(const json& doc, const char* expected, const char* what) {
  if (!doc.is_object() || doc.value("schema", std::string{}) != expected)
    throw DomainError(std::string(what) + ": expected schema " + expected);
}

json arch_object(const ArchConfiguration& a) {
  json pairs = json::array();
  for (const auto& [i, j] : a.pairs) pairs.push_back({i, j});
  return {{"n", a.n}, {"m", a.m()}, {"pairs", pairs}, {"infinity", a.infinity_lines}, {"key", a.key()}};
}

ArchConfiguration arch_from_object(const json& j) {
  ArchConfiguration a;
  a.n = j.at("n").get<int>();
  for (const auto& p : j.at("pairs")) a.pairs.emplace_back(p.at(0).get<int>(), p.at(1).get<int>());
  a.infinity_lines = j.at("infinity").get<std::vector<int>>();
  if (j.contains("m") && j.at("m").get<int>() != a.m()) throw DomainError("arch json: m disagrees with pairs");
  validate(a);
  return a;
}

json config_object(const RunConfig& c) {
  json cfg = json::object();
  cfg["command"] = c.command;
  for (const auto& [k, v] : config_settings(c)) cfg[k] = v;
  if (!c.warnings.empty()) cfg["warnings"] = c.warnings;
  return cfg;
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

}  // namespace

std::string arch_to_json(const ArchConfiguration& arch) {
  json j = arch_object(arch);
  j.erase("key");
  return j.dump();
}

ArchConfiguration parse_arch_json(std::string_view text) {
  const json j = parse_json(text, "arch json");
  return guarded("arch json", [&] { return arch_from_object(j); });
}

Settings config_settings(const RunConfig& config) { return parse_config_text(format_config(config)); }

std::string report_to_json(const RunConfig& config, const ArchEstimate& est,
                           const std::map<std::string, double>& analytic) {
  json j;
  j["schema"] = kReportSchema;
  j["config"] = config_object(config);
  j["plan"] = {{"n_samples", est.n_samples},
               {"master_seed", config.seed},
               {"threads", effective_threads(config.threads)}};
  json counts = json::object(), estimates = json::object(), ci = json::object(), arches = json::object();
  for (const auto& [key, k] : est.arch_counts) {
    counts[key] = k;
    estimates[key] = est.estimates.at(key);
    const Interval iv = est.ci.at(key);
    ci[key] = {iv.lo, iv.hi};
    arches[key] = arch_object(est.arches.at(key));
  }
  j["arch_counts"] = counts;
  j["estimates"] = estimates;
  j["ci"] = ci;
  j["arches"] = arches;
  j["analytic"] = analytic;
  j["failures"] = est.failures;
  j["resolved"] = est.resolved;
  j["mean_stopping_capacity"] = est.mean_stopping_capacity;
  j["runtime_s"] = est.runtime_s;
  return dump(j);
}

ParsedReport parse_report_json(std::string_view text) {
  const json j = parse_json(text, "report");
  require_schema(j, kReportSchema, "report");
  return guarded("report", [&] {
    ParsedReport r;
    r.schema = j.at("schema").get<std::string>();
    for (const auto& [k, v] : j.at("config").items())
      if (v.is_string() && k != "command") r.config[k] = v.get<std::string>();
    r.n_samples = j.at("plan").at("n_samples").get<std::size_t>();
    r.failures = j.at("failures").get<std::size_t>();
    r.resolved = j.at("resolved").get<std::size_t>();
    r.arch_counts = j.at("arch_counts").get<std::map<std::string, std::size_t>>();
    r.estimates = j.at("estimates").get<std::map<std::string, double>>();
    for (const auto& [k, v] : j.at("ci").items()) r.ci[k] = {v.at(0).get<double>(), v.at(1).get<double>()};
    r.analytic = j.at("analytic").get<std::map<std::string, double>>();
    r.mean_stopping_capacity = j.at("mean_stopping_capacity").get<double>();
    r.runtime_s = j.at("runtime_s").get<double>();
    return r;
  });
}

std::string report_to_csv(const ArchEstimate& est) {
  std::ostringstream os;
  os << "arch,count,estimate,ci_lo,ci_hi\n";
  for (const auto& [key, k] : est.arch_counts) {
    const Interval iv = est.ci.at(key);
    os << '"' << key << '"' << ',' << k << ',' << format_number(est.estimates.at(key)) << ','
       << format_number(iv.lo) << ',' << format_number(iv.hi) << '\n';
  }
  os << "\"failures\"," << est.failures << ",,,\n";
  return os.str();
}

std::string outcome_to_json_line(const SampleSummary& s) {
  json collisions = json::array();
  for (const auto& [a, b] : s.collisions) collisions.push_back({a, b});
  json j = {{"sample_id", s.index}, {"seed", s.seed},          {"reason", to_string(s.reason)},
            {"tau", s.tau},         {"collisions", collisions}, {"arch", arch_object(s.arch)},
            {"steps", s.steps}};
  if (!s.failure.empty()) j["failure"] = s.failure;
  return j.dump() + "\n";
}

SampleSummary parse_outcome_line(std::string_view line) {
  const json j = parse_json(line, "outcome line");
  return guarded("outcome line", [&] {
    SampleSummary s;
    s.index = j.at("sample_id").get<std::size_t>();
    s.seed = j.at("seed").get<std::uint64_t>();
    const std::string reason = j.at("reason").get<std::string>();
    if (reason == "collision-complete") s.reason = StopReason::CollisionComplete;
    else if (reason == "capacity-cap") s.reason = StopReason::CapacityCap;
    else if (reason == "numerical-failure") s.reason = StopReason::NumericalFailure;
    else throw DomainError("outcome line: unknown reason '" + reason + "'");
    s.tau = j.at("tau").get<double>();
    for (const auto& p : j.at("collisions")) s.collisions.emplace_back(p.at(0).get<int>(), p.at(1).get<int>());
    s.arch = arch_from_object(j.at("arch"));
    s.steps = j.at("steps").get<std::size_t>();
    s.failure = j.value("failure", std::string{});
    return s;
  });
}

std::vector<TraceRow> trace_rows(std::size_t sample_id, const std::vector<std::vector<Complex>>& traces) {
  std::vector<TraceRow> rows;
  for (std::size_t c = 0; c < traces.size(); ++c)
    for (std::size_t k = 0; k < traces[c].size(); ++k)
      rows.push_back({sample_id, static_cast<int>(c) + 1, k, traces[c][k].real(), traces[c][k].imag()});
  return rows;
}

void write_trace_csv(std::ostream& out, const std::vector<TraceRow>& rows, bool header) {
  if (header) out << kTraceHeader << '\n';
  for (const TraceRow& r : rows)
    out << r.sample_id << ',' << r.curve_id << ',' << r.point_index << ',' << format_number(r.re) << ','
        << format_number(r.im) << '\n';
}

std::vector<TraceRow> parse_trace_csv(std::istream& in) {
  std::vector<TraceRow> rows;
  std::string line;
  if (!std::getline(in, line) || line != kTraceHeader) throw DomainError("trace csv: missing header");
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream ls(line);
    TraceRow r;
    char c1 = 0, c2 = 0, c3 = 0, c4 = 0;
    if (!(ls >> r.sample_id >> c1 >> r.curve_id >> c2 >> r.point_index >> c3 >> r.re >> c4 >> r.im) ||
        c1 != ',' || c2 != ',' || c3 != ',' || c4 != ',')
      throw DomainError("trace csv: bad row at line " + std::to_string(line_no));
    rows.push_back(r);
  }
  return rows;
}

std::vector<double> unit_grid(int grid) {
  std::vector<double> xs;
  for (int k = 1; k <= grid; ++k) xs.push_back(static_cast<double>(k) / static_cast<double>(grid + 1));
  return xs;
}

std::string crossing_to_csv(const std::vector<CrossingRow>& rows) {
  std::ostringstream os;
  os << "x,probability\n";
  for (const CrossingRow& r : rows) os << format_number(r.x) << ',' << format_number(r.probability) << '\n';
  return os.str();
}

std::string crossing_to_json(const RunConfig& config, const std::vector<CrossingRow>& rows) {
  json j;
  j["schema"] = kCrossingSchema;
  j["config"] = config_object(config);
  json table = json::array();
  for (const CrossingRow& r : rows) table.push_back({{"x", r.x}, {"probability", r.probability}});
  j["rows"] = table;
  return dump(j);
}

std::vector<CrossingRow> parse_crossing_csv(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  if (!std::getline(in, line) || line != "x,probability") throw DomainError("crossing csv: missing header");
  std::vector<CrossingRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    CrossingRow r;
    char comma = 0;
    if (!(ls >> r.x >> comma >> r.probability) || comma != ',') throw DomainError("crossing csv: bad row '" + line + "'");
    rows.push_back(r);
  }
  return rows;
}

std::vector<CrossingRow> parse_crossing_json(std::string_view text) {
  const json j = parse_json(text, "crossing json");
  require_schema(j, kCrossingSchema, "crossing json");
  return guarded("crossing json", [&] {
    std::vector<CrossingRow> rows;
    for (const auto& r : j.at("rows")) rows.push_back({r.at("x").get<double>(), r.at("probability").get<double>()});
    return rows;
  });
}

std::string partition_to_json(const RunConfig& config, const std::string& label, const std::vector<PartitionRow>& rows) {
  json j;
  j["schema"] = kPartitionSchema;
  j["config"] = config_object(config);
  j["label"] = label;
  json table = json::array();
  for (const PartitionRow& r : rows)
    table.push_back({{"points", r.points}, {"log_value", r.log_value}, {"gradient", r.gradient}, {"residuals", r.residuals}});
  j["rows"] = table;
  return dump(j);
}

std::string partition_to_csv(const std::vector<PartitionRow>& rows) {
  std::ostringstream os;
  os << "row,index,point,log_value,gradient,residual\n";
  for (std::size_t k = 0; k < rows.size(); ++k)
    for (std::size_t i = 0; i < rows[k].points.size(); ++i)
      os << k << ',' << i + 1 << ',' << format_number(rows[k].points[i]) << ','
         << format_number(rows[k].log_value) << ',' << format_number(rows[k].gradient[i]) << ','
         << format_number(rows[k].residuals[i]) << '\n';
  return os.str();
}

std::vector<PartitionRow> parse_partition_json(std::string_view text) {
  const json j = parse_json(text, "partition json");
  require_schema(j, kPartitionSchema, "partition json");
  return guarded("partition json", [&] {
    std::vector<PartitionRow> rows;
    for (const auto& r : j.at("rows"))
      rows.push_back({r.at("points").get<std::vector<double>>(), r.at("log_value").get<double>(),
                      r.at("gradient").get<std::vector<double>>(), r.at("residuals").get<std::vector<double>>()});
    return rows;
  });
}

std::string arch_list_to_json(const RunConfig& config, const std::vector<ArchConfiguration>& arches) {
  json j;
  j["schema"] = kArchSchema;
  j["config"] = config_object(config);
  j["n"] = config.n;
  j["m"] = config.m;
  j["dimension"] = arches.size();
  json list = json::array();
  for (const ArchConfiguration& a : arches) {
    json o = arch_object(a);
    o["dyck"] = arch_to_dyck(a).steps;
    list.push_back(o);
  }
  j["configurations"] = list;
  return dump(j);
}

std::string arch_list_to_csv(const std::vector<ArchConfiguration>& arches) {
  std::ostringstream os;
  os << "index,key,dyck\n";
  for (std::size_t k = 0; k < arches.size(); ++k) {
    os << k << ',' << '"' << arches[k].key() << '"' << ',';
    for (int s : arch_to_dyck(arches[k]).steps) os << (s > 0 ? '+' : '-');
    os << '\n';
  }
  return os.str();
}

std::vector<ArchConfiguration> parse_arch_list_json(std::string_view text) {
  const json j = parse_json(text, "arch list");
  require_schema(j, kArchSchema, "arch list");
  return guarded("arch list", [&] {
    std::vector<ArchConfiguration> out;
    for (const auto& o : j.at("configurations")) out.push_back(arch_from_object(o));
    return out;
  });
}

std::string classical_to_json(const RunConfig& config, const ClassicalSolveReport& solved,
                              const std::vector<ClassicalRunSummary>& runs) {
  json j;
  j["schema"] = kClassicalSchema;
  j["classical"] = true;
  j["config"] = config_object(config);
  json branches = json::array();
  for (const ClassicalGradient& b : solved.branches)
    branches.push_back({{"label", b.label}, {"sector", b.sector}, {"points", b.points}, {"values", b.values}});
  j["branches"] = branches;
  j["skipped"] = solved.skipped;
  json out = json::array();
  for (const ClassicalRunSummary& r : runs) {
    json collisions = json::array();
    for (const auto& [a, b] : r.collisions) collisions.push_back({a, b});
    json path = json::array();
    for (const auto& [cap, xs] : r.path) path.push_back({{"capacity", cap}, {"positions", xs}});
    json o = {{"branch", r.branch}, {"reason", r.reason}, {"tau", r.tau}, {"collisions", collisions}, {"path", path}};
    if (!r.failure.empty()) o["failure"] = r.failure;
    out.push_back(o);
  }
  j["runs"] = out;
  return dump(j);
}

ParsedClassical parse_classical_json(std::string_view text) {
  const json j = parse_json(text, "classical json");
  require_schema(j, kClassicalSchema, "classical json");
  return guarded("classical json", [&] {
    ParsedClassical p;
    p.classical = j.at("classical").get<bool>();
    for (const auto& b : j.at("branches"))
      p.branches.push_back({b.at("points").get<std::vector<double>>(), b.at("values").get<std::vector<double>>(),
                            b.at("label").get<std::string>(), b.at("sector").get<int>()});
    for (const auto& r : j.at("runs")) {
      ClassicalRunSummary s;
      s.branch = r.at("branch").get<std::string>();
      s.reason = r.at("reason").get<std::string>();
      s.tau = r.at("tau").get<double>();
      for (const auto& c : r.at("collisions")) s.collisions.emplace_back(c.at(0).get<int>(), c.at(1).get<int>());
      for (const auto& pt : r.at("path"))
        s.path.emplace_back(pt.at("capacity").get<double>(), pt.at("positions").get<std::vector<double>>());
      s.failure = r.value("failure", std::string{});
      p.runs.push_back(std::move(s));
    }
    return p;
  });
}

}  // namespace multisle
