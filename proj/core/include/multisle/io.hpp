#pragma once

#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "multisle/arch.hpp"
#include "multisle/classical.hpp"
#include "multisle/config.hpp"
#include "multisle/harness.hpp"

namespace multisle {

inline constexpr const char* kReportSchema = "multisle.report/1";
inline constexpr const char* kArchSchema = "multisle.arch/1";
inline constexpr const char* kCrossingSchema = "multisle.crossing/1";
inline constexpr const char* kPartitionSchema = "multisle.partition/1";
inline constexpr const char* kClassicalSchema = "multisle.classical/1";

/// {"n":4,"m":2,"pairs":[[1,2],[3,4]],"infinity":[]}
std::string arch_to_json(const ArchConfiguration& arch);
/// Throws DomainError on malformed input or an invalid configuration.
ArchConfiguration parse_arch_json(std::string_view text);

/// Effective configuration as key/value strings, the same form a config file uses.
Settings config_settings(const RunConfig& config);

/// Monte-Carlo report for `simulate`. `analytic` holds closed-form arch
/// probabilities for comparison when they are known.
std::string report_to_json(const RunConfig& config, const ArchEstimate& estimate,
                           const std::map<std::string, double>& analytic = {});
std::string report_to_csv(const ArchEstimate& estimate);

struct ParsedReport {
  std::string schema;
  Settings config;
  std::size_t n_samples = 0;
  std::size_t failures = 0;
  std::size_t resolved = 0;
  std::map<std::string, std::size_t> arch_counts;
  std::map<std::string, double> estimates;
  std::map<std::string, Interval> ci;
  std::map<std::string, double> analytic;
  double mean_stopping_capacity = 0.0;
  double runtime_s = 0.0;
};
ParsedReport parse_report_json(std::string_view text);

/// One JSON object per sample, newline terminated.
std::string outcome_to_json_line(const SampleSummary& sample);
SampleSummary parse_outcome_line(std::string_view line);

struct TraceRow {
  std::size_t sample_id = 0;
  int curve_id = 0;  // 1-based
  std::size_t point_index = 0;
  double re = 0.0;
  double im = 0.0;

  friend bool operator==(const TraceRow&, const TraceRow&) = default;
};

inline constexpr const char* kTraceHeader = "sample_id,curve_id,point_index,re,im";

/// Rows for one sample; curves are numbered from 1.
std::vector<TraceRow> trace_rows(std::size_t sample_id, const std::vector<std::vector<Complex>>& traces);
void write_trace_csv(std::ostream& out, const std::vector<TraceRow>& rows, bool header = true);
std::vector<TraceRow> parse_trace_csv(std::istream& in);

struct CrossingRow {
  double x = 0.0;
  double probability = 0.0;
};

/// Evenly spaced interior grid x_k = k/(grid+1), k = 1..grid.
std::vector<double> unit_grid(int grid);

std::string crossing_to_csv(const std::vector<CrossingRow>& rows);
std::string crossing_to_json(const RunConfig& config, const std::vector<CrossingRow>& rows);
std::vector<CrossingRow> parse_crossing_csv(std::string_view text);
std::vector<CrossingRow> parse_crossing_json(std::string_view text);

struct PartitionRow {
  std::vector<double> points;
  double log_value = 0.0;
  std::vector<double> gradient;
  std::vector<double> residuals;
};

std::string partition_to_json(const RunConfig& config, const std::string& label, const std::vector<PartitionRow>& rows);
std::string partition_to_csv(const std::vector<PartitionRow>& rows);
std::vector<PartitionRow> parse_partition_json(std::string_view text);

std::string arch_list_to_json(const RunConfig& config, const std::vector<ArchConfiguration>& arches);
std::string arch_list_to_csv(const std::vector<ArchConfiguration>& arches);
std::vector<ArchConfiguration> parse_arch_list_json(std::string_view text);

struct ClassicalRunSummary {
  std::string branch;
  std::string reason;
  double tau = 0.0;
  std::vector<IndexPair> collisions;
  std::vector<std::pair<double, std::vector<double>>> path;
  std::string failure;
};

std::string classical_to_json(const RunConfig& config, const ClassicalSolveReport& solved,
                              const std::vector<ClassicalRunSummary>& runs);
struct ParsedClassical {
  bool classical = false;
  std::vector<ClassicalGradient> branches;
  std::vector<ClassicalRunSummary> runs;
};
ParsedClassical parse_classical_json(std::string_view text);

}  // namespace multisle
