#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "nclp/filtration.hpp"
#include "nclp/opcore.hpp"
#include "nclp/pseudoloc.hpp"

namespace nclp {

// Unknown experiment, malformed option, unwritable output.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct IntRange {
  int lo = 0;
  int hi = 0;
  // "a..b" or a single integer.
  static IntRange parse(const std::string& text);
  std::string str() const;
};

enum class ReportFormat { Json, Csv, Both };
ReportFormat parse_report_format(const std::string& text);

struct ExperimentConfig {
  std::string experiment;
  std::optional<AlgebraSpec> algebra;  // experiment default when empty
  int trials = 0;                      // 0 selects the experiment default
  std::uint64_t seed = 7;
  std::optional<IntRange> lambda_exp;
  std::optional<IntRange> s_range;
  KernelFamily kernel = KernelFamily::LpBumps;
  double gamma = 1.0;
  int depth = 0;                       // pseudo-localization grid depth, 0 for the default
  std::map<std::string, double> tolerance;  // overrides by assertion name
  std::string out;
  ReportFormat format = ReportFormat::Json;

  double tol(const std::string& name, double fallback) const;
};

using MetricList = std::vector<std::pair<std::string, double>>;

struct TrialRecord {
  int id = 0;
  std::string inputs_digest;
  MetricList metrics;
  bool pass = true;
};

struct Assertion {
  std::string name;
  std::string relation;  // "<=" or ">="
  double threshold = 0;
  double measured = 0;
  bool pass = false;
};

struct AggregateEntry {
  std::string name;
  double max = 0;
  double mean = 0;
};

struct Report {
  std::string experiment;
  MetricList config_numbers;
  std::vector<std::pair<std::string, std::string>> config_strings;
  std::vector<std::pair<std::string, std::string>> environment;
  std::vector<TrialRecord> trials;
  std::vector<Assertion> assertions;

  void assert_le(const std::string& name, double measured, double threshold);
  void assert_ge(const std::string& name, double measured, double threshold);
  const Assertion* find(const std::string& name) const;
  bool all_pass() const;

  std::vector<AggregateEntry> aggregate() const;
  // Max of a metric over trials; NaN when absent.
  double metric_max(const std::string& name) const;

  std::string json() const;
  std::string csv() const;
};

// FNV-1a over the raw bytes of the input data, as 16 hex digits.
std::string digest(const Matrix& m);
std::string digest(const RVector& v);
std::string digest_combine(const std::string& a, const std::string& b);

struct ExperimentInfo {
  std::string name;
  std::string summary;
  std::function<Report(const ExperimentConfig&)> run;
};
const std::vector<ExperimentInfo>& experiment_registry();

// Throws UsageError for an unknown name.
Report run_experiment(const ExperimentConfig& config);

// json to PATH, csv to PATH, both to PATH.json and PATH.csv after stripping a known extension.
void write_report(const Report& report, const std::string& path, ReportFormat format);

// 0 when every assertion passes, 1 otherwise.
int exit_status(const Report& report);

}  // namespace nclp
