#include "nclp/harness.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <locale>
#include <sstream>

#include <nlohmann/json.hpp>

namespace nclp {

namespace {

using ordered_json = nlohmann::ordered_json;

int parse_int(const std::string& text, const std::string& what) {
  int value = 0;
  const char* first = text.data();
  const char* last = first + text.size();
  if (!text.empty() && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last) throw UsageError("bad " + what + ": '" + text + "'");
  return value;
}

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::vector<std::string> metric_names(const std::vector<TrialRecord>& trials) {
  std::vector<std::string> names;
  for (const auto& t : trials)
    for (const auto& [name, value] : t.metrics)
      if (std::find(names.begin(), names.end(), name) == names.end()) names.push_back(name);
  return names;
}

std::uint64_t fnv1a(const void* data, std::size_t bytes, std::uint64_t h = 0xcbf29ce484222325ULL) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < bytes; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string strip_extension(const std::string& path) {
  for (const char* ext : {".json", ".csv"}) {
    const std::string e(ext);
    if (path.size() > e.size() && path.compare(path.size() - e.size(), e.size(), e) == 0)
      return path.substr(0, path.size() - e.size());
  }
  return path;
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw UsageError("cannot open output file '" + path + "'");
  out << text;
  out.flush();
  if (!out) throw UsageError("failed writing output file '" + path + "'");
}

}  // namespace

IntRange IntRange::parse(const std::string& text) {
  const auto dots = text.find("..");
  IntRange r;
  if (dots == std::string::npos) {
    r.lo = r.hi = parse_int(text, "range");
  } else {
    r.lo = parse_int(text.substr(0, dots), "range start");
    r.hi = parse_int(text.substr(dots + 2), "range end");
  }
  if (r.lo > r.hi) throw UsageError("empty range '" + text + "'");
  return r;
}

std::string IntRange::str() const { return std::to_string(lo) + ".." + std::to_string(hi); }

ReportFormat parse_report_format(const std::string& text) {
  if (text == "json") return ReportFormat::Json;
  if (text == "csv") return ReportFormat::Csv;
  if (text == "both") return ReportFormat::Both;
  throw UsageError("unknown format '" + text + "' (json, csv, both)");
}

double ExperimentConfig::tol(const std::string& name, double fallback) const {
  const auto it = tolerance.find(name);
  return it == tolerance.end() ? fallback : it->second;
}

void Report::assert_le(const std::string& name, double measured, double threshold) {
  assertions.push_back({name, "<=", threshold, measured, measured <= threshold});
}

void Report::assert_ge(const std::string& name, double measured, double threshold) {
  assertions.push_back({name, ">=", threshold, measured, measured >= threshold});
}

const Assertion* Report::find(const std::string& name) const {
  for (const auto& a : assertions)
    if (a.name == name) return &a;
  return nullptr;
}

bool Report::all_pass() const {
  return std::all_of(assertions.begin(), assertions.end(), [](const Assertion& a) { return a.pass; });
}

std::vector<AggregateEntry> Report::aggregate() const {
  std::vector<AggregateEntry> out;
  for (const auto& name : metric_names(trials)) {
    AggregateEntry e{name, -kInf, 0.0};
    int count = 0;
    for (const auto& t : trials)
      for (const auto& [n, v] : t.metrics)
        if (n == name) {
          e.max = std::max(e.max, v);
          e.mean += v;
          ++count;
        }
    e.mean /= std::max(count, 1);
    out.push_back(e);
  }
  return out;
}

double Report::metric_max(const std::string& name) const {
  for (const auto& e : aggregate())
    if (e.name == name) return e.max;
  return std::nan("");
}

std::string Report::json() const {
  ordered_json j;
  j["experiment"] = experiment;
  ordered_json cfg = ordered_json::object();
  for (const auto& [k, v] : config_strings) cfg[k] = v;
  for (const auto& [k, v] : config_numbers) cfg[k] = v;
  ordered_json env = ordered_json::object();
  for (const auto& [k, v] : environment) env[k] = v;
  cfg["environment"] = env;
  j["config"] = cfg;
  ordered_json tr = ordered_json::array();
  for (const auto& t : trials) {
    ordered_json m = ordered_json::object();
    for (const auto& [k, v] : t.metrics) m[k] = v;
    tr.push_back({{"id", t.id}, {"inputs_digest", t.inputs_digest}, {"metrics", m}, {"pass", t.pass}});
  }
  j["trials"] = tr;
  ordered_json agg = ordered_json::object();
  for (const auto& e : aggregate()) agg[e.name] = {{"max", e.max}, {"mean", e.mean}};
  j["aggregate"] = agg;
  ordered_json as = ordered_json::array();
  for (const auto& a : assertions)
    as.push_back({{"name", a.name},
                  {"relation", a.relation},
                  {"threshold", a.threshold},
                  {"measured", a.measured},
                  {"pass", a.pass}});
  j["assertions"] = as;
  return j.dump(2) + "\n";
}

std::string Report::csv() const {
  const auto names = metric_names(trials);
  std::ostringstream os;
  os.imbue(std::locale::classic());
  os << "id,inputs_digest,pass";
  for (const auto& n : names) os << ',' << n;
  os << '\n';
  for (const auto& t : trials) {
    os << t.id << ',' << t.inputs_digest << ',' << (t.pass ? "true" : "false");
    for (const auto& n : names) {
      os << ',';
      for (const auto& [k, v] : t.metrics)
        if (k == n) {
          os << format_double(v);
          break;
        }
    }
    os << '\n';
  }
  return os.str();
}

std::string digest(const Matrix& m) {
  const std::int64_t shape[2] = {m.rows(), m.cols()};
  std::uint64_t h = fnv1a(shape, sizeof shape);
  h = fnv1a(m.data(), sizeof(cplx) * static_cast<std::size_t>(m.size()), h);
  return hex64(h);
}

std::string digest(const RVector& v) {
  const std::int64_t len = v.size();
  std::uint64_t h = fnv1a(&len, sizeof len);
  h = fnv1a(v.data(), sizeof(double) * static_cast<std::size_t>(v.size()), h);
  return hex64(h);
}

std::string digest_combine(const std::string& a, const std::string& b) {
  const std::string joined = a + ":" + b;
  return hex64(fnv1a(joined.data(), joined.size()));
}

Report run_experiment(const ExperimentConfig& config) {
  for (const auto& info : experiment_registry())
    if (info.name == config.experiment) return info.run(config);
  throw UsageError("unknown experiment '" + config.experiment + "'");
}

void write_report(const Report& report, const std::string& path, ReportFormat format) {
  switch (format) {
    case ReportFormat::Json:
      write_file(path, report.json());
      break;
    case ReportFormat::Csv:
      write_file(path, report.csv());
      break;
    case ReportFormat::Both: {
      const std::string stem = strip_extension(path);
      write_file(stem + ".json", report.json());
      write_file(stem + ".csv", report.csv());
      break;
    }
  }
}

int exit_status(const Report& report) { return report.all_pass() ? 0 : 1; }

}  // namespace nclp
