#include <algorithm>
#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "nclp/harness.hpp"

namespace {

constexpr int kUsage = 2;
constexpr int kNumeric = 3;

void print_list() {
  for (const auto& e : nclp::experiment_registry()) std::printf("%-18s %s\n", e.name.c_str(), e.summary.c_str());
}

}  // namespace

int main(int argc, char** argv) {
  // Accept both "nclp run <experiment>" and "nclp <experiment>".
  std::vector<std::string> args(argv + 1, argv + argc);
  if (!args.empty() && args.front() == "run") args.erase(args.begin());
  std::reverse(args.begin(), args.end());

  CLI::App app{"Verification suites for noncommutative martingale and singular integral estimates", "nclp"};
  std::string experiment, algebra, lambda_exp, s_range, kernel = "lp-bumps", format = "json", out;
  std::vector<std::string> tolerances;
  int trials = 0, depth = 0;
  std::uint64_t seed = 7;
  double gamma = 1.0;
  bool list = false;
  app.add_option("experiment", experiment, "experiment name (see --list)");
  app.add_flag("--list", list, "list experiments and exit");
  app.add_option("--algebra", algebra, "tensor:N | grid:n,K,d | corner:n");
  app.add_option("--trials", trials, "instance count")->check(CLI::PositiveNumber);
  app.add_option("--seed", seed, "64-bit seed");
  app.add_option("--lambda-exp", lambda_exp, "lambda = 2^e for e in a..b");
  app.add_option("--s", s_range, "s range a..b");
  app.add_option("--kernel", kernel, "lp-bumps | hilbert | annuli");
  app.add_option("--gamma", gamma, "kernel smoothness exponent");
  app.add_option("--depth", depth, "grid depth K for the kernel suites")->check(CLI::PositiveNumber);
  app.add_option("--tol", tolerances, "override an assertion threshold, name=value");
  app.add_option("--out", out, "output path (stdout when omitted)");
  app.add_option("--format", format, "json | csv | both")->check(CLI::IsMember({"json", "csv", "both"}));

  try {
    app.parse(args);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }
  if (list) {
    print_list();
    return 0;
  }
  if (experiment.empty()) {
    std::cerr << "nclp: missing experiment name\n";
    print_list();
    return kUsage;
  }

  try {
    nclp::ExperimentConfig cfg;
    cfg.experiment = experiment;
    if (!algebra.empty()) cfg.algebra = nclp::AlgebraSpec::parse(algebra);
    cfg.trials = trials;
    cfg.seed = seed;
    if (!lambda_exp.empty()) cfg.lambda_exp = nclp::IntRange::parse(lambda_exp);
    if (!s_range.empty()) cfg.s_range = nclp::IntRange::parse(s_range);
    cfg.kernel = nclp::parse_kernel_family(kernel);
    cfg.gamma = gamma;
    cfg.depth = depth;
    cfg.format = nclp::parse_report_format(format);
    cfg.out = out;
    for (const auto& t : tolerances) {
      const auto eq = t.find('=');
      if (eq == std::string::npos) throw nclp::UsageError("--tol expects name=value, got '" + t + "'");
      cfg.tolerance[t.substr(0, eq)] = std::stod(t.substr(eq + 1));
    }

    const nclp::Report report = nclp::run_experiment(cfg);
    if (out.empty()) {
      if (cfg.format == nclp::ReportFormat::Csv)
        std::cout << report.csv();
      else
        std::cout << report.json();
    } else {
      nclp::write_report(report, out, cfg.format);
    }
    int failed = 0;
    for (const auto& a : report.assertions)
      if (!a.pass) {
        ++failed;
        std::cerr << "FAIL " << a.name << ": measured " << a.measured << ' ' << a.relation << ' ' << a.threshold << '\n';
      }
    std::cerr << experiment << ": " << report.assertions.size() - failed << '/' << report.assertions.size()
              << " assertions pass\n";
    return nclp::exit_status(report);
  } catch (const nclp::UsageError& e) {
    std::cerr << "nclp: " << e.what() << '\n';
    return kUsage;
  } catch (const nclp::ContractViolation& e) {
    std::cerr << "nclp: " << e.what() << '\n';
    return kUsage;
  } catch (const std::invalid_argument& e) {
    std::cerr << "nclp: bad value: " << e.what() << '\n';
    return kUsage;
  } catch (const nclp::NumericError& e) {
    std::cerr << "nclp: numeric failure: " << e.what() << '\n';
    return kNumeric;
  } catch (const std::exception& e) {
    std::cerr << "nclp: " << e.what() << '\n';
    return kNumeric;
  }
}
