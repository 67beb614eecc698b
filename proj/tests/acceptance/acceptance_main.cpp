// Acceptance suite: one PASS/FAIL line per criterion, built on the experiment registry.
#include <chrono>
#include <cstdio>
#include <exception>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "nclp/harness.hpp"

namespace {

using namespace nclp;

struct Run {
  std::string experiment;
  std::string algebra;  // empty for the scalar kernel suites
  int trials = 0;
  std::optional<IntRange> lambda;
  std::optional<IntRange> s;
  int depth = 0;

  std::string key() const {
    return experiment + "|" + algebra + "|" + std::to_string(trials) + "|" + (lambda ? lambda->str() : "") + "|" +
           (s ? s->str() : "") + "|" + std::to_string(depth);
  }
};

struct Criterion {
  int id;
  std::string title;
  std::vector<Run> runs;
  std::vector<std::string> checks;  // assertion names; empty means every assertion of every run
  double time_limit = 0;            // seconds over all runs, 0 for none
};

struct Outcome {
  Report report;
  double seconds = 0;
};

const IntRange kLambda{-2, 4};

std::vector<Criterion> criteria() {
  const Run cuc_t{"cuculescu", "tensor:4", 100, kLambda};
  const Run cuc_g{"cuculescu", "grid:1,4,2", 100, kLambda};
  const Run gun_t{"gundy", "tensor:4", 100, kLambda};
  const Run gun_g{"gundy", "grid:1,4,2", 100, kLambda};
  const Run l2_t{"transform-l2", "tensor:4", 50};
  const Run l2_g{"transform-l2", "grid:1,4,2", 50};
  const Run ksk{"ksk", "", 200, std::nullopt, IntRange{2, 4}, 8};
  return {
      {1, "Cuculescu tail constant", {cuc_t, cuc_g}, {"tail_excess"}, 60},
      {2, "Cuculescu commutation and excess", {cuc_t, cuc_g}, {"commutator", "excess"}},
      {3, "Gundy exact identities", {gun_t, gun_g}, {"reconstruction", "martingale_defect", "annihilation", "delta_r_gamma"}},
      {4, "Gundy normalized estimates", {gun_t, gun_g}, {"alpha_ratio", "beta_ratio", "gamma_ratio"}},
      {5, "CZ decomposition constants",
       {{"cz", "grid:1,4,2", 100}, {"cz", "grid:2,2,2", 100}},
       {"gd_excess", "bd_excess", "reconstruction"}},
      {6, "zeta measure and operator inequality",
       {{"zeta", "grid:1,4,2", 100}, {"zeta", "grid:2,2,2", 100}},
       {"measure_excess", "lemma_min_eig", "weak_min_eig"}},
      {7, "L2 transform identities", {l2_t, l2_g}, {"l2_identity", "l2_weighted"}},
      {8, "triangular truncation", {l2_t, l2_g}, {"delta_r_excess", "pythagoras"}},
      {9, "weak (1,1) envelope",
       {{"transform-weak11", "tensor:4", 20}, {"transform-weak11", "grid:1,4,2", 20}},
       {"row_ratio", "col_ratio"}},
      {10, "k_{s,k} oracle equivalence", {ksk}, {"residual"}},
      {11, "pseudo-localization decay", {{"pseudoloc-decay", "", 3, std::nullopt, IntRange{3, 8}, 10}}, {}, 300},
      {12, "paraproduct bound and vanishing",
       {{"paraproduct", "", 20, std::nullopt, std::nullopt, 8}, {"vanish", "", 12, std::nullopt, IntRange{2, 4}, 8}},
       {"bound_excess", "residual"}},
      {13, "Schur and Cotlar domination", {ksk}, {"domination_gap", "s1_normalized", "s2_normalized"}},
      {14, "noncommutative pseudo-localization",
       {{"nc-pseudoloc", "grid:1,6,2", 4, IntRange{0, 5}, IntRange{2, 4}}},
       {"ratio", "identity", "d1_difference"}},
      {15, "ergodic coefficients", {{"ergodic", "tensor:4", 20}}, {}},
      {16, "annuli identity and BMO ratio", {{"bmo-czo", "", 10, std::nullopt, std::nullopt, 8}}, {}},
  };
}

const Outcome& execute(const Run& run, std::map<std::string, Outcome>& cache) {
  const auto hit = cache.find(run.key());
  if (hit != cache.end()) return hit->second;
  ExperimentConfig cfg;
  cfg.experiment = run.experiment;
  if (!run.algebra.empty()) cfg.algebra = AlgebraSpec::parse(run.algebra);
  cfg.trials = run.trials;
  cfg.lambda_exp = run.lambda;
  cfg.s_range = run.s;
  cfg.depth = run.depth;
  const auto t0 = std::chrono::steady_clock::now();
  Outcome out;
  out.report = run_experiment(cfg);
  out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return cache.emplace(run.key(), std::move(out)).first->second;
}

bool evaluate(const Criterion& c, std::map<std::string, Outcome>& cache) {
  bool pass = true;
  double seconds = 0;
  std::string detail;
  try {
    for (const auto& run : c.runs) {
      const Outcome& o = execute(run, cache);
      seconds += o.seconds;
      const std::string where = run.experiment + (run.algebra.empty() ? "" : "@" + run.algebra);
      std::vector<const Assertion*> picked;
      if (c.checks.empty()) {
        for (const auto& a : o.report.assertions) picked.push_back(&a);
      } else {
        for (const auto& name : c.checks)
          if (const Assertion* a = o.report.find(name)) picked.push_back(a);
      }
      for (const Assertion* a : picked) {
        char buf[160];
        std::snprintf(buf, sizeof buf, "  %-5s %s %s = %.6g %s %.6g\n", a->pass ? "ok" : "FAIL", where.c_str(),
                      a->name.c_str(), a->measured, a->relation.c_str(), a->threshold);
        detail += buf;
        pass = pass && a->pass;
      }
    }
  } catch (const std::exception& e) {
    detail += std::string("  error: ") + e.what() + "\n";
    pass = false;
  }
  if (c.time_limit > 0) {
    char buf[96];
    const bool fast = seconds < c.time_limit;
    std::snprintf(buf, sizeof buf, "  %-5s runtime = %.1f s < %.0f s\n", fast ? "ok" : "FAIL", seconds, c.time_limit);
    detail += buf;
    pass = pass && fast;
  }
  std::printf("c%02d %s  %s (%.1f s)\n%s", c.id, pass ? "PASS" : "FAIL", c.title.c_str(), seconds, detail.c_str());
  std::fflush(stdout);
  return pass;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance criteria"};
  int only = 0;
  app.add_option("--criterion", only, "run a single criterion (1-16)")->check(CLI::Range(1, 16));
  CLI11_PARSE(app, argc, argv);

  std::map<std::string, Outcome> cache;
  int failed = 0, ran = 0;
  for (const auto& c : criteria()) {
    if (only && c.id != only) continue;
    ++ran;
    if (!evaluate(c, cache)) ++failed;
  }
  std::printf("%d of %d criteria passed\n", ran - failed, ran);
  return failed ? 1 : 0;
}
