#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>

#include "nclp/cuculescu.hpp"
#include "nclp/czkit.hpp"
#include "nclp/gundy.hpp"
#include "nclp/harness.hpp"
#include "nclp/martingale.hpp"
#include "nclp/pseudoloc.hpp"
#include "nclp/random.hpp"

namespace nclp {

namespace {

// Envelope for inequalities stated without explicit constants.
constexpr double kEnvelope = 64.0;

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", x);
  return buf;
}

struct Check {
  std::string metric;
  bool upper;  // metric <= threshold, else metric >= threshold
  double threshold;
};

struct Setup {
  AlgebraSpec algebra;
  int trials = 1;
  IntRange lambda{0, 0};
  IntRange s{0, 0};
  int depth = 0;
};

class Suite {
 public:
  Suite(const ExperimentConfig& cfg, std::string name) : cfg_(cfg) { rep_.experiment = std::move(name); }

  // Fills the stamped configuration; uses_algebra is false for the scalar kernel suites.
  Setup setup(const char* algebra, int trials, IntRange lambda, IntRange s, int depth, bool uses_algebra = true) {
    Setup st;
    st.algebra = cfg_.algebra.value_or(AlgebraSpec::parse(algebra));
    st.algebra.validate();
    if (cfg_.trials < 0) throw UsageError("trial count must be >= 1");
    st.trials = cfg_.trials > 0 ? cfg_.trials : trials;
    st.lambda = cfg_.lambda_exp.value_or(lambda);
    st.s = cfg_.s_range.value_or(s);
    st.depth = cfg_.depth > 0 ? cfg_.depth : depth;
    if (uses_algebra) rep_.config_strings.push_back({"algebra", st.algebra.str()});
    rep_.config_strings.push_back({"seed", std::to_string(cfg_.seed)});
    rep_.config_strings.push_back({"lambda_exp", st.lambda.str()});
    rep_.config_strings.push_back({"s", st.s.str()});
    rep_.config_strings.push_back({"kernel", kernel_family_name(cfg_.kernel)});
    rep_.config_numbers.push_back({"trials", st.trials});
    rep_.config_numbers.push_back({"gamma", cfg_.gamma});
    if (st.depth > 0) rep_.config_numbers.push_back({"depth", st.depth});
    if (uses_algebra) {
      rep_.environment.push_back({"dim", std::to_string(st.algebra.dim())});
      rep_.environment.push_back({"top_level", std::to_string(st.algebra.top())});
    } else {
      rep_.environment.push_back({"grid", "n=1,K=" + std::to_string(st.depth)});
      rep_.environment.push_back({"cells", std::to_string(1 << st.depth)});
    }
    return st;
  }

  // Registers a per-trial check; the threshold can be overridden by name.
  void check_le(const std::string& metric, double threshold) { add(metric, true, threshold); }
  void check_ge(const std::string& metric, double threshold) { add(metric, false, threshold); }

  double tol(const std::string& name, double fallback) {
    const double v = cfg_.tol(name, fallback);
    rep_.environment.push_back({"tolerance." + name, fmt(v)});
    return v;
  }

  TrialRecord& trial(int id, std::string digest) {
    rep_.trials.push_back({id, std::move(digest), {}, true});
    return rep_.trials.back();
  }

  Report& report() { return rep_; }
  const ExperimentConfig& cfg() const { return cfg_; }

  Report finish() {
    for (auto& t : rep_.trials)
      for (const auto& c : checks_)
        for (const auto& [name, v] : t.metrics)
          if (name == c.metric && !(c.upper ? v <= c.threshold : v >= c.threshold)) t.pass = false;
    for (const auto& c : checks_) {
      double measured = c.upper ? -kInf : kInf;
      bool seen = false;
      for (const auto& t : rep_.trials)
        for (const auto& [name, v] : t.metrics)
          if (name == c.metric) {
            measured = c.upper ? std::max(measured, v) : std::min(measured, v);
            seen = true;
          }
      if (!seen) measured = std::nan("");
      if (c.upper)
        rep_.assert_le(c.metric, measured, c.threshold);
      else
        rep_.assert_ge(c.metric, measured, c.threshold);
    }
    return std::move(rep_);
  }

 private:
  void add(const std::string& metric, bool upper, double threshold) {
    const double t = cfg_.tol(metric, threshold);
    checks_.push_back({metric, upper, t});
  }

  const ExperimentConfig& cfg_;
  Report rep_;
  std::vector<Check> checks_;
};

void put(TrialRecord& t, const std::string& name, double value) { t.metrics.push_back({name, value}); }

void put_max(TrialRecord& t, const std::string& name, double value) {
  for (auto& [n, v] : t.metrics)
    if (n == name) {
      v = std::max(v, value);
      return;
    }
  t.metrics.push_back({name, value});
}

void put_min(TrialRecord& t, const std::string& name, double value) {
  for (auto& [n, v] : t.metrics)
    if (n == name) {
      v = std::min(v, value);
      return;
    }
  t.metrics.push_back({name, value});
}

// Smallest l > l_min with 2^l > sup.
int auto_level(double sup, int l_min) {
  int l = l_min + 1;
  while (!(std::ldexp(1.0, l) > sup)) ++l;
  return l;
}

CoeffMatrix coeffs_for_trial(int i, int rows, int cols, std::uint64_t seed) {
  switch (i % 4) {
    case 0:
      return random_coeffs(rows, cols, seed, RowNorm::LeOne);
    case 1:
      return random_coeffs(rows, cols, seed, RowNorm::EqOne);
    case 2:
      return random_partition_coeffs(rows, cols, seed);
    default:
      return CoeffMatrix::dirac(rows, cols);
  }
}

HilbertKernel kernel_for(KernelFamily family, int K) {
  switch (family) {
    case KernelFamily::LpBumps:
      return lp_bump_kernel(K);
    case KernelFamily::Hilbert:
      return hilbert_kernel();
    default:
      throw UsageError("kernel '" + kernel_family_name(family) + "' has no pointwise evaluator");
  }
}

void require_scalar_depth(int K, int lo) {
  if (K < lo || K > 14) throw UsageError("depth must lie in " + std::to_string(lo) + "..14");
}

// Sup over the lambda grid of lambda tau(x > lambda) / norm.
double weak_ratio(const Matrix& x, const IntRange& lam, double norm) {
  double best = 0.0;
  for (int e = lam.lo; e <= lam.hi; ++e) {
    const double l = std::ldexp(1.0, e);
    best = std::max(best, l * tail_trace(x, l) / norm);
  }
  return best;
}

Report run_norms(const ExperimentConfig& cfg) {
  Suite suite(cfg, "norms");
  const Setup st = suite.setup("tensor:3", 20, {0, 0}, {0, 0}, 0);
  const Filtration filt(st.algebra);
  suite.check_le("l2_trace_residual", 1e-10);
  suite.check_le("holder_excess", 1e-10);
  suite.check_le("monotone_excess", 1e-10);
  suite.check_le("triangle_excess", 1e-10);
  suite.check_le("mu_integral_residual", 1e-10);
  suite.check_le("weak_excess", 1e-10);
  for (int i = 0; i < st.trials; ++i) {
    Rng rng(trial_seed(cfg.seed, i));
    const Matrix a = random_element(rng, filt);
    const Matrix b = random_element(rng, filt);
    auto& t = suite.trial(i, digest_combine(digest(a), digest(b)));
    const double n1 = schatten_norm(a, 1), n2 = schatten_norm(a, 2), n4 = schatten_norm(a, 4), ninf = op_norm(a);
    put(t, "norm_1", n1);
    put(t, "norm_2", n2);
    put(t, "norm_4", n4);
    put(t, "norm_inf", ninf);
    put(t, "l2_trace_residual", std::abs(n2 * n2 - tau(a.adjoint() * a).real()) / std::max(1.0, n2 * n2));
    put(t, "holder_excess", schatten_norm(a * b, 1) - n2 * schatten_norm(b, 2));
    put(t, "monotone_excess", std::max({n1 - n2, n2 - n4, n4 - ninf}));
    double tri = -kInf;
    for (double p : {1.0, 3.0}) tri = std::max(tri, schatten_norm(a + b, p) - schatten_norm(a, p) - schatten_norm(b, p));
    put(t, "triangle_excess", tri);
    put(t, "mu_integral_residual", std::abs(mu_function(a).integral() - n1));
    put(t, "weak_excess", weak_l1(a) - n1);
  }
  return suite.finish();
}

Report run_cuculescu(const ExperimentConfig& cfg) {
  Suite suite(cfg, "cuculescu");
  const Setup st = suite.setup("tensor:4", 100, {-2, 4}, {0, 0}, 0);
  suite.check_le("tail_excess", 1e-8);
  suite.check_le("commutator", 1e-8);
  suite.check_le("excess", 1e-8);
  suite.check_le("decrease_defect", 1e-8);
  for (int i = 0; i < st.trials; ++i) {
    const Martingale f = random_positive_martingale(st.algebra, trial_seed(cfg.seed, i));
    auto& t = suite.trial(i, digest(f.top_value()));
    const double sup = f.sup_l1();
    Matrix prev_q;
    for (int e = st.lambda.lo; e <= st.lambda.hi; ++e) {
      const CuculescuSequence seq = cuculescu(f, std::ldexp(1.0, e));
      const CuculescuReport r = cuculescu_verify(f, seq);
      put_max(t, "tail_ratio", r.tail_ratio);
      put_max(t, "tail_excess", r.tail - sup);
      put_max(t, "commutator", r.max_commutator);
      put_max(t, "excess", r.max_excess);
      put_max(t, "decrease_defect", r.max_decrease_defect);
      // q(lambda) <= q(lambda') for lambda < lambda' is measured, not asserted.
      const Matrix q = q_lambda(seq);
      if (prev_q.size()) put_max(t, "q_monotone_defect", op_norm(prev_q - prev_q * q));
      prev_q = q;
    }
  }
  return suite.finish();
}

Report run_gundy(const ExperimentConfig& cfg) {
  Suite suite(cfg, "gundy");
  const Setup st = suite.setup("tensor:4", 100, {-2, 4}, {0, 0}, 0);
  suite.check_le("reconstruction", 1e-10);
  suite.check_le("martingale_defect", 1e-10);
  suite.check_le("annihilation", 1e-10);
  suite.check_le("delta_r_gamma", 1e-10);
  suite.check_le("alpha_ratio", kEnvelope);
  suite.check_le("beta_ratio", kEnvelope);
  suite.check_le("gamma_ratio", 1.0 + 1e-8);
  for (int i = 0; i < st.trials; ++i) {
    const Martingale f = random_positive_martingale(st.algebra, trial_seed(cfg.seed, i));
    auto& t = suite.trial(i, digest(f.top_value()));
    const int l_max = std::max(st.lambda.hi, auto_level(f.sup_linf(), st.lambda.lo));
    const PiFamily pi = pi_family(f, st.lambda.lo, l_max);
    for (int e = st.lambda.lo; e <= st.lambda.hi; ++e) {
      const GundyParts parts = gundy(f, std::ldexp(1.0, e));
      const GundyReport r = gundy_verify(f, parts);
      put_max(t, "alpha_ratio", r.alpha_ratio);
      put_max(t, "beta_ratio", r.beta_ratio);
      put_max(t, "gamma_ratio", r.gamma_ratio);
      put_max(t, "reconstruction", r.reconstruction);
      put_max(t, "martingale_defect", std::max({r.alpha_defect, r.beta_defect, r.gamma_defect}));
      put_max(t, "annihilation", r.annihilation);
      double dr = 0.0;
      for (int k = 0; k < f.levels(); ++k)
        dr = std::max(dr, delta_trunc(parts.gamma.d(k), pi, e).cwiseAbs().maxCoeff());
      put_max(t, "delta_r_gamma", dr);
    }
  }
  return suite.finish();
}

Report run_transform_weak11(const ExperimentConfig& cfg) {
  Suite suite(cfg, "transform-weak11");
  const Setup st = suite.setup("tensor:4", 20, {-4, 10}, {0, 0}, 0);
  suite.check_le("row_ratio", kEnvelope);
  suite.check_le("col_ratio", kEnvelope);
  for (int i = 0; i < st.trials; ++i) {
    const std::uint64_t ts = trial_seed(cfg.seed, i);
    const Martingale f = random_positive_martingale(st.algebra, ts);
    const CoeffMatrix xi = coeffs_for_trial(i, f.levels(), 6, splitmix64(ts));
    auto& t = suite.trial(i, digest_combine(digest(f.top_value()), digest(xi.matrix())));
    const Weak11Report r = weak11_experiment(f, xi, st.lambda.lo, st.lambda.hi);
    put(t, "coeff_kind", i % 4);
    put(t, "row_ratio", r.row_ratio);
    put(t, "col_ratio", r.col_ratio);
    put(t, "row_weak", r.row_weak);
    put(t, "col_weak", r.col_weak);
  }
  return suite.finish();
}

Report run_transform_l2(const ExperimentConfig& cfg) {
  Suite suite(cfg, "transform-l2");
  const Setup st = suite.setup("tensor:4", 20, {0, 0}, {0, 0}, 0);
  suite.check_le("l2_identity", 1e-10);
  suite.check_le("l2_weighted", 1e-10);
  suite.check_le("delta_r_excess", 1e-10);
  suite.check_le("pythagoras", 1e-10);
  const Filtration filt(st.algebra);
  for (int i = 0; i < st.trials; ++i) {
    const std::uint64_t ts = trial_seed(cfg.seed, i);
    const Martingale f = random_positive_martingale(st.algebra, ts);
    const CoeffMatrix unit = random_coeffs(f.levels(), 5, splitmix64(ts), RowNorm::EqOne);
    const CoeffMatrix weighted = random_coeffs(f.levels(), 5, splitmix64(ts + 1), RowNorm::LeOne);
    Rng rng(splitmix64(ts + 2));
    const Matrix x = random_element(rng, filt);
    auto& t = suite.trial(i, digest_combine(digest(f.top_value()), digest(x)));
    const double fsq = std::pow(l2_norm(f.top_value()), 2);
    put(t, "l2_identity", l2_identity_check(f, unit) / fsq);
    put(t, "l2_weighted", l2_weighted_residual(f, weighted) / fsq);
    const PiFamily pi = pi_family(f, 0, auto_level(f.sup_linf(), 0));
    const double xn = l2_norm(x);
    double excess = -kInf;
    for (int l = pi.l_min; l <= pi.l_max; ++l) excess = std::max(excess, l2_norm(delta_trunc(x, pi, l)) - xn);
    put(t, "delta_r_excess", excess);
    const DeltaSplit ds = delta_split(x, pi);
    put(t, "pythagoras", std::abs(std::pow(l2_norm(ds.row), 2) + std::pow(l2_norm(ds.col), 2) - xn * xn));
    put(t, "rademacher_moment", rademacher_square_moment(f, unit));
  }
  return suite.finish();
}

Report run_bmo(const ExperimentConfig& cfg) {
  Suite suite(cfg, "bmo");
  const Setup st = suite.setup("tensor:4", 20, {0, 0}, {0, 0}, 0);
  suite.check_le("bmo_over_linf", 2.0 + 1e-10);
  for (int i = 0; i < st.trials; ++i) {
    const Martingale f = random_positive_martingale(st.algebra, trial_seed(cfg.seed, i));
    auto& t = suite.trial(i, digest(f.top_value()));
    const BmoNorms b = bmo_norms(f);
    put(t, "bmo_row", b.row);
    put(t, "bmo_col", b.col);
    put(t, "bmo_over_linf", b.both / op_norm(f.top_value()));
  }
  return suite.finish();
}

Report run_ergodic(const ExperimentConfig& cfg) {
  Suite suite(cfg, "ergodic");
  const Setup st = suite.setup("tensor:4", 20, {-4, 10}, {0, 0}, 0);
  suite.check_le("row_sup", 1.0);
  suite.check_le("l2_weighted", 1e-10);
  suite.check_le("row_ratio", kEnvelope);
  suite.check_le("col_ratio", kEnvelope);
  {
    const int k_max = 10000, m_cut = 1000000;
    auto& t = suite.trial(-1, digest_combine(std::to_string(k_max), std::to_string(m_cut)));
    put(t, "row_sup", ergodic_row_sup(k_max, m_cut));
  }
  for (int i = 0; i < st.trials; ++i) {
    const Martingale f = random_positive_martingale(st.algebra, trial_seed(cfg.seed, i));
    const CoeffMatrix xi = ergodic_coeffs(4 * f.levels(), f.levels());
    auto& t = suite.trial(i, digest(f.top_value()));
    const double fsq = std::pow(l2_norm(f.top_value()), 2);
    put(t, "l2_weighted", l2_weighted_residual(f, xi) / fsq);
    const Weak11Report r = weak11_experiment(f, CoeffMatrix(xi.matrix(), 1.0), st.lambda.lo, st.lambda.hi);
    put(t, "row_ratio", r.row_ratio);
    put(t, "col_ratio", r.col_ratio);
  }
  return suite.finish();
}

Report run_cross(const ExperimentConfig& cfg) {
  Suite suite(cfg, "cross");
  const Setup st = suite.setup("tensor:3", 10, {0, 0}, {0, 0}, 0);
  suite.check_le("ratio_p4", kEnvelope);
  suite.check_ge("ratio_p4", 1.0 / kEnvelope);
  for (int i = 0; i < st.trials; ++i) {
    const std::uint64_t ts = trial_seed(cfg.seed, i);
    const Martingale f = random_positive_martingale(st.algebra, ts);
    const CoeffMatrix rho = random_coeffs(f.levels(), 3, splitmix64(ts), RowNorm::EqOne);
    const CoeffMatrix eta = random_coeffs(f.levels(), 3, splitmix64(ts + 1), RowNorm::EqOne);
    auto& t = suite.trial(i, digest(f.top_value()));
    for (double p : {2.0, 4.0}) {
      const CrossReport r = cross_experiment(f, rho, eta, p);
      const std::string tag = p == 2.0 ? "_p2" : "_p4";
      put(t, "lhs" + tag, r.lhs);
      put(t, "rc" + tag, r.rc);
      put(t, "ratio" + tag, r.ratio);
    }
  }
  return suite.finish();
}

Report run_cz(const ExperimentConfig& cfg) {
  Suite suite(cfg, "cz");
  const Setup st = suite.setup("grid:1,4,2", 100, {-2, 4}, {0, 0}, 0);
  const Filtration filt(st.algebra);
  if (!filt.is_grid()) throw UsageError("cz needs a grid algebra");
  suite.check_le("gd_excess", 1e-8);
  suite.check_le("bd_excess", 1e-8);
  suite.check_le("reconstruction", 1e-10);
  suite.check_le("bd_mean_defect", 1e-10);
  suite.check_le("disjointness", 1e-8);
  for (int i = 0; i < st.trials; ++i) {
    Rng rng(trial_seed(cfg.seed, i));
    const Matrix f = random_positive(rng, filt);
    auto& t = suite.trial(i, digest(f));
    for (int e = st.lambda.lo; e <= st.lambda.hi; ++e) {
      const CZParts parts = cz_decompose(filt, f, std::ldexp(1.0, e));
      const CZReport r = cz_verify(filt, f, parts);
      put_max(t, "gd_ratio", r.gd_sq / r.gd_bound);
      put_max(t, "bd_ratio", r.bd_sum / r.bd_bound);
      put_max(t, "gd_excess", r.gd_sq - r.gd_bound);
      put_max(t, "bd_excess", r.bd_sum - r.bd_bound);
      put_max(t, "reconstruction", r.reconstruction);
      put_max(t, "bd_mean_defect", r.bd_mean_defect);
      put_max(t, "disjointness", r.disjointness);
    }
  }
  return suite.finish();
}

Report run_zeta(const ExperimentConfig& cfg) {
  Suite suite(cfg, "zeta");
  const Setup st = suite.setup("grid:1,4,2", 100, {-2, 4}, {0, 0}, 0);
  const Filtration filt(st.algebra);
  if (!filt.is_grid()) throw UsageError("zeta needs a grid algebra");
  suite.check_le("measure_excess", 1e-8);
  suite.check_ge("lemma_min_eig", -1e-8);
  suite.check_ge("weak_min_eig", -1e-8);
  suite.check_le("below_levels", 1e-8);
  for (int i = 0; i < st.trials; ++i) {
    Rng rng(trial_seed(cfg.seed, i));
    const Matrix f = random_positive(rng, filt);
    auto& t = suite.trial(i, digest(f));
    for (int e = st.lambda.lo; e <= st.lambda.hi; ++e) {
      const CZParts parts = cz_decompose(filt, f, std::ldexp(1.0, e));
      const ZetaData z = zeta(filt, parts);
      const ZetaReport r = zeta_verify(filt, f, parts, z);
      put_max(t, "measure_ratio", r.measure / r.measure_bound);
      put_max(t, "measure_excess", r.measure - r.measure_bound);
      put_min(t, "lemma_min_eig", r.lemma_min_eig);
      put_min(t, "weak_min_eig", r.weak_min_eig);
      put_max(t, "below_levels", r.below_levels);
    }
  }
  return suite.finish();
}

Report run_thmB1(const ExperimentConfig& cfg) {
  Suite suite(cfg, "thmB1");
  const Setup st = suite.setup("grid:1,4,2", 10, {-2, 8}, {0, 0}, 0);
  const Filtration filt(st.algebra);
  if (!filt.is_grid() || st.algebra.n != 1) throw UsageError("thmB1 needs a grid algebra with n = 1");
  const int d = st.algebra.d;
  const DiscOp op = normalize(assemble(kernel_for(cfg.kernel, st.algebra.K), filt.grid()));
  suite.check_le("absorption", 1e-10);
  suite.check_le("split_residual", 1e-10);
  suite.check_le("row_ratio", kEnvelope);
  suite.check_le("col_ratio", kEnvelope);
  for (int i = 0; i < st.trials; ++i) {
    Rng rng(trial_seed(cfg.seed, i));
    const Matrix f = random_positive(rng, filt);
    auto& t = suite.trial(i, digest(f));
    OperatorFamily tf;
    for (const auto& g : op.apply(to_grid_function(f, d))) tf.push_back(from_grid_function(g, d));
    const ThmB1Split split = thmB1_decompose(filt, tf, f, st.lambda.lo);
    double res = 0.0;
    for (std::size_t m = 0; m < tf.size(); ++m)
      res = std::max(res, (split.A[m] + split.psi_part[m] + split.B[m] - tf[m]).cwiseAbs().maxCoeff());
    const double l1 = schatten_norm(f, 1);
    put(t, "absorption", split.absorption);
    put(t, "split_residual", res);
    put(t, "row_ratio", weak_ratio(row_square(split.A), st.lambda, l1));
    put(t, "col_ratio", weak_ratio(col_square(split.B), st.lambda, l1));
    put(t, "psi_trace", tau(split.chain.residual).real());
  }
  return suite.finish();
}

Report run_pseudoloc_decay(const ExperimentConfig& cfg) {
  Suite suite(cfg, "pseudoloc-decay");
  const Setup st = suite.setup("tensor:1", 3, {0, 0}, {3, 8}, 10, false);
  require_scalar_depth(st.depth, 4);
  if (cfg.kernel == KernelFamily::Annuli) throw UsageError("pseudoloc-decay needs a pointwise kernel");
  const double tol_slope = suite.tol("slope_window", 0.15);
  suite.check_le("ratio", kEnvelope);
  suite.check_le("identity", 1e-9);
  const DecayReport d = decay_experiment(cfg.kernel, st.depth, st.s.lo, st.s.hi, st.trials, cfg.seed);
  for (const auto& row : d.rows) {
    auto& t = suite.trial(row.s, digest_combine(kernel_family_name(cfg.kernel), std::to_string(st.depth)));
    put(t, "s", row.s);
    put(t, "phi", row.phi);
    put(t, "psi", row.psi);
    put(t, "ratio", row.ratio);
    put(t, "identity", row.identity);
    put(t, "vacuous", row.vacuous ? 1.0 : 0.0);
  }
  Report out = suite.finish();
  const double target = -cfg.gamma / 2.0;
  out.assert_ge("phi_slope_lower", d.phi_slope, target - tol_slope);
  out.assert_le("phi_slope_upper", d.phi_slope, target + tol_slope);
  out.assert_ge("psi_slope_lower", d.psi_slope, target - tol_slope);
  out.assert_le("psi_slope_upper", d.psi_slope, target + tol_slope);
  // A vanishing Psi_s row cannot enter a log-slope fit.
  out.assert_le("psi_zero_rows", d.psi_zero_rows, 0);
  out.environment.push_back({"t_norm", fmt(d.t_norm)});
  out.environment.push_back({"rho_norm", fmt(d.rho_norm)});
  return out;
}

Report run_ksk(const ExperimentConfig& cfg) {
  Suite suite(cfg, "ksk");
  const Setup st = suite.setup("tensor:1", 200, {0, 0}, {2, 4}, 8, false);
  require_scalar_depth(st.depth, 5);
  suite.check_le("residual", 1e-8);
  suite.check_ge("domination_gap", -1e-6);
  suite.check_le("s1_normalized", kEnvelope);
  suite.check_le("s2_normalized", kEnvelope);
  int id = 0;
  for (int K = st.depth - 2; K <= st.depth; ++K) {
    const DiscOp t = normalize(assemble(kernel_for(cfg.kernel, K), DyadicGrid(1, K)));
    for (int s = std::max(1, st.s.lo); s <= std::min(st.s.hi, K - 1); ++s) {
      std::vector<int> ks{0, (K - s) / 2, std::min(3, K - s), K - s};
      std::sort(ks.begin(), ks.end());
      ks.erase(std::unique(ks.begin(), ks.end()), ks.end());
      for (int k : ks) {
        const std::uint64_t ts = trial_seed(cfg.seed, static_cast<std::uint64_t>(10000 * K + 100 * s + k));
        auto& tr = suite.trial(id++, digest_combine(std::to_string(K), std::to_string(ts)));
        const KskReport r = ksk_check(t, s, k, st.trials, ts, cfg.gamma);
        put(tr, "K", K);
        put(tr, "s", s);
        put(tr, "k", k);
        put(tr, "pairs", r.pairs);
        put(tr, "residual", r.residual);
        if (k >= 3) put(tr, "size_ratio", r.size_ratio);
      }
    }
  }
  // Schur and Cotlar bounds against exact norms at the finest depth.
  const int K = st.depth;
  const DiscOp t = normalize(assemble(kernel_for(cfg.kernel, K), DyadicGrid(1, K)));
  {
    auto& tr = suite.trial(id++, digest_combine("T", std::to_string(K)));
    put(tr, "schur", schur_bound(t));
    put(tr, "norm", disc_norm_exact(t));
    put(tr, "domination_gap", schur_bound(t) - disc_norm_exact(t));
  }
  for (int s = std::max(1, st.s.lo); s <= std::min(st.s.hi, K - 1); ++s) {
    std::vector<DiscOp> family;
    double gap = kInf;
    for (int k = 0; k <= K - s; ++k) {
      family.push_back(lambda_sk(t, s, k));
      gap = std::min(gap, schur_bound(family.back()) - disc_norm_exact(family.back()));
    }
    const DiscOp phi = phi_s(t, s);
    const double norm = disc_norm_exact(phi);
    const double schur = schur_bound(phi);
    const double cotlar = cotlar_bound(family).bound;
    auto& tr = suite.trial(id++, digest_combine("Phi", std::to_string(s)));
    put(tr, "s", s);
    put(tr, "norm", norm);
    put(tr, "schur", schur);
    put(tr, "cotlar", cotlar);
    put(tr, "domination_gap", std::min({gap, schur - norm, cotlar - norm}));
  }
  for (const auto& row : schur_integrals_decay(t, std::max(1, st.s.lo), std::min(st.s.hi + 4, K - 1), cfg.gamma)) {
    auto& tr = suite.trial(id++, digest_combine("S", std::to_string(row.s)));
    put(tr, "s", row.s);
    put(tr, "s1", row.s1);
    put(tr, "s2", row.s2);
    put(tr, "s1_normalized", row.s1_normalized);
    put(tr, "s2_normalized", row.s2_normalized);
  }
  return suite.finish();
}

Report run_paraproduct(const ExperimentConfig& cfg) {
  Suite suite(cfg, "paraproduct");
  const Setup st = suite.setup("tensor:1", 20, {0, 0}, {0, 0}, 8, false);
  require_scalar_depth(st.depth, 2);
  const DyadicGrid grid(1, st.depth);
  const int C = grid.cells();
  suite.check_le("bound_excess", 1e-8);
  suite.check_le("adjoint_residual", 1e-10);
  suite.check_le("constant_symbol", 1e-12);
  for (int i = 0; i < st.trials; ++i) {
    Rng rng(trial_seed(cfg.seed, i));
    std::vector<RVector> rho(2, RVector(C));
    for (auto& r : rho)
      for (int x = 0; x < C; ++x) r(x) = rng.normal();
    RVector f(C);
    for (int x = 0; x < C; ++x) f(x) = rng.normal();
    RMatrix g(C, 2);
    for (int x = 0; x < C; ++x)
      for (int m = 0; m < 2; ++m) g(x, m) = rng.normal();
    auto& t = suite.trial(i, digest_combine(digest(rho[0]), digest(f)));
    const RMatrix pf = paraproduct(grid, rho, f);
    const double bmo = bmo_dyadic(grid, rho);
    const double fn = grid_l2(f);
    put(t, "bmo", bmo);
    put(t, "ratio", grid_l2(pf) / (bmo * fn));
    put(t, "bound_excess", grid_l2(pf) - bmo * fn);
    const double lhs = (pf.array() * g.array()).sum();
    const double rhs = f.dot(paraproduct_adjoint(grid, rho, g));
    put(t, "adjoint_residual", std::abs(lhs - rhs) / std::max(1.0, std::abs(lhs)));
    // The operator norm of Pi against the BMO constant, for drift tracking.
    const auto mats = paraproduct_matrices(grid, rho);
    RMatrix stacked(2 * C, C);
    stacked << mats[0], mats[1];
    put(t, "operator_ratio", Eigen::JacobiSVD<RMatrix>(stacked).singularValues()(0) / bmo);
    const std::vector<RVector> flat(2, RVector::Constant(C, rng.normal()));
    put(t, "constant_symbol", grid_l2(paraproduct(grid, flat, f)));
  }
  return suite.finish();
}

Report run_vanish(const ExperimentConfig& cfg) {
  Suite suite(cfg, "vanish");
  const Setup st = suite.setup("tensor:1", 12, {0, 0}, {2, 4}, 8, false);
  require_scalar_depth(st.depth, 5);
  if (st.s.lo < 1 || st.s.hi > st.depth - 3) throw UsageError("vanish: s must lie in 1..depth-3");
  const int K = st.depth;
  const DyadicGrid grid(1, K);
  RVector a(grid.cells());
  for (int x = 0; x < grid.cells(); ++x) a(x) = 1.0 + 0.5 * std::cos(2.0 * M_PI * grid.midpoint(x)[0]);
  const DiscOp t = normalize(row_modulated(assemble(kernel_for(cfg.kernel, K), grid), a));
  const DiscOp t0 = paraproduct_correction(t);
  double rho = 0.0, rho0 = 0.0;
  for (const auto& r : adjoint_one(t)) rho += grid_l2(r) * grid_l2(r);
  for (const auto& r : adjoint_one(t0)) rho0 += grid_l2(r) * grid_l2(r);
  suite.check_le("residual", 1e-10);
  suite.check_le("rho0_norm", 1e-10);
  int id = 0;
  for (int s = st.s.lo; s <= st.s.hi; ++s)
    for (int i = 0; i < st.trials; ++i) {
      const RVector f = localized_haar_function(grid, s + 2, trial_seed(cfg.seed, 1000u * s + i));
      auto& tr = suite.trial(id++, digest(f));
      put(tr, "s", s);
      // rho = T^* 1 is not constant here, so the vanishing is not forced by rho = 0.
      put(tr, "residual", vanish_check(t, f, s));
      put(tr, "rho_norm", std::sqrt(rho));
      put(tr, "rho0_norm", std::sqrt(rho0));
    }
  return suite.finish();
}

Report run_localization(const ExperimentConfig& cfg) {
  Suite suite(cfg, "localization");
  const Setup st = suite.setup("tensor:1", 8, {0, 0}, {4, 6}, 10, false);
  require_scalar_depth(st.depth, 7);
  const DyadicGrid grid(1, st.depth);
  const DiscOp t = normalize(assemble(kernel_for(cfg.kernel, st.depth), grid));
  suite.check_le("ratio", kEnvelope);
  suite.check_le("spread", kEnvelope);
  for (int i = 0; i < st.trials; ++i) {
    Rng rng(trial_seed(cfg.seed, i));
    const Point x0{rng.uniform(), 0.0};
    auto& tr = suite.trial(i, digest_combine(fmt(x0[0]), std::to_string(st.depth)));
    double lo = kInf, hi = 0.0;
    // r1 = 2^-q over the s range, r2 = 4 r1 and 8 r1 while r2 <= 1/2.
    for (int q = std::max(2, st.s.lo); q <= st.s.hi; ++q)
      for (int j = 2; j <= 3 && q - j >= 1; ++j) {
        const double r1 = std::ldexp(1.0, -q);
        const LocalizationResult r = localization_check(t, x0, r1, r1 * (1 << j));
        put(tr, "ratio_q" + std::to_string(q) + "_j" + std::to_string(j), r.ratio);
        lo = std::min(lo, r.ratio);
        hi = std::max(hi, r.ratio);
      }
    put(tr, "ratio", hi);
    put(tr, "spread", lo > 0 ? hi / lo : kInf);
  }
  return suite.finish();
}

Report run_nc_pseudoloc(const ExperimentConfig& cfg) {
  Suite suite(cfg, "nc-pseudoloc");
  const Setup st = suite.setup("grid:1,6,2", 4, {0, 5}, {2, 4}, 0);
  const Filtration filt(st.algebra);
  if (!filt.is_grid() || st.algebra.n != 1) throw UsageError("nc-pseudoloc needs a grid algebra with n = 1");
  const int K = st.algebra.K, d = st.algebra.d;
  if (st.s.lo < 1 || st.s.hi >= K) throw UsageError("nc-pseudoloc: s must lie in 1..K-1");
  const DiscOp t = normalize(assemble(kernel_for(cfg.kernel, K), filt.grid()));
  suite.check_le("ratio", kEnvelope);
  suite.check_le("identity", 1e-9);
  suite.check_le("d1_difference", 1e-9);
  int id = 0;
  for (int i = 0; i < st.trials; ++i) {
    Rng rng(trial_seed(cfg.seed, i));
    const Matrix h = random_spiked_positive(rng, filt, 1, 0.75);
    auto& tr = suite.trial(id++, digest(h));
    int nontrivial = 0, vacuous = 0;
    for (int e = st.lambda.lo; e <= st.lambda.hi; ++e) {
      const CZParts parts = cz_decompose(filt, h, std::ldexp(1.0, e));
      for (int s = st.s.lo; s <= st.s.hi; ++s) {
        Matrix f = Matrix::Zero(filt.dim(), filt.dim());
        std::vector<Matrix> q;
        for (int k = 0; k + s <= K; ++k) {
          const Matrix df = parts.df_at(k + s);
          const Matrix& qq = parts.q_at(k + s - 1);
          f += parts.p_at(k) * df * qq + qq * df * parts.p_at(k);
          q.push_back(parts.q_at(k));
        }
        const NcPseudolocResult r = nc_pseudoloc_check(t, f, d, q, s, cfg.gamma);
        if (r.vacuous) {
          ++vacuous;
          continue;
        }
        if (r.lhs > 1e-12) ++nontrivial;
        put_max(tr, "ratio", r.ratio);
        put_max(tr, "identity", r.identity);
        put_max(tr, "ratio_s" + std::to_string(s), r.ratio);
      }
    }
    put(tr, "nontrivial", nontrivial);
    put(tr, "vacuous", vacuous);
  }
  // d = 1: the compressed norm must reproduce the commutative check.
  const DyadicGrid fine(1, K + 2);
  const DiscOp tf = normalize(assemble(kernel_for(cfg.kernel, K + 2), fine));
  for (int s = st.s.lo; s <= st.s.hi && s + 3 < K + 2; ++s) {
    const RVector f = localized_haar_function(fine, s + 3, trial_seed(cfg.seed, 5000u + s));
    Matrix fm = Matrix::Zero(fine.cells(), fine.cells());
    for (int x = 0; x < fine.cells(); ++x) fm(x, x) = f(x);
    const NcPseudolocResult a = nc_pseudoloc_check(tf, fm, 1, omega_projections(fine, f, s), s, cfg.gamma);
    const PseudolocResult b = commutative_pseudoloc_check(tf, f, s, cfg.gamma);
    auto& tr = suite.trial(id++, digest(f));
    put(tr, "s", s);
    put(tr, "d1_nc_ratio", a.ratio);
    put(tr, "d1_comm_ratio", b.ratio);
    put(tr, "d1_difference", std::abs(a.ratio - b.ratio));
    put(tr, "d1_vacuous", b.vacuous ? 1.0 : 0.0);
  }
  return suite.finish();
}

Report run_bmo_czo(const ExperimentConfig& cfg) {
  Suite suite(cfg, "bmo-czo");
  const Setup st = suite.setup("tensor:1", 10, {0, 0}, {0, 0}, 8, false);
  require_scalar_depth(st.depth, 2);
  const int K = st.depth;
  const DyadicGrid grid(1, K);
  const int C = grid.cells();
  const DiscOp annuli = annuli_family(K);
  const bool with_kernel = cfg.kernel != KernelFamily::Annuli;
  const DiscOp op = with_kernel ? normalize(assemble(kernel_for(cfg.kernel, K), grid)) : annuli;
  suite.check_le("identity", 1e-10);
  suite.check_le("bmo_row_ratio", kEnvelope);
  suite.check_le("bmo_col_ratio", kEnvelope);
  auto cells_of = [C](const RMatrix& out) {
    std::vector<Matrix> cells;
    for (int x = 0; x < C; ++x) cells.push_back(out.row(x).transpose().cast<cplx>());
    return cells;
  };
  for (int i = 0; i < st.trials; ++i) {
    Rng rng(trial_seed(cfg.seed, i));
    RVector f(C);
    for (int x = 0; x < C; ++x) f(x) = 2.0 * rng.uniform() - 1.0;
    auto& tr = suite.trial(i, digest(f));
    const RMatrix mf = annuli.apply(f);
    const double centered = grid_l2(RVector(f.array() - f.mean()));
    const double fsq = grid_l2(f) * grid_l2(f);
    put(tr, "identity", std::abs(std::pow(grid_l2(mf), 2) - centered * centered) / fsq);
    const double linf = f.cwiseAbs().maxCoeff();
    const FunctionBmo b = function_bmo(grid, cells_of(mf));
    put(tr, "bmo_row_ratio", b.row / linf);
    put(tr, "bmo_col_ratio", b.col / linf);
    if (with_kernel) {
      const FunctionBmo bk = function_bmo(grid, cells_of(op.apply(f)));
      put(tr, "kernel_bmo_ratio", std::max(bk.row, bk.col) / linf);
    }
  }
  return suite.finish();
}

}  // namespace

const std::vector<ExperimentInfo>& experiment_registry() {
  static const std::vector<ExperimentInfo> registry{
      {"norms", "Schatten norms, Holder, mu_t and weak L1 on random elements", run_norms},
      {"cuculescu", "Cuculescu projections: tail constant 1, commutation, excess", run_cuculescu},
      {"gundy", "Gundy decomposition: exact identities and normalized estimates", run_gundy},
      {"transform-weak11", "weak (1,1) envelopes for martingale transform families", run_transform_weak11},
      {"transform-l2", "L2 transform identities and triangular truncation", run_transform_l2},
      {"bmo", "martingale BMO norms against the sup norm", run_bmo},
      {"ergodic", "ergodic coefficient rows and the induced transform suites", run_ergodic},
      {"cross", "cross-product transforms at p = 2 and 4", run_cross},
      {"cz", "Calderon-Zygmund decomposition constants", run_cz},
      {"zeta", "zeta projections: measure bound and operator inequality", run_zeta},
      {"thmB1", "singular integral splitting with absorption identity", run_thmB1},
      {"pseudoloc-decay", "decay of Phi_s and Psi_s in s, commutative check", run_pseudoloc_decay},
      {"ksk", "k_{s,k} kernels, Schur and Cotlar bounds", run_ksk},
      {"paraproduct", "dyadic paraproduct bound and adjoint", run_paraproduct},
      {"vanish", "vanishing of the paraproduct adjoint away from Sigma", run_vanish},
      {"localization", "testing against nested balls", run_localization},
      {"nc-pseudoloc", "noncommutative pseudo-localization with CZ projections", run_nc_pseudoloc},
      {"bmo-czo", "annuli identity and L-infinity to BMO ratios", run_bmo_czo},
  };
  return registry;
}

}  // namespace nclp
