#include "nclp/gundy.hpp"

#include <algorithm>
#include <cmath>

namespace nclp {

GundyParts gundy(const Martingale& f, double lambda) {
  if (!(lambda > 0)) throw ContractViolation("gundy: lambda must be positive");
  const auto& filt = f.filtration();
  CuculescuSequence seq = cuculescu(f, lambda);
  std::vector<Matrix> da, db, dg;
  for (int k = 0; k < f.levels(); ++k) {
    const Matrix prev = seq.before(k);
    const Matrix& q = seq.q[k];
    const Matrix a = q * f.d(k) * q;
    const Matrix ea = k == 0 ? Matrix::Zero(a.rows(), a.cols()) : filt.expect(a, k - 1);
    const Matrix c = prev * f.d(k) * prev;
    da.push_back(a - ea);
    db.push_back(c - a + ea);
    dg.push_back(f.d(k) - c);
  }
  return GundyParts{Martingale::from_differences(filt, std::move(da)), Martingale::from_differences(filt, std::move(db)),
                    Martingale::from_differences(filt, std::move(dg)), std::move(seq)};
}

GundyReport gundy_verify(const Martingale& f, const GundyParts& parts) {
  GundyReport r;
  const double lambda = parts.seq.lambda;
  const double sup = f.sup_l1();
  double alpha_sq = 0.0, beta_sum = 0.0;
  for (int k = 0; k < f.levels(); ++k) {
    alpha_sq = std::max(alpha_sq, std::pow(l2_norm(parts.alpha.f(k)), 2));
    beta_sum += schatten_norm(parts.beta.d(k), 1.0);
  }
  const Matrix q = q_lambda(parts.seq);
  const double gamma_mass = lambda * (1.0 - tau(q).real());
  if (sup > 0) {
    r.alpha_ratio = alpha_sq / (lambda * sup);
    r.beta_ratio = beta_sum / sup;
    r.gamma_ratio = gamma_mass / sup;
  }
  r.reconstruction =
      l2_norm(f.top_value() - (parts.alpha.top_value() + parts.beta.top_value() + parts.gamma.top_value()));
  r.alpha_defect = parts.alpha.martingale_defect();
  r.beta_defect = parts.beta.martingale_defect();
  r.gamma_defect = parts.gamma.martingale_defect();
  for (int k = 0; k < f.levels(); ++k) r.annihilation = std::max(r.annihilation, op_norm(q * parts.gamma.d(k) * q));
  return r;
}

ThmA1Split thmA1_decompose(const Martingale& f, const CoeffMatrix& xi, int l_min, int l_max) {
  const auto& filt = f.filtration();
  const Matrix& top = f.top_value();
  if (!is_hermitian(top, 1e-8 * (1.0 + op_norm(top))))
    throw ContractViolation("thmA1_decompose: martingale is not self-adjoint, cannot shift to positive");
  ThmA1Split out;
  out.shift = std::max(0.0, -min_eigenvalue(hermitian_part(top)));
  const Matrix id = Matrix::Identity(filt.dim(), filt.dim());
  const Martingale shifted = out.shift > 0 ? Martingale(filt, top + out.shift * id) : f;
  if (l_max < l_min) {
    l_max = l_min + 1;
    while (!(std::ldexp(1.0, l_max) > shifted.sup_linf())) ++l_max;
  }
  out.pi = pi_family(shifted, l_min, l_max);
  std::vector<DeltaSplit> splits;
  splits.reserve(static_cast<std::size_t>(xi.rows()));
  for (int k = 0; k < xi.rows(); ++k) splits.push_back(delta_split(f.d(k), out.pi));
  out.A.assign(static_cast<std::size_t>(xi.cols()), Matrix::Zero(filt.dim(), filt.dim()));
  out.B.assign(static_cast<std::size_t>(xi.cols()), Matrix::Zero(filt.dim(), filt.dim()));
  for (int m = 0; m < xi.cols(); ++m)
    for (int k = 0; k < xi.rows(); ++k) {
      if (xi(k, m) == cplx(0.0)) continue;
      out.A[m] += xi(k, m) * splits[k].row;
      out.B[m] += xi(k, m) * splits[k].col;
    }
  return out;
}

Weak11Report weak11_experiment(const Martingale& f, const CoeffMatrix& xi, int exp_lo, int exp_hi) {
  if (xi.row_bound() > 1.0 + 1e-12) throw ContractViolation("weak11_experiment: coefficient rows exceed 1");
  Weak11Report r;
  r.sup_l1 = f.sup_l1();
  if (r.sup_l1 == 0.0) return r;
  const ThmA1Split split = thmA1_decompose(f, xi);
  const Matrix row = row_square(split.A);
  const Matrix col = col_square(split.B);
  for (int e = exp_lo; e <= exp_hi; ++e) {
    const double lambda = std::ldexp(1.0, e);
    r.row_ratio = std::max(r.row_ratio, lambda * tail_trace(row, lambda) / r.sup_l1);
    r.col_ratio = std::max(r.col_ratio, lambda * tail_trace(col, lambda) / r.sup_l1);
  }
  r.row_weak = weak_l1(row) / r.sup_l1;
  r.col_weak = weak_l1(col) / r.sup_l1;
  return r;
}

CoeffMatrix ergodic_coeffs(int m_max, int k_max) {
  if (m_max < 1) throw ContractViolation("ergodic_coeffs: m_max must be >= 1");
  if (k_max < 0) k_max = m_max;
  Matrix xi = Matrix::Zero(k_max, m_max);
  for (int k = 1; k <= k_max; ++k)
    for (int m = k; m <= m_max; ++m)
      xi(k - 1, m - 1) = static_cast<double>(k) / (std::sqrt(static_cast<double>(m)) * (m + 1.0));
  return CoeffMatrix(xi);
}

double ergodic_row_sup(int k_max, int m_cut) {
  if (m_cut < k_max) throw ContractViolation("ergodic_row_sup: m_cut must be >= k_max");
  // suffix[m] = sum_{j=m}^{m_cut} 1/(j (j+1)^2), accumulated from the small end of the terms.
  std::vector<long double> suffix(static_cast<std::size_t>(m_cut) + 2, 0.0L);
  for (int m = m_cut; m >= 1; --m) {
    const long double mm = m;
    suffix[m] = suffix[m + 1] + 1.0L / (mm * (mm + 1) * (mm + 1));
  }
  const long double tail_per_k2 = 1.0L / (2.0L * m_cut * static_cast<long double>(m_cut));
  long double best = 0.0L;
  for (int k = 1; k <= k_max; ++k) {
    const long double kk = static_cast<long double>(k) * k;
    best = std::max(best, kk * (suffix[k] + tail_per_k2));
  }
  return static_cast<double>(best);
}

CoeffMatrix cross_coeffs(const CoeffMatrix& rho, const CoeffMatrix& eta) {
  if (rho.rows() != eta.rows()) throw ContractViolation("cross_coeffs: row count mismatch");
  const int M = rho.cols(), N = eta.cols();
  Matrix xi(rho.rows(), M * N);
  for (int k = 0; k < rho.rows(); ++k)
    for (int m = 0; m < M; ++m)
      for (int n = 0; n < N; ++n) xi(k, m * N + n) = rho(k, m) * eta(k, n);
  return CoeffMatrix(xi);
}

CrossReport cross_experiment(const Martingale& f, const CoeffMatrix& rho, const CoeffMatrix& eta, double p) {
  if (!rho.unit_rows(1e-10) || !eta.unit_rows(1e-10))
    throw ContractViolation("cross_experiment: rows of rho and eta must be unit");
  const CoeffMatrix xi = cross_coeffs(rho, eta);
  const OperatorFamily fam = transform_family(f, xi);
  const int M = rho.cols(), N = eta.cols();
  const int D = std::max(M, N);
  const int dim = f.filtration().dim();
  Matrix big = Matrix::Zero(dim * D, dim * D);
  for (int m = 0; m < M; ++m)
    for (int n = 0; n < N; ++n) big.block(m * dim, n * dim, dim, dim) = fam[m * N + n];
  CrossReport r;
  // tau (x) tr on M (x) B(l2): rescale the normalized trace by D.
  r.lhs = schatten_norm(big, p) * std::pow(static_cast<double>(D), 1.0 / p);
  r.rc = lp_rc_norm(fam, p);
  r.ratio = r.rc > 0 ? r.lhs / r.rc : 0.0;
  r.f_norm = schatten_norm(f.top_value(), p);
  return r;
}

}  // namespace nclp
