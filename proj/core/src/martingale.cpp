#include "nclp/martingale.hpp"

#include <algorithm>
#include <cmath>

namespace nclp {

Martingale::Martingale(const Filtration& filt, const Matrix& top_value) : filt_(filt) {
  if (top_value.rows() != filt.dim() || top_value.cols() != filt.dim())
    throw ContractViolation("Martingale: top value has wrong dimension");
  const int levels = filt.top() + 1;
  f_.reserve(levels);
  d_.reserve(levels);
  for (int k = 0; k < levels; ++k) {
    f_.push_back(filt.expect(top_value, k));
    d_.push_back(k == 0 ? f_[0] : Matrix(f_[k] - f_[k - 1]));
  }
}

Martingale Martingale::from_differences(const Filtration& filt, std::vector<Matrix> diffs) {
  if (static_cast<int>(diffs.size()) != filt.top() + 1)
    throw ContractViolation("Martingale::from_differences: need one difference per level");
  Martingale m(filt);
  m.d_ = std::move(diffs);
  Matrix acc = Matrix::Zero(filt.dim(), filt.dim());
  for (const auto& dk : m.d_) {
    if (dk.rows() != filt.dim() || dk.cols() != filt.dim())
      throw ContractViolation("Martingale::from_differences: dimension mismatch");
    acc += dk;
    m.f_.push_back(acc);
  }
  return m;
}

double Martingale::martingale_defect() const {
  double worst = 0.0;
  for (int k = 0; k < levels(); ++k)
    for (int j = 0; j <= k; ++j)
      worst = std::max(worst, (filt_.expect(f_[k], j) - f_[j]).cwiseAbs().maxCoeff());
  return worst;
}

double Martingale::sup_l1() const {
  double best = 0.0;
  for (const auto& fk : f_) best = std::max(best, schatten_norm(fk, 1.0));
  return best;
}

double Martingale::sup_linf() const {
  double best = 0.0;
  for (const auto& fk : f_) best = std::max(best, op_norm(fk));
  return best;
}

// ---------------------------------------------------------------------------

CoeffMatrix::CoeffMatrix(Matrix xi) : xi_(std::move(xi)), bound_(0.0) {
  for (int k = 0; k < rows(); ++k) bound_ = std::max(bound_, row_sq(k));
  if (!std::isfinite(bound_)) throw ContractViolation("CoeffMatrix: non-finite coefficients");
}

CoeffMatrix::CoeffMatrix(Matrix xi, double bound) : xi_(std::move(xi)), bound_(bound) {
  for (int k = 0; k < rows(); ++k)
    if (row_sq(k) > bound_ + 1e-12)
      throw ContractViolation("CoeffMatrix: row " + std::to_string(k) + " exceeds the declared bound");
}

CoeffMatrix CoeffMatrix::dirac(int k_max, int m_max) {
  Matrix xi = Matrix::Zero(k_max, m_max);
  for (int k = 0; k < std::min(k_max, m_max); ++k) xi(k, k) = 1.0;
  return CoeffMatrix(xi);
}

CoeffMatrix CoeffMatrix::signs(const std::vector<int>& eps) {
  Matrix xi = Matrix::Zero(static_cast<Eigen::Index>(eps.size()), 1);
  for (std::size_t k = 0; k < eps.size(); ++k) {
    if (eps[k] != 1 && eps[k] != -1) throw ContractViolation("CoeffMatrix::signs: entries must be +-1");
    xi(static_cast<Eigen::Index>(k), 0) = static_cast<double>(eps[k]);
  }
  return CoeffMatrix(xi);
}

CoeffMatrix CoeffMatrix::partition(const std::vector<int>& part, int m_max) {
  Matrix xi = Matrix::Zero(static_cast<Eigen::Index>(part.size()), m_max);
  for (std::size_t k = 0; k < part.size(); ++k) {
    if (part[k] < 0 || part[k] >= m_max) throw ContractViolation("CoeffMatrix::partition: block index out of range");
    xi(static_cast<Eigen::Index>(k), part[k]) = 1.0;
  }
  return CoeffMatrix(xi);
}

bool CoeffMatrix::unit_rows(double tol) const {
  for (int k = 0; k < rows(); ++k)
    if (std::abs(row_sq(k) - 1.0) > tol) return false;
  return true;
}

// ---------------------------------------------------------------------------

OperatorFamily transform_family(const Martingale& f, const CoeffMatrix& xi) {
  if (xi.rows() > f.levels())
    throw ContractViolation("transform_family: more coefficient rows than martingale differences");
  const int dim = f.filtration().dim();
  OperatorFamily out(static_cast<std::size_t>(xi.cols()), Matrix::Zero(dim, dim));
  for (int m = 0; m < xi.cols(); ++m)
    for (int k = 0; k < xi.rows(); ++k)
      if (xi(k, m) != cplx(0.0)) out[m] += xi(k, m) * f.d(k);
  return out;
}

Matrix transform_adjoint(const Filtration& filt, const OperatorFamily& g, const CoeffMatrix& xi) {
  if (static_cast<int>(g.size()) != xi.cols()) throw ContractViolation("transform_adjoint: family size mismatch");
  Matrix out = Matrix::Zero(filt.dim(), filt.dim());
  for (int m = 0; m < xi.cols(); ++m) {
    const Martingale gm(filt, g[m]);
    for (int k = 0; k < xi.rows(); ++k)
      if (xi(k, m) != cplx(0.0)) out += xi(k, m) * gm.d(k);
  }
  return out;
}

namespace {

Matrix gram_sum(const OperatorFamily& g, bool row) {
  if (g.empty()) throw ContractViolation("square function of an empty family");
  const auto n = g.front().rows();
  Matrix acc = Matrix::Zero(n, n);
  for (const auto& x : g) {
    if (x.rows() != n || x.cols() != n) throw ContractViolation("square function: dimension mismatch");
    acc.noalias() += row ? Matrix(x * x.adjoint()) : Matrix(x.adjoint() * x);
  }
  return acc;
}

}  // namespace

Matrix row_square(const OperatorFamily& g) { return psd_sqrt(gram_sum(g, true)); }
Matrix col_square(const OperatorFamily& g) { return psd_sqrt(gram_sum(g, false)); }

double lp_rc_norm(const OperatorFamily& g, double p) {
  if (!(p >= 2.0)) throw ContractViolation("lp_rc_norm: p must be >= 2 (use split_rc_upper_bound)");
  return std::max(schatten_norm(row_square(g), p), schatten_norm(col_square(g), p));
}

double split_rc_upper_bound(const OperatorFamily& a, const OperatorFamily& b, double p) {
  return schatten_norm(row_square(a), p) + schatten_norm(col_square(b), p);
}

double family_l2_sq(const OperatorFamily& g) {
  double acc = 0.0;
  for (const auto& x : g) acc += std::pow(l2_norm(x), 2);
  return acc;
}

BmoNorms bmo_norms(const Martingale& f) {
  const auto& filt = f.filtration();
  BmoNorms out;
  const int dim = filt.dim();
  for (int n = 1; n < f.levels(); ++n) {
    Matrix r = Matrix::Zero(dim, dim), c = Matrix::Zero(dim, dim);
    for (int k = n; k < f.levels(); ++k) {
      r.noalias() += f.d(k) * f.d(k).adjoint();
      c.noalias() += f.d(k).adjoint() * f.d(k);
    }
    out.row = std::max(out.row, std::sqrt(std::max(0.0, max_eigenvalue(filt.expect(r, n)))));
    out.col = std::max(out.col, std::sqrt(std::max(0.0, max_eigenvalue(filt.expect(c, n)))));
  }
  out.both = std::max(out.row, out.col);
  return out;
}

FunctionBmo function_bmo(const DyadicGrid& grid, const std::vector<Matrix>& cells) {
  if (static_cast<int>(cells.size()) != grid.cells()) throw ContractViolation("function_bmo: cell count mismatch");
  const int K = grid.depth();
  const int n = grid.n();
  FunctionBmo out;
  auto scan = [&](const std::vector<int>& members) {
    Matrix mean = Matrix::Zero(cells[0].rows(), cells[0].cols());
    for (int c : members) mean += cells[c];
    mean /= static_cast<double>(members.size());
    Matrix r = Matrix::Zero(mean.rows(), mean.rows()), s = Matrix::Zero(mean.cols(), mean.cols());
    for (int c : members) {
      const Matrix dev = cells[c] - mean;
      r.noalias() += dev * dev.adjoint();
      s.noalias() += dev.adjoint() * dev;
    }
    r /= static_cast<double>(members.size());
    s /= static_cast<double>(members.size());
    out.row = std::max(out.row, std::sqrt(std::max(0.0, max_eigenvalue(r))));
    out.col = std::max(out.col, std::sqrt(std::max(0.0, max_eigenvalue(s))));
  };
  for (int level = 0; level < K; ++level) {
    const int span = 1 << (K - level);
    const int per_side = 1 << level;
    const int shifts = level == 0 ? 1 : (1 << n);
    for (int sh = 0; sh < shifts; ++sh) {
      const int sx = (sh & 1) ? span / 2 : 0;
      const int sy = (sh & 2) ? span / 2 : 0;
      for (int a = 0; a < per_side; ++a)
        for (int b = 0; b < (n == 2 ? per_side : 1); ++b) {
          std::vector<int> members;
          for (int i = 0; i < span; ++i)
            for (int j = 0; j < (n == 2 ? span : 1); ++j)
              members.push_back(grid.cell_index({a * span + i + sx, b * span + j + sy}));
          scan(members);
        }
    }
  }
  return out;
}

double l2_identity_check(const Martingale& f, const CoeffMatrix& xi) {
  if (!xi.unit_rows(1e-12)) throw ContractViolation("l2_identity_check: rows must have unit square sum");
  return l2_weighted_residual(f, xi);
}

double l2_weighted_residual(const Martingale& f, const CoeffMatrix& xi) {
  const auto fam = transform_family(f, xi);
  double rhs = 0.0;
  for (int k = 0; k < xi.rows(); ++k) rhs += xi.row_sq(k) * std::pow(l2_norm(f.d(k)), 2);
  return std::abs(family_l2_sq(fam) - rhs);
}

double rademacher_square_moment(const Martingale& f, const CoeffMatrix& xi) {
  const int K = xi.rows();
  std::vector<Matrix> sq(static_cast<std::size_t>(K));
  for (int k = 0; k < K; ++k) sq[k] = f.d(k).adjoint() * f.d(k);
  double acc = 0.0;
  for (int a = 0; a < K; ++a)
    for (int b = 0; b < K; ++b) {
      const auto ra = xi.matrix().row(a), rb = xi.matrix().row(b);
      cplx ab = 0.0, abbar = 0.0;
      double diag = 0.0;
      for (int m = 0; m < xi.cols(); ++m) {
        ab += ra(m) * rb(m);
        abbar += ra(m) * std::conj(rb(m));
        diag += std::norm(ra(m)) * std::norm(rb(m));
      }
      const double moment = ra.squaredNorm() * rb.squaredNorm() + std::norm(ab) + std::norm(abbar) - 2.0 * diag;
      acc += moment * tau(sq[a] * sq[b]).real();
    }
  return acc;
}

}  // namespace nclp
