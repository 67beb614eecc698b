#include "nclp/opcore.hpp"

#include <algorithm>
#include <cmath>

namespace nclp {

bool Interval::contains(double x) const {
  if (lo > hi) return false;
  if (std::isfinite(lo)) {
    if (std::abs(x - lo) <= kEigenMergeTol) return lo_closed;
    if (x < lo) return false;
  }
  if (std::isfinite(hi)) {
    if (std::abs(x - hi) <= kEigenMergeTol) return hi_closed;
    if (x > hi) return false;
  }
  return true;
}

TraceFunctional::TraceFunctional(std::vector<double> cell_weights, int block)
    : weights_(std::move(cell_weights)), block_(block) {
  if (block_ < 1) throw ContractViolation("TraceFunctional: block size must be >= 1");
}

TraceFunctional TraceFunctional::grid(int cells, int block) {
  return TraceFunctional(std::vector<double>(cells, 1.0 / cells), block);
}

cplx TraceFunctional::operator()(const Matrix& a) const {
  if (weights_.empty()) return tau(a);
  const auto cells = static_cast<Eigen::Index>(weights_.size());
  if (a.rows() != cells * block_ || a.cols() != a.rows())
    throw ContractViolation("TraceFunctional: dimension mismatch");
  cplx acc = 0.0;
  for (Eigen::Index c = 0; c < cells; ++c)
    acc += weights_[c] * a.block(c * block_, c * block_, block_, block_).trace() /
           static_cast<double>(block_);
  return acc;
}

cplx tau(const Matrix& a) {
  if (a.rows() != a.cols()) throw ContractViolation("tau: operator must be square");
  if (a.rows() == 0) return 0.0;
  return a.trace() / static_cast<double>(a.rows());
}

bool is_hermitian(const Matrix& a, double tol) {
  if (a.rows() != a.cols()) return false;
  return (a - a.adjoint()).cwiseAbs().maxCoeff() <= tol;
}

bool is_projection(const Matrix& p, double tol) {
  if (!is_hermitian(p, tol)) return false;
  return (p * p - p).cwiseAbs().maxCoeff() <= tol;
}

Matrix hermitian_part(const Matrix& a) { return 0.5 * (a + a.adjoint()); }

Matrix identity_like(const Matrix& a) { return Matrix::Identity(a.rows(), a.cols()); }

namespace {

void require_hermitian(const Matrix& h, const char* who) {
  if (h.rows() != h.cols()) throw ContractViolation(std::string(who) + ": operator must be square");
  const double scale = 1.0 + (h.size() ? h.cwiseAbs().maxCoeff() : 0.0);
  if (!is_hermitian(h, 1e-8 * scale))
    throw ContractViolation(std::string(who) + ": operator is not Hermitian");
}

}  // namespace

std::vector<SpectralComponent> spectral_decompose(const Matrix& h) {
  require_hermitian(h, "spectral_decompose");
  std::vector<SpectralComponent> out;
  if (h.rows() == 0) return out;
  Eigen::SelfAdjointEigenSolver<Matrix> es(hermitian_part(h));
  if (es.info() != Eigen::Success) throw NumericError("spectral_decompose: eigensolver failed");
  const auto& ev = es.eigenvalues();
  const auto& V = es.eigenvectors();
  const Eigen::Index n = ev.size();
  Eigen::Index start = 0;
  while (start < n) {
    Eigen::Index stop = start + 1;
    while (stop < n && ev(stop) - ev(stop - 1) <= kEigenMergeTol) ++stop;
    const auto cols = V.middleCols(start, stop - start);
    out.push_back({ev.segment(start, stop - start).mean(), cols * cols.adjoint()});
    start = stop;
  }
  return out;
}

Matrix spectral_projection(const Matrix& h, const Interval& interval) {
  require_hermitian(h, "spectral_projection");
  Eigen::SelfAdjointEigenSolver<Matrix> es(hermitian_part(h));
  if (es.info() != Eigen::Success) throw NumericError("spectral_projection: eigensolver failed");
  const auto& ev = es.eigenvalues();
  const auto& V = es.eigenvectors();
  Matrix p = Matrix::Zero(h.rows(), h.cols());
  for (Eigen::Index i = 0; i < ev.size(); ++i)
    if (interval.contains(ev(i))) p.noalias() += V.col(i) * V.col(i).adjoint();
  return p;
}

Matrix psd_sqrt(const Matrix& a) {
  return hermitian_apply(a, [](double x) { return std::sqrt(std::max(x, 0.0)); });
}

Matrix abs_op(const Matrix& f) { return psd_sqrt(f.adjoint() * f); }

RVector singular_values(const Matrix& f) {
  if (f.size() == 0) return RVector();
  Eigen::JacobiSVD<Matrix> svd(f);
  return svd.singularValues();
}

double min_eigenvalue(const Matrix& h) {
  require_hermitian(h, "min_eigenvalue");
  Eigen::SelfAdjointEigenSolver<Matrix> es(hermitian_part(h), Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

double max_eigenvalue(const Matrix& h) {
  require_hermitian(h, "max_eigenvalue");
  Eigen::SelfAdjointEigenSolver<Matrix> es(hermitian_part(h), Eigen::EigenvaluesOnly);
  return es.eigenvalues()(es.eigenvalues().size() - 1);
}

double tail_trace(const Matrix& f, double lambda) {
  if (!(lambda > 0)) throw ContractViolation("tail_trace: lambda must be positive");
  const RVector s = singular_values(f);
  if (s.size() == 0) return 0.0;
  Eigen::Index count = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i)
    if (Interval::above(lambda).contains(s(i))) ++count;
  return static_cast<double>(count) / static_cast<double>(f.cols());
}

double weak_l1(const Matrix& f) {
  const RVector s = singular_values(f);
  const double n = static_cast<double>(f.cols());
  double best = 0.0;
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    if (s(i) <= 0) continue;
    Eigen::Index count = 0;
    for (Eigen::Index j = 0; j < s.size(); ++j)
      if (s(j) >= s(i) - kEigenMergeTol) ++count;
    best = std::max(best, s(i) * static_cast<double>(count) / n);
  }
  return best;
}

double MuFunction::operator()(double t) const {
  if (t < 0) throw ContractViolation("mu_t: t must be nonnegative");
  for (std::size_t i = values.size(); i-- > 0;)
    if (t >= breaks[i]) return values[i];
  return 0.0;
}

double MuFunction::integral() const {
  double acc = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double right = i + 1 < breaks.size() ? breaks[i + 1] : 1.0;
    acc += values[i] * (right - breaks[i]);
  }
  return acc;
}

double MuFunction::sup_t_mu() const {
  double best = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double right = i + 1 < breaks.size() ? breaks[i + 1] : 1.0;
    best = std::max(best, right * values[i]);
  }
  return best;
}

MuFunction mu_function(const Matrix& a) {
  MuFunction mu;
  const RVector s = singular_values(a);
  const double n = static_cast<double>(a.cols());
  if (s.size() == 0) {
    mu.breaks = {0.0};
    mu.values = {0.0};
    return mu;
  }
  Eigen::Index i = 0;
  while (i < s.size()) {
    Eigen::Index j = i + 1;
    while (j < s.size() && s(i) - s(j) <= kEigenMergeTol) ++j;
    const double v = s.segment(i, j - i).mean();
    mu.breaks.push_back(static_cast<double>(i) / n);
    mu.values.push_back(v < kEigenMergeTol ? 0.0 : v);
    i = j;
  }
  // Drop trailing zero step merged into the previous one.
  while (mu.values.size() > 1 && mu.values.back() == 0.0 && mu.values[mu.values.size() - 2] == 0.0) {
    mu.values.pop_back();
    mu.breaks.pop_back();
  }
  return mu;
}

double schatten_norm(const Matrix& a, double p) {
  if (!(p >= 1.0)) throw ContractViolation("schatten_norm: p must be >= 1");
  const RVector s = singular_values(a);
  if (s.size() == 0) return 0.0;
  if (std::isinf(p)) return s.maxCoeff();
  const double n = static_cast<double>(a.cols());
  double acc = 0.0;
  for (Eigen::Index i = 0; i < s.size(); ++i) acc += std::pow(s(i), p);
  return std::pow(acc / n, 1.0 / p);
}

double op_norm(const Matrix& a) {
  const RVector s = singular_values(a);
  return s.size() ? s.maxCoeff() : 0.0;
}

double l2_norm(const Matrix& a) {
  if (a.size() == 0) return 0.0;
  return a.norm() / std::sqrt(static_cast<double>(a.cols()));
}

Matrix proj_meet(const std::vector<Matrix>& ps, double tol) {
  if (ps.empty()) throw ContractViolation("proj_meet: empty family");
  const Eigen::Index n = ps.front().rows();
  Matrix s = Matrix::Zero(n, n);
  for (const auto& p : ps) {
    if (p.rows() != n || p.cols() != n) throw ContractViolation("proj_meet: dimension mismatch");
    s += Matrix::Identity(n, n) - p;
  }
  Eigen::SelfAdjointEigenSolver<Matrix> es(hermitian_part(s));
  if (es.info() != Eigen::Success) throw NumericError("proj_meet: eigensolver failed");
  Matrix m = Matrix::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    if (es.eigenvalues()(i) < tol) m.noalias() += es.eigenvectors().col(i) * es.eigenvectors().col(i).adjoint();
  return m;
}

Matrix proj_join(const std::vector<Matrix>& ps, double tol) {
  if (ps.empty()) throw ContractViolation("proj_join: empty family");
  std::vector<Matrix> comp;
  comp.reserve(ps.size());
  for (const auto& p : ps) comp.push_back(identity_like(p) - p);
  const Matrix m = proj_meet(comp, tol);
  return identity_like(m) - m;
}

bool annihilation_check(const Matrix& p, const Matrix& f, double tol) {
  if (p.rows() != f.rows() || p.cols() != f.cols()) throw ContractViolation("annihilation_check: dimension mismatch");
  const double fn = op_norm(f);
  return op_norm(p * f * p) <= tol * fn;
}

Matrix range_basis(const Matrix& p, double tol) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(hermitian_part(p));
  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i)
    if (es.eigenvalues()(i) > tol) keep.push_back(i);
  Matrix u(p.rows(), static_cast<Eigen::Index>(keep.size()));
  for (std::size_t j = 0; j < keep.size(); ++j) u.col(static_cast<Eigen::Index>(j)) = es.eigenvectors().col(keep[j]);
  return u;
}

}  // namespace nclp
