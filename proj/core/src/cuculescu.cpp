#include "nclp/cuculescu.hpp"

#include <algorithm>
#include <cmath>

namespace nclp {

namespace {

Matrix identity_of(int dim) { return Matrix::Identity(dim, dim); }

void require_positive(const Martingale& f) {
  for (int k = 0; k < f.levels(); ++k) {
    const double scale = 1.0 + op_norm(f.f(k));
    if (min_eigenvalue(f.f(k)) < -1e-10 * scale)
      throw ContractViolation("cuculescu: martingale is not positive at level " + std::to_string(k));
  }
}

}  // namespace

Matrix CuculescuSequence::before(int k) const {
  if (k > 0) return q.at(static_cast<std::size_t>(k - 1));
  return identity();
}

Matrix CuculescuSequence::identity() const {
  if (q.empty()) return Matrix();
  return identity_of(static_cast<int>(q.front().rows()));
}

Matrix cuculescu_step(const Matrix& q_prev, const Matrix& f_k, double lambda, CuculescuConvention conv) {
  if (!(lambda > 0)) throw ContractViolation("cuculescu: lambda must be positive");
  const Eigen::Index n = f_k.rows();
  if (conv == CuculescuConvention::OpenNoMeet) {
    const Matrix c = q_prev * f_k * q_prev;
    return spectral_projection(hermitian_part(c), Interval::open_closed(0.0, lambda));
  }
  // Work inside the range of q_prev so the result sits below q_prev exactly.
  const Matrix u = range_basis(q_prev);
  if (u.cols() == 0) return Matrix::Zero(n, n);
  const Matrix c = hermitian_part(u.adjoint() * f_k * u);
  Eigen::SelfAdjointEigenSolver<Matrix> es(c);
  if (es.info() != Eigen::Success) throw NumericError("cuculescu_step: eigensolver failed");
  const Interval keep{-kInf, lambda, true, true};
  Matrix w(u.cols(), 0);
  std::vector<Eigen::Index> cols;
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i)
    if (keep.contains(es.eigenvalues()(i))) cols.push_back(i);
  w.resize(u.cols(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t j = 0; j < cols.size(); ++j) w.col(static_cast<Eigen::Index>(j)) = es.eigenvectors().col(cols[j]);
  const Matrix v = u * w;
  return v * v.adjoint();
}

CuculescuSequence cuculescu(const Martingale& f, double lambda, CuculescuConvention conv) {
  if (!(lambda > 0)) throw ContractViolation("cuculescu: lambda must be positive");
  require_positive(f);
  CuculescuSequence seq;
  seq.lambda = lambda;
  seq.convention = conv;
  Matrix prev = identity_of(f.filtration().dim());
  for (int k = 0; k < f.levels(); ++k) {
    prev = cuculescu_step(prev, f.f(k), lambda, conv);
    seq.q.push_back(prev);
  }
  return seq;
}

Matrix q_lambda(const CuculescuSequence& seq) {
  if (seq.q.empty()) throw ContractViolation("q_lambda: empty sequence");
  return proj_meet(seq.q);
}

CuculescuReport cuculescu_verify(const Martingale& f, const CuculescuSequence& seq) {
  CuculescuReport r;
  for (int k = 0; k < f.levels(); ++k) {
    const Matrix prev = seq.before(k);
    const Matrix& q = seq.q[k];
    const Matrix c = prev * f.f(k) * prev;
    r.max_commutator = std::max(r.max_commutator, op_norm(q * c - c * q));
    const Matrix excess = q * f.f(k) * q - seq.lambda * q;
    r.max_excess = std::max(r.max_excess, max_eigenvalue(hermitian_part(excess)));
    r.max_decrease_defect = std::max(r.max_decrease_defect, op_norm(q - q * prev));
  }
  const Matrix qm = q_lambda(seq);
  r.tail = seq.lambda * (1.0 - tau(qm).real());
  const double l1 = f.sup_l1();
  r.tail_ratio = l1 > 0 ? r.tail / l1 : 0.0;
  return r;
}

// ---------------------------------------------------------------------------

const Matrix& PiFamily::pi_k(int k) const {
  if (k <= l_min || k > l_max) throw ContractViolation("PiFamily::pi_k: index out of range");
  return pi[static_cast<std::size_t>(k - l_min - 1)];
}

const Matrix& PiFamily::w(int l) const {
  if (l < l_min) throw ContractViolation("PiFamily::w: level below the family range");
  if (l > l_max) return tail.back();
  return tail[static_cast<std::size_t>(l - l_min)];
}

std::vector<Matrix> PiFamily::blocks() const {
  std::vector<Matrix> out;
  out.reserve(pi.size() + 1);
  out.push_back(residual);
  out.insert(out.end(), pi.begin(), pi.end());
  return out;
}

PiFamily pi_chain(const std::vector<Matrix>& projs, int l_min) {
  if (projs.empty()) throw ContractViolation("pi_chain: empty chain");
  const Eigen::Index n = projs.front().rows();
  const Matrix id = identity_of(static_cast<int>(n));
  const double top_gap = op_norm(projs.back() - id);
  if (top_gap > 1e-8)
    throw ContractViolation("pi_chain: top projection is not the identity (gap " + std::to_string(top_gap) +
                            "); enlarge l_max");
  PiFamily fam;
  fam.l_min = l_min;
  fam.l_max = l_min + static_cast<int>(projs.size()) - 1;
  const std::size_t L = projs.size();
  fam.tail.assign(L, Matrix());
  fam.pi.assign(L - 1, Matrix());
  Matrix u = Matrix::Identity(n, n);
  fam.tail[L - 1] = id;
  for (std::size_t j = L - 1; j-- > 0;) {
    if (u.cols() == 0) {
      fam.tail[j] = Matrix::Zero(n, n);
      fam.pi[j] = Matrix::Zero(n, n);
      continue;
    }
    // Intersect range(projs[j]) with range(u) inside u-coordinates.
    const Matrix g = hermitian_part(u.adjoint() * (id - projs[j]) * u);
    Eigen::SelfAdjointEigenSolver<Matrix> es(g);
    std::vector<Eigen::Index> in, out;
    for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i)
      (es.eigenvalues()(i) < kMeetTol ? in : out).push_back(i);
    Matrix v_in(u.cols(), static_cast<Eigen::Index>(in.size()));
    Matrix v_out(u.cols(), static_cast<Eigen::Index>(out.size()));
    for (std::size_t i = 0; i < in.size(); ++i) v_in.col(static_cast<Eigen::Index>(i)) = es.eigenvectors().col(in[i]);
    for (std::size_t i = 0; i < out.size(); ++i) v_out.col(static_cast<Eigen::Index>(i)) = es.eigenvectors().col(out[i]);
    const Matrix b_out = u * v_out;
    fam.pi[j] = b_out * b_out.adjoint();
    u = u * v_in;
    fam.tail[j] = u * u.adjoint();
  }
  fam.residual = fam.tail[0];
  return fam;
}

PiFamily pi_family(const Martingale& f, int l_min, int l_max, CuculescuConvention conv) {
  if (l_max < l_min) throw ContractViolation("pi_family: empty range");
  const double sup = f.sup_linf();
  if (!(std::ldexp(1.0, l_max) > sup))
    throw ContractViolation("pi_family: 2^l_max must exceed |f|_inf = " + std::to_string(sup));
  std::vector<Matrix> projs;
  for (int s = l_min; s <= l_max; ++s) projs.push_back(q_lambda(cuculescu(f, std::ldexp(1.0, s), conv)));
  return pi_chain(projs, l_min);
}

Matrix w_ell(const Martingale& f, int l, int l_min, int l_max) { return pi_family(f, l_min, l_max).w(l); }

DeltaSplit delta_split(const Matrix& x, const PiFamily& pi) {
  const auto blocks = pi.blocks();
  DeltaSplit out{Matrix::Zero(x.rows(), x.cols()), Matrix::Zero(x.rows(), x.cols())};
  Matrix cum = Matrix::Zero(x.rows(), x.cols());
  for (const auto& b : blocks) {
    cum += b;
    out.row.noalias() += b * x * cum;
  }
  out.col = x - out.row;
  return out;
}

Matrix delta_trunc(const Matrix& x, const PiFamily& pi, int l) {
  if (l < pi.l_min) throw ContractViolation("delta_trunc: level below the family range");
  const auto blocks = pi.blocks();
  const int last = std::min(l, pi.l_max) - pi.l_min;
  Matrix out = Matrix::Zero(x.rows(), x.cols());
  Matrix cum = Matrix::Zero(x.rows(), x.cols());
  for (int i = 0; i <= last; ++i) {
    cum += blocks[static_cast<std::size_t>(i)];
    out.noalias() += blocks[static_cast<std::size_t>(i)] * x * cum;
  }
  return out;
}

}  // namespace nclp
