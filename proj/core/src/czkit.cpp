#include "nclp/czkit.hpp"

#include <algorithm>
#include <cmath>

namespace nclp {

namespace {

void require_grid(const Filtration& filt, const char* who) {
  if (!filt.is_grid()) throw ContractViolation(std::string(who) + ": needs a GridMatrix algebra");
}

bool is_identity(const Matrix& q) {
  return (q - Matrix::Identity(q.rows(), q.cols())).cwiseAbs().maxCoeff() <= 1e-8;
}

}  // namespace

Matrix CZParts::q_or_one(int k) const {
  if (k < first()) return Matrix::Identity(q.front().rows(), q.front().cols());
  return q_at(k);
}

Matrix CZParts::df_at(int k) const {
  if (k <= first()) throw ContractViolation("CZParts::df_at: level has no predecessor");
  return f_at(k) - f_at(k - 1);
}

CZParts cz_decompose(const Filtration& filt, const Matrix& f, double lambda) {
  require_grid(filt, "cz_decompose");
  if (!(lambda > 0)) throw ContractViolation("cz_decompose: lambda must be positive");
  const double scale = 1.0 + op_norm(f);
  if (!is_hermitian(f, 1e-8 * scale) || min_eigenvalue(hermitian_part(f)) < -1e-10 * scale)
    throw ContractViolation("cz_decompose: f must be positive");
  const int n = filt.spec().n;
  const int K = filt.top();
  const int dim = filt.dim();
  const Matrix id = Matrix::Identity(dim, dim);

  CZParts parts;
  parts.lambda = lambda;
  parts.depth = K;
  const Matrix f0 = filt.expect(f, 0);
  const double norm0 = op_norm(f0);
  while (std::ldexp(norm0, -n * parts.coarse) > lambda + kEigenMergeTol) {
    ++parts.coarse;
    if (parts.coarse > 2000) throw NumericError("cz_decompose: coarse levels did not stabilize");
  }
  Matrix prev = id;
  for (int k = -parts.coarse; k <= K; ++k) {
    Matrix fk = k < 0 ? Matrix(std::ldexp(1.0, n * k) * f0) : filt.expect(f, k);
    Matrix qk = cuculescu_step(prev, fk, lambda);
    parts.p.push_back(prev - qk);
    parts.f.push_back(std::move(fk));
    parts.q.push_back(qk);
    prev = std::move(qk);
  }
  parts.q_meet = proj_meet(parts.q);
  parts.m_lambda = parts.first() - 1;
  for (int k = parts.first(); k <= K; ++k)
    if (is_identity(parts.q_at(k))) parts.m_lambda = k;

  const Matrix& ftop = parts.f_at(K);
  const Matrix& q = parts.q_meet;
  const Matrix qp = id - q;
  parts.g_d = q * ftop * q;
  Matrix diag_f = Matrix::Zero(dim, dim);
  Matrix pairs = Matrix::Zero(dim, dim);
  parts.b_d = Matrix::Zero(dim, dim);
  for (int k = parts.first(); k <= K; ++k) {
    const Matrix& pk = parts.p_at(k);
    const Matrix& fk = parts.f_at(k);
    parts.g_d += pk * fk * pk;
    parts.b_d += pk * (ftop - fk) * pk;
    diag_f += pk * ftop * pk;
    // sum_{i<k} p_i = 1 - q_{k-1}
    const Matrix below = id - parts.q_or_one(k - 1);
    pairs += below * fk * pk + pk * fk * below;
  }
  parts.g_off = pairs + q * ftop * qp + qp * ftop * q;
  parts.b_off = qp * ftop * qp - diag_f - pairs;
  return parts;
}

CZReport cz_verify(const Filtration& filt, const Matrix& f, const CZParts& parts) {
  CZReport r;
  const int n = filt.spec().n;
  const Matrix ftop = filt.expect(f, filt.top());
  r.reconstruction = l2_norm(ftop - (parts.g_d + parts.g_off + parts.b_d + parts.b_off));
  const double l1 = schatten_norm(ftop, 1.0);
  r.gd_sq = std::pow(l2_norm(parts.g_d), 2);
  r.gd_bound = std::ldexp(1.0, n) * parts.lambda * l1;
  r.bd_bound = 2.0 * l1;
  for (int k = parts.first(); k <= parts.depth; ++k) {
    const Matrix& pk = parts.p_at(k);
    const Matrix bk = pk * (ftop - parts.f_at(k)) * pk;
    r.bd_sum += schatten_norm(bk, 1.0);
    if (k >= 0) r.bd_mean_defect = std::max(r.bd_mean_defect, filt.expect(bk, k).cwiseAbs().maxCoeff());
    for (int j = parts.first(); j < k; ++j)
      r.disjointness = std::max(r.disjointness, (pk * parts.p_at(j)).cwiseAbs().maxCoeff());
  }
  return r;
}

GoffLayers g_off_layers(const CZParts& parts) {
  GoffLayers out;
  out.first = parts.first();
  const int K = parts.depth;
  const Eigen::Index dim = parts.q_meet.rows();
  for (int s = 1; s <= K - parts.first(); ++s) {
    Matrix layer = Matrix::Zero(dim, dim);
    std::vector<Matrix> pieces;
    for (int k = parts.first(); k + s <= K; ++k) {
      const Matrix& pk = parts.p_at(k);
      const Matrix df = parts.df_at(k + s);
      const Matrix& qq = parts.q_at(k + s - 1);
      Matrix g = pk * df * qq + qq * df * pk;
      layer += g;
      pieces.push_back(std::move(g));
    }
    out.layers.push_back(std::move(layer));
    out.pieces.push_back(std::move(pieces));
  }
  return out;
}

ZetaData zeta(const Filtration& filt, const CZParts& parts) {
  require_grid(filt, "zeta");
  const auto& grid = filt.grid();
  const int d = filt.spec().d;
  const int K = parts.depth;
  const int cells = grid.cells();
  ZetaData z;
  z.lambda = parts.lambda;
  std::vector<Matrix> acc(static_cast<std::size_t>(cells), Matrix::Zero(d, d));
  auto block_at = [d](const Matrix& m, int cell) { return Matrix(m.block(cell * d, cell * d, d, d)); };
  const int start = parts.m_lambda + 1;
  for (int s = std::min(start, 0); s <= K; ++s) {
    if (s >= start) {
      const Matrix q_hat = parts.q_or_one(s - 1);
      const Matrix& q_s = parts.q_at(s);
      if (s < 0) {
        // The level-s cube contains the whole torus, and so does its dilation.
        const Matrix delta = block_at(q_hat, 0) - block_at(q_s, 0);
        for (auto& a : acc) a += delta;
      } else {
        for (int c = 0; c < grid.cubes(s); ++c) {
          const int rep = grid.cells_of(s, c).front();
          const Matrix delta = block_at(q_hat, rep) - block_at(q_s, rep);
          if (delta.cwiseAbs().maxCoeff() == 0.0) continue;
          for (int x : grid.concentric_cells(grid.cube(s, c), 9)) acc[x] += delta;
        }
      }
    }
    if (s >= 0) {
      z.psi.push_back(grid_assemble(acc));
      std::vector<Matrix> zk(static_cast<std::size_t>(cells));
      for (int x = 0; x < cells; ++x)
        zk[x] = Matrix::Identity(d, d) - spectral_projection(hermitian_part(acc[x]), Interval::above(1e-9));
      z.zeta_k.push_back(grid_assemble(zk));
    }
  }
  std::vector<Matrix> meet(static_cast<std::size_t>(cells));
  for (int x = 0; x < cells; ++x) {
    std::vector<Matrix> ps;
    for (const auto& zk : z.zeta_k) ps.push_back(block_at(zk, x));
    meet[x] = proj_meet(ps);
  }
  z.zeta = grid_assemble(meet);
  return z;
}

ZetaReport zeta_verify(const Filtration& filt, const Matrix& f, const CZParts& parts, const ZetaData& z) {
  const auto& grid = filt.grid();
  const int d = filt.spec().d;
  const int n = filt.spec().n;
  ZetaReport r;
  r.measure = parts.lambda * (1.0 - tau(z.zeta).real());
  r.measure_bound = std::pow(9.0, n) * schatten_norm(filt.expect(f, filt.top()), 1.0);
  auto block_at = [d](const Matrix& m, int cell) { return Matrix(m.block(cell * d, cell * d, d, d)); };
  const Matrix idd = Matrix::Identity(d, d);
  r.lemma_min_eig = kInf;
  r.weak_min_eig = kInf;
  for (int k = 0; k <= parts.depth; ++k) {
    const Matrix q_hat = parts.q_or_one(k - 1);
    const Matrix& q_k = parts.q_at(k);
    for (int c = 0; c < grid.cubes(k); ++c) {
      const int rep = grid.cells_of(k, c).front();
      const Matrix xi = block_at(q_k, rep);
      const Matrix xi_hat = block_at(q_hat, rep);
      for (int x : grid.concentric_cells(grid.cube(k, c), 9)) {
        const Matrix zx = block_at(z.zeta, x);
        r.lemma_min_eig = std::min(r.lemma_min_eig, min_eigenvalue(hermitian_part(idd - xi_hat + xi - zx)));
        r.weak_min_eig = std::min(r.weak_min_eig, min_eigenvalue(hermitian_part(xi - zx)));
      }
    }
  }
  for (const auto& zk : z.zeta_k) r.below_levels = std::max(r.below_levels, op_norm(z.zeta - z.zeta * zk));
  return r;
}

ThmB1Split thmB1_decompose(const Filtration& filt, const OperatorFamily& tf, const Matrix& f, int s_min, int s_max) {
  require_grid(filt, "thmB1_decompose");
  if (tf.empty()) throw ContractViolation("thmB1_decompose: empty family");
  const double sup = op_norm(f);
  if (s_max < s_min) {
    s_max = s_min + 1;
    while (!(std::ldexp(1.0, s_max) > sup)) ++s_max;
  }
  std::vector<Matrix> zetas;
  for (int s = s_min; s <= s_max; ++s) {
    const CZParts parts = cz_decompose(filt, f, std::ldexp(1.0, s));
    zetas.push_back(zeta(filt, parts).zeta);
  }
  ThmB1Split out;
  out.chain = pi_chain(zetas, s_min);
  const Matrix& psi = out.chain.residual;
  const Eigen::Index dim = psi.rows();
  for (const auto& t : tf) {
    const DeltaSplit ds = delta_split(t, out.chain);
    const Matrix pp = psi * t * psi;
    out.psi_part.push_back(pp);
    out.A.push_back(ds.row - pp);
    out.B.push_back(ds.col);
  }
  // Absorption identity for every admissible l.
  for (int l = out.chain.l_min; l <= out.chain.l_max; ++l) {
    const Matrix& w = out.chain.w(l);
    for (std::size_t m = 0; m < tf.size(); ++m) {
      const Matrix wtw = w * tf[m] * w;
      Matrix rhs = Matrix::Zero(dim, dim);
      Matrix rho = psi;
      for (int k = out.chain.l_min + 1; k <= l; ++k) {
        const Matrix& pk = out.chain.pi_k(k);
        rho += pk;
        rhs += pk * wtw * rho;
      }
      out.absorption = std::max(out.absorption, (w * out.A[m] - rhs).cwiseAbs().maxCoeff());
    }
  }
  return out;
}

}  // namespace nclp
