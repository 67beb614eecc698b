#include "nclp/pseudoloc.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "nclp/random.hpp"

namespace nclp {

namespace {

// Displacement x - y wrapped into [-1/2, 1/2).
double wrap(double t) { return t - std::floor(t + 0.5); }

double torus_dist(const Point& x, const Point& y, int n) {
  double d = 0.0;
  for (int i = 0; i < n; ++i) d = std::max(d, std::abs(wrap(x[i] - y[i])));
  return d;
}

void require_same_grid(const DiscOp& a, const DiscOp& b) {
  if (a.n != b.n || a.K != b.K || a.components() != b.components())
    throw ContractViolation("DiscOp: grid or component mismatch");
}

RMatrix distance_matrix(const DyadicGrid& grid) {
  const int C = grid.cells();
  RMatrix d(C, C);
  for (int x = 0; x < C; ++x)
    for (int y = 0; y < C; ++y) d(x, y) = grid.distance(x, y);
  return d;
}

RMatrix mask_beyond(const RMatrix& a, const RMatrix& dist, double eps) {
  return (dist.array() > eps).select(a, 0.0);
}

std::vector<int> cube_map(const DyadicGrid& grid, int k) {
  std::vector<int> out(static_cast<std::size_t>(grid.cells()));
  for (int c = 0; c < grid.cells(); ++c) out[c] = grid.cube_of(c, std::max(k, 0));
  return out;
}

RVector delta_vec(const DyadicGrid& grid, const RVector& f, int j) {
  if (j < 0) return RVector::Zero(f.size());
  if (j == 0) return expect_vec(grid, f, 0);
  return expect_vec(grid, f, j) - expect_vec(grid, f, j - 1);
}

RMatrix delta_cols(const DyadicGrid& grid, const RMatrix& a, int j) {
  if (j == 0) return expect_cols(grid, a, 0);
  return expect_cols(grid, a, j) - expect_cols(grid, a, j - 1);
}

// (Pi_rho^*)_m g = sum_j E_{j-1}(Delta_j rho_m g)
RVector para_adjoint_component(const DyadicGrid& grid, const RVector& rho, const RVector& g) {
  RVector out = RVector::Zero(g.size());
  for (int j = 1; j <= grid.depth(); ++j)
    out += expect_vec(grid, delta_vec(grid, rho, j).cwiseProduct(g), j - 1);
  return out;
}

Matrix cell_block(const GridFunction& f, int row, int d) {
  return Eigen::Map<const Matrix>(f.row(row).eval().data(), d, d);
}

}  // namespace

KernelFamily parse_kernel_family(const std::string& name) {
  if (name == "lp-bumps") return KernelFamily::LpBumps;
  if (name == "hilbert") return KernelFamily::Hilbert;
  if (name == "annuli") return KernelFamily::Annuli;
  throw ContractViolation("unknown kernel family '" + name + "'");
}

std::string kernel_family_name(KernelFamily family) {
  switch (family) {
    case KernelFamily::LpBumps: return "lp-bumps";
    case KernelFamily::Hilbert: return "hilbert";
    case KernelFamily::Annuli: return "annuli";
  }
  return "?";
}

double lp_bump_profile(double t) {
  if (std::abs(t) >= 0.5) return 0.0;
  const double u = 1.0 - 4.0 * t * t;
  return t * u * u;
}

HilbertKernel lp_bump_kernel(int K) {
  if (K < 2) throw ContractViolation("lp_bump_kernel: K must be >= 2");
  HilbertKernel k;
  k.family = KernelFamily::LpBumps;
  k.components = K - 1;
  const int M = k.components;
  k.eval = [M](const Point& x, const Point& y) {
    const double t = wrap(x[0] - y[0]);
    RVector out(M);
    for (int m = 0; m < M; ++m) {
      const double sc = std::ldexp(1.0, m);
      out(m) = sc * lp_bump_profile(sc * t);
    }
    return out;
  };
  // Declared constants from a fine scan of |t| |k(t)| and t^2 |k'(t)|, with margin.
  double size = 0.0, slope = 0.0;
  for (int i = 1; i <= 20000; ++i) {
    const double t = 0.5 * i / 20000.0;
    double s2 = 0.0, d2 = 0.0;
    for (int m = 0; m < M; ++m) {
      const double sc = std::ldexp(1.0, m);
      const double u = sc * t;
      if (u >= 0.5) continue;
      const double v = 1.0 - 4.0 * u * u;
      const double dphi = v * v - 16.0 * u * u * v;
      s2 += std::pow(sc * lp_bump_profile(u), 2);
      d2 += std::pow(sc * sc * dphi, 2);
    }
    size = std::max(size, t * std::sqrt(s2));
    slope = std::max(slope, t * t * std::sqrt(d2));
  }
  k.c1 = 1.25 * size;
  // |x - x'| <= |x - y| / 2 keeps the intermediate point at distance >= |x - y| / 2.
  k.c2 = 1.25 * 4.0 * slope;
  return k;
}

HilbertKernel hilbert_kernel() {
  HilbertKernel k;
  k.family = KernelFamily::Hilbert;
  k.components = 1;
  k.c1 = 1.0 / std::numbers::pi;
  k.c2 = std::numbers::pi;
  k.eval = [](const Point& x, const Point& y) {
    const double t = wrap(x[0] - y[0]);
    RVector out(1);
    out(0) = std::cos(std::numbers::pi * t) / std::sin(std::numbers::pi * t);
    return out;
  };
  return k;
}

KernelCheck sample_kernel_constants(const HilbertKernel& k, int n, int pairs, std::uint64_t seed) {
  if (n != k.dimension) throw ContractViolation("sample_kernel_constants: dimension mismatch");
  Rng rng(seed);
  KernelCheck out;
  for (int i = 0; i < pairs; ++i) {
    Point x{rng.uniform(), n == 2 ? rng.uniform() : 0.0};
    Point y{rng.uniform(), n == 2 ? rng.uniform() : 0.0};
    const double r = torus_dist(x, y, n);
    if (r < 1e-6) continue;
    const RVector kx = k.eval(x, y);
    out.size = std::max(out.size, kx.norm() * std::pow(r, n));
    Point xp = x;
    for (int c = 0; c < n; ++c) xp[c] = x[c] + (rng.uniform() - 0.5) * r;
    const double h = torus_dist(x, xp, n);
    if (h < 1e-9) continue;
    const RVector kxp = k.eval(xp, y);
    out.smoothness = std::max(out.smoothness, (kx - kxp).norm() * std::pow(r, n + k.gamma) / std::pow(h, k.gamma));
  }
  return out;
}

RMatrix DiscOp::apply(const RVector& f) const {
  if (f.size() != cells()) throw ContractViolation("DiscOp::apply: size mismatch");
  RMatrix out(cells(), components());
  for (int m = 0; m < components(); ++m) out.col(m) = comp[m] * f;
  return out;
}

std::vector<Eigen::MatrixXcd> DiscOp::apply(const Eigen::MatrixXcd& f) const {
  if (f.rows() != cells()) throw ContractViolation("DiscOp::apply: size mismatch");
  std::vector<Eigen::MatrixXcd> out;
  out.reserve(comp.size());
  for (const auto& a : comp) out.push_back(a.cast<cplx>() * f);
  return out;
}

DiscOp DiscOp::transpose() const {
  DiscOp out = *this;
  for (auto& a : out.comp) a.transposeInPlace();
  return out;
}

DiscOp DiscOp::zero_like() const {
  DiscOp out = *this;
  for (auto& a : out.comp) a.setZero();
  return out;
}

DiscOp assemble(const HilbertKernel& kernel, const DyadicGrid& grid, double eps) {
  if (grid.depth() < 2) throw ContractViolation("assemble: grid depth must be >= 2");
  if (grid.n() != kernel.dimension) throw ContractViolation("assemble: kernel dimension does not match the grid");
  const int C = grid.cells();
  const int M = kernel.components;
  const double h = grid.cell_measure();
  DiscOp t;
  t.n = grid.n();
  t.K = grid.depth();
  t.comp.assign(static_cast<std::size_t>(M), RMatrix::Zero(C, C));
  for (int x = 0; x < C; ++x) {
    const Point px = grid.midpoint(x);
    for (int y = 0; y < C; ++y) {
      if (x == y || !(grid.distance(x, y) > eps)) continue;
      const RVector v = kernel.eval(px, grid.midpoint(y));
      if (v.size() != M) throw ContractViolation("assemble: kernel returned the wrong component count");
      if (!v.allFinite()) {
        std::ostringstream os;
        os << "assemble: non-finite kernel value at cells (" << x << ", " << y << ")";
        throw NumericError(os.str());
      }
      for (int m = 0; m < M; ++m) t.comp[m](x, y) = v(m) * h;
    }
  }
  return t;
}

DiscOp truncate(const DiscOp& t, double eps) {
  const RMatrix dist = distance_matrix(t.grid());
  DiscOp out = t;
  for (auto& a : out.comp) a = mask_beyond(a, dist, eps);
  return out;
}

DiscOp operator-(const DiscOp& a, const DiscOp& b) {
  require_same_grid(a, b);
  DiscOp out = a;
  for (std::size_t m = 0; m < out.comp.size(); ++m) out.comp[m] -= b.comp[m];
  return out;
}

DiscOp operator+(const DiscOp& a, const DiscOp& b) {
  require_same_grid(a, b);
  DiscOp out = a;
  for (std::size_t m = 0; m < out.comp.size(); ++m) out.comp[m] += b.comp[m];
  return out;
}

DiscOp row_modulated(const DiscOp& t, const RVector& a) {
  if (a.size() != t.cells()) throw ContractViolation("row_modulated: weight does not match the grid");
  DiscOp out = t;
  for (auto& c : out.comp) c = a.asDiagonal() * c;
  return out;
}

DiscOp annuli_family(int K) {
  if (K < 2) throw ContractViolation("annuli_family: K must be >= 2");
  const int C = 1 << K;
  DiscOp t;
  t.n = 1;
  t.K = K;
  for (int k = 0; k < K; ++k) {
    // kernel(d) = (1/C) sum_{xi in annulus} exp(2 pi i xi d / C), xi in (-C/2, C/2]
    RVector row = RVector::Zero(C);
    for (int d = 0; d < C; ++d) {
      double acc = 0.0;
      for (int xi = 1 << k; xi < (1 << (k + 1)) && xi <= C / 2; ++xi) {
        const double c = std::cos(2.0 * std::numbers::pi * xi * d / C);
        acc += xi == C / 2 ? c : 2.0 * c;
      }
      row(d) = acc / C;
    }
    RMatrix a(C, C);
    for (int x = 0; x < C; ++x)
      for (int y = 0; y < C; ++y) a(x, y) = row(((x - y) % C + C) % C);
    t.comp.push_back(std::move(a));
  }
  return t;
}

RMatrix expect_matrix(const DyadicGrid& grid, int k) {
  const int C = grid.cells();
  const auto cube = cube_map(grid, k);
  const double w = static_cast<double>(grid.cubes(std::max(k, 0))) / C;
  RMatrix e = RMatrix::Zero(C, C);
  for (int x = 0; x < C; ++x)
    for (int y = 0; y < C; ++y)
      if (cube[x] == cube[y]) e(x, y) = w;
  return e;
}

RMatrix delta_matrix(const DyadicGrid& grid, int j) {
  if (j < 0) return RMatrix::Zero(grid.cells(), grid.cells());
  if (j == 0) return expect_matrix(grid, 0);
  return expect_matrix(grid, j) - expect_matrix(grid, j - 1);
}

RMatrix expect_rows(const DyadicGrid& grid, const RMatrix& a, int k) {
  const int lvl = std::max(k, 0);
  if (lvl >= grid.depth()) return a;
  const auto cube = cube_map(grid, lvl);
  // Column by column to stay contiguous in storage.
  const double inv = static_cast<double>(grid.cubes(lvl)) / grid.cells();
  RVector sums(grid.cubes(lvl));
  RMatrix out(a.rows(), a.cols());
  for (Eigen::Index y = 0; y < a.cols(); ++y) {
    sums.setZero();
    for (Eigen::Index x = 0; x < a.rows(); ++x) sums(cube[x]) += a(x, y);
    for (Eigen::Index x = 0; x < a.rows(); ++x) out(x, y) = sums(cube[x]) * inv;
  }
  return out;
}

RMatrix expect_cols(const DyadicGrid& grid, const RMatrix& a, int k) {
  const int lvl = std::max(k, 0);
  if (lvl >= grid.depth()) return a;
  const auto cube = cube_map(grid, lvl);
  RMatrix sums = RMatrix::Zero(a.rows(), grid.cubes(lvl));
  for (int y = 0; y < a.cols(); ++y) sums.col(cube[y]) += a.col(y);
  sums /= static_cast<double>(grid.cells() / grid.cubes(lvl));
  RMatrix out(a.rows(), a.cols());
  for (int y = 0; y < a.cols(); ++y) out.col(y) = sums.col(cube[y]);
  return out;
}

RVector expect_vec(const DyadicGrid& grid, const RVector& f, int k) {
  RMatrix m = f;
  return expect_rows(grid, m, k).col(0);
}

namespace {

PowerResult power_gram(const std::function<RVector(const RVector&)>& gram, int dim, int min_iter, int max_iter,
                       double rel_tol) {
  PowerResult r;
  if (dim == 0) return r;
  // All-ones start with a fixed perturbation; the constant vector alone lies in the kernel of many operators here.
  RVector v(dim);
  for (int i = 0; i < dim; ++i) v(i) = 1.0 + 0.5 * std::sin(1.7 * i + 0.3);
  v.normalize();
  double mu = 0.0;
  for (int it = 1; it <= max_iter; ++it) {
    const RVector w = gram(v);
    if (!w.allFinite()) throw NumericError("power iteration produced a non-finite vector");
    const double next = v.dot(w);
    const double wn = w.norm();
    r.iterations = it;
    if (wn == 0.0) {
      mu = 0.0;
      r.last_change = 0.0;
      break;
    }
    r.last_change = mu > 0 ? std::abs(next - mu) / mu : 1.0;
    mu = next;
    v = w / wn;
    if (it >= min_iter && r.last_change < rel_tol) break;
  }
  r.norm = std::sqrt(std::max(mu, 0.0));
  return r;
}

RMatrix gram_matrix(const DiscOp& t) {
  RMatrix g = RMatrix::Zero(t.cells(), t.cells());
  for (const auto& a : t.comp) g.noalias() += a.transpose() * a;
  return g;
}

double top_eig(const RMatrix& sym) {
  if (sym.size() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<RMatrix> es(sym, Eigen::EigenvaluesOnly);
  return std::max(0.0, es.eigenvalues().maxCoeff());
}

RMatrix psd_sqrt_real(const RMatrix& sym) {
  Eigen::SelfAdjointEigenSolver<RMatrix> es(sym);
  const RVector ev = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

double spectral_norm(const RMatrix& a) {
  if (a.size() == 0) return 0.0;
  Eigen::BDCSVD<RMatrix> svd(a);
  return svd.singularValues()(0);
}

}  // namespace

PowerResult power_norm(const std::function<RVector(const RVector&)>& apply,
                       const std::function<RVector(const RVector&)>& apply_adjoint, int dim, int min_iter,
                       int max_iter, double rel_tol) {
  return power_gram([&](const RVector& v) { return apply_adjoint(apply(v)); }, dim, min_iter, max_iter, rel_tol);
}

PowerResult disc_norm(const DiscOp& t) {
  const RMatrix g = gram_matrix(t);
  return power_gram([&g](const RVector& v) { return RVector(g * v); }, t.cells(), 200, 5000, 1e-10);
}

double disc_norm_exact(const DiscOp& t) { return std::sqrt(top_eig(gram_matrix(t))); }

DiscOp normalize(const DiscOp& t) {
  const PowerResult r = disc_norm(t);
  if (!(r.norm > 0)) throw ContractViolation("normalize: operator is zero");
  DiscOp out = t;
  for (auto& a : out.comp) a /= r.norm;
  out.scale = t.scale / r.norm;
  return out;
}

DiscOp lambda_sk(const DiscOp& t, int s, int k) {
  if (s < 1 || s >= t.K) throw ContractViolation("lambda_sk: need 1 <= s < K");
  if (k < 0 || k > t.K - s) throw ContractViolation("lambda_sk: k out of range");
  const DyadicGrid grid = t.grid();
  DiscOp out = t;
  for (auto& a : out.comp) a = expect_rows(grid, delta_cols(grid, a, k + s), k);
  return out;
}

DiscOp phi_s(const DiscOp& t, int s) {
  if (s < 1 || s >= t.K) throw ContractViolation("phi_s: need 1 <= s < K");
  const DyadicGrid grid = t.grid();
  DiscOp out = t.zero_like();
  const int C = t.cells();
  for (std::size_t m = 0; m < t.comp.size(); ++m)
    for (int k = 0; k <= t.K - s; ++k) {
      // Average rows onto level-k cubes first, then act on the small matrix and scatter back.
      const auto cube = cube_map(grid, k);
      RMatrix red = RMatrix::Zero(grid.cubes(k), C);
      const RMatrix& a = t.comp[m];
      for (int y = 0; y < C; ++y)
        for (int x = 0; x < C; ++x) red(cube[x], y) += a(x, y);
      red *= static_cast<double>(grid.cubes(k)) / C;
      const RMatrix b = delta_cols(grid, red, k + s);
      RMatrix& o = out.comp[m];
      for (int y = 0; y < C; ++y)
        for (int x = 0; x < C; ++x) o(x, y) += b(cube[x], y);
    }
  return out;
}

DiscOp psi_s(const DiscOp& t, int s) {
  if (s < 1 || s >= t.K) throw ContractViolation("psi_s: need 1 <= s < K");
  const DyadicGrid grid = t.grid();
  const RMatrix dist = distance_matrix(grid);
  DiscOp out = t.zero_like();
  for (std::size_t m = 0; m < t.comp.size(); ++m)
    for (int k = 0; k <= t.K - s; ++k) {
      const RMatrix trunc = mask_beyond(t.comp[m], dist, 4.0 * std::ldexp(1.0, -k));
      if (trunc.isZero(0.0)) continue;
      const RMatrix b = delta_cols(grid, trunc, k + s);
      out.comp[m] += b - expect_rows(grid, b, k);
    }
  return out;
}

RVector ksk_formula(const DiscOp& t, int s, int k, int x, int y) {
  const DyadicGrid grid = t.grid();
  const int C = grid.cells();
  const int n = grid.n();
  const int fine = k + s;
  // psi = |Qhat|^{-1} sum over siblings Q_j != Q_y of (1_{Q_y} - 1_{Q_j})
  const int qy = grid.cube_of(y, fine);
  const int father = grid.cube_of(y, fine - 1);
  const double inv_father = std::ldexp(1.0, n * (fine - 1));
  RVector psi = RVector::Zero(C);
  for (int z = 0; z < C; ++z) {
    if (grid.cube_of(z, fine - 1) != father) continue;
    const int qz = grid.cube_of(z, fine);
    // 1_{Q_y}(z) appears once for every sibling; 1_{Q_j}(z) once.
    psi(z) = qz == qy ? ((1 << n) - 1) * inv_father : -inv_father;
  }
  // <T psi, phi_{R_x}>: average of T psi over R_x.
  const int rx = grid.cube_of(x, k);
  RVector out(t.components());
  for (int m = 0; m < t.components(); ++m) {
    const RVector tpsi = t.comp[m] * psi;
    double acc = 0.0;
    int cnt = 0;
    for (int w = 0; w < C; ++w)
      if (grid.cube_of(w, k) == rx) {
        acc += tpsi(w);
        ++cnt;
      }
    out(m) = acc / cnt;
  }
  return out;
}

KskReport ksk_check(const DiscOp& t, int s, int k, int pairs, std::uint64_t seed, double gamma) {
  const DiscOp lam = lambda_sk(t, s, k);
  const DyadicGrid grid = t.grid();
  const double h = grid.cell_measure();
  const int C = grid.cells();
  Rng rng(seed);
  KskReport r;
  for (int i = 0; i < pairs; ++i) {
    const int x = rng.uniform_int(0, C - 1);
    int y = rng.uniform_int(0, C - 1);
    if (i % 2 == 1) {
      // force y into R_x for half of the pairs
      const auto cells = grid.cells_of(k, grid.cube_of(x, k));
      y = cells[static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(cells.size()) - 1))];
    }
    const RVector formula = ksk_formula(t, s, k, x, y);
    RVector entry(t.components());
    for (int m = 0; m < t.components(); ++m) entry(m) = lam.comp[m](x, y) / h;
    const double scale = std::max(1.0, formula.lpNorm<Eigen::Infinity>());
    r.residual = std::max(r.residual, (entry - formula).lpNorm<Eigen::Infinity>() / scale);
    ++r.pairs;
    // y outside 3 R_x: level-k cube offsets beyond 1 in some coordinate
    const auto cx = grid.cell_coords(x), cy = grid.cell_coords(y);
    const int side = 1 << k;
    bool outside = false;
    for (int c = 0; c < grid.n(); ++c) {
      const int shift = grid.depth() - k;
      int diff = std::abs((cx[c] >> shift) - (cy[c] >> shift));
      diff = std::min(diff, side - diff);
      if (diff > 1) outside = true;
    }
    if (outside) {
      const double dist = grid.distance(x, y);
      r.size_ratio = std::max(r.size_ratio, entry.norm() * std::pow(2.0, gamma * (k + s)) * std::pow(dist, grid.n() + gamma));
    }
  }
  return r;
}

namespace {

RMatrix component_norms(const DiscOp& t) {
  RMatrix sq = RMatrix::Zero(t.cells(), t.cells());
  for (const auto& a : t.comp) sq += a.cwiseAbs2();
  return sq.cwiseSqrt();
}

}  // namespace

double schur_bound(const DiscOp& t) {
  const RMatrix nrm = component_norms(t);
  if (nrm.size() == 0) return 0.0;
  const double s1 = nrm.rowwise().sum().maxCoeff();
  const double s2 = nrm.colwise().sum().maxCoeff();
  return std::sqrt(s1 * s2);
}

CotlarReport cotlar_bound(const std::vector<DiscOp>& family) {
  CotlarReport r;
  const int L = static_cast<int>(family.size());
  if (L == 0) return r;
  std::vector<RMatrix> gram, root;
  for (const auto& t : family) {
    require_same_grid(t, family.front());
    gram.push_back(gram_matrix(t));
    root.push_back(psd_sqrt_real(gram.back()));
  }
  r.alpha.assign(static_cast<std::size_t>(L), 0.0);
  for (int i = 0; i < L; ++i)
    for (int j = 0; j < L; ++j) {
      RMatrix cross = RMatrix::Zero(family[i].cells(), family[i].cells());
      for (std::size_t m = 0; m < family[i].comp.size(); ++m)
        cross.noalias() += family[i].comp[m].transpose() * family[j].comp[m];
      // |T_i^* T_j| directly; |T_i T_j^*| = |G_j^{1/2} G_i^{1/2}| with G the Gram matrices.
      const double a = spectral_norm(cross);
      const double b = spectral_norm(root[j] * root[i]);
      const int d = std::abs(i - j);
      r.alpha[d] = std::max(r.alpha[d], std::sqrt(std::max(a, b)));
    }
  r.bound = r.alpha[0];
  for (int d = 1; d < L; ++d) r.bound += 2.0 * r.alpha[d];
  return r;
}

std::vector<SchurDecayRow> schur_integrals_decay(const DiscOp& t, int s_lo, int s_hi, double gamma) {
  std::vector<SchurDecayRow> rows;
  for (int s = s_lo; s <= s_hi; ++s) {
    SchurDecayRow row;
    row.s = s;
    for (int k = 0; k <= t.K - s; ++k) {
      const RMatrix nrm = component_norms(lambda_sk(t, s, k));
      row.s1 = std::max(row.s1, nrm.rowwise().sum().maxCoeff());
      row.s2 = std::max(row.s2, nrm.colwise().sum().maxCoeff());
    }
    row.s1_normalized = std::pow(2.0, gamma * s) * row.s1 / s;
    row.s2_normalized = row.s2 / s;
    rows.push_back(row);
  }
  return rows;
}

std::vector<RVector> adjoint_one(const DiscOp& t) {
  std::vector<RVector> rho;
  for (const auto& a : t.comp) rho.push_back(a.colwise().sum().transpose());
  return rho;
}

std::vector<RMatrix> paraproduct_matrices(const DyadicGrid& grid, const std::vector<RVector>& rho) {
  std::vector<RMatrix> out;
  for (const auto& r : rho) {
    RMatrix p = RMatrix::Zero(grid.cells(), grid.cells());
    for (int j = 1; j <= grid.depth(); ++j) {
      const RVector dj = delta_vec(grid, r, j);
      p += dj.asDiagonal() * expect_matrix(grid, j - 1);
    }
    out.push_back(std::move(p));
  }
  return out;
}

RMatrix paraproduct(const DyadicGrid& grid, const std::vector<RVector>& rho, const RVector& f) {
  RMatrix out = RMatrix::Zero(grid.cells(), static_cast<Eigen::Index>(rho.size()));
  for (int j = 1; j <= grid.depth(); ++j) {
    const RVector fj = expect_vec(grid, f, j - 1);
    for (std::size_t m = 0; m < rho.size(); ++m) out.col(m) += delta_vec(grid, rho[m], j).cwiseProduct(fj);
  }
  return out;
}

RVector paraproduct_adjoint(const DyadicGrid& grid, const std::vector<RVector>& rho, const RMatrix& g) {
  if (g.cols() != static_cast<Eigen::Index>(rho.size())) throw ContractViolation("paraproduct_adjoint: component mismatch");
  RVector out = RVector::Zero(grid.cells());
  for (std::size_t m = 0; m < rho.size(); ++m) out += para_adjoint_component(grid, rho[m], g.col(m));
  return out;
}

double bmo_dyadic(const DyadicGrid& grid, const std::vector<RVector>& rho) {
  double best = 0.0;
  for (int j = 0; j < grid.depth(); ++j)
    for (int q = 0; q < grid.cubes(j); ++q) {
      const auto cells = grid.cells_of(j, q);
      double acc = 0.0;
      for (const auto& r : rho) {
        double mean = 0.0;
        for (int c : cells) mean += r(c);
        mean /= static_cast<double>(cells.size());
        for (int c : cells) acc += (r(c) - mean) * (r(c) - mean);
      }
      best = std::max(best, acc / static_cast<double>(cells.size()));
    }
  return std::sqrt(best);
}

DiscOp paraproduct_correction(const DiscOp& t) {
  const DyadicGrid grid = t.grid();
  const auto rho = adjoint_one(t);
  const auto p = paraproduct_matrices(grid, rho);
  DiscOp out = t;
  const double C = t.cells();
  for (std::size_t m = 0; m < out.comp.size(); ++m) {
    out.comp[m] -= p[m].transpose();
    out.comp[m].array() -= rho[m].mean() / C;
  }
  return out;
}

int SigmaSet::sigma_cells() const {
  return static_cast<int>(std::count(sigma.begin(), sigma.end(), char{1}));
}

SigmaSet sigma_set(const DyadicGrid& grid, const RVector& f, int s) {
  if (s < 1 || s >= grid.depth()) throw ContractViolation("sigma_set: need 1 <= s < K");
  SigmaSet out;
  out.s = s;
  out.sigma.assign(static_cast<std::size_t>(grid.cells()), 0);
  const double tol = 1e-12 * std::max(1.0, f.lpNorm<Eigen::Infinity>());
  for (int k = 0; k <= grid.depth() - s; ++k) {
    const RVector g = delta_vec(grid, f, k + s);
    std::vector<int> cubes;
    for (int c = 0; c < grid.cells(); ++c)
      if (std::abs(g(c)) > tol) cubes.push_back(grid.cube_of(c, k));
    std::sort(cubes.begin(), cubes.end());
    cubes.erase(std::unique(cubes.begin(), cubes.end()), cubes.end());
    for (int q : cubes)
      for (int x : grid.concentric_cells(grid.cube(k, q), 9)) out.sigma[x] = 1;
    out.omega.push_back(std::move(cubes));
  }
  return out;
}

double vanish_check(const DiscOp& t, const RVector& f, int s) {
  const DyadicGrid grid = t.grid();
  const SigmaSet sig = sigma_set(grid, f, s);
  const auto rho = adjoint_one(t);
  const double fn = grid_l2(f);
  double worst = 0.0;
  for (const auto& r : rho) {
    RVector acc = RVector::Zero(grid.cells());
    for (int k = 0; k <= t.K - s; ++k)
      acc += expect_vec(grid, para_adjoint_component(grid, r, delta_vec(grid, f, k + s)), k);
    for (int x = 0; x < grid.cells(); ++x)
      if (!sig.sigma[x]) worst = std::max(worst, std::abs(acc(x)));
  }
  return fn > 0 ? worst / fn : worst;
}

double grid_l2(const RVector& f) { return f.size() ? std::sqrt(f.squaredNorm() / f.size()) : 0.0; }
double grid_l2(const RMatrix& f) { return f.rows() ? std::sqrt(f.squaredNorm() / f.rows()) : 0.0; }

PseudolocResult commutative_pseudoloc_check(const DiscOp& t, const RVector& f, int s, double gamma,
                                            const DiscOp* phi_plus_psi) {
  const DyadicGrid grid = t.grid();
  const SigmaSet sig = sigma_set(grid, f, s);
  PseudolocResult r;
  r.vacuous = sig.sigma_cells() == grid.cells();
  const RMatrix tf = t.apply(f);
  DiscOp local;
  if (!phi_plus_psi) {
    local = phi_s(t, s) + psi_s(t, s);
    phi_plus_psi = &local;
  }
  const RMatrix pf = phi_plus_psi->apply(f);
  double acc = 0.0;
  for (int x = 0; x < grid.cells(); ++x) {
    if (sig.sigma[x]) continue;
    acc += tf.row(x).squaredNorm();
    r.identity = std::max(r.identity, (tf.row(x) - pf.row(x)).lpNorm<Eigen::Infinity>());
  }
  const double fn = grid_l2(f);
  r.lhs = std::sqrt(acc * grid.cell_measure());
  if (fn > 0) {
    r.ratio = r.lhs / (s * std::pow(2.0, -gamma * s / 2.0) * fn);
    r.identity /= fn;
  }
  return r;
}

RVector localized_haar_function(const DyadicGrid& grid, int level, std::uint64_t seed) {
  if (grid.n() != 1) throw ContractViolation("localized_haar_function: n = 1 only");
  if (level < 0 || level >= grid.depth()) throw ContractViolation("localized_haar_function: level out of range");
  Rng rng(seed);
  const int K = grid.depth();
  const int root = rng.uniform_int(0, grid.cubes(level) - 1);
  RVector f = RVector::Zero(grid.cells());
  for (int j = level + 1; j <= K; ++j) {
    // Haar atoms on level-(j-1) cubes inside the root cube
    const int per = 1 << (j - 1 - level);
    for (int i = 0; i < per; ++i) {
      const int cube = root * per + i;
      const double w = rng.normal();
      for (int c : grid.cells_of(j - 1, cube)) f(c) += grid.cube_of(c, j) % 2 == 0 ? w : -w;
    }
  }
  return f;
}

GridFunction to_grid_function(const Matrix& block_diag, int d) {
  const auto blocks = grid_blocks(block_diag, d);
  GridFunction out(static_cast<Eigen::Index>(blocks.size()), d * d);
  for (std::size_t c = 0; c < blocks.size(); ++c)
    out.row(static_cast<Eigen::Index>(c)) = Eigen::Map<const Eigen::RowVectorXcd>(blocks[c].data(), d * d);
  return out;
}

Matrix from_grid_function(const GridFunction& f, int d) {
  std::vector<Matrix> blocks;
  for (Eigen::Index c = 0; c < f.rows(); ++c) blocks.push_back(cell_block(f, static_cast<int>(c), d));
  return grid_assemble(blocks);
}

std::vector<Matrix> omega_projections(const DyadicGrid& grid, const RVector& f, int s) {
  const SigmaSet sig = sigma_set(grid, f, s);
  std::vector<Matrix> q;
  for (int k = 0; k <= grid.depth() - s; ++k) {
    Matrix p = Matrix::Identity(grid.cells(), grid.cells());
    for (int cube : sig.omega[k])
      for (int c : grid.cells_of(k, cube)) p(c, c) = 0.0;
    q.push_back(std::move(p));
  }
  return q;
}

NcPseudolocResult nc_pseudoloc_check(const DiscOp& t, const Matrix& f, int d, const std::vector<Matrix>& q, int s,
                                     double gamma) {
  const DyadicGrid grid = t.grid();
  const int C = grid.cells();
  const int K = t.K;
  if (f.rows() != C * d) throw ContractViolation("nc_pseudoloc_check: f does not match the grid");
  if (static_cast<int>(q.size()) != K - s + 1) throw ContractViolation("nc_pseudoloc_check: need q_k for k = 0..K-s");
  const GridFunction F = to_grid_function(f, d);
  const double fn = std::sqrt(F.squaredNorm() / (static_cast<double>(C) * d));

  // xi_Q per level and certification of supp* Delta_{k+s} f <= 1 - q_k.
  std::vector<std::vector<Matrix>> xi(q.size());
  for (int k = 0; k <= K - s; ++k) {
    const auto blocks = grid_blocks(q[k], d);
    for (int cube = 0; cube < grid.cubes(k); ++cube) {
      const auto cells = grid.cells_of(k, cube);
      const Matrix& b = blocks[cells.front()];
      for (int c : cells)
        if ((blocks[c] - b).cwiseAbs().maxCoeff() > 1e-10)
          throw ContractViolation("nc_pseudoloc_check: q_k is not constant on level-k cubes");
      xi[k].push_back(b);
    }
    const GridFunction dF = delta_matrix(grid, k + s).cast<cplx>() * F;
    const Matrix df = from_grid_function(dF, d);
    // Tolerance scaled by f itself so that vanishing differences carrying rounding noise pass.
    if ((q[k] * df * q[k]).cwiseAbs().maxCoeff() > 1e-9 * std::max(1.0, f.cwiseAbs().maxCoeff()))
      throw ContractViolation("nc_pseudoloc_check: q_k does not certify the support of the difference");
  }

  // zeta_k(x) = 1 - join over Q with x in 9Q of (1 - xi_Q); zeta = meet over k.
  const Matrix idd = Matrix::Identity(d, d);
  std::vector<Matrix> zeta_cells(static_cast<std::size_t>(C));
  for (int x = 0; x < C; ++x) {
    std::vector<Matrix> per_level;
    for (int k = 0; k <= K - s; ++k) {
      std::vector<Matrix> comps;
      for (int cube : grid.concentric_cubes(grid.cube(k, grid.cube_of(x, k)), 9)) comps.push_back(idd - xi[k][cube]);
      per_level.push_back(idd - proj_join(comps));
    }
    zeta_cells[x] = proj_meet(per_level);
  }
  NcPseudolocResult r;
  r.zeta = grid_assemble(zeta_cells);

  const auto tf = t.apply(F);
  const DiscOp pp = phi_s(t, s) + psi_s(t, s);
  const auto pf = pp.apply(F);
  double acc = 0.0;
  for (std::size_t m = 0; m < tf.size(); ++m)
    for (int x = 0; x < C; ++x) {
      const Matrix& z = zeta_cells[x];
      const Matrix lhs = z * cell_block(tf[m], x, d) * z;
      acc += lhs.squaredNorm();
      const Matrix rhs = z * cell_block(pf[m], x, d) * z;
      r.identity = std::max(r.identity, (lhs - rhs).cwiseAbs().maxCoeff());
    }
  r.lhs = std::sqrt(acc / (static_cast<double>(C) * d));
  r.vacuous = fn <= 1e-12 * std::max(1.0, F.cwiseAbs().maxCoeff());
  if (r.vacuous) {
    r.ratio = 0.0;
    r.identity = 0.0;
  } else {
    r.ratio = r.lhs / (s * std::pow(2.0, -gamma * s / 2.0) * fn);
    r.identity /= fn;
  }
  return r;
}

LocalizationResult localization_check(const DiscOp& t, const Point& x0, double r1, double r2) {
  if (!(r2 > 2.0 * r1)) throw ContractViolation("localization_check: need r2 > 2 r1");
  const DyadicGrid grid = t.grid();
  const int C = grid.cells();
  RVector f = RVector::Zero(C), g = RVector::Zero(C);
  for (int c = 0; c < C; ++c) {
    const Point p = grid.midpoint(c);
    const double dist = torus_dist(p, x0, grid.n());
    if (dist < r1) f(c) = 1.0;
    if (dist < r2) {
      // odd in the first coordinate, so an odd kernel does not cancel
      const double disp = wrap(p[0] - x0[0]);
      g(c) = disp > 0 ? 1.0 : (disp < 0 ? -1.0 : 0.0);
    }
  }
  const RMatrix tf = t.apply(f);
  const RVector integral = tf.transpose() * g * grid.cell_measure();
  LocalizationResult r;
  r.value = integral.norm();
  r.ratio = r.value / (std::pow(r1, grid.n()) * std::log(r2 / r1));
  return r;
}

double log2_slope(const std::vector<int>& s, const std::vector<double>& values) {
  if (s.size() != values.size() || s.size() < 2) throw ContractViolation("log2_slope: need at least two points");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double N = static_cast<double>(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (!(values[i] > 0)) throw ContractViolation("log2_slope: values must be positive");
    const double x = s[i], y = std::log2(values[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  return (N * sxy - sx * sy) / (N * sxx - sx * sx);
}

DecayReport decay_experiment(KernelFamily family, int K, int s_lo, int s_hi, int trials, std::uint64_t seed) {
  if (family == KernelFamily::Annuli) throw ContractViolation("decay_experiment: annuli have no pointwise kernel");
  if (s_lo < 1 || s_hi >= K || s_lo > s_hi) throw ContractViolation("decay_experiment: need 1 <= s_lo <= s_hi < K");
  const DyadicGrid grid(1, K);
  const HilbertKernel kernel = family == KernelFamily::LpBumps ? lp_bump_kernel(K) : hilbert_kernel();
  const DiscOp t = normalize(assemble(kernel, grid));
  const DiscOp t0 = paraproduct_correction(t);
  DecayReport rep;
  rep.t_norm = disc_norm(t).norm;
  double rho_sq = 0.0;
  for (const auto& r : adjoint_one(t)) rho_sq += grid_l2(r) * grid_l2(r);
  rep.rho_norm = std::sqrt(rho_sq);
  std::vector<int> ss, ps;
  std::vector<double> phis, psis;
  for (int s = s_lo; s <= s_hi; ++s) {
    DecayRow row;
    row.s = s;
    const DiscOp phi = phi_s(t0, s);
    const DiscOp psi = psi_s(t, s);
    row.phi = disc_norm(phi).norm;
    row.psi = disc_norm(psi).norm;
    const DiscOp full = phi_s(t, s) + psi;
    row.vacuous = true;
    for (int i = 0; i < trials; ++i) {
      const RVector f = localized_haar_function(grid, std::min(s + 3, K - 1), trial_seed(seed, 1000u * s + i));
      const PseudolocResult pr = commutative_pseudoloc_check(t, f, s, kernel.gamma, &full);
      row.ratio = std::max(row.ratio, pr.ratio);
      row.identity = std::max(row.identity, pr.identity);
      row.vacuous = row.vacuous && pr.vacuous;
    }
    ss.push_back(s);
    phis.push_back(row.phi);
    if (row.psi > 0) {
      ps.push_back(s);
      psis.push_back(row.psi);
    } else {
      ++rep.psi_zero_rows;
    }
    rep.rows.push_back(row);
  }
  rep.phi_slope = ss.size() >= 2 ? log2_slope(ss, phis) : 0.0;
  rep.psi_slope = ps.size() >= 2 ? log2_slope(ps, psis) : 0.0;
  return rep;
}

}  // namespace nclp
