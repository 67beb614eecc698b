#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "nclp/filtration.hpp"
#include "nclp/opcore.hpp"

namespace nclp {

enum class KernelFamily { LpBumps, Hilbert, Annuli };

KernelFamily parse_kernel_family(const std::string& name);
std::string kernel_family_name(KernelFamily family);

using Point = std::array<double, 2>;

// R^M-valued kernel on the torus, evaluated off the diagonal.
struct HilbertKernel {
  KernelFamily family = KernelFamily::LpBumps;
  int components = 1;
  int dimension = 1;
  double gamma = 1.0;
  double c1 = 1.0;  // size constant
  double c2 = 1.0;  // smoothness constant
  std::function<RVector(const Point& x, const Point& y)> eval;
};

// phi(t) = t (1 - 4t^2)^2 on |t| <= 1/2: odd, C^1, compactly supported.
double lp_bump_profile(double t);
// k_m(x, y) = 2^m phi(2^m (x - y)) for m = 0..K-2, n = 1.
HilbertKernel lp_bump_kernel(int K);
// cot(pi (x - y)), n = 1.
HilbertKernel hilbert_kernel();

struct KernelCheck {
  double size = 0;        // max |k(x,y)| |x-y|^n
  double smoothness = 0;  // max |k(x,y) - k(x',y)| |x-y|^{n+gamma} / |x-x'|^gamma
};
KernelCheck sample_kernel_constants(const HilbertKernel& k, int n, int pairs, std::uint64_t seed);

// Component matrices acting on cell values: (T f)_m(x) = sum_y comp[m](x, y) f(y).
struct DiscOp {
  int n = 1;
  int K = 0;
  std::vector<RMatrix> comp;
  double scale = 1.0;  // normalization factor already applied

  int cells() const { return 1 << (n * K); }
  int components() const { return static_cast<int>(comp.size()); }
  DyadicGrid grid() const { return DyadicGrid(n, K); }
  // Component outputs as columns, cells x M.
  RMatrix apply(const RVector& f) const;
  // Matrix-valued input: row per cell, columns are entries. Output stacked by component.
  std::vector<Eigen::MatrixXcd> apply(const Eigen::MatrixXcd& f) const;
  DiscOp transpose() const;
  DiscOp zero_like() const;
};

DiscOp assemble(const HilbertKernel& kernel, const DyadicGrid& grid, double eps = 0.0);
// Zero every entry with torus distance <= eps.
DiscOp truncate(const DiscOp& t, double eps);
DiscOp operator-(const DiscOp& a, const DiscOp& b);
DiscOp operator+(const DiscOp& a, const DiscOp& b);

// Multiplies the output by a(x); breaks translation invariance so T^* 1 is no longer constant.
DiscOp row_modulated(const DiscOp& t, const RVector& a);

// Fourier-annuli multipliers: component k projects onto 2^k <= |xi| < 2^{k+1}, k = 0..K-1, n = 1.
DiscOp annuli_family(int K);

// E_k as an explicit cells x cells matrix (k <= 0 is the mean), and Delta_j = E_j - E_{j-1}, Delta_0 = E_0.
RMatrix expect_matrix(const DyadicGrid& grid, int k);
RMatrix delta_matrix(const DyadicGrid& grid, int j);
// E_k a and a E_k without forming E_k.
RMatrix expect_rows(const DyadicGrid& grid, const RMatrix& a, int k);
RMatrix expect_cols(const DyadicGrid& grid, const RMatrix& a, int k);
RVector expect_vec(const DyadicGrid& grid, const RVector& f, int k);

struct PowerResult {
  double norm = 0;
  int iterations = 0;
  double last_change = 0;
};
// Power iteration on a^* a given both actions; deterministic start vector.
PowerResult power_norm(const std::function<RVector(const RVector&)>& apply,
                       const std::function<RVector(const RVector&)>& apply_adjoint, int dim, int min_iter = 200,
                       int max_iter = 5000, double rel_tol = 1e-10);
// ||T||_{L2 -> L2(H)} from the Gram matrix sum_m A_m^T A_m.
PowerResult disc_norm(const DiscOp& t);
// Exact top singular value through a dense eigensolver, for cross-checks.
double disc_norm_exact(const DiscOp& t);
// Rescales T to norm 1 and records the factor.
DiscOp normalize(const DiscOp& t);

// Lambda_{s,k} = E_k T Delta_{k+s}; requires 1 <= s < K and 0 <= k <= K - s.
DiscOp lambda_sk(const DiscOp& t, int s, int k);
DiscOp phi_s(const DiscOp& t, int s);
// sum_k (id - E_k) T_{4 2^{-k}} Delta_{k+s}
DiscOp psi_s(const DiscOp& t, int s);

// Formula side of the k_{s,k} identity at the cell pair (x, y), one value per component.
RVector ksk_formula(const DiscOp& t, int s, int k, int x, int y);
struct KskReport {
  double residual = 0;     // max relative entry mismatch
  int pairs = 0;
  double size_ratio = 0;   // max |k_{s,k}| 2^{gamma(k+s)} |x-y|^{n+gamma} over y outside 3 R_x
};
KskReport ksk_check(const DiscOp& t, int s, int k, int pairs, std::uint64_t seed, double gamma = 1.0);

double schur_bound(const DiscOp& t);
// Uses alpha_0 + 2 sum_{d >= 1} alpha_d.
struct CotlarReport {
  std::vector<double> alpha;
  double bound = 0;
};
CotlarReport cotlar_bound(const std::vector<DiscOp>& family);

struct SchurDecayRow {
  int s = 0;
  double s1 = 0;             // sup over k, x of S^1_{s,k}
  double s2 = 0;             // sup over k, y of S^2_{s,k}
  double s1_normalized = 0;  // 2^{gamma s} S^1 / s
  double s2_normalized = 0;  // S^2 / s
};
std::vector<SchurDecayRow> schur_integrals_decay(const DiscOp& t, int s_lo, int s_hi, double gamma = 1.0);

// rho = T^* 1, one vector per component.
std::vector<RVector> adjoint_one(const DiscOp& t);
// Matrices P_m of Pi_rho(f) = sum_{j=1}^K Delta_j(rho) E_{j-1}(f).
std::vector<RMatrix> paraproduct_matrices(const DyadicGrid& grid, const std::vector<RVector>& rho);
RMatrix paraproduct(const DyadicGrid& grid, const std::vector<RVector>& rho, const RVector& f);
// Pi_rho^* applied to a cells x M family.
RVector paraproduct_adjoint(const DyadicGrid& grid, const std::vector<RVector>& rho, const RMatrix& g);
// sup_j sup_{Q in Q_j} (mean_Q |rho - rho_Q|^2)^{1/2}, levels 0..K-1.
double bmo_dyadic(const DyadicGrid& grid, const std::vector<RVector>& rho);
// T_0 = T - Pi_rho^* with rho = T^* 1; the zero mode is removed as well so T_0^* 1 = 0.
DiscOp paraproduct_correction(const DiscOp& t);

// Omega_k (level-k cubes meeting supp Delta_{k+s} f) and Sigma = union of 9 Omega_k, k = 0..K-s.
struct SigmaSet {
  int s = 0;
  std::vector<std::vector<int>> omega;  // cube indices per level k
  std::vector<char> sigma;              // per cell
  int sigma_cells() const;
};
SigmaSet sigma_set(const DyadicGrid& grid, const RVector& f, int s);

double vanish_check(const DiscOp& t, const RVector& f, int s);

struct PseudolocResult {
  double lhs = 0;       // |1_{Sigma^c} T f|
  double ratio = 0;     // lhs / (s 2^{-gamma s / 2} |f|_2)
  double identity = 0;  // |1_{Sigma^c} (T - Phi_s - Psi_s) f|_inf / |f|_2
  bool vacuous = false; // Sigma covers the torus
};
// The identity residual assumes Delta_j f = 0 for j < s; phi_plus_psi may be supplied precomputed.
PseudolocResult commutative_pseudoloc_check(const DiscOp& t, const RVector& f, int s, double gamma = 1.0,
                                            const DiscOp* phi_plus_psi = nullptr);

// Sum of Haar atoms with random weights at levels level+1..K inside one random level-`level` cube (n = 1).
RVector localized_haar_function(const DyadicGrid& grid, int level, std::uint64_t seed);

// L2 norm with respect to the cell measure.
double grid_l2(const RVector& f);
double grid_l2(const RMatrix& f);

// Matrix-valued functions on the grid: row per cell, d*d entries, column-major within the cell.
using GridFunction = Eigen::MatrixXcd;
GridFunction to_grid_function(const Matrix& block_diag, int d);
Matrix from_grid_function(const GridFunction& f, int d);

// q_k = 1 - 1_{Omega_k} as block-diagonal projections for a scalar f, k = 0..K-s.
std::vector<Matrix> omega_projections(const DyadicGrid& grid, const RVector& f, int s);

struct NcPseudolocResult {
  double lhs = 0;
  double ratio = 0;
  double identity = 0;   // max entry of zeta T f zeta - LR_zeta (Phi_s + Psi_s) f, relative to |f|_2
  Matrix zeta;           // zeta_{f,s}, block diagonal
  bool vacuous = false;  // f is rounding noise (|f|_2 <= 1e-12 max(1, |f|_inf entries))
};
// q[k] for k = 0..K-s must certify supp* Delta_{k+s} f <= 1 - q_k.
NcPseudolocResult nc_pseudoloc_check(const DiscOp& t, const Matrix& f, int d, const std::vector<Matrix>& q, int s,
                                     double gamma = 1.0);

struct LocalizationResult {
  double value = 0;  // |int T f g|_H
  double ratio = 0;  // value / (r1^n log(r2 / r1))
};
LocalizationResult localization_check(const DiscOp& t, const Point& x0, double r1, double r2);

// Least-squares slope of log2(values) against s.
double log2_slope(const std::vector<int>& s, const std::vector<double>& values);

struct DecayRow {
  int s = 0;
  double phi = 0;        // |Phi_s(T_0)|
  double psi = 0;        // |Psi_s(T)|
  double ratio = 0;      // max commutative pseudo-localization ratio over trials
  double identity = 0;   // max restriction-identity residual
  bool vacuous = false;  // every trial had Sigma = torus
};
struct DecayReport {
  std::vector<DecayRow> rows;
  double t_norm = 0;        // |T| after normalization
  double rho_norm = 0;      // |T^* 1|_2 before correction
  double phi_slope = 0;
  double psi_slope = 0;     // fitted over the rows with psi > 0
  int psi_zero_rows = 0;
};
DecayReport decay_experiment(KernelFamily family, int K, int s_lo, int s_hi, int trials, std::uint64_t seed);

}  // namespace nclp
