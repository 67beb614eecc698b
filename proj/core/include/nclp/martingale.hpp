#pragma once

#include <vector>

#include "nclp/filtration.hpp"
#include "nclp/opcore.hpp"

namespace nclp {

// Adapted sequence over levels 0..top with f_{-1} = 0, so df_0 = f_0.
class Martingale {
 public:
  // f_k = E_k(top_value)
  Martingale(const Filtration& filt, const Matrix& top_value);
  // Sequence given by its differences; adaptedness is not enforced here.
  static Martingale from_differences(const Filtration& filt, std::vector<Matrix> diffs);

  const Filtration& filtration() const { return filt_; }
  int levels() const { return static_cast<int>(f_.size()); }
  const Matrix& f(int k) const { return f_.at(static_cast<std::size_t>(k)); }
  const Matrix& d(int k) const { return d_.at(static_cast<std::size_t>(k)); }
  const std::vector<Matrix>& diffs() const { return d_; }
  const Matrix& top_value() const { return f_.back(); }

  // max over j <= k of |E_j f_k - f_j| (entrywise sup).
  double martingale_defect() const;
  double sup_l1() const;
  double sup_linf() const;

 private:
  Martingale(const Filtration& filt) : filt_(filt) {}

  Filtration filt_;
  std::vector<Matrix> f_;
  std::vector<Matrix> d_;
};

// Coefficients xi(k, m); row k acts on df_k, column m indexes the family.
class CoeffMatrix {
 public:
  explicit CoeffMatrix(Matrix xi);
  // Reject rows whose squared sum exceeds bound + 1e-12.
  CoeffMatrix(Matrix xi, double bound);

  static CoeffMatrix dirac(int k_max, int m_max);
  static CoeffMatrix signs(const std::vector<int>& eps);
  // part[k] = index of the block containing k.
  static CoeffMatrix partition(const std::vector<int>& part, int m_max);

  int rows() const { return static_cast<int>(xi_.rows()); }
  int cols() const { return static_cast<int>(xi_.cols()); }
  cplx operator()(int k, int m) const { return xi_(k, m); }
  const Matrix& matrix() const { return xi_; }
  double row_bound() const { return bound_; }
  double row_sq(int k) const { return xi_.row(k).squaredNorm(); }
  bool unit_rows(double tol = 1e-12) const;

 private:
  Matrix xi_;
  double bound_;
};

using OperatorFamily = std::vector<Matrix>;

OperatorFamily transform_family(const Martingale& f, const CoeffMatrix& xi);
// Sum_m T_m g^m with T_m g = Sum_k xi_km dg_k.
Matrix transform_adjoint(const Filtration& filt, const OperatorFamily& g, const CoeffMatrix& xi);

Matrix row_square(const OperatorFamily& g);
Matrix col_square(const OperatorFamily& g);
double lp_rc_norm(const OperatorFamily& g, double p);
// ||row(A)||_p + ||col(B)||_p for an explicit splitting.
double split_rc_upper_bound(const OperatorFamily& a, const OperatorFamily& b, double p);
// Sum_m ||g_m||_2^2
double family_l2_sq(const OperatorFamily& g);

struct BmoNorms {
  double row = 0, col = 0, both = 0;
};
BmoNorms bmo_norms(const Martingale& f);

struct FunctionBmo {
  double row = 0, col = 0;
};
// Cell values may be rectangular; the grid fixes the geometry.
FunctionBmo function_bmo(const DyadicGrid& grid, const std::vector<Matrix>& cells);

// |Sum_m ||T_m f||_2^2 - Sum_k ||df_k||_2^2| for unit-row xi.
double l2_identity_check(const Martingale& f, const CoeffMatrix& xi);
// |Sum_m ||T_m f||_2^2 - Sum_k gamma_k ||df_k||_2^2| with gamma_k the row sums.
double l2_weighted_residual(const Martingale& f, const CoeffMatrix& xi);

// Rademacher average of tau((Sum_k |xi_k(w)|^2 |df_k|^2)^2) in closed form,
// with xi_k(w) = Sum_m xi_km r_m(w).
double rademacher_square_moment(const Martingale& f, const CoeffMatrix& xi);

}  // namespace nclp
