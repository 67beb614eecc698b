#pragma once

#include <vector>

#include "nclp/cuculescu.hpp"
#include "nclp/martingale.hpp"

namespace nclp {

struct GundyParts {
  Martingale alpha;
  Martingale beta;
  Martingale gamma;
  CuculescuSequence seq;
};

// Uses E_{-1} = 0, matching f_{-1} = 0.
GundyParts gundy(const Martingale& f, double lambda);

struct GundyReport {
  double alpha_ratio = 0;  // sup_n |alpha_n|_2^2 / (lambda sup_n |f_n|_1)
  double beta_ratio = 0;   // sum_k |dbeta_k|_1 / sup_n |f_n|_1
  double gamma_ratio = 0;  // lambda tau(1 - q(lambda)) / sup_n |f_n|_1
  double reconstruction = 0;
  double alpha_defect = 0, beta_defect = 0, gamma_defect = 0;
  double annihilation = 0;  // max_k |q(lambda) dgamma_k q(lambda)|
};
GundyReport gundy_verify(const Martingale& f, const GundyParts& parts);

struct ThmA1Split {
  OperatorFamily A;
  OperatorFamily B;
  PiFamily pi;
  double shift = 0;  // multiple of the identity added before building pi
};
// pi comes from q(2^s), s in [l_min, l_max]; l_max is chosen automatically when below l_min.
ThmA1Split thmA1_decompose(const Martingale& f, const CoeffMatrix& xi, int l_min = 0, int l_max = -1);

struct Weak11Report {
  double row_ratio = 0;     // sup over the lambda grid, row square of A
  double col_ratio = 0;     // sup over the lambda grid, column square of B
  double row_weak = 0;      // weak_l1 of the row square, divided by sup |f_n|_1
  double col_weak = 0;
  double sup_l1 = 0;
};
Weak11Report weak11_experiment(const Martingale& f, const CoeffMatrix& xi, int exp_lo, int exp_hi);

// c(k, m) = [k <= m] k / (sqrt(m) (m + 1)) for 1-based k, m, stored at (k-1, m-1).
CoeffMatrix ergodic_coeffs(int m_max, int k_max = -1);
// sup over 1 <= k <= k_max of sum_{m >= k} k^2 / (m (m+1)^2), summed to m_cut plus a tail bound.
double ergodic_row_sup(int k_max, int m_cut);

struct CrossReport {
  double lhs = 0;        // |sum T_mn f (x) e_mn|_p in M (x) B(l2)
  double rc = 0;         // rc-norm with flattened index
  double ratio = 0;      // lhs / rc
  double f_norm = 0;     // |f_top|_p
};
CoeffMatrix cross_coeffs(const CoeffMatrix& rho, const CoeffMatrix& eta);
CrossReport cross_experiment(const Martingale& f, const CoeffMatrix& rho, const CoeffMatrix& eta, double p = 4.0);

}  // namespace nclp
