#pragma once

#include <vector>

#include "nclp/cuculescu.hpp"
#include "nclp/filtration.hpp"
#include "nclp/martingale.hpp"

namespace nclp {

// Calderon-Zygmund data for a positive grid function. The torus is viewed as
// the unit cube of R^n with f extended by zero, so levels k < 0 carry
// f_k = 2^{nk} f_0 (the dyadic cube [0, 2^{-k})^n) until q_k is the identity.
struct CZParts {
  double lambda = 0;
  int coarse = 0;    // virtual levels -coarse..-1
  int depth = 0;     // K
  int m_lambda = 0;  // largest level with q = 1 (>= -coarse)
  std::vector<Matrix> f;  // f_k, index k + coarse
  std::vector<Matrix> q;  // q_k
  std::vector<Matrix> p;  // p_k = q_{k-1} - q_k
  Matrix q_meet;
  Matrix g_d, g_off, b_d, b_off;

  int first() const { return -coarse; }
  const Matrix& f_at(int k) const { return f.at(static_cast<std::size_t>(k + coarse)); }
  const Matrix& q_at(int k) const { return q.at(static_cast<std::size_t>(k + coarse)); }
  const Matrix& p_at(int k) const { return p.at(static_cast<std::size_t>(k + coarse)); }
  // q_{k} with q_k = 1 below the first stored level.
  Matrix q_or_one(int k) const;
  Matrix df_at(int k) const;
};

CZParts cz_decompose(const Filtration& filt, const Matrix& f, double lambda);

struct CZReport {
  double reconstruction = 0;
  double gd_sq = 0;        // |g_d|_2^2
  double gd_bound = 0;     // 2^n lambda |f|_1
  double bd_sum = 0;       // sum_k |p_k (f - f_k) p_k|_1
  double bd_bound = 0;     // 2 |f|_1
  double bd_mean_defect = 0;  // cube means of b_{d,k}, levels k >= 0
  double disjointness = 0;    // max |p_i p_j|, i != j
};
CZReport cz_verify(const Filtration& filt, const Matrix& f, const CZParts& parts);

struct GoffLayers {
  std::vector<Matrix> layers;          // layers[s-1] = g_(s)
  std::vector<std::vector<Matrix>> pieces;  // pieces[s-1][k - first] = g_{k,s}
  int first = 0;
};
GoffLayers g_off_layers(const CZParts& parts);

struct ZetaData {
  double lambda = 0;
  std::vector<Matrix> psi;   // psi_k for k = 0..K
  std::vector<Matrix> zeta_k;
  Matrix zeta;
};
ZetaData zeta(const Filtration& filt, const CZParts& parts);

struct ZetaReport {
  double measure = 0;        // lambda phi(1 - zeta)
  double measure_bound = 0;  // 9^n |f|_1
  double lemma_min_eig = 0;  // min eigenvalue of (1 - xi_Qhat + xi_Q) - zeta(x), x in 9Q
  double weak_min_eig = 0;   // min eigenvalue of xi_Q - zeta(x), x in 9Q
  double below_levels = 0;   // max |zeta - zeta zeta_k|
};
ZetaReport zeta_verify(const Filtration& filt, const Matrix& f, const CZParts& parts, const ZetaData& z);

struct ThmB1Split {
  OperatorFamily psi_part;  // psi T psi
  OperatorFamily A;
  OperatorFamily B;
  PiFamily chain;           // residual is psi, tail[j] is w_{s_min + j}
  double absorption = 0;    // max over l, m of the absorption identity residual
};
// zeta(2^s) for s in [s_min, s_max]; s_max below s_min selects the first level with zeta = 1.
ThmB1Split thmB1_decompose(const Filtration& filt, const OperatorFamily& tf, const Matrix& f, int s_min,
                           int s_max = -1000);

}  // namespace nclp
