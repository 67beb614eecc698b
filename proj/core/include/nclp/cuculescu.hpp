#pragma once

#include <vector>

#include "nclp/martingale.hpp"

namespace nclp {

enum class CuculescuConvention {
  // q_n = chi_[0,lambda](q_{n-1} f_n q_{n-1}) meet q_{n-1}
  ClosedMeet,
  // q_n = chi_(0,lambda](q_{n-1} f_n q_{n-1}), no meet
  OpenNoMeet,
};

// q[k] for levels k = 0..top; the implicit q_{-1} is the identity.
struct CuculescuSequence {
  double lambda = 0;
  std::vector<Matrix> q;
  CuculescuConvention convention = CuculescuConvention::ClosedMeet;

  Matrix before(int k) const;  // q_{k-1}, identity for k = 0
  Matrix identity() const;
};

Matrix cuculescu_step(const Matrix& q_prev, const Matrix& f_k, double lambda,
                      CuculescuConvention conv = CuculescuConvention::ClosedMeet);

CuculescuSequence cuculescu(const Martingale& f, double lambda,
                            CuculescuConvention conv = CuculescuConvention::ClosedMeet);

Matrix q_lambda(const CuculescuSequence& seq);

struct CuculescuReport {
  double max_commutator = 0;   // |[q_n, q_{n-1} f_n q_{n-1}]|
  double max_excess = 0;       // max eigenvalue of q_n f_n q_n - lambda q_n
  double max_decrease_defect = 0;  // |q_n - q_n q_{n-1}|
  double tail = 0;             // lambda tau(1 - meet q_n)
  double tail_ratio = 0;       // tail / sup_n |f_n|_1
};
CuculescuReport cuculescu_verify(const Martingale& f, const CuculescuSequence& seq);

// Orthogonal decomposition built from the meets of a chain of projections.
struct PiFamily {
  int l_min = 0;
  int l_max = 0;
  Matrix residual;             // meet over s >= l_min
  std::vector<Matrix> pi;      // pi[i] is pi_k for k = l_min + 1 + i
  std::vector<Matrix> tail;    // tail[j] is the meet over s >= l_min + j

  const Matrix& pi_k(int k) const;
  // Meet over s >= l, for l in [l_min, l_max].
  const Matrix& w(int l) const;
  // Residual first, then pi_{l_min+1}, ..., pi_{l_max}.
  std::vector<Matrix> blocks() const;
  int block_count() const { return static_cast<int>(pi.size()) + 1; }
};

// projs[j] is the projection attached to s = l_min + j; the last one must be the identity.
PiFamily pi_chain(const std::vector<Matrix>& projs, int l_min);

PiFamily pi_family(const Martingale& f, int l_min, int l_max,
                   CuculescuConvention conv = CuculescuConvention::ClosedMeet);
Matrix w_ell(const Martingale& f, int l, int l_min, int l_max);

struct DeltaSplit {
  Matrix row;  // sum over i >= j of pi_i x pi_j
  Matrix col;  // sum over i < j
};
DeltaSplit delta_split(const Matrix& x, const PiFamily& pi);
// sum over j <= i <= l of pi_i x pi_j
Matrix delta_trunc(const Matrix& x, const PiFamily& pi, int l);

}  // namespace nclp
