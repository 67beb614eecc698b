#pragma once

#include <complex>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace nclp {

using cplx = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using RMatrix = Eigen::MatrixXd;
using RVector = Eigen::VectorXd;

// Broken precondition on the caller's side.
struct ContractViolation : std::logic_error {
  using std::logic_error::logic_error;
};

// A computation produced a non-finite value or failed to converge.
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// Tolerances shared across the library.
inline constexpr double kEigenMergeTol = 1e-9;
inline constexpr double kMeetTol = 1e-8;
inline constexpr double kHermitianTol = 1e-10;

// Real interval with explicit endpoint convention. Eigenvalues within
// kEigenMergeTol of an endpoint belong to the interval iff that endpoint
// is closed.
struct Interval {
  double lo = -kInf;
  double hi = kInf;
  bool lo_closed = true;
  bool hi_closed = true;

  static Interval closed(double a, double b) { return {a, b, true, true}; }
  static Interval open(double a, double b) { return {a, b, false, false}; }
  static Interval open_closed(double a, double b) { return {a, b, false, true}; }
  static Interval closed_open(double a, double b) { return {a, b, true, false}; }
  static Interval above(double a) { return {a, kInf, false, false}; }
  static Interval at_least(double a) { return {a, kInf, true, false}; }

  bool contains(double x) const;
};

// Normalized or grid-weighted trace on block-diagonal operators.
class TraceFunctional {
 public:
  // tr / dim
  TraceFunctional() = default;
  // sum over blocks of weight[c] * tr(block_c) / d
  TraceFunctional(std::vector<double> cell_weights, int block);

  static TraceFunctional grid(int cells, int block);

  cplx operator()(const Matrix& a) const;
  bool is_normalized() const { return weights_.empty(); }

 private:
  std::vector<double> weights_;
  int block_ = 1;
};

// Normalized trace tr(a)/dim.
cplx tau(const Matrix& a);

bool is_hermitian(const Matrix& a, double tol = kHermitianTol);
bool is_projection(const Matrix& p, double tol = 1e-8);
Matrix hermitian_part(const Matrix& a);
Matrix identity_like(const Matrix& a);

struct SpectralComponent {
  double value;
  Matrix projection;
};

// Ascending eigenvalues; clusters within kEigenMergeTol merged.
std::vector<SpectralComponent> spectral_decompose(const Matrix& h);

Matrix spectral_projection(const Matrix& h, const Interval& interval);

// Functional calculus g(h) for Hermitian h.
template <class F>
Matrix hermitian_apply(const Matrix& h, F&& g) {
  if (!is_hermitian(h, 1e-8 * (1.0 + h.norm())))
    throw ContractViolation("hermitian_apply: input is not Hermitian");
  Eigen::SelfAdjointEigenSolver<Matrix> es(hermitian_part(h));
  const auto& ev = es.eigenvalues();
  const auto& V = es.eigenvectors();
  Vector w(ev.size());
  for (Eigen::Index i = 0; i < ev.size(); ++i) w(i) = g(ev(i));
  return V * w.asDiagonal() * V.adjoint();
}

// (a)^{1/2} for positive semidefinite a; negative rounding clipped.
Matrix psd_sqrt(const Matrix& a);
// |f| = (f* f)^{1/2}
Matrix abs_op(const Matrix& f);

// Singular values, descending.
RVector singular_values(const Matrix& f);
double min_eigenvalue(const Matrix& h);
double max_eigenvalue(const Matrix& h);

double tail_trace(const Matrix& f, double lambda);
double weak_l1(const Matrix& f);

// mu_t as a right-continuous step function on [0,1).
struct MuFunction {
  std::vector<double> breaks;  // left endpoints, breaks[0] = 0
  std::vector<double> values;  // value on [breaks[i], breaks[i+1])
  double operator()(double t) const;
  double integral() const;
  double sup_t_mu() const;
};
MuFunction mu_function(const Matrix& a);

double schatten_norm(const Matrix& a, double p);
double op_norm(const Matrix& a);
// ||a||_2 with respect to the normalized trace.
double l2_norm(const Matrix& a);

Matrix proj_meet(const std::vector<Matrix>& ps, double tol = kMeetTol);
Matrix proj_join(const std::vector<Matrix>& ps, double tol = kMeetTol);

// True iff ||p f p|| <= tol * ||f||; certifies supp* f <= 1 - p.
bool annihilation_check(const Matrix& p, const Matrix& f, double tol);

// Orthonormal basis of the range of a projection.
Matrix range_basis(const Matrix& p, double tol = 0.5);

}  // namespace nclp
