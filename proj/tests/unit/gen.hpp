#pragma once

// Hand-rolled instance generators shared by the unit tests.

#include <algorithm>
#include <cstdint>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "nclp/opcore.hpp"

namespace gen {

using nclp::cplx;
using nclp::Matrix;
using nclp::RVector;

struct Source {
  explicit Source(std::uint64_t seed) : eng(seed) {}
  double normal() { return std::normal_distribution<double>(0.0, 1.0)(eng); }
  double uniform(double lo = 0.0, double hi = 1.0) { return std::uniform_real_distribution<double>(lo, hi)(eng); }
  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(eng); }
  std::mt19937_64 eng;
};

inline Matrix gaussian(Source& src, int rows, int cols) {
  Matrix g(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) g(i, j) = cplx(src.normal(), src.normal());
  return g;
}

// Haar-ish unitary from the QR of a Gaussian matrix.
inline Matrix unitary(Source& src, int n) {
  Eigen::HouseholderQR<Matrix> qr(gaussian(src, n, n));
  return qr.householderQ() * Matrix::Identity(n, n);
}

// U diag(values) U^* with a random unitary U.
inline Matrix with_spectrum(Source& src, const std::vector<double>& values) {
  const int n = static_cast<int>(values.size());
  const Matrix u = unitary(src, n);
  Eigen::VectorXcd d(n);
  for (int i = 0; i < n; ++i) d(i) = values[i];
  return u * d.asDiagonal() * u.adjoint();
}

// Normal matrix with prescribed complex eigenvalues.
inline Matrix normal_with(Source& src, const std::vector<cplx>& values) {
  const int n = static_cast<int>(values.size());
  const Matrix u = unitary(src, n);
  Eigen::VectorXcd d(n);
  for (int i = 0; i < n; ++i) d(i) = values[i];
  return u * d.asDiagonal() * u.adjoint();
}

// Projection onto the span of the chosen columns of a unitary.
inline Matrix projection_onto(const Matrix& u, const std::vector<int>& cols) {
  Matrix p = Matrix::Zero(u.rows(), u.rows());
  for (int c : cols) p += u.col(c) * u.col(c).adjoint();
  return p;
}

inline double max_abs(const Matrix& a) { return a.size() ? a.cwiseAbs().maxCoeff() : 0.0; }

}  // namespace gen
