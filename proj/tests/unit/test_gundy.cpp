#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "gen.hpp"
#include "nclp/gundy.hpp"
#include "nclp/random.hpp"

using namespace nclp;

TEST(Gundy, PropertyExactIdentities) {
  for (const char* spec : {"tensor:4", "grid:1,3,2"}) {
    for (std::uint64_t seed = 0; seed < 6; ++seed) {
      const Martingale f = random_positive_martingale(AlgebraSpec::parse(spec), 70 + seed);
      for (int e = -1; e <= 3; ++e) {
        const GundyParts parts = gundy(f, std::ldexp(1.0, e));
        const GundyReport r = gundy_verify(f, parts);
        EXPECT_LE(r.reconstruction, 1e-10) << spec;
        EXPECT_LE(std::max({r.alpha_defect, r.beta_defect, r.gamma_defect}), 1e-10) << spec;
        EXPECT_LE(r.annihilation, 1e-10) << spec;
        EXPECT_LE(r.gamma_ratio, 1.0 + 1e-8) << spec;
        for (int k = 0; k < f.levels(); ++k) {
          const Matrix sum = parts.alpha.d(k) + parts.beta.d(k) + parts.gamma.d(k);
          EXPECT_LT(gen::max_abs(sum - f.d(k)), 1e-10) << spec;
        }
      }
    }
  }
}

TEST(Gundy, LargeLambdaLeavesOnlyTheGoodPart) {
  const Martingale f = random_positive_martingale(AlgebraSpec::tensor(3), 1);
  const GundyParts parts = gundy(f, 4.0 * f.sup_linf());
  for (int k = 0; k < f.levels(); ++k) {
    EXPECT_LT(gen::max_abs(parts.alpha.d(k) - f.d(k)), 1e-10);
    EXPECT_LT(gen::max_abs(parts.beta.d(k)), 1e-10);
    EXPECT_LT(gen::max_abs(parts.gamma.d(k)), 1e-10);
  }
}

TEST(ThmA1, SplitReassemblesTheTransform) {
  const Martingale f = random_positive_martingale(AlgebraSpec::tensor(3), 2);
  const CoeffMatrix xi = random_coeffs(f.levels(), 3, 5, RowNorm::LeOne);
  const ThmA1Split s = thmA1_decompose(f, xi);
  const auto fam = transform_family(f, xi);
  for (int m = 0; m < 3; ++m) EXPECT_LT(gen::max_abs(s.A[m] + s.B[m] - fam[m]), 1e-10);
  EXPECT_EQ(s.shift, 0.0);
}

TEST(ThmA1, GammaIsInvisibleBelowTheLevel) {
  const Martingale f = random_positive_martingale(AlgebraSpec::tensor(4), 3);
  const PiFamily pi = pi_family(f, -2, 6);
  for (int l = -2; l <= 4; ++l) {
    const GundyParts parts = gundy(f, std::ldexp(1.0, l));
    for (int k = 0; k < f.levels(); ++k) EXPECT_LT(gen::max_abs(delta_trunc(parts.gamma.d(k), pi, l)), 1e-10);
  }
}

TEST(Weak11, RejectsRowsAboveOne) {
  const Martingale f = random_positive_martingale(AlgebraSpec::tensor(2), 4);
  const CoeffMatrix big(Matrix::Constant(f.levels(), 2, 1.0));
  EXPECT_THROW(weak11_experiment(f, big, 0, 2), ContractViolation);
  const Weak11Report r = weak11_experiment(f, CoeffMatrix::dirac(f.levels(), f.levels()), -3, 6);
  EXPECT_GE(r.row_ratio, 0.0);
  EXPECT_LE(r.row_ratio, 64.0);
}

TEST(Ergodic, FirstRowClosedForm) {
  // sum_m 1/(m (m+1)^2) = 2 - pi^2/6
  const double exact = 2.0 - std::numbers::pi * std::numbers::pi / 6.0;
  EXPECT_NEAR(ergodic_row_sup(1, 1000000), exact, 1e-9);
  const CoeffMatrix c = ergodic_coeffs(5, 3);
  EXPECT_NEAR(c(1, 3).real(), 2.0 / (2.0 * 5.0), 1e-15);
  EXPECT_EQ(c(2, 0), cplx(0.0));
  EXPECT_LE(ergodic_row_sup(2000, 200000), 1.0);
  EXPECT_THROW(ergodic_row_sup(10, 5), ContractViolation);
}

TEST(Cross, SquareIntegrableCaseIsAnIdentity) {
  const Martingale f = random_positive_martingale(AlgebraSpec::tensor(3), 6);
  const CoeffMatrix rho = random_coeffs(f.levels(), 2, 1, RowNorm::EqOne);
  const CoeffMatrix eta = random_coeffs(f.levels(), 2, 2, RowNorm::EqOne);
  const CrossReport r = cross_experiment(f, rho, eta, 2.0);
  EXPECT_NEAR(r.ratio, 1.0, 1e-10);
  const CoeffMatrix xi = cross_coeffs(rho, eta);
  EXPECT_EQ(xi.cols(), 4);
  EXPECT_TRUE(xi.unit_rows(1e-10));
  EXPECT_THROW(cross_experiment(f, random_coeffs(f.levels(), 2, 1, RowNorm::LeOne), eta, 4.0), ContractViolation);
}
