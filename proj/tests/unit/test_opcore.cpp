#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "gen.hpp"
#include "nclp/opcore.hpp"

using namespace nclp;

namespace {

double mean_power(const std::vector<cplx>& z, double p) {
  double acc = 0.0;
  for (const auto& v : z) acc += std::pow(std::abs(v), p);
  return std::pow(acc / static_cast<double>(z.size()), 1.0 / p);
}

}  // namespace

TEST(Interval, EndpointConventions) {
  EXPECT_TRUE(Interval::closed(0, 1).contains(1.0));
  EXPECT_FALSE(Interval::open(0, 1).contains(1.0));
  EXPECT_TRUE(Interval::open_closed(0, 1).contains(1.0 + 0.5 * kEigenMergeTol));
  EXPECT_FALSE(Interval::open_closed(0, 1).contains(0.5 * kEigenMergeTol));
  EXPECT_TRUE(Interval::above(2.0).contains(3.0));
  EXPECT_FALSE(Interval::above(2.0).contains(2.0));
}

TEST(SpectralProjection, MatchesPrescribedEigenbasis) {
  gen::Source src(11);
  const std::vector<double> ev{-1.0, 0.0, 0.5, 1.0, 1.0, 3.0};
  const Matrix u = gen::unitary(src, 6);
  Eigen::VectorXcd d(6);
  for (int i = 0; i < 6; ++i) d(i) = ev[i];
  const Matrix h = u * d.asDiagonal() * u.adjoint();
  // Closed at 1 keeps the double eigenvalue, open drops it.
  const Matrix closed = spectral_projection(h, Interval::closed(0.25, 1.0));
  const Matrix open = spectral_projection(h, Interval::open(0.25, 1.0));
  EXPECT_LT(gen::max_abs(closed - gen::projection_onto(u, {2, 3, 4})), 1e-10);
  EXPECT_LT(gen::max_abs(open - gen::projection_onto(u, {2})), 1e-10);
  EXPECT_TRUE(is_projection(closed));
}

TEST(SpectralProjection, PropertyComplementsSumToIdentity) {
  for (std::uint64_t seed = 0; seed < 25; ++seed) {
    gen::Source src(seed);
    const int n = src.integer(2, 9);
    const Matrix g = gen::gaussian(src, n, n);
    const Matrix h = 0.5 * (g + g.adjoint());
    const double cut = src.uniform(-1.0, 1.0);
    const Matrix lo = spectral_projection(h, Interval::closed(-kInf, cut));
    const Matrix hi = spectral_projection(h, Interval::above(cut));
    EXPECT_LT(gen::max_abs(lo + hi - Matrix::Identity(n, n)), 1e-10) << "seed " << seed;
    EXPECT_LT(gen::max_abs(lo * h - h * lo), 1e-9) << "seed " << seed;
  }
}

TEST(SchattenNorm, NormalMatrixOracle) {
  gen::Source src(3);
  const std::vector<cplx> z{{1, 1}, {-2, 0}, {0, 0.5}, {3, -1}};
  const Matrix a = gen::normal_with(src, z);
  for (double p : {1.0, 2.0, 3.0, 4.0}) EXPECT_NEAR(schatten_norm(a, p), mean_power(z, p), 1e-10) << "p=" << p;
  double sup = 0.0;
  for (const auto& v : z) sup = std::max(sup, std::abs(v));
  EXPECT_NEAR(op_norm(a), sup, 1e-10);
  EXPECT_NEAR(l2_norm(a), mean_power(z, 2.0), 1e-10);
}

TEST(SchattenNorm, PropertyHolderAndMonotone) {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    gen::Source src(100 + seed);
    const int n = src.integer(1, 8);
    const Matrix a = gen::gaussian(src, n, n), b = gen::gaussian(src, n, n);
    EXPECT_LE(schatten_norm(a * b, 1.0), l2_norm(a) * l2_norm(b) + 1e-10);
    // Normalized trace: p-norms increase with p.
    EXPECT_LE(schatten_norm(a, 1.0), schatten_norm(a, 2.0) + 1e-10);
    EXPECT_LE(schatten_norm(a, 2.0), schatten_norm(a, 4.0) + 1e-10);
    EXPECT_LE(schatten_norm(a, 4.0), op_norm(a) + 1e-10);
    EXPECT_NEAR(l2_norm(a) * l2_norm(a), tau(a.adjoint() * a).real(), 1e-9 * (1 + l2_norm(a) * l2_norm(a)));
  }
}

TEST(MuFunction, StepsAreTheOrderedSingularValues) {
  gen::Source src(5);
  const std::vector<double> s{4.0, 1.0, 1.0, 0.5};
  const Matrix a = gen::with_spectrum(src, s);
  const MuFunction mu = mu_function(a);
  EXPECT_NEAR(mu(0.0), 4.0, 1e-10);
  EXPECT_NEAR(mu(0.25), 1.0, 1e-10);
  EXPECT_NEAR(mu(0.6), 1.0, 1e-10);
  EXPECT_NEAR(mu(0.9), 0.5, 1e-10);
  EXPECT_NEAR(mu.integral(), schatten_norm(a, 1.0), 1e-10);
  // t mu_t peaks at t = 1/4.
  EXPECT_NEAR(mu.sup_t_mu(), 1.0, 1e-10);
  EXPECT_NEAR(weak_l1(a), 1.0, 1e-10);
}

TEST(TailTrace, CountsStrictlyAboveLambda) {
  gen::Source src(6);
  const Matrix a = gen::with_spectrum(src, {3.0, 2.0, 2.0, 1.0});
  EXPECT_DOUBLE_EQ(tail_trace(a, 2.0), 0.25);
  EXPECT_DOUBLE_EQ(tail_trace(a, 1.5), 0.75);
  EXPECT_THROW(tail_trace(a, 0.0), ContractViolation);
}

TEST(ProjectionLattice, MeetAndJoinOfKnownSubspaces) {
  gen::Source src(8);
  const Matrix u = gen::unitary(src, 5);
  const Matrix p = gen::projection_onto(u, {0, 1});
  const Matrix q = gen::projection_onto(u, {1, 2});
  EXPECT_LT(gen::max_abs(proj_meet({p, q}) - gen::projection_onto(u, {1})), 1e-8);
  EXPECT_LT(gen::max_abs(proj_join({p, q}) - gen::projection_onto(u, {0, 1, 2})), 1e-8);
}

TEST(ProjectionLattice, PropertyMeetIsBelowEveryInput) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    gen::Source src(200 + seed);
    const int n = src.integer(2, 7);
    const Matrix u = gen::unitary(src, n);
    const Matrix v = gen::unitary(src, n);
    std::vector<int> a(static_cast<std::size_t>(src.integer(1, n))), b(static_cast<std::size_t>(src.integer(1, n)));
    std::iota(a.begin(), a.end(), 0);
    std::iota(b.begin(), b.end(), 0);
    const Matrix p = gen::projection_onto(u, a), q = gen::projection_onto(v, b);
    const Matrix m = proj_meet({p, q});
    EXPECT_TRUE(is_projection(m)) << seed;
    EXPECT_LT(gen::max_abs(p * m - m), 1e-7) << seed;
    EXPECT_LT(gen::max_abs(q * m - m), 1e-7) << seed;
    // Generic subspaces meet in dimension max(0, a + b - n).
    EXPECT_NEAR(m.trace().real(), std::max(0, static_cast<int>(a.size() + b.size()) - n), 1e-6) << seed;
  }
}

TEST(FunctionalCalculus, SqrtAndAbsolute) {
  gen::Source src(9);
  const Matrix g = gen::gaussian(src, 5, 5);
  const Matrix pos = g * g.adjoint();
  const Matrix r = psd_sqrt(pos);
  EXPECT_LT(gen::max_abs(r * r - pos), 1e-9);
  const Matrix a = abs_op(g);
  EXPECT_LT(gen::max_abs(a * a - g.adjoint() * g), 1e-9);
  EXPECT_THROW(hermitian_apply(g, [](double x) { return x; }), ContractViolation);
}

TEST(TraceFunctional, GridWeightsAverageBlockTraces) {
  Matrix a = Matrix::Zero(4, 4);
  a(0, 0) = 2.0;
  a(1, 1) = 4.0;
  a(2, 2) = 6.0;
  a(3, 3) = 8.0;
  const TraceFunctional tr = TraceFunctional::grid(2, 2);
  EXPECT_NEAR(tr(a).real(), 0.5 * (6.0 / 2) + 0.5 * (14.0 / 2), 1e-14);
  EXPECT_NEAR(tr(a).real(), tau(a).real(), 1e-14);
  EXPECT_THROW(tr(Matrix::Zero(3, 3)), ContractViolation);
}

TEST(AnnihilationCheck, CertifiesSupport) {
  gen::Source src(10);
  const Matrix u = gen::unitary(src, 4);
  const Matrix p = gen::projection_onto(u, {0, 1});
  const Matrix pp = Matrix::Identity(4, 4) - p;
  const Matrix x = gen::gaussian(src, 4, 4);
  EXPECT_TRUE(annihilation_check(p, pp * x * pp, 1e-10));
  EXPECT_FALSE(annihilation_check(p, x, 1e-10));
  EXPECT_EQ(range_basis(p).cols(), 2);
}
