#include <gtest/gtest.h>

#include <cmath>

#include "gen.hpp"
#include "nclp/cuculescu.hpp"
#include "nclp/random.hpp"

using namespace nclp;

namespace {

// Dyadic martingale of a positive diagonal: f_k is diagonal, the classical case.
Martingale diagonal_martingale(int N, std::uint64_t seed, std::vector<double>* top = nullptr) {
  gen::Source src(seed);
  const int dim = 1 << N;
  Matrix h = Matrix::Zero(dim, dim);
  double total = 0.0;
  for (int i = 0; i < dim; ++i) {
    const double v = std::pow(src.uniform(0.0, 1.0), 3.0) * 8.0;
    h(i, i) = v;
    total += v;
  }
  h *= dim / total;
  if (top)
    for (int i = 0; i < dim; ++i) top->push_back(h(i, i).real());
  return Martingale(Filtration(AlgebraSpec::tensor(N)), h);
}

// Classical stopping-time oracle: x survives iff every dyadic average containing it is <= lambda.
std::vector<double> survivors(const std::vector<double>& top, int N, double lambda) {
  const int dim = 1 << N;
  std::vector<double> keep(static_cast<std::size_t>(dim), 1.0);
  for (int k = 0; k <= N; ++k) {
    const int span = 1 << (N - k);
    for (int b = 0; b < (1 << k); ++b) {
      double avg = 0.0;
      for (int i = 0; i < span; ++i) avg += top[b * span + i];
      avg /= span;
      if (avg > lambda + kEigenMergeTol)
        for (int i = 0; i < span; ++i) keep[b * span + i] = 0.0;
    }
  }
  return keep;
}

}  // namespace

TEST(Cuculescu, CommutativeCaseIsTheStoppingTime) {
  for (std::uint64_t seed = 0; seed < 12; ++seed) {
    std::vector<double> top;
    const Martingale f = diagonal_martingale(5, seed, &top);
    for (double lambda : {0.5, 1.0, 2.0, 4.0}) {
      const Matrix q = q_lambda(cuculescu(f, lambda));
      const auto keep = survivors(top, 5, lambda);
      for (int i = 0; i < 32; ++i) EXPECT_NEAR(q(i, i).real(), keep[i], 1e-9) << seed << ' ' << lambda << ' ' << i;
      EXPECT_LT(gen::max_abs(q - Matrix(q.diagonal().asDiagonal())), 1e-9);
      // Doob: lambda |{sup f_n > lambda}| <= |f|_1.
      double bad = 0.0;
      for (double k : keep) bad += (1.0 - k) / 32.0;
      EXPECT_LE(lambda * bad, 1.0 + 1e-12);
    }
  }
}

TEST(Cuculescu, PropertyRandomPositiveMartingales) {
  for (const char* spec : {"tensor:3", "grid:1,3,2", "corner:4"}) {
    for (std::uint64_t seed = 0; seed < 8; ++seed) {
      const Martingale f = random_positive_martingale(AlgebraSpec::parse(spec), 500 + seed);
      for (int e = -2; e <= 3; ++e) {
        const double lambda = std::ldexp(1.0, e);
        const CuculescuSequence seq = cuculescu(f, lambda);
        const CuculescuReport r = cuculescu_verify(f, seq);
        EXPECT_LE(r.max_commutator, 1e-8) << spec;
        EXPECT_LE(r.max_excess, 1e-8) << spec;
        EXPECT_LE(r.max_decrease_defect, 1e-8) << spec;
        EXPECT_LE(r.tail, f.sup_l1() + 1e-8) << spec;
        for (int k = 0; k < f.levels(); ++k) {
          EXPECT_TRUE(is_projection(seq.q[k])) << spec;
          EXPECT_TRUE(f.filtration().in_level(seq.q[k], k, 1e-8)) << spec;
        }
      }
    }
  }
}

TEST(Cuculescu, LargeLambdaKeepsEverything) {
  const Martingale f = random_positive_martingale(AlgebraSpec::tensor(3), 9);
  const Matrix q = q_lambda(cuculescu(f, 2.0 * f.sup_linf()));
  EXPECT_LT(gen::max_abs(q - Matrix::Identity(8, 8)), 1e-10);
  EXPECT_THROW(cuculescu(f, 0.0), ContractViolation);
}

TEST(Cuculescu, OpenConventionDropsTheKernel) {
  // A zero eigenvalue lands outside (0, lambda] but inside [0, lambda].
  const Filtration filt(AlgebraSpec::corner(2));
  Matrix h = Matrix::Zero(2, 2);
  h(0, 0) = 1.0;
  const Martingale f(filt, h);
  const Matrix closed = q_lambda(cuculescu(f, 2.0, CuculescuConvention::ClosedMeet));
  const Matrix open = q_lambda(cuculescu(f, 2.0, CuculescuConvention::OpenNoMeet));
  EXPECT_NEAR(closed.trace().real(), 2.0, 1e-10);
  EXPECT_NEAR(open.trace().real(), 1.0, 1e-10);
}

TEST(PiChain, BlocksPartitionTheIdentity) {
  const Martingale f = random_positive_martingale(AlgebraSpec::tensor(4), 3);
  const PiFamily pi = pi_family(f, -2, 6);
  Matrix sum = Matrix::Zero(16, 16);
  const auto blocks = pi.blocks();
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    sum += blocks[i];
    for (std::size_t j = 0; j < i; ++j) EXPECT_LT(gen::max_abs(blocks[i] * blocks[j]), 1e-8);
  }
  EXPECT_LT(gen::max_abs(sum - Matrix::Identity(16, 16)), 1e-8);
  EXPECT_LT(gen::max_abs(pi.w(6) - Matrix::Identity(16, 16)), 1e-8);
  EXPECT_THROW(pi_chain({Matrix::Zero(2, 2)}, 0), ContractViolation);
}

TEST(DeltaSplit, RowPlusColumnIsTheInput) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Martingale f = random_positive_martingale(AlgebraSpec::tensor(3), 20 + seed);
    const PiFamily pi = pi_family(f, 0, 5);
    Rng rng(seed);
    const Matrix x = random_element(rng, f.filtration());
    const DeltaSplit ds = delta_split(x, pi);
    EXPECT_LT(gen::max_abs(ds.row + ds.col - x), 1e-10);
    EXPECT_LT(gen::max_abs(delta_trunc(x, pi, pi.l_max) - ds.row), 1e-10);
    // Truncations are contractions in L2 and the two halves are orthogonal.
    for (int l = pi.l_min; l <= pi.l_max; ++l) EXPECT_LE(l2_norm(delta_trunc(x, pi, l)), l2_norm(x) + 1e-10);
    EXPECT_NEAR(std::pow(l2_norm(ds.row), 2) + std::pow(l2_norm(ds.col), 2), std::pow(l2_norm(x), 2), 1e-9);
  }
}
