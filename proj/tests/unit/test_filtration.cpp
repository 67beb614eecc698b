#include <gtest/gtest.h>

#include <set>

#include "gen.hpp"
#include "nclp/filtration.hpp"
#include "nclp/random.hpp"

using namespace nclp;

namespace {

Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j) out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

// E_k(a (x) b) = a (x) tr(b)/dim(b) for a on the first k factors.
Matrix tensor_oracle(const Matrix& a, const Matrix& b) {
  const Eigen::Index m = b.rows();
  return kron(a, b.trace() / static_cast<double>(m) * Matrix::Identity(m, m));
}

}  // namespace

TEST(AlgebraSpec, ParseAndValidate) {
  EXPECT_EQ(AlgebraSpec::parse("tensor:4").dim(), 16);
  EXPECT_EQ(AlgebraSpec::parse("grid:1,4,2").dim(), 32);
  EXPECT_EQ(AlgebraSpec::parse("grid:2,2,3").dim(), 48);
  EXPECT_EQ(AlgebraSpec::parse("corner:5").top(), 5);
  EXPECT_EQ(AlgebraSpec::parse("grid:1,4,2").str(), "grid:1,4,2");
  EXPECT_THROW(AlgebraSpec::parse("grid:1,4"), ContractViolation);
  EXPECT_THROW(AlgebraSpec::parse("tensor:x"), ContractViolation);
  EXPECT_THROW(AlgebraSpec::parse("tensor:0"), ContractViolation);
  EXPECT_THROW(AlgebraSpec::parse("sphere:2"), ContractViolation);
}

TEST(TensorFiltration, MatchesPartialTraceOracle) {
  gen::Source src(1);
  const Filtration filt(AlgebraSpec::tensor(3));
  for (int k = 0; k <= 3; ++k) {
    const int head = 1 << k, rest = 1 << (3 - k);
    Matrix f = Matrix::Zero(8, 8), expected = Matrix::Zero(8, 8);
    for (int term = 0; term < 3; ++term) {
      const Matrix a = gen::gaussian(src, head, head), b = gen::gaussian(src, rest, rest);
      f += kron(a, b);
      expected += tensor_oracle(a, b);
    }
    EXPECT_LT(gen::max_abs(filt.expect(f, k) - expected), 1e-12) << "k=" << k;
  }
}

TEST(GridFiltration, AveragesOverDyadicCubes) {
  const Filtration filt(AlgebraSpec::grid(2, 2, 2));
  Rng rng(5);
  const Matrix f = random_element(rng, filt);
  const Matrix e1 = filt.expect(f, 1);
  // Level-1 cube of cell (i, j) in a 4x4 grid is (i/2, j/2).
  for (int a = 0; a < 16; ++a)
    for (int b = 0; b < 16; ++b) {
      const bool same = (a >> 2) / 2 == (b >> 2) / 2 && (a & 3) / 2 == (b & 3) / 2;
      if (!same) continue;
      EXPECT_LT(gen::max_abs(e1.block(a * 2, a * 2, 2, 2) - e1.block(b * 2, b * 2, 2, 2)), 1e-13);
    }
  Matrix mean = Matrix::Zero(2, 2);
  for (int c = 0; c < 16; ++c) mean += f.block(c * 2, c * 2, 2, 2) / 16.0;
  EXPECT_LT(gen::max_abs(filt.expect(f, 0).block(6, 6, 2, 2) - mean), 1e-13);
}

TEST(CornerFiltration, KeepsCornerAndDiagonal) {
  gen::Source src(3);
  const Filtration filt(AlgebraSpec::corner(4));
  const Matrix f = gen::gaussian(src, 4, 4);
  const Matrix e = filt.expect(f, 2);
  EXPECT_EQ(e(0, 1), f(0, 1));
  EXPECT_EQ(e(3, 3), f(3, 3));
  EXPECT_EQ(e(2, 3), cplx(0.0));
  EXPECT_EQ(e(0, 3), cplx(0.0));
}

TEST(Filtration, PropertyTowerTraceAndBimodule) {
  const std::vector<std::string> specs{"tensor:1", "tensor:3", "tensor:4", "grid:1,3,2", "grid:2,2,1", "corner:5"};
  for (std::size_t idx = 0; idx < specs.size(); ++idx) {
    const Filtration filt(AlgebraSpec::parse(specs[idx]));
    Rng rng(40 + idx);
    for (int rep = 0; rep < 4; ++rep) {
      const Matrix f = random_element(rng, filt);
      for (int j = 0; j <= filt.top(); ++j)
        for (int k = 0; k <= filt.top(); ++k) {
          const Matrix lhs = filt.expect(filt.expect(f, k), j);
          EXPECT_LT(gen::max_abs(lhs - filt.expect(f, std::min(j, k))), 1e-12) << specs[idx];
        }
      for (int k = 0; k <= filt.top(); ++k) {
        EXPECT_NEAR(std::abs(tau(filt.expect(f, k)) - tau(f)), 0.0, 1e-12) << specs[idx];
        const Matrix a = filt.expect(random_element(rng, filt), k);
        const Matrix b = filt.expect(random_element(rng, filt), k);
        EXPECT_LT(gen::max_abs(filt.expect(a * f * b, k) - a * filt.expect(f, k) * b), 1e-10) << specs[idx];
        EXPECT_TRUE(filt.in_level(filt.expect(f, k), k));
      }
    }
  }
}

TEST(Filtration, PropertyPreservesPositivity) {
  for (const char* s : {"tensor:3", "grid:1,3,3", "corner:4"}) {
    const Filtration filt(AlgebraSpec::parse(s));
    Rng rng(77);
    const Matrix h = random_positive(rng, filt);
    for (int k = 0; k <= filt.top(); ++k) EXPECT_GE(min_eigenvalue(filt.expect(h, k)), -1e-12) << s;
  }
}

TEST(DyadicGrid, GeometryOracles) {
  const DyadicGrid g(1, 4);
  EXPECT_EQ(g.cells(), 16);
  EXPECT_DOUBLE_EQ(g.distance(0, 15), 1.0 / 16);  // wraps around
  EXPECT_DOUBLE_EQ(g.distance(0, 8), 0.5);
  EXPECT_EQ(g.cube_of(13, 2), 3);
  EXPECT_EQ(g.cube_of(13, 0), 0);
  // 3Q at level 3 covers three level-3 cubes, at level 1 the whole torus.
  EXPECT_EQ(g.concentric_cubes(g.cube(3, 0), 3).size(), 3u);
  EXPECT_EQ(g.concentric_cubes(g.cube(1, 0), 3).size(), 2u);
  const auto cells = g.concentric_cells(g.cube(2, 0), 3);
  const std::set<int> got(cells.begin(), cells.end());
  EXPECT_EQ(got, (std::set<int>{12, 13, 14, 15, 0, 1, 2, 3, 4, 5, 6, 7}));
  EXPECT_THROW(g.concentric_cubes(g.cube(2, 0), 2), ContractViolation);

  const DyadicGrid g2(2, 3);
  EXPECT_EQ(g2.concentric_cubes(g2.cube(3, 0), 9).size(), 64u);
  EXPECT_EQ(g2.concentric_cubes(g2.cube(3, 0), 3).size(), 9u);
  const DyadicCube q{2, {3, 1}};
  EXPECT_EQ(g2.father(q), (DyadicCube{1, {1, 0}}));
}

TEST(GridBlocks, RoundTrip) {
  Rng rng(4);
  const Filtration filt(AlgebraSpec::grid(1, 2, 3));
  const Matrix f = random_element(rng, filt);
  EXPECT_EQ(grid_assemble(grid_blocks(f, 3)), f);
  EXPECT_THROW(grid_blocks(f, 5), ContractViolation);
}
