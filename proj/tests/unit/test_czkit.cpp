#include <gtest/gtest.h>

#include <cmath>

#include "gen.hpp"
#include "nclp/czkit.hpp"
#include "nclp/pseudoloc.hpp"
#include "nclp/random.hpp"

using namespace nclp;

namespace {

constexpr int kDepth = 5;
constexpr int kCells = 1 << kDepth;

// Positive scalar function on the circle with mean one, as a diagonal grid element (d = 1).
Matrix scalar_positive(std::uint64_t seed, std::vector<double>& v) {
  gen::Source src(seed);
  v.assign(kCells, 0.0);
  double total = 0.0;
  for (auto& x : v) {
    x = std::pow(src.uniform(0.0, 1.0), 4.0) * 10.0;
    total += x;
  }
  Matrix f = Matrix::Zero(kCells, kCells);
  for (int c = 0; c < kCells; ++c) {
    v[c] *= kCells / total;
    f(c, c) = v[c];
  }
  return f;
}

double average(const std::vector<double>& v, int level, int cube) {
  const int span = kCells >> level;
  double acc = 0.0;
  for (int i = 0; i < span; ++i) acc += v[cube * span + i];
  return acc / span;
}

bool bad(const std::vector<double>& v, int level, int cube, double lambda) {
  return average(v, level, cube) > lambda + kEigenMergeTol;
}

// Stopping cubes: bad, with every ancestor good.
std::vector<std::pair<int, int>> stopping_cubes(const std::vector<double>& v, double lambda) {
  std::vector<std::pair<int, int>> out;
  for (int k = 0; k <= kDepth; ++k)
    for (int c = 0; c < (1 << k); ++c) {
      bool ancestors_good = true;
      for (int j = 0; j < k; ++j) ancestors_good &= !bad(v, j, c >> (k - j), lambda);
      if (ancestors_good && bad(v, k, c, lambda)) out.emplace_back(k, c);
    }
  return out;
}

}  // namespace

TEST(CZ, CommutativeStoppingTimeOracle) {
  const Filtration filt(AlgebraSpec::grid(1, kDepth, 1));
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    std::vector<double> v;
    const Matrix f = scalar_positive(seed, v);
    for (double lambda : {1.5, 3.0, 6.0}) {
      const CZParts parts = cz_decompose(filt, f, lambda);
      for (int k = 0; k <= kDepth; ++k)
        for (int c = 0; c < kCells; ++c) {
          bool keep = true;
          for (int j = 0; j <= k; ++j) keep &= !bad(v, j, c >> (kDepth - j), lambda);
          EXPECT_NEAR(parts.q_at(k)(c, c).real(), keep ? 1.0 : 0.0, 1e-9) << seed << ' ' << k;
        }
      // Everything commutes, so no off-diagonal pieces survive.
      EXPECT_LT(gen::max_abs(parts.g_off), 1e-10);
      EXPECT_LT(gen::max_abs(parts.b_off), 1e-10);
      // The good diagonal part is bounded by 2 lambda pointwise (dyadic doubling).
      EXPECT_LE(max_eigenvalue(parts.g_d), 2.0 * lambda + 1e-9);
    }
  }
}

TEST(CZ, VirtualLevelsBelowTheMean) {
  const Filtration filt(AlgebraSpec::grid(1, kDepth, 1));
  std::vector<double> v;
  const Matrix f = scalar_positive(3, v);
  // f_0 = 1 > 1/2, so level -1 (average 1/2 over the doubled cube) is the first good level.
  const CZParts parts = cz_decompose(filt, f, 0.5);
  EXPECT_EQ(parts.m_lambda, -1);
  EXPECT_LT(gen::max_abs(parts.q_at(0)), 1e-12);
  EXPECT_LE(cz_verify(filt, f, parts).reconstruction, 1e-10);
}

TEST(CZ, PropertyBoundsAndReconstruction) {
  for (const char* spec : {"grid:1,4,2", "grid:2,2,2", "grid:1,3,3"}) {
    const Filtration filt(AlgebraSpec::parse(spec));
    for (std::uint64_t seed = 0; seed < 6; ++seed) {
      Rng rng(200 + seed);
      const Matrix f = random_positive(rng, filt);
      for (int e = -2; e <= 4; ++e) {
        const CZParts parts = cz_decompose(filt, f, std::ldexp(1.0, e));
        const CZReport r = cz_verify(filt, f, parts);
        EXPECT_LE(r.reconstruction, 1e-10) << spec;
        EXPECT_LE(r.gd_sq, r.gd_bound * (1 + 1e-9)) << spec;
        EXPECT_LE(r.bd_sum, r.bd_bound * (1 + 1e-9)) << spec;
        EXPECT_LE(r.bd_mean_defect, 1e-10) << spec;
        EXPECT_LE(r.disjointness, 1e-8) << spec;
        const GoffLayers layers = g_off_layers(parts);
        Matrix sum = Matrix::Zero(f.rows(), f.cols());
        for (const auto& l : layers.layers) sum += l;
        EXPECT_LT(gen::max_abs(sum - parts.g_off), 1e-10) << spec;
      }
    }
  }
}

TEST(CZ, Contracts) {
  const Filtration grid(AlgebraSpec::grid(1, 3, 2));
  const Filtration tensor(AlgebraSpec::tensor(3));
  EXPECT_THROW(cz_decompose(tensor, Matrix::Identity(8, 8), 1.0), ContractViolation);
  EXPECT_THROW(cz_decompose(grid, Matrix::Identity(16, 16), 0.0), ContractViolation);
  EXPECT_THROW(cz_decompose(grid, -Matrix::Identity(16, 16), 1.0), ContractViolation);
}

TEST(Zeta, CommutativeCaseRemovesDilatedStoppingCubes) {
  const Filtration filt(AlgebraSpec::grid(1, kDepth, 1));
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    std::vector<double> v;
    const Matrix f = scalar_positive(50 + seed, v);
    for (double lambda : {2.0, 4.0}) {
      std::vector<int> covered(kCells, 0);
      for (const auto& [k, c] : stopping_cubes(v, lambda)) {
        const int side = 1 << k;
        for (int x = 0; x < kCells; ++x) {
          const int cx = x >> (kDepth - k);
          const int gap = std::min(((cx - c) % side + side) % side, ((c - cx) % side + side) % side);
          if (gap <= 4) covered[x] = 1;
        }
      }
      const CZParts parts = cz_decompose(filt, f, lambda);
      const ZetaData z = zeta(filt, parts);
      for (int x = 0; x < kCells; ++x)
        EXPECT_NEAR(z.zeta(x, x).real(), covered[x] ? 0.0 : 1.0, 1e-9) << seed << ' ' << lambda << ' ' << x;
      const ZetaReport r = zeta_verify(filt, f, parts, z);
      EXPECT_LE(r.measure, r.measure_bound * (1 + 1e-9));
    }
  }
}

TEST(Zeta, PropertyLemmaInequalities) {
  for (const char* spec : {"grid:1,4,2", "grid:2,2,2"}) {
    const Filtration filt(AlgebraSpec::parse(spec));
    for (std::uint64_t seed = 0; seed < 6; ++seed) {
      Rng rng(300 + seed);
      const Matrix f = random_positive(rng, filt);
      for (int e = -1; e <= 4; ++e) {
        const CZParts parts = cz_decompose(filt, f, std::ldexp(1.0, e));
        const ZetaData z = zeta(filt, parts);
        const ZetaReport r = zeta_verify(filt, f, parts, z);
        EXPECT_LE(r.measure, r.measure_bound * (1 + 1e-9)) << spec;
        EXPECT_GE(r.lemma_min_eig, -1e-8) << spec;
        EXPECT_GE(r.weak_min_eig, -1e-8) << spec;
        EXPECT_LE(r.below_levels, 1e-8) << spec;
        EXPECT_TRUE(is_projection(z.zeta));
      }
    }
  }
}

TEST(ThmB1, SplitReassemblesAndAbsorbs) {
  const Filtration filt(AlgebraSpec::grid(1, 4, 2));
  const DiscOp op = normalize(assemble(lp_bump_kernel(4), filt.grid()));
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    Rng rng(400 + seed);
    const Matrix f = random_positive(rng, filt);
    OperatorFamily tf;
    for (const auto& g : op.apply(to_grid_function(f, 2))) tf.push_back(from_grid_function(g, 2));
    const ThmB1Split split = thmB1_decompose(filt, tf, f, -2);
    EXPECT_LE(split.absorption, 1e-10);
    for (std::size_t m = 0; m < tf.size(); ++m)
      EXPECT_LT(gen::max_abs(split.A[m] + split.psi_part[m] + split.B[m] - tf[m]), 1e-10);
  }
  EXPECT_THROW(thmB1_decompose(filt, {}, Matrix::Identity(32, 32), 0), ContractViolation);
}
