#include "nclp/random.hpp"

#include <cmath>

namespace nclp {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::uint64_t trial_seed(std::uint64_t seed, std::uint64_t trial) {
  return splitmix64(splitmix64(seed) ^ (trial * 0xD1B54A32D192ED03ULL + 1));
}

Matrix random_gaussian(Rng& rng, int rows, int cols) {
  Matrix g(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) g(i, j) = rng.complex_normal();
  return g;
}

Matrix random_hermitian(Rng& rng, int dim) {
  const Matrix g = random_gaussian(rng, dim, dim);
  return 0.5 * (g + g.adjoint());
}

Matrix random_element(Rng& rng, const Filtration& filt) {
  if (!filt.is_grid()) return random_gaussian(rng, filt.dim(), filt.dim());
  const int d = filt.spec().d;
  std::vector<Matrix> blocks(static_cast<std::size_t>(filt.grid().cells()));
  for (auto& b : blocks) b = random_gaussian(rng, d, d);
  return grid_assemble(blocks);
}

Matrix random_positive(Rng& rng, const Filtration& filt) {
  const Matrix g = random_element(rng, filt);
  Matrix h = g * g.adjoint();
  h = 0.5 * (h + h.adjoint());
  return h / tau(h).real();
}

Matrix random_spiked_positive(Rng& rng, const Filtration& filt, int spikes, double mass) {
  if (!filt.is_grid()) throw ContractViolation("random_spiked_positive: needs a GridMatrix algebra");
  if (spikes < 1 || !(mass > 0) || !(mass < 1)) throw ContractViolation("random_spiked_positive: bad spike parameters");
  const int d = filt.spec().d;
  const int cells = filt.grid().cells();
  Matrix h = (1.0 - mass) * random_positive(rng, filt);
  // tau of a block placed at one cell is tr(block) / (cells d)
  const double amp = mass / spikes * cells * d;
  for (int i = 0; i < spikes; ++i) {
    const int c = rng.uniform_int(0, cells - 1);
    Vector v = random_gaussian(rng, d, 1).col(0);
    v.normalize();
    h.block(c * d, c * d, d, d) += amp * v * v.adjoint();
  }
  return 0.5 * (h + h.adjoint());
}

Martingale random_positive_martingale(const AlgebraSpec& spec, std::uint64_t seed) {
  const Filtration filt(spec);
  Rng rng(seed);
  Martingale m(filt, random_positive(rng, filt));
  for (int k = 0; k < m.levels(); ++k)
    if (min_eigenvalue(m.f(k)) < -1e-12) throw NumericError("random_positive_martingale: lost positivity");
  return m;
}

CoeffMatrix random_coeffs(int k_max, int m_max, std::uint64_t seed, RowNorm norm) {
  Rng rng(seed);
  Matrix xi = random_gaussian(rng, k_max, m_max);
  for (int k = 0; k < k_max; ++k) {
    double target = 1.0;
    if (norm == RowNorm::LeOne) target = rng.uniform();
    xi.row(k) *= std::sqrt(target) / xi.row(k).norm();
  }
  return CoeffMatrix(xi, 1.0);
}

CoeffMatrix random_partition_coeffs(int k_max, int m_max, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<int> part(static_cast<std::size_t>(k_max));
  for (auto& p : part) p = rng.uniform_int(0, m_max - 1);
  return CoeffMatrix::partition(part, m_max);
}

}  // namespace nclp
