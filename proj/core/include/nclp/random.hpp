#pragma once

#include <cstdint>
#include <random>

#include "nclp/filtration.hpp"
#include "nclp/martingale.hpp"

namespace nclp {

// 64-bit mixing used to derive independent per-trial streams.
std::uint64_t splitmix64(std::uint64_t x);
std::uint64_t trial_seed(std::uint64_t seed, std::uint64_t trial);

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}
  double normal() { return normal_(eng_); }
  double uniform() { return uniform_(eng_); }
  int uniform_int(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(eng_); }
  cplx complex_normal() { return {normal(), normal()}; }
  std::mt19937_64& engine() { return eng_; }

 private:
  std::mt19937_64 eng_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

Matrix random_gaussian(Rng& rng, int rows, int cols);
Matrix random_hermitian(Rng& rng, int dim);
// Random element of the top algebra (block-diagonal for grids).
Matrix random_element(Rng& rng, const Filtration& filt);
// G G* (cellwise for grids), normalized to trace one.
Matrix random_positive(Rng& rng, const Filtration& filt);

// Grid algebras only: background G G* carrying trace 1 - mass, plus rank-one
// spikes a v v* at random cells carrying the remaining trace in equal parts.
Matrix random_spiked_positive(Rng& rng, const Filtration& filt, int spikes, double mass);

Martingale random_positive_martingale(const AlgebraSpec& spec, std::uint64_t seed);

enum class RowNorm { LeOne, EqOne };
CoeffMatrix random_coeffs(int k_max, int m_max, std::uint64_t seed, RowNorm norm);
CoeffMatrix random_partition_coeffs(int k_max, int m_max, std::uint64_t seed);

}  // namespace nclp
