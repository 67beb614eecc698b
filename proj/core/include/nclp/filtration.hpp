#pragma once

#include <array>
#include <string>
#include <vector>

#include "nclp/opcore.hpp"

namespace nclp {

struct AlgebraSpec {
  enum class Kind { TensorDyadic, GridMatrix, Corner };

  Kind kind = Kind::TensorDyadic;
  int N = 1;  // tensor factors
  int n = 1;  // grid dimension
  int K = 1;  // grid depth
  int d = 1;  // grid matrix size, or corner matrix size

  static AlgebraSpec tensor(int N);
  static AlgebraSpec grid(int n, int K, int d);
  static AlgebraSpec corner(int size);
  // "tensor:N", "grid:n,K,d", "corner:n"
  static AlgebraSpec parse(const std::string& text);

  int dim() const;
  int top() const;
  std::string str() const;
  void validate() const;
};

// Dyadic cube of the torus [0,1)^n; coordinates reduced mod 2^level.
struct DyadicCube {
  int level = 0;
  std::array<int, 2> coords{0, 0};
  bool operator==(const DyadicCube&) const = default;
};

// Dyadic cell geometry of the torus at depth K.
class DyadicGrid {
 public:
  DyadicGrid(int n, int K);

  int n() const { return n_; }
  int depth() const { return K_; }
  int cells() const { return 1 << (n_ * K_); }
  int cubes(int level) const { return 1 << (n_ * level); }
  double cell_measure() const { return 1.0 / cells(); }

  std::array<int, 2> cell_coords(int cell) const;
  int cell_index(std::array<int, 2> c) const;
  // Midpoint of a cell in [0,1)^n.
  std::array<double, 2> midpoint(int cell) const;
  // Torus l-infinity distance between cell midpoints.
  double distance(int a, int b) const;

  // Index of the level-k cube containing a cell; levels < 0 map to the single root cube.
  int cube_of(int cell, int level) const;
  DyadicCube cube(int level, int index) const;
  int cube_index(const DyadicCube& q) const;
  std::vector<int> cells_of(int level, int index) const;

  DyadicCube father(const DyadicCube& q) const;
  // Indices of level-k cubes forming the delta-fold concentric dilation (wrapped, deduplicated).
  std::vector<int> concentric_cubes(const DyadicCube& q, int delta) const;
  std::vector<int> concentric_cells(const DyadicCube& q, int delta) const;

 private:
  int n_, K_;
};

DyadicCube dyadic_father(const DyadicCube& q);
std::vector<int> concentric_father(const DyadicGrid& grid, const DyadicCube& q, int delta);

class Filtration {
 public:
  explicit Filtration(AlgebraSpec spec);

  const AlgebraSpec& spec() const { return spec_; }
  int dim() const { return spec_.dim(); }
  int top() const { return spec_.top(); }
  bool is_grid() const { return spec_.kind == AlgebraSpec::Kind::GridMatrix; }
  const DyadicGrid& grid() const;
  int block() const { return is_grid() ? spec_.d : dim(); }

  // Trace-preserving conditional expectation onto level k in [0, top].
  Matrix expect(const Matrix& f, int k) const;
  bool in_level(const Matrix& f, int k, double tol = 1e-10) const;
  TraceFunctional trace() const;

 private:
  Matrix expect_tensor(const Matrix& f, int k) const;
  Matrix expect_grid(const Matrix& f, int k) const;
  Matrix expect_corner(const Matrix& f, int k) const;

  AlgebraSpec spec_;
  std::vector<DyadicGrid> grid_;
};

Filtration build_filtration(const AlgebraSpec& spec);
Matrix cond_expect(const Filtration& filt, const Matrix& f, int k);

// Block-diagonal helpers for grid algebras.
std::vector<Matrix> grid_blocks(const Matrix& f, int d);
Matrix grid_assemble(const std::vector<Matrix>& blocks);

}  // namespace nclp
