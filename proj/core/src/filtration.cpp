#include "nclp/filtration.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace nclp {

AlgebraSpec AlgebraSpec::tensor(int N) {
  AlgebraSpec s;
  s.kind = Kind::TensorDyadic;
  s.N = N;
  s.validate();
  return s;
}

AlgebraSpec AlgebraSpec::grid(int n, int K, int d) {
  AlgebraSpec s;
  s.kind = Kind::GridMatrix;
  s.n = n;
  s.K = K;
  s.d = d;
  s.validate();
  return s;
}

AlgebraSpec AlgebraSpec::corner(int size) {
  AlgebraSpec s;
  s.kind = Kind::Corner;
  s.d = size;
  s.validate();
  return s;
}

AlgebraSpec AlgebraSpec::parse(const std::string& text) {
  const auto colon = text.find(':');
  if (colon == std::string::npos) throw ContractViolation("algebra spec '" + text + "': expected kind:params");
  const std::string kind = text.substr(0, colon);
  std::vector<int> vals;
  std::stringstream ss(text.substr(colon + 1));
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      vals.push_back(std::stoi(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ContractViolation("algebra spec '" + text + "': bad integer '" + item + "'");
    }
  }
  if (kind == "tensor" && vals.size() == 1) return tensor(vals[0]);
  if (kind == "grid" && vals.size() == 3) return grid(vals[0], vals[1], vals[2]);
  if (kind == "corner" && vals.size() == 1) return corner(vals[0]);
  throw ContractViolation("algebra spec '" + text + "' not understood");
}

void AlgebraSpec::validate() const {
  switch (kind) {
    case Kind::TensorDyadic:
      if (N < 1 || N > 10) throw ContractViolation("TensorDyadic: N must be in [1,10]");
      break;
    case Kind::GridMatrix:
      if (n < 1 || n > 2) throw ContractViolation("GridMatrix: n must be 1 or 2");
      if (K < 1 || n * K > 12) throw ContractViolation("GridMatrix: K must be >= 1 with n*K <= 12");
      if (d < 1) throw ContractViolation("GridMatrix: d must be >= 1");
      break;
    case Kind::Corner:
      if (d < 1) throw ContractViolation("Corner: size must be >= 1");
      break;
  }
}

int AlgebraSpec::dim() const {
  switch (kind) {
    case Kind::TensorDyadic: return 1 << N;
    case Kind::GridMatrix: return (1 << (n * K)) * d;
    case Kind::Corner: return d;
  }
  return 0;
}

int AlgebraSpec::top() const {
  switch (kind) {
    case Kind::TensorDyadic: return N;
    case Kind::GridMatrix: return K;
    case Kind::Corner: return d;
  }
  return 0;
}

std::string AlgebraSpec::str() const {
  switch (kind) {
    case Kind::TensorDyadic: return "tensor:" + std::to_string(N);
    case Kind::GridMatrix:
      return "grid:" + std::to_string(n) + "," + std::to_string(K) + "," + std::to_string(d);
    case Kind::Corner: return "corner:" + std::to_string(d);
  }
  return {};
}

// ---------------------------------------------------------------------------
// DyadicGrid

DyadicGrid::DyadicGrid(int n, int K) : n_(n), K_(K) {
  if (n < 1 || n > 2 || K < 0) throw ContractViolation("DyadicGrid: need n in {1,2}, K >= 0");
}

std::array<int, 2> DyadicGrid::cell_coords(int cell) const {
  if (n_ == 1) return {cell, 0};
  return {cell >> K_, cell & ((1 << K_) - 1)};
}

int DyadicGrid::cell_index(std::array<int, 2> c) const {
  const int side = 1 << K_;
  auto wrap = [side](int v) { return ((v % side) + side) % side; };
  if (n_ == 1) return wrap(c[0]);
  return (wrap(c[0]) << K_) | wrap(c[1]);
}

std::array<double, 2> DyadicGrid::midpoint(int cell) const {
  const auto c = cell_coords(cell);
  const double h = std::ldexp(1.0, -K_);
  return {(c[0] + 0.5) * h, n_ == 2 ? (c[1] + 0.5) * h : 0.0};
}

double DyadicGrid::distance(int a, int b) const {
  const auto ca = cell_coords(a), cb = cell_coords(b);
  const int side = 1 << K_;
  double best = 0.0;
  for (int i = 0; i < n_; ++i) {
    int diff = std::abs(ca[i] - cb[i]);
    diff = std::min(diff, side - diff);
    best = std::max(best, static_cast<double>(diff));
  }
  return best * std::ldexp(1.0, -K_);
}

int DyadicGrid::cube_of(int cell, int level) const {
  if (level <= 0) return 0;
  if (level > K_) throw ContractViolation("cube_of: level beyond grid depth");
  const auto c = cell_coords(cell);
  const int shift = K_ - level;
  if (n_ == 1) return c[0] >> shift;
  return ((c[0] >> shift) << level) | (c[1] >> shift);
}

DyadicCube DyadicGrid::cube(int level, int index) const {
  DyadicCube q;
  q.level = level;
  if (level <= 0) return q;
  if (n_ == 1) {
    q.coords = {index, 0};
  } else {
    q.coords = {index >> level, index & ((1 << level) - 1)};
  }
  return q;
}

int DyadicGrid::cube_index(const DyadicCube& q) const {
  if (q.level <= 0) return 0;
  const int side = 1 << q.level;
  auto wrap = [side](int v) { return ((v % side) + side) % side; };
  if (n_ == 1) return wrap(q.coords[0]);
  return (wrap(q.coords[0]) << q.level) | wrap(q.coords[1]);
}

std::vector<int> DyadicGrid::cells_of(int level, int index) const {
  std::vector<int> out;
  if (level <= 0) {
    out.resize(cells());
    for (int c = 0; c < cells(); ++c) out[c] = c;
    return out;
  }
  const DyadicCube q = cube(level, index);
  const int span = 1 << (K_ - level);
  if (n_ == 1) {
    for (int i = 0; i < span; ++i) out.push_back(q.coords[0] * span + i);
  } else {
    for (int i = 0; i < span; ++i)
      for (int j = 0; j < span; ++j) out.push_back(cell_index({q.coords[0] * span + i, q.coords[1] * span + j}));
  }
  return out;
}

DyadicCube DyadicGrid::father(const DyadicCube& q) const { return dyadic_father(q); }

std::vector<int> DyadicGrid::concentric_cubes(const DyadicCube& q, int delta) const {
  if (delta < 1 || delta % 2 == 0) throw ContractViolation("concentric dilation: delta must be odd and positive");
  if (q.level <= 0) return {0};
  const int r = delta / 2;
  std::vector<int> out;
  DyadicCube p = q;
  for (int a = -r; a <= r; ++a) {
    if (n_ == 1) {
      p.coords = {q.coords[0] + a, 0};
      out.push_back(cube_index(p));
    } else {
      for (int b = -r; b <= r; ++b) {
        p.coords = {q.coords[0] + a, q.coords[1] + b};
        out.push_back(cube_index(p));
      }
    }
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::vector<int> DyadicGrid::concentric_cells(const DyadicCube& q, int delta) const {
  std::vector<int> out;
  for (int idx : concentric_cubes(q, delta)) {
    const auto cs = cells_of(q.level, idx);
    out.insert(out.end(), cs.begin(), cs.end());
  }
  std::sort(out.begin(), out.end());
  return out;
}

DyadicCube dyadic_father(const DyadicCube& q) {
  if (q.level <= 0) return DyadicCube{q.level - 1, {0, 0}};
  DyadicCube f;
  f.level = q.level - 1;
  f.coords = {q.coords[0] >> 1, q.coords[1] >> 1};
  return f;
}

std::vector<int> concentric_father(const DyadicGrid& grid, const DyadicCube& q, int delta) {
  return grid.concentric_cells(q, delta);
}

// ---------------------------------------------------------------------------
// Filtration

Filtration::Filtration(AlgebraSpec spec) : spec_(spec) {
  spec_.validate();
  if (is_grid()) grid_.emplace_back(spec_.n, spec_.K);
}

const DyadicGrid& Filtration::grid() const {
  if (!is_grid()) throw ContractViolation("Filtration::grid: not a grid algebra");
  return grid_.front();
}

TraceFunctional Filtration::trace() const {
  if (is_grid()) return TraceFunctional::grid(grid().cells(), spec_.d);
  return TraceFunctional();
}

Matrix Filtration::expect(const Matrix& f, int k) const {
  if (f.rows() != dim() || f.cols() != dim()) throw ContractViolation("expect: operator dimension mismatch");
  if (k < 0 || k > top()) throw ContractViolation("expect: level " + std::to_string(k) + " out of range");
  switch (spec_.kind) {
    case AlgebraSpec::Kind::TensorDyadic: return expect_tensor(f, k);
    case AlgebraSpec::Kind::GridMatrix: return expect_grid(f, k);
    case AlgebraSpec::Kind::Corner: return expect_corner(f, k);
  }
  return f;
}

bool Filtration::in_level(const Matrix& f, int k, double tol) const {
  return (expect(f, k) - f).cwiseAbs().maxCoeff() <= tol * (1.0 + f.cwiseAbs().maxCoeff());
}

Matrix Filtration::expect_tensor(const Matrix& f, int k) const {
  // Index = (I, J): I the first k factors (high bits), J the remaining N-k.
  const int rest = 1 << (spec_.N - k);
  const int head = 1 << k;
  Matrix out = Matrix::Zero(f.rows(), f.cols());
  for (int i = 0; i < head; ++i)
    for (int ip = 0; ip < head; ++ip) {
      cplx acc = f.block(i * rest, ip * rest, rest, rest).trace();
      acc /= static_cast<double>(rest);
      for (int j = 0; j < rest; ++j) out(i * rest + j, ip * rest + j) = acc;
    }
  return out;
}

Matrix Filtration::expect_grid(const Matrix& f, int k) const {
  const auto& g = grid();
  const int d = spec_.d;
  Matrix out = Matrix::Zero(f.rows(), f.cols());
  for (int q = 0; q < g.cubes(k); ++q) {
    const auto cells = g.cells_of(k, q);
    Matrix avg = Matrix::Zero(d, d);
    for (int c : cells) avg += f.block(c * d, c * d, d, d);
    avg /= static_cast<double>(cells.size());
    for (int c : cells) out.block(c * d, c * d, d, d) = avg;
  }
  return out;
}

Matrix Filtration::expect_corner(const Matrix& f, int k) const {
  Matrix out = Matrix::Zero(f.rows(), f.cols());
  out.topLeftCorner(k, k) = f.topLeftCorner(k, k);
  for (int i = k; i < dim(); ++i) out(i, i) = f(i, i);
  return out;
}

Filtration build_filtration(const AlgebraSpec& spec) { return Filtration(spec); }

Matrix cond_expect(const Filtration& filt, const Matrix& f, int k) { return filt.expect(f, k); }

std::vector<Matrix> grid_blocks(const Matrix& f, int d) {
  if (f.rows() % d != 0 || f.rows() != f.cols()) throw ContractViolation("grid_blocks: dimension mismatch");
  const Eigen::Index cells = f.rows() / d;
  std::vector<Matrix> out(static_cast<std::size_t>(cells));
  for (Eigen::Index c = 0; c < cells; ++c) out[c] = f.block(c * d, c * d, d, d);
  return out;
}

Matrix grid_assemble(const std::vector<Matrix>& blocks) {
  if (blocks.empty()) return Matrix();
  const Eigen::Index d = blocks.front().rows();
  const Eigen::Index cells = static_cast<Eigen::Index>(blocks.size());
  Matrix out = Matrix::Zero(cells * d, cells * d);
  for (Eigen::Index c = 0; c < cells; ++c) out.block(c * d, c * d, d, d) = blocks[c];
  return out;
}

}  // namespace nclp
