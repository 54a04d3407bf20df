#ifndef PQG_GRID_HPP
#define PQG_GRID_HPP

// Doubly periodic horizontal box [0,Lx)x[0,Ly) with a rigid-lid vertical
// slab [0,H]. Prognostic 3-D fields live on nz cell centers; background
// coefficients (see background.hpp) live on the nz+1 cell faces so that the
// vertical flux-form operator needs no interpolation of the stratification.
//
// Storage is x-fastest: linear index i + nx*(j + ny*k).

#include <Eigen/Core>
#include <stdexcept>
#include <string>
#include <utility>

namespace pqg {

template <typename Real = double>
struct Grid {
  int nx = 32, ny = 32, nz = 8;
  Real Lx = Real(2 * M_PI), Ly = Real(2 * M_PI), H = Real(1);

  Real dx() const { return Lx / nx; }
  Real dy() const { return Ly / ny; }
  Real dz() const { return H / nz; }
  Real x(int i) const { return Lx * i / Real(nx); }
  Real y(int j) const { return Ly * j / Real(ny); }
  Real z_center(int k) const { return H * (k + Real(0.5)) / Real(nz); }
  Real z_face(int k) const { return H * k / Real(nz); }
  long cells() const { return long(nx) * ny * nz; }

  friend bool operator==(const Grid& a, const Grid& b) {
    return a.nx == b.nx && a.ny == b.ny && a.nz == b.nz &&
           a.Lx == b.Lx && a.Ly == b.Ly && a.H == b.H;
  }
  friend bool operator!=(const Grid& a, const Grid& b) { return !(a == b); }
};

template <typename Real>
void validate(const Grid<Real>& g) {
  auto pow2 = [](int n) { return n >= 2 && (n & (n - 1)) == 0; };
  if (!pow2(g.nx) || !pow2(g.ny))
    throw std::invalid_argument("Grid: nx, ny must be powers of two >= 2");
  if (g.nz < 4) throw std::invalid_argument("Grid: nz must be >= 4");
  if (!(g.Lx > Real(0) && g.Ly > Real(0) && g.H > Real(0)))
    throw std::invalid_argument("Grid: domain extents must be > 0");
}

template <typename Real = double>
struct Field3 {
  using Array = Eigen::Array<Real, Eigen::Dynamic, 1>;

  Grid<Real> grid;
  std::string name;   // physical variable, e.g. "pv_e"
  std::string units;  // e.g. "s^-1"
  Array data;

  Field3() = default;
  explicit Field3(const Grid<Real>& g, std::string nm = "", std::string un = "")
      : grid(g), name(std::move(nm)), units(std::move(un)),
        data(Array::Zero(g.cells())) {}

  long idx(int i, int j, int k) const {
    return i + long(grid.nx) * (j + long(grid.ny) * k);
  }
  Real& operator()(int i, int j, int k) { return data[idx(i, j, k)]; }
  Real operator()(int i, int j, int k) const { return data[idx(i, j, k)]; }

  // Horizontal slab k as an nx*ny view (x-fastest).
  auto slab(int k) { return data.segment(long(grid.nx) * grid.ny * k, long(grid.nx) * grid.ny); }
  auto slab(int k) const { return data.segment(long(grid.nx) * grid.ny * k, long(grid.nx) * grid.ny); }

  bool finite() const { return data.isFinite().all(); }
};

template <typename Real>
void require_same_grid(const Field3<Real>& a, const Field3<Real>& b) {
  if (a.grid != b.grid)
    throw std::invalid_argument("Field3: grid metadata mismatch between '" +
                                a.name + "' and '" + b.name + "'");
}

}  // namespace pqg

#endif  // PQG_GRID_HPP
