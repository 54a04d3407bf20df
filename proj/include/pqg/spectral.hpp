#ifndef PQG_SPECTRAL_HPP
#define PQG_SPECTRAL_HPP

// Horizontal pseudo-spectral machinery on the doubly periodic box: 2-D
// complex transforms per horizontal slab, exact wavenumber derivatives with
// zeroed Nyquist modes, and the 2/3-rule dealiasing mask shared by the
// inversion solvers and the dynamics core.

#include <Eigen/Core>
#include <complex>
#include <memory>
#include <vector>

#include "pqg/grid.hpp"

namespace pqg {

class Spectral {
 public:
  using Cplx = std::complex<double>;
  using SpecSlab = Eigen::Matrix<Cplx, Eigen::Dynamic, Eigen::Dynamic>;  // nx x ny
  using SpecField = std::vector<SpecSlab>;                               // one per z cell

  explicit Spectral(const Grid<double>& g);

  const Grid<double>& grid() const { return grid_; }

  // Signed angular wavenumbers; entry nx/2 is the (retained) Nyquist mode.
  const Eigen::VectorXd& kx() const { return kx_; }
  const Eigen::VectorXd& ky() const { return ky_; }
  double k2(int i, int j) const { return kx_[i] * kx_[i] + ky_[j] * ky_[j]; }

  // 2/3-rule mask: true where the mode is retained in products.
  bool keep(int i, int j) const { return keep_x_[i] && keep_y_[j]; }

  // Unnormalized forward / 1/(nx ny)-normalized inverse transform of one
  // x-fastest slab of nx*ny reals.
  void forward_slab(const double* in, SpecSlab& out) const;
  void inverse_slab(const SpecSlab& in, double* out) const;

  SpecField forward(const Field3<double>& f) const;
  void inverse(const SpecField& spec, Field3<double>& f) const;

  // Spectral horizontal derivatives (Nyquist modes dropped: an ik factor has
  // no consistent sign on them).
  Field3<double> deriv_x(const Field3<double>& f) const;
  Field3<double> deriv_y(const Field3<double>& f) const;

  // In-place 2/3 truncation of all slabs.
  void dealias(Field3<double>& f) const;
  void dealias(SpecField& spec) const;

 private:
  Field3<double> deriv(const Field3<double>& f, bool wrt_x) const;

  Grid<double> grid_;
  Eigen::VectorXd kx_, ky_;
  std::vector<bool> keep_x_, keep_y_;
  struct Impl;                  // hides the FFT plans
  std::shared_ptr<Impl> impl_;  // shared so Spectral stays copyable
};

}  // namespace pqg

#endif  // PQG_SPECTRAL_HPP
