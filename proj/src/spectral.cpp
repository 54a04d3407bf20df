#include "pqg/spectral.hpp"

#include <unsupported/Eigen/FFT>

namespace pqg {

struct Spectral::Impl {
  Eigen::FFT<double> fft;
  Eigen::VectorXcd row_in, row_out;  // scratch for strided y-direction passes
};

Spectral::Spectral(const Grid<double>& g) : grid_(g), impl_(std::make_shared<Impl>()) {
  validate(g);
  kx_.resize(g.nx);
  ky_.resize(g.ny);
  for (int i = 0; i < g.nx; ++i) {
    const int s = i <= g.nx / 2 ? i : i - g.nx;
    kx_[i] = 2.0 * M_PI * s / g.Lx;
  }
  for (int j = 0; j < g.ny; ++j) {
    const int s = j <= g.ny / 2 ? j : j - g.ny;
    ky_[j] = 2.0 * M_PI * s / g.Ly;
  }
  keep_x_.assign(g.nx, false);
  keep_y_.assign(g.ny, false);
  for (int i = 0; i < g.nx; ++i) {
    const int s = i <= g.nx / 2 ? i : i - g.nx;
    keep_x_[i] = std::abs(s) <= g.nx / 3;
  }
  for (int j = 0; j < g.ny; ++j) {
    const int s = j <= g.ny / 2 ? j : j - g.ny;
    keep_y_[j] = std::abs(s) <= g.ny / 3;
  }
  impl_->row_in.resize(g.ny);
  impl_->row_out.resize(g.ny);
}

void Spectral::forward_slab(const double* in, SpecSlab& out) const {
  const int nx = grid_.nx, ny = grid_.ny;
  out.resize(nx, ny);
  Eigen::VectorXcd col(nx), colhat(nx);
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) col[i] = in[i + long(nx) * j];
    impl_->fft.fwd(colhat, col);
    out.col(j) = colhat;
  }
  for (int i = 0; i < nx; ++i) {
    impl_->row_in = out.row(i).transpose();
    impl_->fft.fwd(impl_->row_out, impl_->row_in);
    out.row(i) = impl_->row_out.transpose();
  }
}

void Spectral::inverse_slab(const SpecSlab& in, double* out) const {
  const int nx = grid_.nx, ny = grid_.ny;
  SpecSlab work(nx, ny);
  for (int i = 0; i < nx; ++i) {
    impl_->row_in = in.row(i).transpose();
    impl_->fft.inv(impl_->row_out, impl_->row_in);  // scales by 1/ny
    work.row(i) = impl_->row_out.transpose();
  }
  Eigen::VectorXcd col(nx), colinv(nx);
  for (int j = 0; j < ny; ++j) {
    col = work.col(j);
    impl_->fft.inv(colinv, col);  // scales by 1/nx
    for (int i = 0; i < nx; ++i) out[i + long(nx) * j] = colinv[i].real();
  }
}

Spectral::SpecField Spectral::forward(const Field3<double>& f) const {
  if (f.grid != grid_)
    throw std::invalid_argument("Spectral: field '" + f.name + "' is on a different grid");
  SpecField spec(grid_.nz);
  for (int k = 0; k < grid_.nz; ++k)
    forward_slab(f.data.data() + long(grid_.nx) * grid_.ny * k, spec[k]);
  return spec;
}

void Spectral::inverse(const SpecField& spec, Field3<double>& f) const {
  if (f.grid != grid_)
    throw std::invalid_argument("Spectral: field '" + f.name + "' is on a different grid");
  for (int k = 0; k < grid_.nz; ++k)
    inverse_slab(spec[k], f.data.data() + long(grid_.nx) * grid_.ny * k);
}

Field3<double> Spectral::deriv(const Field3<double>& f, bool wrt_x) const {
  const int nx = grid_.nx, ny = grid_.ny;
  Field3<double> out = f;
  SpecSlab hat;
  const std::complex<double> I(0.0, 1.0);
  for (int k = 0; k < grid_.nz; ++k) {
    forward_slab(f.data.data() + long(nx) * ny * k, hat);
    for (int j = 0; j < ny; ++j)
      for (int i = 0; i < nx; ++i) {
        if (wrt_x)
          hat(i, j) *= (i == nx / 2) ? 0.0 : I * kx_[i];
        else
          hat(i, j) *= (j == ny / 2) ? 0.0 : I * ky_[j];
      }
    inverse_slab(hat, out.data.data() + long(nx) * ny * k);
  }
  return out;
}

Field3<double> Spectral::deriv_x(const Field3<double>& f) const { return deriv(f, true); }
Field3<double> Spectral::deriv_y(const Field3<double>& f) const { return deriv(f, false); }

void Spectral::dealias(SpecField& spec) const {
  for (auto& slab : spec)
    for (int j = 0; j < grid_.ny; ++j)
      for (int i = 0; i < grid_.nx; ++i)
        if (!keep(i, j)) slab(i, j) = 0.0;
}

void Spectral::dealias(Field3<double>& f) const {
  SpecSlab hat;
  for (int k = 0; k < grid_.nz; ++k) {
    double* slab = f.data.data() + long(grid_.nx) * grid_.ny * k;
    forward_slab(slab, hat);
    for (int j = 0; j < grid_.ny; ++j)
      for (int i = 0; i < grid_.nx; ++i)
        if (!keep(i, j)) hat(i, j) = 0.0;
    inverse_slab(hat, slab);
  }
}

}  // namespace pqg
