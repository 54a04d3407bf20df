#ifndef PQG_INVERSION_HPP
#define PQG_INVERSION_HPP

// Potential-vorticity inversion: dry elliptic solve, linear moist solve, and
// the nonlinear free-boundary fast-condensation solve, plus the balance
// diagnostics that recover winds and temperature from the pressure.
//
// Conventions shared by all three solvers:
//  - Input PV fields carry the *deviation* PV (the planetary beta*y part is
//    analytic and never stored on the grid).
//  - phi lives at the nz cell centers; stratification coefficients live at
//    the nz+1 faces; the vertical operator is the flux form
//    (f/rho_c) delta_z( rho_f P_f delta_z phi ), self-adjoint in the
//    rho-weighted inner product.
//  - Lid condition: d(phi)/dz = (g/theta_ref) theta_bc at both lids
//    (theta_bc = 0 by default), entering through the prescribed face flux.
//  - The horizontal (0,0) mode is a Neumann problem defined up to a constant:
//    its right-hand side is projected onto the solvable range and the answer
//    is gauged to zero volume mean.

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "pqg/background.hpp"
#include "pqg/errors.hpp"
#include "pqg/grid.hpp"
#include "pqg/thermo.hpp"

namespace pqg {

struct InversionOptions {
  double theta_bc_bottom = 0.0;  // prescribed theta at the lower lid [K]
  double theta_bc_top = 0.0;     // prescribed theta at the upper lid [K]
  double lambda_qvs = 0.0;       // linearized CC slope: q_vs = lambda * theta

  int max_iter = 50;        // active-set sweeps (fast solver)
  double mask_tol = 1e-12;  // branch gap below which a face will not flip
  double cg_tol = 1e-12;    // relative residual target of the mixed-mask solve
  int cg_max_iter = 4000;
  std::ostream* log = nullptr;  // structured iteration lines, one per sweep
};

// Saturation state per horizontal point and cell face (the free boundary
// lives where d(phi)/dz does: on the nz+1 face levels).
struct SaturationMask {
  int nx = 0, ny = 0, nfaces = 0;
  std::vector<std::uint8_t> sat;  // x-fastest, 1 = saturated

  SaturationMask() = default;
  SaturationMask(int nx_, int ny_, int nfaces_)
      : nx(nx_), ny(ny_), nfaces(nfaces_),
        sat(std::size_t(nx_) * ny_ * nfaces_, 0) {}
  std::size_t idx(int i, int j, int jf) const {
    return std::size_t(i) + std::size_t(nx) * (j + std::size_t(ny) * jf);
  }
  bool at(int i, int j, int jf) const { return sat[idx(i, j, jf)] != 0; }
  void set(int i, int j, int jf, bool v) { sat[idx(i, j, jf)] = v ? 1 : 0; }
  long count_saturated() const;
  friend bool operator==(const SaturationMask& a, const SaturationMask& b) {
    return a.nx == b.nx && a.ny == b.ny && a.nfaces == b.nfaces && a.sat == b.sat;
  }
};

struct FastInversion {
  Field3<double> phi;
  SaturationMask mask;
  int iterations = 0;        // active-set sweeps used
  double min_residual = 0;   // max pointwise violation of the min form [K]
  long saturated_faces = 0;
};

// Active-set failure: the free boundary kept cycling.
struct nonconvergence_error : solver_error {
  nonconvergence_error(const std::string& msg, long oscillating)
      : solver_error(msg), oscillating_cells(oscillating) {}
  long oscillating_cells;
};

struct Balances {
  Field3<double> u, v, zeta, theta;
};

Field3<double> invert_dry(const Field3<double>& pv, const BackgroundState<double>& bg,
                          const ThermoParams<double>& tp,
                          const InversionOptions& opts = {});

Field3<double> invert_moist_linear(const Field3<double>& pv_e, const Field3<double>& M,
                                   const BackgroundState<double>& bg,
                                   const ThermoParams<double>& tp,
                                   const InversionOptions& opts = {});

FastInversion invert_moist_fast(const Field3<double>& pv_e, const Field3<double>& M,
                                const BackgroundState<double>& bg,
                                const ThermoParams<double>& tp,
                                const InversionOptions& opts = {});

// Linear solve with a frozen saturation mask (no active-set sweeps). Used for
// tendency inversions, where the free boundary is held at its diagnosed
// position, and for mask-lagged economy stepping.
Field3<double> invert_moist_masked(const Field3<double>& pv_e, const Field3<double>& M,
                                   const SaturationMask& mask,
                                   const BackgroundState<double>& bg,
                                   const ThermoParams<double>& tp,
                                   const InversionOptions& opts = {});

// u = -(1/f) d(phi)/dy, v = (1/f) d(phi)/dx (spectral), zeta = v_x - u_y,
// theta = (theta_ref/g) d(phi)/dz (second-order differences at cell centers).
Balances diagnose_balances(const Field3<double>& phi, const ThermoParams<double>& tp);

// Homogeneous (zero lid flux) operator applications for residual and
// adjointness checks. The moist pair splits Eq-level LHS and the M-driven
// right-hand-side divergence.
Field3<double> apply_dry_operator(const Field3<double>& phi,
                                  const BackgroundState<double>& bg,
                                  const ThermoParams<double>& tp);
Field3<double> apply_moist_linear_operator(const Field3<double>& phi,
                                           const BackgroundState<double>& bg,
                                           const ThermoParams<double>& tp);
Field3<double> moist_rhs_divergence(const Field3<double>& M,
                                    const BackgroundState<double>& bg,
                                    const ThermoParams<double>& tp);
Field3<double> apply_fast_operator(const Field3<double>& phi, const Field3<double>& M,
                                   const SaturationMask& mask,
                                   const BackgroundState<double>& bg,
                                   const ThermoParams<double>& tp,
                                   const InversionOptions& opts = {});

}  // namespace pqg

#endif  // PQG_INVERSION_HPP
