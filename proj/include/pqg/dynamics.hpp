#ifndef PQG_DYNAMICS_HPP
#define PQG_DYNAMICS_HPP

// Time integration of the moist quasi-geostrophic family. Two variants share
// one prognostic layout (PV_e, M, and for the continuous closure a cloud
// field q_c):
//
//  continuous   D_t PV_e = -(f/dtheta_e_dz) dz(u) . grad(L_c q_v)
//               D_t M    = B [S_ev - S_cd]
//               D_t q_c  = S_cd - S_ac - S_cr
//               with q_v = (M - theta)/(L_c + B) and the linear inversion.
//
//  fast         D_t PV_e as above, q_v = min(q_vs, (M - theta)/(L_c + B))
//               D_t M    = -B s_net,  s_net = -(1/rho) dz(rho V_r q_r)
//               cloud water slaved: q_c = (M - theta - (L_c+B) q_v)/B >= 0,
//               and the free-boundary inversion closes the loop.
//
// In both variants rain is a columnar diagnostic (rain_column_solve) and the
// vertical velocity follows from the theta_e budget, evaluated with tendency
// fields: w = -(d/dt theta_e + u.grad theta_e)/dtheta_e_dz.
//
// Discretization: horizontal advection of the spectral prognostics (PV_e, M)
// is pseudo-spectral with 2/3-rule truncation of the quadratic terms; local
// microphysical sources are added in grid space untruncated so condensation
// exchanges cancel exactly between M, q_c and rain. The sign-constrained
// cloud field is advected in flux form with van-Leer-limited MUSCL
// reconstruction, positivity-preserving for cfl <= 1/2. Time stepping is
// SSP-RK3 with the closure re-diagnosed every stage. Stage updates are
// written in increment form, so a state with vanishing tendencies is a
// bitwise fixed point. Negative cloud water produced by source overshoots is
// clipped per stage and the removed mass is accounted.
//
// Vertical coefficient placement: stepping needs cell-centered values of the
// face-registered background derivatives; they are face-pair averages, so the
// dry limit (dq_vs_dz = 0) keeps q_v = 0 and c1 = 1 exact. Where dq_vs_dz
// vanishes, B is infinite and the B-weighted moisture sources are defined as
// zero (their physical prefactor 1/B vanishes faster than any source).

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "pqg/background.hpp"
#include "pqg/errors.hpp"
#include "pqg/grid.hpp"
#include "pqg/inversion.hpp"
#include "pqg/microphysics.hpp"
#include "pqg/spectral.hpp"
#include "pqg/thermo.hpp"

namespace pqg {

enum class Variant { continuous, fast };

struct PrognosticState {
  Variant variant = Variant::continuous;
  double t = 0;
  Field3<double> pv_e;  // deviation potential vorticity [s^-1]
  Field3<double> M;     // moisture variable [K]
  Field3<double> q_c;   // cloud water [kg/kg]; zero and unused in the fast variant
};

struct DiagnosticState {
  Field3<double> phi;                  // geopotential [m^2 s^-2]
  Field3<double> u, v, zeta;           // balanced winds and vorticity
  Field3<double> theta, theta_e;       // temperature deviations at cells [K]
  Field3<double> q_v, q_c, q_r;        // closure moisture fields [kg/kg]
  Field3<double> rain_src;             // realized -(1/rho) dz(rho V_r q_r) [kg/kg s^-1]
  Field3<double> w;                    // filled by Dynamics::diagnose_w
  bool has_w = false;
  SaturationMask mask;                 // fast variant: face saturation state
  std::vector<std::uint8_t> cell_sat;  // fast variant: cell branch, x-fastest
  int fast_sweeps = 0;                 // active-set sweeps spent in the closure
};

struct Tendencies {
  Field3<double> pv_e, M, q_c;
};

struct StepStats {
  double cfl = 0;           // advective Courant number at the step's start
  double clipped_mass = 0;  // cloud mass removed by clipping, all stages [kg]
  int fast_sweeps = 0;      // active-set sweeps across all stage closures
};

// Volume-integrated scalar series written at output times.
struct ScalarDiagnostics {
  double t = 0;
  double energy = 0;        // volume mean of |grad_h phi|^2 [m^2 s^-4]
  double pv_mean = 0, pv_var = 0;
  double sat_fraction = 0;  // saturated cell fraction
  double vapor_total = 0;   // integral of rho q_v (signed) [kg]
  double cloud_total = 0;   // integral of rho q_c [kg]
  double rain_total = 0;    // integral of rho q_r [kg]
  double water_total = 0;   // integral of rho (|q_v| + q_c + q_r) [kg]
};

// Advective stability violation: dt * max(|u|/dx + |v|/dy) exceeded the
// configured bound.
struct cfl_error : solver_error {
  cfl_error(const std::string& msg, double cfl_) : solver_error(msg), cfl(cfl_) {}
  double cfl;
};

struct DynamicsOptions {
  InversionOptions inversion;  // lid conditions, q_vs slope, solver tolerances
  double cond_scale = 1.0;     // continuous variant: condensation rate multiplier
  double cfl_max = 0.5;        // hard stability bound checked every step
  bool lagged_mask = false;    // fast variant: freeze the stage-1 mask within a step
  std::ostream* log = nullptr;  // one line per step: t, cfl, clipped mass
};

// Canonical initial-condition families.
enum class ICFamily { random_spectrum, zonal_jet, vortex };

struct InitialCondition {
  ICFamily family = ICFamily::random_spectrum;
  std::uint64_t seed = 1;
  double pv_amp = 1e-5;      // RMS (random) or peak (jet/vortex) PV_e [s^-1]
  double k_peak = 3.0;       // random family: annular spectral peak (integer modes)
  int vertical_modes = 2;    // random family: cosine modes 0..vertical_modes
  double vortex_radius = 0.15;  // vortex family: core radius / min(Lx, Ly)
  double perturb = 0.02;     // jet/vortex: seeded fractional PV_e perturbation
  double M_offset = 0.0;     // uniform M [K]; shifts the saturated fraction
  double M_amp = 0.0;        // seeded M fluctuation amplitude [K]
};

PrognosticState make_initial_state(const Grid<double>& g, const InitialCondition& ic,
                                   Variant variant);

class Dynamics {
 public:
  Dynamics(const Grid<double>& g, const BackgroundState<double>& bg,
           const ThermoParams<double>& tp, const MicrophysicsParams<double>& mp,
           const DynamicsOptions& opts = {});

  const Grid<double>& grid() const { return grid_; }
  const DynamicsOptions& options() const { return opts_; }

  // Inversion + balances + moisture closure + rain columns (w not included).
  DiagnosticState close_diagnostics(const PrognosticState& s) const;

  Tendencies tendencies(const PrognosticState& s, const DiagnosticState& d) const;

  // One SSP-RK3 step with per-stage closure; throws cfl_error on a stability
  // violation diagnosed from the step-start winds.
  PrognosticState step(const PrognosticState& s, double dt, StepStats* stats = nullptr) const;

  // Vertical velocity from the theta_e budget; needs one extra inversion of
  // the tendency fields, so it is separated from close_diagnostics and meant
  // to run at output cadence.
  void diagnose_w(const PrognosticState& s, DiagnosticState& d) const;

  ScalarDiagnostics scalars(const PrognosticState& s, const DiagnosticState& d) const;

  // Dealiased u.grad(a) (a is truncated before differentiation).
  Field3<double> advect(const Field3<double>& u, const Field3<double>& v,
                        const Field3<double>& a) const;

  // Flux divergence of the limited MUSCL transport of a (caller negates).
  Field3<double> muscl_divergence(const Field3<double>& u, const Field3<double>& v,
                                  const Field3<double>& a) const;

 private:
  DiagnosticState close_impl(const PrognosticState& s, const SaturationMask* frozen) const;
  void moisture_closure(const PrognosticState& s, DiagnosticState& d) const;
  Field3<double> ddz_cells(const Field3<double>& a) const;

  Grid<double> grid_;
  BackgroundState<double> bg_;
  ThermoParams<double> tp_;
  MicrophysicsParams<double> mp_;
  DynamicsOptions opts_;
  Spectral sp_;

  // Cell-centered background coefficients (face-pair averages).
  Eigen::ArrayXd rho_c_, dthe_c_, inv_dthe_c_;
  Eigen::ArrayXd c1_c_, c2_c_;      // theta_e = c1 theta + c2 M when unsaturated
  Eigen::ArrayXd inv_LcB_c_;        // 1/(L_c + B); zero in the dry limit
  Eigen::ArrayXd inv_B_c_;          // 1/B; zero in the dry limit
  Eigen::ArrayXd B_c_;              // B where finite, zero where dq_vs_dz = 0
  double sat_slope_ = 1.0;          // d(theta_e)/d(theta) on the saturated branch
};

}  // namespace pqg

#endif  // PQG_DYNAMICS_HPP
