#ifndef PQG_BACKGROUND_HPP
#define PQG_BACKGROUND_HPP

// Vertical background state: density, (equivalent) potential temperature and
// saturation-moisture profiles on the nz+1 cell faces of [0,H], together with
// every derived coefficient the inversion and dynamics need. Immutable after
// construction.

#include <Eigen/Core>
#include <iosfwd>
#include <string>
#include <vector>

#include "pqg/thermo.hpp"

namespace pqg {

enum class ProfileFamily { exponential, boussinesq, tabulated };

template <typename Real = double>
struct ProfileTable {
  // Two-column (z [m], value) samples, strictly increasing in z, spanning [0,H].
  std::vector<Real> z, v;
};

template <typename Real = double>
struct BackgroundConfig {
  ProfileFamily family = ProfileFamily::exponential;
  Real H = Real(10000);  // slab depth [m]
  int nz = 32;           // cells; profiles live on nz+1 faces

  Real theta_e0 = Real(-1);      // surface theta_e_bar [K]; < 0 means theta_ref
  Real Gamma_e = Real(3.0e-3);   // d theta_e_bar / dz [K m^-1], exponential + boussinesq
  Real q_vs0 = Real(-1);         // surface q_vs_bar; < 0 means "from the CC surface closure"
  Real h_q = Real(3000);         // q_vs_bar e-folding height [m], exponential family
  Real dq_vs_dz = Real(0);      // constant q_vs_bar slope [m^-1] <= 0, boussinesq family

  // Tabulated family: required tables for rho, theta_e, q_vs (theta optional;
  // defaults to theta_e - L_c q_vs).
  ProfileTable<Real> tab_rho, tab_theta_e, tab_q_vs, tab_theta;
};

template <typename Real = double>
struct BackgroundState {
  using Array = Eigen::Array<Real, Eigen::Dynamic, 1>;

  Real H = Real(0);
  int nz = 0;  // faces are indexed 0..nz

  Array z;            // face heights [m]
  Array rho_bar;      // [kg m^-3]
  Array theta_bar;    // [K]
  Array theta_e_bar;  // [K]
  Array q_vs_bar;     // [-]
  Array dtheta_dz;    // [K m^-1]
  Array dtheta_e_dz;  // [K m^-1]
  Array dq_vs_dz;     // [m^-1]
  Array B;            // moist stability ratio [K]; NaN where dq_vs_dz == 0
  Array N2;           // g (dtheta_dz) / theta_ref [s^-2]
  Array coeff_c1;     // B/(L_c+B), computed stably
  Array coeff_c2;     // 1 - c1

  Real L_c = Real(0);  // L_ref / c_pd [K]
  Real dz() const { return H / nz; }
};

// Second-order derivative of face samples: centered interior, one-sided
// three-point stencils at the lids.
template <typename Real>
Eigen::Array<Real, Eigen::Dynamic, 1> vertical_derivative(
    const Eigen::Array<Real, Eigen::Dynamic, 1>& a, Real dz);

template <typename Real>
BackgroundState<Real> build_background(const BackgroundConfig<Real>& cfg,
                                       const ThermoParams<Real>& tp);

// Parse a two-column (z, value) text table; '#' starts a comment.
template <typename Real>
ProfileTable<Real> parse_profile_table(std::istream& in, const std::string& what);

template <typename Real>
ProfileTable<Real> read_profile_table(const std::string& path);

// Hydrostatic ideal-gas column implied by theta_bar: p from dp/dz = -g p/(R_d T)
// with T = theta (p/p_ref)^(R_d/c_pd), started at p(0) = p_ref, plus the
// Clausius-Clapeyron saturation mixing ratio on it (NaN outside the validity
// window of the thermodynamic formulas).
template <typename Real = double>
struct HydrostaticColumn {
  using Array = Eigen::Array<Real, Eigen::Dynamic, 1>;
  Array p, T, q_vs;
};

template <typename Real>
HydrostaticColumn<Real> hydrostatic_cc_column(const BackgroundState<Real>& bg,
                                              const ThermoParams<Real>& tp);

template <typename Real = double>
struct ConsistencyReport {
  // Relative deviation in the sup norm, max|q_vs_bar - q_vs_cc| / max(q_vs_cc):
  // pointwise ratios are meaningless where q_vs -> 0 aloft.
  Real max_rel_dev = Real(0);
  Real argmax_z = Real(0);
  bool warn = false;  // set when max_rel_dev >= 0.2
  std::string text() const;
};

// Compare the stored q_vs_bar against Clausius-Clapeyron evaluated on the
// hydrostatically consistent (p, T) column implied by theta_bar. Report-only.
template <typename Real>
ConsistencyReport<Real> consistency_check(const BackgroundState<Real>& bg,
                                          const ThermoParams<Real>& tp);

}  // namespace pqg

#endif  // PQG_BACKGROUND_HPP
