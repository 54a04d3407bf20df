#ifndef PQG_THERMO_HPP
#define PQG_THERMO_HPP

// Moist-air thermodynamic constants, the Clausius-Clapeyron relation (exact
// integrated form), and the reference scales used to nondimensionalize the
// model. Everything here is a pure function of an immutable parameter record.

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace pqg {

// Valid window for the linear L(T) fit; outside it the constant-heat-capacity
// ansatz degrades badly.
inline constexpr double kTempLo = 150.0;  // [K]
inline constexpr double kTempHi = 350.0;  // [K]

template <typename Real = double>
struct ThermoParams {
  Real R_d = 287.0;         // gas constant, dry air [J kg^-1 K^-1]
  Real R_v = 462.0;         // gas constant, water vapor [J kg^-1 K^-1]
  Real c_pd = 1005.0;       // isobaric heat capacity, dry air [J kg^-1 K^-1]
  Real c_pv = 1850.0;       // isobaric heat capacity, water vapor [J kg^-1 K^-1]
  Real c_l = 4218.0;        // heat capacity, liquid water [J kg^-1 K^-1]
  Real L_ref = 2.5e6;       // vaporization enthalpy at T_ref [J kg^-1]
  Real T_ref = 273.15;      // reference (water-freezing) temperature [K]
  Real p_ref = 1.0e5;       // sea-level pressure [Pa]
  Real es_ref = 611.0;      // saturation vapor pressure at T_ref [Pa]
  Real g = 9.81;            // gravity [m s^-2]
  Real a = 6.371e6;         // planetary radius [m]
  Real Omega = 1.0e-4;      // rotation rate [s^-1]
  Real DeltaTheta = 40.0;   // tropospheric potential-temperature difference [K]
  Real f = 1.0e-4;          // Coriolis parameter at reference latitude [s^-1]
  Real beta = 1.6e-11;      // meridional Coriolis gradient [m^-1 s^-1]
  Real theta_ref = 273.15;  // reference potential temperature [K]; defaults to T_ref
};

template <typename Real>
void validate(const ThermoParams<Real>& p) {
  auto pos = [](Real v, const char* name) {
    if (!(v > Real(0))) throw std::invalid_argument(std::string("ThermoParams: ") + name + " must be > 0");
  };
  pos(p.R_d, "R_d"); pos(p.R_v, "R_v"); pos(p.c_pd, "c_pd"); pos(p.c_pv, "c_pv");
  pos(p.c_l, "c_l"); pos(p.L_ref, "L_ref"); pos(p.T_ref, "T_ref"); pos(p.p_ref, "p_ref");
  pos(p.es_ref, "es_ref"); pos(p.g, "g"); pos(p.a, "a"); pos(p.Omega, "Omega");
  pos(p.DeltaTheta, "DeltaTheta"); pos(p.f, "f"); pos(p.beta, "beta"); pos(p.theta_ref, "theta_ref");
  if (!(p.c_l > p.c_pv && p.c_pv > p.c_pd))
    throw std::invalid_argument("ThermoParams: need c_l > c_pv > c_pd");
  if (!(p.R_v > p.R_d))
    throw std::invalid_argument("ThermoParams: need R_v > R_d");
  if (!(p.es_ref / p.p_ref < Real(0.05)))
    throw std::invalid_argument("ThermoParams: need es_ref/p_ref < 0.05");
}

// Reference scales derived from the universal characteristics.
template <typename Real = double>
struct DerivedQuantities {
  Real rho_ref;  // sea-level air density [kg m^-3]
  Real h_sc;     // density scale height [m]
  Real c_ref;    // sound speed [m s^-1]
  Real c_int;    // internal wave speed [m s^-1]
  Real u_ref;    // thermal wind velocity [m s^-1]
};

// The wave-speed and thermal-wind rows are built on the pressure scale height
// p_ref/(g rho_ref) = R_d T_ref/g; using the gamma-scaled density scale height
// there would overshoot the standard magnitudes by sqrt(gamma) resp. gamma.
template <typename Real>
DerivedQuantities<Real> derived_quantities(const ThermoParams<Real>& p) {
  DerivedQuantities<Real> d;
  const Real gamma = p.c_pd / (p.c_pd - p.R_d);
  d.rho_ref = p.p_ref / (p.R_d * p.T_ref);
  d.h_sc = gamma * p.p_ref / (p.g * d.rho_ref);
  d.c_ref = std::sqrt(gamma * p.p_ref / d.rho_ref);
  d.c_int = std::sqrt(p.R_d * p.DeltaTheta);
  d.u_ref = (Real(2) / Real(M_PI)) * p.R_d * p.DeltaTheta / (p.Omega * p.a);
  return d;
}

template <typename Real = double>
struct PiParameters {
  Real Pi1;  // h_sc / a
  Real Pi2;  // DeltaTheta / T_ref
  Real Pi3;  // signal speed / rotation speed
};

template <typename Real>
PiParameters<Real> pi_parameters(const ThermoParams<Real>& p) {
  PiParameters<Real> pi;
  const DerivedQuantities<Real> d = derived_quantities(p);
  pi.Pi1 = d.h_sc / p.a;
  pi.Pi2 = p.DeltaTheta / p.T_ref;
  // Signal speed here is the isothermal sound speed sqrt(R_d T_ref), i.e. the
  // same pressure-scale-height convention as c_int and u_ref above.
  pi.Pi3 = std::sqrt(p.R_d * p.T_ref) / (p.Omega * p.a);
  return pi;
}

template <typename Real>
void check_temperature_range(Real T) {
  if (!(T > Real(kTempLo) && T < Real(kTempHi)))
    throw std::domain_error("temperature " + std::to_string(double(T)) +
                            " K outside valid range (150, 350) K");
}

// Linear vaporization-enthalpy fit about T_ref.
template <typename Real>
Real latent_heat(Real T, const ThermoParams<Real>& p) {
  check_temperature_range(T);
  return p.L_ref - (p.c_l - p.c_pv) * (T - p.T_ref);
}

// Exact integral of d(ln e_s)/dT = L(T)/(R_v T^2) with the linear L(T).
template <typename Real>
Real saturation_vapor_pressure(Real T, const ThermoParams<Real>& p) {
  check_temperature_range(T);
  const Real dc = (p.c_l - p.c_pv) / p.R_v;
  const Real ex = (p.L_ref / (p.R_v * p.T_ref) + dc) * (T - p.T_ref) / T;
  return p.es_ref * std::pow(p.T_ref / T, dc) * std::exp(ex);
}

template <typename Real>
Real saturation_mixing_ratio(Real p_total, Real T, const ThermoParams<Real>& tp) {
  const Real es = saturation_vapor_pressure(T, tp);
  if (!(p_total > es))
    throw std::domain_error("saturation formula breakdown: total pressure " +
                            std::to_string(double(p_total)) + " Pa <= e_s(T) = " +
                            std::to_string(double(es)) + " Pa");
  return (tp.R_d / tp.R_v) * es / (p_total - es);
}

// Dominant nondimensional CC exponent under the classical dry scaling, where
// the factor L_ref/(R_v T_ref) is carried as an O(1/eps) quantity: for each
// requested eps the exponent is (L_ref/(R_v T_ref)) (T - T_ref)/T / eps, so the
// saturation vapor pressure behaves like exp(-c/eps) for T < T_ref and no
// finite power of eps can bound its decay.
template <typename Real>
std::vector<Real> dry_limit_decay_demo(Real T, const std::vector<Real>& epsilons,
                                       const ThermoParams<Real>& p) {
  check_temperature_range(T);
  if (!(T < p.T_ref))
    throw std::domain_error("dry-limit decay demo requires T < T_ref; the formal "
                            "limit does not exist for warmer temperatures");
  const Real base = (p.L_ref / (p.R_v * p.T_ref)) * (T - p.T_ref) / T;
  std::vector<Real> out;
  out.reserve(epsilons.size());
  for (Real eps : epsilons) {
    if (!(eps > Real(0))) throw std::domain_error("dry-limit decay demo: eps must be > 0");
    out.push_back(base / eps);
  }
  return out;
}

}  // namespace pqg

#endif  // PQG_THERMO_HPP
