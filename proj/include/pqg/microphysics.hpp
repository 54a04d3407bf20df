#ifndef PQG_MICROPHYSICS_HPP
#define PQG_MICROPHYSICS_HPP

// Kessler-style warm-rain bulk closures: evaporation, condensation /
// nucleation, autoconversion, collection; the fast-condensation saturation
// adjustment; the 0-D relaxation integration; and the diagnostic rain-column
// solve.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace pqg {

template <typename Real = double>
struct MicrophysicsParams {
  Real C_ev = 0.2;   // rain evaporation rate
  Real C_cn = 0.4;   // nucleation rate
  Real C_cd = 0.7;   // condensation rate
  Real C_ac = 0.3;   // autoconversion rate
  Real C_cr = 0.25;  // collection rate
  Real q_cn = 0.08;  // condensation-nuclei density proxy
  Real q_ac = 0.1;   // autoconversion threshold
  Real V_r = 1.0;    // terminal rainfall velocity
  int n = 1;         // fast-microphysics rescaling exponent
  Real epsilon = 0.1;
};

template <typename Real>
void validate(const MicrophysicsParams<Real>& mp) {
  if (mp.C_ev < Real(0) || mp.C_cn < Real(0) || mp.C_cd < Real(0) || mp.C_ac < Real(0) ||
      mp.C_cr < Real(0))
    throw std::invalid_argument("MicrophysicsParams: rate constants must be >= 0");
  if (mp.q_ac < Real(0)) throw std::invalid_argument("MicrophysicsParams: q_ac must be >= 0");
  if (!(mp.V_r > Real(0))) throw std::invalid_argument("MicrophysicsParams: V_r must be > 0");
  if (mp.n < 1) throw std::invalid_argument("MicrophysicsParams: n must be >= 1");
  if (!(mp.epsilon > Real(0) && mp.epsilon < Real(1)))
    throw std::invalid_argument("MicrophysicsParams: epsilon must be in (0, 1)");
}

template <typename Real = double>
struct MoistureCell {
  Real q_v;   // vapor mixing ratio (may be a signed perturbation)
  Real q_c;   // cloud water, >= 0
  Real q_r;   // rain, >= 0
  Real q_vs;  // saturation value
};

template <typename Real = double>
struct SourceTerms {
  Real S_ev;  // rain evaporation, >= 0
  Real S_cd;  // condensation; its q_c term is signed (cloud evaporation)
  Real S_ac;  // autoconversion, >= 0
  Real S_cr;  // collection, >= 0
};

template <typename Real>
inline Real positive_part(Real x) {
  return x > Real(0) ? x : Real(0);
}

// Bulk closure sources. cond_scale multiplies the condensation/nucleation
// rates; the fast-microphysics limit passes eps^-n here.
template <typename Real>
SourceTerms<Real> source_terms(const MoistureCell<Real>& cell, const MicrophysicsParams<Real>& mp,
                               Real cond_scale = Real(1)) {
  SourceTerms<Real> s;
  s.S_ev = mp.C_ev * positive_part(cell.q_vs - cell.q_v) * cell.q_r;
  s.S_cd = cond_scale * (mp.C_cn * positive_part(cell.q_v - cell.q_vs) * mp.q_cn +
                         mp.C_cd * (cell.q_v - cell.q_vs) * cell.q_c);
  s.S_ac = mp.C_ac * positive_part(cell.q_c - mp.q_ac);
  s.S_cr = mp.C_cr * cell.q_c * cell.q_r;
  return s;
}

template <typename Real>
Real fast_rate_factor(const MicrophysicsParams<Real>& mp) {
  return std::pow(mp.epsilon, Real(-mp.n));
}

// Instantaneous saturation adjustment. The construction keeps the identities
// exact in floating point: q_v + q_c == q_t - q_r by cancellation, and
// q_c > 0 implies q_v == q_vs bitwise.
template <typename Real>
struct AdjustedCell {
  Real q_v;
  Real q_c;
};

template <typename Real>
AdjustedCell<Real> saturation_adjust(Real q_t, Real q_r, Real q_vs) {
  const Real total_wet = q_t - q_r;  // vapor + cloud
  AdjustedCell<Real> out;
  out.q_v = std::min(q_vs, total_wet);
  out.q_c = total_wet - out.q_v;
  return out;
}

// One sample of the 0-D relaxation trajectory.
struct RelaxationSample {
  double t;
  double q_v, q_c, q_r;
};

// Integrates the 0-D closure ODEs with condensation/nucleation rates scaled
// by eps^-n, sampling the state at n_samples uniform times (including t = 0
// and t = t_end).
std::vector<RelaxationSample> column_relaxation(const MoistureCell<double>& initial,
                                                const MicrophysicsParams<double>& mp,
                                                double t_end, int n_samples = 41);

// Result of the diagnostic rain-column solve on one vertical column of cells
// (index 0 = bottom). flux_faces has size N+1 (faces below/above each cell);
// s_net is the discrete net source -(1/rho) d(rho V_r q_r)/dz actually
// realized by the returned fluxes, which callers should use to keep companion
// budgets discretely consistent.
struct RainColumn {
  Eigen::ArrayXd q_r;
  Eigen::ArrayXd flux_faces;
  Eigen::ArrayXd s_net;
  int n_clamped = 0;  // faces clamped to zero to preserve positivity
};

// Downward march of d(rho V_r q_r)/dz = -rho (S_ac + S_cr - S_ev) with
// q_r = 0 above the top cell. Each level couples its two face fluxes through
// the trapezoid value q_r = (F_below + F_above)/(2 rho V_r); because the
// closures are affine in q_r the implicit level equation is solved exactly.
RainColumn rain_column_solve(const Eigen::ArrayXd& q_c, const Eigen::ArrayXd& q_v,
                             const Eigen::ArrayXd& q_vs, const Eigen::ArrayXd& rho,
                             double dz, const MicrophysicsParams<double>& mp);

}  // namespace pqg

#endif  // PQG_MICROPHYSICS_HPP
