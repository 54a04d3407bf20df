#ifndef PQG_REGIME_HPP
#define PQG_REGIME_HPP

// Distinguished-limit machinery: the two viable moist regimes (alpha = 0
// formally consistent, alpha = 1 value-based) and the consistency report that
// compares physical parameter ratios against their assigned eps-scalings.

#include <string>
#include <vector>

#include "pqg/thermo.hpp"

namespace pqg {

template <typename Real = double>
struct RegimeScalings {
  int alpha = 0;       // regime selector, 0 or 1
  Real epsilon = 0.1;  // expansion parameter
  // O(1) prefactors, fitted as (physical ratio) / eps^(assigned order).
  Real Gamma;    // R_d/c_pd = eps * Gamma
  Real k_v;      // c_pv/c_pd = k_v (alpha=1) or eps^-1 k_v (alpha=0)
  Real k_l;      // c_l/c_pd = eps^-1 k_l
  Real L;        // L_ref/(c_pd T_ref) = eps^-1 L
  Real E;        // R_d/R_v = E (alpha=1) or eps E (alpha=0)
  Real A;        // R_v/c_pd = 1/A
  Real kappa_v;  // (c_pv/c_pd)(R_d/c_pd) - R_v/c_pd = eps kappa_v (alpha=1) or kappa_v (alpha=0)
  Real c1, c2, c3;  // Pi_1 = c1 eps^3, Pi_2 = c2 eps, Pi_3 = c3 sqrt(eps)
};

template <typename Real>
RegimeScalings<Real> fit_regime(const ThermoParams<Real>& p, int alpha, Real epsilon = Real(0.1)) {
  if (alpha != 0 && alpha != 1) throw std::invalid_argument("regime selector alpha must be 0 or 1");
  if (!(epsilon > Real(0) && epsilon < Real(1))) throw std::invalid_argument("epsilon must be in (0, 1)");
  RegimeScalings<Real> r;
  r.alpha = alpha;
  r.epsilon = epsilon;
  r.Gamma = (p.R_d / p.c_pd) / epsilon;
  r.k_v = (alpha == 1) ? (p.c_pv / p.c_pd) : (p.c_pv / p.c_pd) * epsilon;
  r.k_l = (p.c_l / p.c_pd) * epsilon;
  r.L = (p.L_ref / (p.c_pd * p.T_ref)) * epsilon;
  r.E = (alpha == 1) ? (p.R_d / p.R_v) : (p.R_d / p.R_v) / epsilon;
  r.A = p.c_pd / p.R_v;
  const Real sigma = (p.c_pv / p.c_pd) * (p.R_d / p.c_pd) - p.R_v / p.c_pd;
  r.kappa_v = (alpha == 1) ? sigma / epsilon : sigma;
  const PiParameters<Real> pi = pi_parameters(p);
  r.c1 = pi.Pi1 / (epsilon * epsilon * epsilon);
  r.c2 = pi.Pi2 / epsilon;
  r.c3 = pi.Pi3 / std::sqrt(epsilon);
  return r;
}

// One row of the regime consistency report. assigned_order is the eps-power
// the regime assigns to the ratio; formal_order is the power implied by the
// primitive scalings; the two disagree exactly on the documented alpha = 1
// rows (R_d/R_v and the kappa_v combination).
struct RegimeRow {
  std::string name;
  double value;          // physical ratio from the parameter record
  int assigned_order;    // ratio = prefactor * eps^assigned_order
  double prefactor;      // value / eps^assigned_order
  int formal_order;      // order implied by the primitive scalings
  bool inconsistent;     // assigned_order != formal_order
  bool prefactor_in_band;  // 0.1 <= |prefactor| <= 10
};

struct RegimeReport {
  int alpha;
  double epsilon;
  std::vector<RegimeRow> rows;
  // es_ref/p_ref = O(eps^(1+alpha)) carries no asserted prefactor; reported only.
  double es_ratio;
  double es_prefactor;
  std::string text() const;
};

RegimeReport regime_consistency_report(const RegimeScalings<double>& r, const ThermoParams<double>& p);

}  // namespace pqg

#endif  // PQG_REGIME_HPP
