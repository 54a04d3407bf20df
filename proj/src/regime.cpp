#include "pqg/regime.hpp"

#include <cmath>
#include <cstdio>

namespace pqg {

namespace {

RegimeRow make_row(const std::string& name, double value, int assigned, int formal, double eps) {
  RegimeRow row;
  row.name = name;
  row.value = value;
  row.assigned_order = assigned;
  row.formal_order = formal;
  row.prefactor = value / std::pow(eps, assigned);
  row.inconsistent = (assigned != formal);
  const double mag = std::fabs(row.prefactor);
  row.prefactor_in_band = (mag >= 0.1 && mag <= 10.0);
  return row;
}

}  // namespace

RegimeReport regime_consistency_report(const RegimeScalings<double>& r, const ThermoParams<double>& p) {
  RegimeReport rep;
  rep.alpha = r.alpha;
  rep.epsilon = r.epsilon;
  const double eps = r.epsilon;

  // Primitive ratios: assigned orders define the regime, so formal == assigned.
  const int ord_cpv = (r.alpha == 1) ? 0 : -1;
  rep.rows.push_back(make_row("R_d/c_pd", p.R_d / p.c_pd, 1, 1, eps));
  rep.rows.push_back(make_row("c_pv/c_pd", p.c_pv / p.c_pd, ord_cpv, ord_cpv, eps));
  rep.rows.push_back(make_row("R_v/c_pd", p.R_v / p.c_pd, 0, 0, eps));
  rep.rows.push_back(make_row("c_l/c_pd", p.c_l / p.c_pd, -1, -1, eps));
  rep.rows.push_back(make_row("L_ref/(c_pd*T_ref)", p.L_ref / (p.c_pd * p.T_ref), -1, -1, eps));

  // Derived ratios: formal order follows from the primitives,
  //   R_d/R_v = (R_d/c_pd)/(R_v/c_pd)                     -> order 1 - 0 = 1
  //   sigma   = (c_pv/c_pd)(R_d/c_pd) - R_v/c_pd          -> order min(ord_cpv + 1, 0)
  // while the assigned order is the regime's table entry.
  const int assigned_E = (r.alpha == 1) ? 0 : 1;
  rep.rows.push_back(make_row("R_d/R_v", p.R_d / p.R_v, assigned_E, 1, eps));
  const double sigma = (p.c_pv / p.c_pd) * (p.R_d / p.c_pd) - p.R_v / p.c_pd;
  const int assigned_sigma = (r.alpha == 1) ? 1 : 0;
  const int formal_sigma = std::min(ord_cpv + 1, 0);
  rep.rows.push_back(make_row("(c_pv/c_pd)(R_d/c_pd)-R_v/c_pd", sigma, assigned_sigma, formal_sigma, eps));

  rep.es_ratio = p.es_ref / p.p_ref;
  rep.es_prefactor = rep.es_ratio / std::pow(eps, 1 + r.alpha);
  return rep;
}

std::string RegimeReport::text() const {
  std::string out;
  char buf[256];
  std::snprintf(buf, sizeof buf, "regime alpha=%d  epsilon=%g\n", alpha, epsilon);
  out += buf;
  std::snprintf(buf, sizeof buf, "%-34s %12s %9s %11s %7s %6s\n",
                "ratio", "value", "assigned", "prefactor", "formal", "flag");
  out += buf;
  for (const RegimeRow& row : rows) {
    std::snprintf(buf, sizeof buf, "%-34s %12.5g %9d %11.5g %7d %6s\n",
                  row.name.c_str(), row.value, row.assigned_order, row.prefactor,
                  row.formal_order,
                  row.inconsistent ? "INCON" : (row.prefactor_in_band ? "ok" : "band"));
    out += buf;
  }
  std::snprintf(buf, sizeof buf,
                "es_ref/p_ref = %.5g, assigned O(eps^%d), implied prefactor %.5g (reported, not asserted)\n",
                es_ratio, 1 + alpha, es_prefactor);
  out += buf;
  return out;
}

}  // namespace pqg
