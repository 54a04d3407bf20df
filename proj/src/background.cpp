#include "pqg/background.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "pqg/errors.hpp"

namespace pqg {

namespace {

// Surface closure for the default q_vs0: the surface temperature satisfies
// T0 = theta_e0 - L_c * q_vs_cc(p_ref, T0) at z = 0 where p = p_ref. The map
// is a contraction (|F'| ~ L_c dq_vs/dT ~ 0.5), so fixed-point iterate.
template <typename Real>
Real surface_q_vs(Real theta_e0, const ThermoParams<Real>& tp) {
  const Real L_c = tp.L_ref / tp.c_pd;
  Real q = saturation_mixing_ratio(tp.p_ref, std::min(theta_e0, Real(kTempHi - 1)), tp);
  for (int it = 0; it < 200; ++it) {
    const Real T0 = theta_e0 - L_c * q;
    const Real qn = saturation_mixing_ratio(tp.p_ref, T0, tp);
    if (std::abs(qn - q) <= Real(1e-16) * std::max(qn, Real(1e-30))) return qn;
    q = qn;
  }
  return q;
}

template <typename Real>
Real interp_table(const ProfileTable<Real>& t, Real z) {
  if (z <= t.z.front()) return t.v.front();
  if (z >= t.z.back()) return t.v.back();
  // first node strictly above z
  std::size_t hi = std::upper_bound(t.z.begin(), t.z.end(), z) - t.z.begin();
  const std::size_t lo = hi - 1;
  if (z == t.z[lo]) return t.v[lo];  // exact nodes pass through bitwise
  const Real s = (z - t.z[lo]) / (t.z[hi] - t.z[lo]);
  return t.v[lo] + s * (t.v[hi] - t.v[lo]);
}

template <typename Real>
void validate_table(const ProfileTable<Real>& t, Real H, const char* what) {
  if (t.z.size() < 2 || t.z.size() != t.v.size())
    throw config_error(std::string("background: tabulated ") + what +
                       " needs at least two (z, value) rows");
  for (std::size_t i = 1; i < t.z.size(); ++i)
    if (!(t.z[i] > t.z[i - 1]))
      throw config_error(std::string("background: tabulated ") + what +
                         " heights must be strictly increasing");
  const Real slack = Real(1e-9) * std::max(H, Real(1));
  if (t.z.front() > slack || t.z.back() < H - slack)
    throw config_error(std::string("background: tabulated ") + what +
                       " must span [0, H]");
}

}  // namespace

template <typename Real>
Eigen::Array<Real, Eigen::Dynamic, 1> vertical_derivative(
    const Eigen::Array<Real, Eigen::Dynamic, 1>& a, Real dz) {
  const Eigen::Index n = a.size();
  Eigen::Array<Real, Eigen::Dynamic, 1> d(n);
  if (n < 3) throw std::invalid_argument("vertical_derivative: need >= 3 samples");
  // One-sided stencils in difference form, so constant input gives exactly 0
  // (the dry limit leans on dq_vs_dz being a hard zero).
  d[0] = (Real(4) * (a[1] - a[0]) - (a[2] - a[0])) / (Real(2) * dz);
  for (Eigen::Index i = 1; i + 1 < n; ++i) d[i] = (a[i + 1] - a[i - 1]) / (Real(2) * dz);
  d[n - 1] = ((a[n - 3] - a[n - 1]) - Real(4) * (a[n - 2] - a[n - 1])) / (Real(2) * dz);
  return d;
}

template <typename Real>
BackgroundState<Real> build_background(const BackgroundConfig<Real>& cfg,
                                       const ThermoParams<Real>& tp) {
  using Array = typename BackgroundState<Real>::Array;
  if (!(cfg.H > Real(0))) throw config_error("background: H must be > 0");
  if (cfg.nz < 4) throw config_error("background: nz must be >= 4");

  BackgroundState<Real> bg;
  bg.H = cfg.H;
  bg.nz = cfg.nz;
  bg.L_c = tp.L_ref / tp.c_pd;
  const int nf = cfg.nz + 1;
  const Real dz = cfg.H / cfg.nz;
  const Real theta_e0 = cfg.theta_e0 > Real(0) ? cfg.theta_e0 : tp.theta_ref;
  bg.z = Array::LinSpaced(nf, Real(0), cfg.H);

  const DerivedQuantities<Real> dq = derived_quantities(tp);

  switch (cfg.family) {
    case ProfileFamily::exponential: {
      if (!(cfg.h_q > Real(0)))
        throw config_error("background: h_q must be > 0 for the exponential family");
      const Real q0 = cfg.q_vs0 >= Real(0) ? cfg.q_vs0 : surface_q_vs(theta_e0, tp);
      bg.rho_bar = dq.rho_ref * (-bg.z / dq.h_sc).exp();
      bg.theta_e_bar = theta_e0 + cfg.Gamma_e * bg.z;
      bg.q_vs_bar = q0 * (-bg.z / cfg.h_q).exp();
      break;
    }
    case ProfileFamily::boussinesq: {
      if (cfg.dq_vs_dz > Real(0))
        throw config_error("background: boussinesq dq_vs_dz must be <= 0");
      const Real q0 = cfg.q_vs0 >= Real(0) ? cfg.q_vs0 : surface_q_vs(theta_e0, tp);
      bg.rho_bar = Array::Constant(nf, dq.rho_ref);
      bg.theta_e_bar = theta_e0 + cfg.Gamma_e * bg.z;
      bg.q_vs_bar = q0 + cfg.dq_vs_dz * bg.z;
      if ((bg.q_vs_bar < Real(0)).any())
        throw config_error("background: boussinesq q_vs_bar drops below zero; "
                           "reduce |dq_vs_dz| or the slab depth");
      break;
    }
    case ProfileFamily::tabulated: {
      validate_table(cfg.tab_rho, cfg.H, "rho");
      validate_table(cfg.tab_theta_e, cfg.H, "theta_e");
      validate_table(cfg.tab_q_vs, cfg.H, "q_vs");
      bg.rho_bar.resize(nf);
      bg.theta_e_bar.resize(nf);
      bg.q_vs_bar.resize(nf);
      for (int j = 0; j < nf; ++j) {
        bg.rho_bar[j] = interp_table(cfg.tab_rho, bg.z[j]);
        bg.theta_e_bar[j] = interp_table(cfg.tab_theta_e, bg.z[j]);
        bg.q_vs_bar[j] = interp_table(cfg.tab_q_vs, bg.z[j]);
      }
      if (!cfg.tab_theta.z.empty()) {
        validate_table(cfg.tab_theta, cfg.H, "theta");
        bg.theta_bar.resize(nf);
        for (int j = 0; j < nf; ++j) bg.theta_bar[j] = interp_table(cfg.tab_theta, bg.z[j]);
      }
      break;
    }
  }

  if (bg.theta_bar.size() == 0) bg.theta_bar = bg.theta_e_bar - bg.L_c * bg.q_vs_bar;

  if (!(bg.rho_bar > Real(0)).all())
    throw config_error("background: rho_bar must be positive everywhere");

  bg.dtheta_dz = vertical_derivative(bg.theta_bar, dz);
  bg.dtheta_e_dz = vertical_derivative(bg.theta_e_bar, dz);
  bg.dq_vs_dz = vertical_derivative(bg.q_vs_bar, dz);

  for (int j = 0; j < nf; ++j) {
    if (!(bg.dtheta_e_dz[j] > Real(0)))
      throw config_error("background: stability violation, d(theta_e_bar)/dz <= 0 at z = " +
                         std::to_string(double(bg.z[j])) + " m");
    if (bg.dq_vs_dz[j] > Real(0))
      throw config_error("background: d(q_vs_bar)/dz > 0 at z = " +
                         std::to_string(double(bg.z[j])) +
                         " m; saturation profile must be non-increasing");
  }

  bg.N2 = (tp.g / tp.theta_ref) * bg.dtheta_dz;

  // Moist coefficients. c1 uses the division-stable form, which reproduces the
  // dry limit c1 = 1 exactly when dq_vs_dz vanishes; c2 = 1 - c1 keeps the sum
  // at exactly one. B itself is only defined (and only stored) where the
  // saturation profile actually varies.
  bg.B.resize(nf);
  bg.coeff_c1.resize(nf);
  bg.coeff_c2.resize(nf);
  for (int j = 0; j < nf; ++j) {
    const Real dth = bg.dtheta_e_dz[j];
    const Real dqs = bg.dq_vs_dz[j];
    bg.B[j] = dqs < Real(0) ? -dth / dqs : std::numeric_limits<Real>::quiet_NaN();
    bg.coeff_c1[j] = dth / (dth - bg.L_c * dqs);
    bg.coeff_c2[j] = Real(1) - bg.coeff_c1[j];
  }
  return bg;
}

template <typename Real>
ProfileTable<Real> parse_profile_table(std::istream& in, const std::string& what) {
  ProfileTable<Real> t;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    Real z, v;
    if (!(ls >> z)) continue;  // blank or comment-only line
    if (!(ls >> v))
      throw config_error("profile table " + what + ": line " + std::to_string(lineno) +
                         " needs two columns (z, value)");
    std::string extra;
    if (ls >> extra)
      throw config_error("profile table " + what + ": line " + std::to_string(lineno) +
                         " has trailing content '" + extra + "'");
    t.z.push_back(z);
    t.v.push_back(v);
  }
  return t;
}

template <typename Real>
ProfileTable<Real> read_profile_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw config_error("profile table: cannot open '" + path + "'");
  return parse_profile_table<Real>(in, path);
}

template <typename Real>
HydrostaticColumn<Real> hydrostatic_cc_column(const BackgroundState<Real>& bg,
                                              const ThermoParams<Real>& tp) {
  const int nf = bg.nz + 1;
  const Real dz = bg.dz();
  const Real kappa = tp.R_d / tp.c_pd;

  // theta is taken linear between faces; classical RK4 with fixed substeps is
  // far below the profile-representation error here.
  auto rhs = [&](Real theta_lo, Real theta_hi, Real zeta, Real p) {
    const Real th = theta_lo + (theta_hi - theta_lo) * (zeta / dz);
    const Real T = th * std::pow(p / tp.p_ref, kappa);
    return -tp.g * p / (tp.R_d * T);
  };

  HydrostaticColumn<Real> col;
  col.p.resize(nf);
  col.T.resize(nf);
  col.q_vs.resize(nf);
  col.p[0] = tp.p_ref;
  col.T[0] = bg.theta_bar[0];
  const int m = 16;
  for (int j = 0; j + 1 < nf; ++j) {
    const Real h = dz / m;
    const Real tlo = bg.theta_bar[j], thi = bg.theta_bar[j + 1];
    Real pj = col.p[j];
    for (int s = 0; s < m; ++s) {
      const Real zeta = s * h;
      const Real k1 = rhs(tlo, thi, zeta, pj);
      const Real k2 = rhs(tlo, thi, zeta + h / 2, pj + h / 2 * k1);
      const Real k3 = rhs(tlo, thi, zeta + h / 2, pj + h / 2 * k2);
      const Real k4 = rhs(tlo, thi, zeta + h, pj + h * k3);
      pj += h / 6 * (k1 + 2 * k2 + 2 * k3 + k4);
    }
    col.p[j + 1] = pj;
    col.T[j + 1] = thi * std::pow(pj / tp.p_ref, kappa);
  }
  for (int j = 0; j < nf; ++j) {
    col.q_vs[j] = std::numeric_limits<Real>::quiet_NaN();
    if (!(col.T[j] > Real(kTempLo) && col.T[j] < Real(kTempHi))) continue;
    try {
      col.q_vs[j] = saturation_mixing_ratio(col.p[j], col.T[j], tp);
    } catch (const std::domain_error&) {
    }
  }
  return col;
}

template <typename Real>
ConsistencyReport<Real> consistency_check(const BackgroundState<Real>& bg,
                                          const ThermoParams<Real>& tp) {
  const HydrostaticColumn<Real> col = hydrostatic_cc_column(bg, tp);

  // Faces outside the thermodynamic validity window carry NaN and are skipped
  // (report-only op, never throws).
  ConsistencyReport<Real> rep;
  Real max_abs = Real(0), max_cc = Real(0);
  for (int j = 0; j <= bg.nz; ++j) {
    const Real qcc = col.q_vs[j];
    if (std::isnan(qcc)) continue;
    max_cc = std::max(max_cc, qcc);
    const Real dev = std::abs(bg.q_vs_bar[j] - qcc);
    if (dev > max_abs) {
      max_abs = dev;
      rep.argmax_z = bg.z[j];
    }
  }
  rep.max_rel_dev = max_cc > Real(0) ? max_abs / max_cc
                                     : std::numeric_limits<Real>::quiet_NaN();
  rep.warn = !(rep.max_rel_dev < Real(0.2));
  return rep;
}

template <typename Real>
std::string ConsistencyReport<Real>::text() const {
  char buf[160];
  std::snprintf(buf, sizeof buf,
                "q_vs_bar vs Clausius-Clapeyron column: max relative deviation "
                "%.3e at z = %.1f m%s",
                double(max_rel_dev), double(argmax_z),
                warn ? "  [WARN: exceeds 20%]" : "");
  return buf;
}

template Eigen::Array<double, Eigen::Dynamic, 1> vertical_derivative(
    const Eigen::Array<double, Eigen::Dynamic, 1>&, double);
template BackgroundState<double> build_background(const BackgroundConfig<double>&,
                                                  const ThermoParams<double>&);
template ProfileTable<double> parse_profile_table(std::istream&, const std::string&);
template ProfileTable<double> read_profile_table(const std::string&);
template HydrostaticColumn<double> hydrostatic_cc_column(const BackgroundState<double>&,
                                                         const ThermoParams<double>&);
template ConsistencyReport<double> consistency_check(const BackgroundState<double>&,
                                                     const ThermoParams<double>&);
template struct ConsistencyReport<double>;

}  // namespace pqg
