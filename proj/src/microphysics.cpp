#include "pqg/microphysics.hpp"

#include <string>

#include "pqg/ode.hpp"

namespace pqg {

std::vector<RelaxationSample> column_relaxation(const MoistureCell<double>& initial,
                                                const MicrophysicsParams<double>& mp,
                                                double t_end, int n_samples) {
  validate(mp);
  if (!(t_end >= 0.0)) throw std::invalid_argument("column_relaxation: t_end must be >= 0");
  if (n_samples < 2) throw std::invalid_argument("column_relaxation: need >= 2 samples");

  const double scale = fast_rate_factor(mp);
  auto rhs = [&](double, const Eigen::VectorXd& y) {
    MoistureCell<double> cell{y[0], y[1], y[2], initial.q_vs};
    const SourceTerms<double> s = source_terms(cell, mp, scale);
    Eigen::VectorXd dy(3);
    dy[0] = s.S_ev - s.S_cd;
    dy[1] = s.S_cd - s.S_ac - s.S_cr;
    dy[2] = s.S_ac + s.S_cr - s.S_ev;
    return dy;
  };

  Eigen::VectorXd y(3);
  y << initial.q_v, initial.q_c, initial.q_r;

  std::vector<RelaxationSample> traj;
  traj.reserve(n_samples);
  traj.push_back({0.0, y[0], y[1], y[2]});

  OdeOptions opts;
  opts.abs_tol = 1e-10;
  opts.rel_tol = 1e-10;
  double t_prev = 0.0;
  for (int i = 1; i < n_samples; ++i) {
    const double t_i = t_end * double(i) / double(n_samples - 1);
    y = integrate_dopri5(rhs, t_prev, t_i, y, opts);
    traj.push_back({t_i, y[0], y[1], y[2]});
    t_prev = t_i;
  }
  return traj;
}

RainColumn rain_column_solve(const Eigen::ArrayXd& q_c, const Eigen::ArrayXd& q_v,
                             const Eigen::ArrayXd& q_vs, const Eigen::ArrayXd& rho,
                             double dz, const MicrophysicsParams<double>& mp) {
  validate(mp);
  const Eigen::Index N = q_c.size();
  if (q_v.size() != N || q_vs.size() != N || rho.size() != N)
    throw std::invalid_argument("rain_column_solve: profile sizes differ");
  if (!(dz > 0.0)) throw std::invalid_argument("rain_column_solve: dz must be > 0");

  RainColumn out;
  out.q_r = Eigen::ArrayXd::Zero(N);
  out.flux_faces = Eigen::ArrayXd::Zero(N + 1);
  out.s_net = Eigen::ArrayXd::Zero(N);

  // March downward from the zero-rain top boundary. With
  //   q_r = (F_below + F_above) / (2 rho V_r),
  // the level balance F_below = F_above + dz rho (S_ac + S_cr - S_ev) is
  // affine in q_r and solved in closed form.
  for (Eigen::Index k = N - 1; k >= 0; --k) {
    const double F_above = out.flux_faces[k + 1];
    const double s_ac = mp.C_ac * positive_part(q_c[k] - mp.q_ac);
    const double gain = mp.C_cr * q_c[k];                       // collection, q_r coefficient
    const double loss = mp.C_ev * positive_part(q_vs[k] - q_v[k]);  // evaporation, q_r coefficient
    const double A = (2.0 * F_above + dz * rho[k] * s_ac) / (2.0 * rho[k] * mp.V_r);
    const double B = dz * (gain - loss) / (2.0 * mp.V_r);
    if (!(1.0 - B > 0.0))
      throw std::runtime_error("rain_column_solve: implicit level " + std::to_string(k) +
                               " is unstable (collection growth exceeds the cell); "
                               "reduce dz or the collection rate");
    double q_r = A / (1.0 - B);
    double F_below = 2.0 * rho[k] * mp.V_r * q_r - F_above;
    if (F_below < 0.0) {
      // Under-resolved evaporation can drive the trapezoid flux negative;
      // clamp the face to zero and keep the level value consistent with it.
      F_below = 0.0;
      q_r = F_above / (2.0 * rho[k] * mp.V_r);
      ++out.n_clamped;
    }
    out.q_r[k] = q_r;
    out.flux_faces[k] = F_below;
    out.s_net[k] = (F_below - F_above) / (dz * rho[k]);
  }
  return out;
}

}  // namespace pqg
