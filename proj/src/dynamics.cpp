#include "pqg/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>
#include <string>
#include <utility>

#include "pqg/rng.hpp"

namespace pqg {
namespace {

using ArrayXd = Eigen::ArrayXd;

// van Leer (harmonic) slope: zero at extrema, keeps MUSCL reconstructions
// inside the neighbor range.
double harmonic_slope(double a, double b) {
  return a * b > 0.0 ? 2.0 * a * b / (a + b) : 0.0;
}

// Random smooth horizontal pattern: annular spectrum kappa^2 exp(-kappa^2)
// with counter-seeded phases, replicated vertically over equal-amplitude
// cosine modes 0..vmodes, normalized to unit RMS. Conjugate symmetry is
// imposed mode pair by mode pair, so the result is real by construction and
// bit-reproducible for a given seed.
Field3<double> synth(const Grid<double>& g, const Spectral& sp, std::uint64_t seed,
                     double k_peak, int vmodes) {
  const int nx = g.nx, ny = g.ny, nz = g.nz;
  const long nxy = long(nx) * ny;
  Field3<double> out(g);
  Spectral::SpecSlab slab(nx, ny);
  std::vector<double> plane(static_cast<std::size_t>(nxy), 0.0);
  for (int m = 0; m <= vmodes; ++m) {
    slab.setZero();
    for (int j = 0; j < ny; ++j) {
      for (int i = 0; i < nx; ++i) {
        if ((i == 0 && j == 0) || !sp.keep(i, j)) continue;
        const int ic = (nx - i) % nx, jc = (ny - j) % ny;
        if (j > jc || (j == jc && i > ic)) continue;  // conjugate partner fills it
        const double kxn = sp.kx()[i] * g.Lx / (2.0 * M_PI);
        const double kyn = sp.ky()[j] * g.Ly / (2.0 * M_PI);
        const double kappa = std::hypot(kxn, kyn) / k_peak;
        const double amp = kappa * kappa * std::exp(-kappa * kappa);
        const std::uint64_t ctr = (std::uint64_t(m) * ny + j) * nx + i;
        const double ph = 2.0 * M_PI * rng::uniform01(seed, ctr);
        const Spectral::Cplx c(amp * std::cos(ph), amp * std::sin(ph));
        slab(i, j) = c;
        slab(ic, jc) = std::conj(c);
      }
    }
    sp.inverse_slab(slab, plane.data());
    for (int k = 0; k < nz; ++k) {
      const double cm = std::cos(M_PI * m * (k + 0.5) / nz);
      for (long p = 0; p < nxy; ++p) out.data[nxy * k + p] += cm * plane[p];
    }
  }
  const double rms = std::sqrt(out.data.square().mean());
  if (rms > 0) out.data /= rms;
  return out;
}

}  // namespace

Dynamics::Dynamics(const Grid<double>& g, const BackgroundState<double>& bg,
                   const ThermoParams<double>& tp, const MicrophysicsParams<double>& mp,
                   const DynamicsOptions& opts)
    : grid_(g), bg_(bg), tp_(tp), mp_(mp), opts_(opts), sp_(g) {
  if (g.nz != bg.nz)
    throw std::invalid_argument("dynamics: grid has " + std::to_string(g.nz) +
                                " cells but background has " + std::to_string(bg.nz));
  if (std::abs(g.H - bg.H) > 1e-9 * std::max(g.H, 1.0))
    throw std::invalid_argument("dynamics: grid depth " + std::to_string(g.H) +
                                " != background depth " + std::to_string(bg.H));
  if (!(opts.cond_scale > 0))
    throw std::invalid_argument("dynamics: cond_scale must be > 0");
  if (!(opts.cfl_max > 0))
    throw std::invalid_argument("dynamics: cfl_max must be > 0");
  if (!(opts.inversion.lambda_qvs >= 0))
    throw std::invalid_argument("dynamics: lambda_qvs must be >= 0");

  const int nz = g.nz;
  rho_c_.resize(nz);
  dthe_c_.resize(nz);
  c1_c_.resize(nz);
  c2_c_.resize(nz);
  inv_LcB_c_.resize(nz);
  inv_B_c_.resize(nz);
  B_c_.resize(nz);
  for (int k = 0; k < nz; ++k) {
    rho_c_[k] = 0.5 * (bg.rho_bar[k] + bg.rho_bar[k + 1]);
    dthe_c_[k] = 0.5 * (bg.dtheta_e_dz[k] + bg.dtheta_e_dz[k + 1]);
    const double dqs_c = 0.5 * (bg.dq_vs_dz[k] + bg.dq_vs_dz[k + 1]);
    const double denom = dthe_c_[k] - bg.L_c * dqs_c;
    c1_c_[k] = dthe_c_[k] / denom;  // exactly 1 in the dry limit (dqs_c == 0)
    c2_c_[k] = 1.0 - c1_c_[k];
    inv_LcB_c_[k] = dqs_c == 0.0 ? 0.0 : -dqs_c / denom;
    inv_B_c_[k] = dqs_c == 0.0 ? 0.0 : -dqs_c / dthe_c_[k];
    B_c_[k] = dqs_c == 0.0 ? 0.0 : -dthe_c_[k] / dqs_c;
  }
  inv_dthe_c_ = 1.0 / dthe_c_;
  sat_slope_ = 1.0 + bg.L_c * opts.inversion.lambda_qvs;
}

Field3<double> Dynamics::ddz_cells(const Field3<double>& a) const {
  const int nz = grid_.nz;
  const double i2dz = 1.0 / (2.0 * grid_.dz());
  Field3<double> out(grid_);
  out.slab(0) = (-3.0 * a.slab(0) + 4.0 * a.slab(1) - a.slab(2)) * i2dz;
  for (int k = 1; k < nz - 1; ++k) out.slab(k) = (a.slab(k + 1) - a.slab(k - 1)) * i2dz;
  out.slab(nz - 1) = (3.0 * a.slab(nz - 1) - 4.0 * a.slab(nz - 2) + a.slab(nz - 3)) * i2dz;
  return out;
}

Field3<double> Dynamics::advect(const Field3<double>& u, const Field3<double>& v,
                                const Field3<double>& a) const {
  Field3<double> at = a;
  sp_.dealias(at);
  const Field3<double> ax = sp_.deriv_x(at);
  const Field3<double> ay = sp_.deriv_y(at);
  Field3<double> out(grid_);
  out.data = u.data * ax.data + v.data * ay.data;
  return out;
}

Field3<double> Dynamics::muscl_divergence(const Field3<double>& u, const Field3<double>& v,
                                          const Field3<double>& a) const {
  const int nx = grid_.nx, ny = grid_.ny, nz = grid_.nz;
  const double idx = 1.0 / grid_.dx(), idy = 1.0 / grid_.dy();
  Field3<double> out(grid_);
  std::vector<double> slope(std::size_t(nx) * ny), flux(std::size_t(nx) * ny);
  for (int k = 0; k < nz; ++k) {
    const auto q = a.slab(k);
    const auto uu = u.slab(k);
    const auto vv = v.slab(k);
    auto div = out.slab(k);
    // x sweep: flux[p] is the flux through the face between i and i+1
    for (int j = 0; j < ny; ++j) {
      for (int i = 0; i < nx; ++i) {
        const long p = i + long(nx) * j;
        const long pm = (i + nx - 1) % nx + long(nx) * j;
        const long pp = (i + 1) % nx + long(nx) * j;
        slope[p] = harmonic_slope(q[p] - q[pm], q[pp] - q[p]);
      }
      for (int i = 0; i < nx; ++i) {
        const long p = i + long(nx) * j;
        const long pp = (i + 1) % nx + long(nx) * j;
        const double uf = 0.5 * (uu[p] + uu[pp]);
        flux[p] = uf > 0.0 ? uf * (q[p] + 0.5 * slope[p]) : uf * (q[pp] - 0.5 * slope[pp]);
      }
      for (int i = 0; i < nx; ++i) {
        const long p = i + long(nx) * j;
        const long pm = (i + nx - 1) % nx + long(nx) * j;
        div[p] += (flux[p] - flux[pm]) * idx;
      }
    }
    // y sweep
    for (int i = 0; i < nx; ++i) {
      for (int j = 0; j < ny; ++j) {
        const long p = i + long(nx) * j;
        const long pm = i + long(nx) * ((j + ny - 1) % ny);
        const long pp = i + long(nx) * ((j + 1) % ny);
        slope[p] = harmonic_slope(q[p] - q[pm], q[pp] - q[p]);
      }
      for (int j = 0; j < ny; ++j) {
        const long p = i + long(nx) * j;
        const long pp = i + long(nx) * ((j + 1) % ny);
        const double vf = 0.5 * (vv[p] + vv[pp]);
        flux[p] = vf > 0.0 ? vf * (q[p] + 0.5 * slope[p]) : vf * (q[pp] - 0.5 * slope[pp]);
      }
      for (int j = 0; j < ny; ++j) {
        const long p = i + long(nx) * j;
        const long pm = i + long(nx) * ((j + ny - 1) % ny);
        div[p] += (flux[p] - flux[pm]) * idy;
      }
    }
  }
  return out;
}

DiagnosticState Dynamics::close_impl(const PrognosticState& s,
                                     const SaturationMask* frozen) const {
  require_same_grid(s.pv_e, s.M);
  if (s.pv_e.grid != grid_)
    throw std::invalid_argument("dynamics: state grid does not match the integrator grid");
  DiagnosticState d;
  if (s.variant == Variant::continuous) {
    d.phi = invert_moist_linear(s.pv_e, s.M, bg_, tp_, opts_.inversion);
  } else if (frozen != nullptr) {
    d.phi = invert_moist_masked(s.pv_e, s.M, *frozen, bg_, tp_, opts_.inversion);
    d.mask = *frozen;
  } else {
    FastInversion fi = invert_moist_fast(s.pv_e, s.M, bg_, tp_, opts_.inversion);
    d.phi = std::move(fi.phi);
    d.mask = std::move(fi.mask);
    d.fast_sweeps = fi.iterations;
  }
  Balances b = diagnose_balances(d.phi, tp_);
  d.u = std::move(b.u);
  d.v = std::move(b.v);
  d.zeta = std::move(b.zeta);
  d.theta = std::move(b.theta);
  moisture_closure(s, d);
  return d;
}

DiagnosticState Dynamics::close_diagnostics(const PrognosticState& s) const {
  return close_impl(s, nullptr);
}

void Dynamics::moisture_closure(const PrognosticState& s, DiagnosticState& d) const {
  const int nz = grid_.nz;
  const long nxy = long(grid_.nx) * grid_.ny;
  const double lam = opts_.inversion.lambda_qvs;
  const double L_c = bg_.L_c;

  d.q_v = Field3<double>(grid_, "q_v", "kg/kg");
  d.theta_e = Field3<double>(grid_, "theta_e", "K");
  if (s.variant == Variant::continuous) {
    d.cell_sat.clear();
    for (int k = 0; k < nz; ++k) {
      d.q_v.slab(k) = inv_LcB_c_[k] * (s.M.slab(k) - d.theta.slab(k));
      d.theta_e.slab(k) = c1_c_[k] * d.theta.slab(k) + c2_c_[k] * s.M.slab(k);
    }
    d.q_c = s.q_c;
    d.q_c.name = "q_c";
    d.q_c.units = "kg/kg";
  } else {
    d.q_c = Field3<double>(grid_, "q_c", "kg/kg");
    d.cell_sat.assign(std::size_t(nxy) * nz, 0);
    const double tol = opts_.inversion.mask_tol;
    for (int k = 0; k < nz; ++k) {
      for (long p = 0; p < nxy; ++p) {
        const long q = nxy * k + p;
        const double th = d.theta.data[q];
        const double Mv = s.M.data[q];
        const double sat_val = sat_slope_ * th;
        const double unsat_val = c1_c_[k] * th + c2_c_[k] * Mv;
        if (sat_val < unsat_val - tol) {
          const double qvs = lam * th;
          d.cell_sat[std::size_t(q)] = 1;
          d.q_v.data[q] = qvs;
          d.q_c.data[q] =
              std::max(inv_B_c_[k] * (Mv - th) - (1.0 + L_c * inv_B_c_[k]) * qvs, 0.0);
          d.theta_e.data[q] = sat_val;
        } else {
          d.q_v.data[q] = inv_LcB_c_[k] * (Mv - th);
          d.q_c.data[q] = 0.0;
          d.theta_e.data[q] = unsat_val;
        }
      }
    }
  }

  d.q_r = Field3<double>(grid_, "q_r", "kg/kg");
  d.rain_src = Field3<double>(grid_, "rain_src", "kg kg^-1 s^-1");
  ArrayXd qc_col(nz), qv_col(nz), qvs_col(nz);
  for (long p = 0; p < nxy; ++p) {
    for (int k = 0; k < nz; ++k) {
      const long q = nxy * k + p;
      qc_col[k] = d.q_c.data[q];
      qv_col[k] = d.q_v.data[q];
      qvs_col[k] = lam * d.theta.data[q];
    }
    const RainColumn rc = rain_column_solve(qc_col, qv_col, qvs_col, rho_c_, grid_.dz(), mp_);
    for (int k = 0; k < nz; ++k) {
      const long q = nxy * k + p;
      d.q_r.data[q] = rc.q_r[k];
      d.rain_src.data[q] = rc.s_net[k];
    }
  }

  d.w = Field3<double>(grid_, "w", "m s^-1");
  d.has_w = false;
}

Tendencies Dynamics::tendencies(const PrognosticState& s, const DiagnosticState& d) const {
  const int nz = grid_.nz;
  const long nxy = long(grid_.nx) * grid_.ny;
  Field3<double> ud = d.u, vd = d.v;
  sp_.dealias(ud);
  sp_.dealias(vd);

  Tendencies t;
  // PV: advection plus the shear-moisture source
  t.pv_e = advect(ud, vd, s.pv_e);
  t.pv_e.data = -t.pv_e.data;
  {
    Field3<double> qt = d.q_v;
    sp_.dealias(qt);
    const Field3<double> qx = sp_.deriv_x(qt);
    const Field3<double> qy = sp_.deriv_y(qt);
    const Field3<double> uz = ddz_cells(ud);
    const Field3<double> vz = ddz_cells(vd);
    for (int k = 0; k < nz; ++k)
      t.pv_e.slab(k) -= (tp_.f * bg_.L_c * inv_dthe_c_[k]) *
                        (uz.slab(k) * qx.slab(k) + vz.slab(k) * qy.slab(k));
  }
  sp_.dealias(t.pv_e);
  t.pv_e.name = "pv_e_t";
  t.pv_e.units = "s^-2";

  // M: advection plus the B-weighted moisture exchange. Only the quadratic
  // advective part is truncated; the microphysical sources are local grid
  // terms and must stay untruncated so they cancel exactly against their
  // counterparts in the q_c and rain equations. Truncating them would leak
  // condensed water between M and q_c and shift the relaxed equilibrium.
  t.M = advect(ud, vd, s.M);
  t.M.data = -t.M.data;
  sp_.dealias(t.M);
  t.q_c = Field3<double>(grid_, "q_c_t", "kg kg^-1 s^-1");
  if (s.variant == Variant::fast) {
    for (int k = 0; k < nz; ++k) t.M.slab(k) -= B_c_[k] * d.rain_src.slab(k);
  } else {
    require_same_grid(s.pv_e, s.q_c);
    const double lam = opts_.inversion.lambda_qvs;
    Field3<double> src_qc(grid_);
    for (int k = 0; k < nz; ++k) {
      for (long p = 0; p < nxy; ++p) {
        const long q = nxy * k + p;
        const MoistureCell<double> cell{d.q_v.data[q], d.q_c.data[q], d.q_r.data[q],
                                        lam * d.theta.data[q]};
        const SourceTerms<double> st = source_terms(cell, mp_, opts_.cond_scale);
        t.M.data[q] += B_c_[k] * (st.S_ev - st.S_cd);
        src_qc.data[q] = st.S_cd - st.S_ac - st.S_cr;
      }
    }
    t.q_c = muscl_divergence(d.u, d.v, s.q_c);
    t.q_c.data = src_qc.data - t.q_c.data;
    t.q_c.name = "q_c_t";
    t.q_c.units = "kg kg^-1 s^-1";
  }
  t.M.name = "M_t";
  t.M.units = "K s^-1";
  return t;
}

PrognosticState Dynamics::step(const PrognosticState& s, double dt, StepStats* stats) const {
  const bool fast = s.variant == Variant::fast;
  const SaturationMask* frozen = nullptr;

  DiagnosticState d0 = close_impl(s, nullptr);
  const double vmax =
      (d0.u.data.abs() / grid_.dx() + d0.v.data.abs() / grid_.dy()).maxCoeff();
  const double cfl = std::abs(dt) * vmax;
  if (cfl > opts_.cfl_max)
    throw cfl_error("dynamics: advective CFL " + std::to_string(cfl) + " exceeds the bound " +
                        std::to_string(opts_.cfl_max) + " at t = " + std::to_string(s.t),
                    cfl);
  if (fast && opts_.lagged_mask) frozen = &d0.mask;

  double clipped = 0;
  const double cellvol = grid_.dx() * grid_.dy() * grid_.dz();
  auto clip = [&](PrognosticState& x) {
    if (fast) return;
    for (int k = 0; k < grid_.nz; ++k)
      clipped -= rho_c_[k] * x.q_c.slab(k).min(0.0).sum() * cellvol;
    x.q_c.data = x.q_c.data.max(0.0);
  };
  // stage states in increment form: zero tendencies reproduce s bitwise
  auto combine = [&](std::initializer_list<std::pair<double, const Tendencies*>> terms) {
    PrognosticState out;
    out.variant = s.variant;
    out.pv_e = s.pv_e;
    out.M = s.M;
    out.q_c = s.q_c;
    for (const auto& [c, L] : terms) {
      out.pv_e.data += c * L->pv_e.data;
      out.M.data += c * L->M.data;
      if (!fast) out.q_c.data += c * L->q_c.data;
    }
    return out;
  };

  const Tendencies L0 = tendencies(s, d0);
  PrognosticState s1 = combine({{dt, &L0}});
  s1.t = s.t + dt;
  clip(s1);
  const DiagnosticState d1 = close_impl(s1, frozen);

  const Tendencies L1 = tendencies(s1, d1);
  PrognosticState s2 = combine({{0.25 * dt, &L0}, {0.25 * dt, &L1}});
  s2.t = s.t + 0.5 * dt;
  clip(s2);
  const DiagnosticState d2 = close_impl(s2, frozen);

  const Tendencies L2 = tendencies(s2, d2);
  PrognosticState out =
      combine({{dt / 6.0, &L0}, {dt / 6.0, &L1}, {2.0 * dt / 3.0, &L2}});
  out.t = s.t + dt;
  clip(out);

  if (stats != nullptr) {
    stats->cfl = cfl;
    stats->clipped_mass = clipped;
    stats->fast_sweeps = d0.fast_sweeps + d1.fast_sweeps + d2.fast_sweeps;
  }
  if (opts_.log != nullptr)
    *opts_.log << "step t=" << out.t << " cfl=" << cfl << " clipped=" << clipped
               << " sweeps=" << d0.fast_sweeps + d1.fast_sweeps + d2.fast_sweeps << "\n";
  return out;
}

void Dynamics::diagnose_w(const PrognosticState& s, DiagnosticState& d) const {
  const int nz = grid_.nz;
  const long nxy = long(grid_.nx) * grid_.ny;
  const Tendencies td = tendencies(s, d);

  InversionOptions o = opts_.inversion;
  o.theta_bc_bottom = 0.0;  // lid temperatures are held fixed, so the
  o.theta_bc_top = 0.0;     // tendency problem has homogeneous lid data
  const Field3<double> phi_dot =
      s.variant == Variant::continuous
          ? invert_moist_linear(td.pv_e, td.M, bg_, tp_, o)
          : invert_moist_masked(td.pv_e, td.M, d.mask, bg_, tp_, o);
  const Field3<double> theta_dot = diagnose_balances(phi_dot, tp_).theta;

  Field3<double> te_dot(grid_);
  if (s.variant == Variant::continuous) {
    for (int k = 0; k < nz; ++k)
      te_dot.slab(k) = c1_c_[k] * theta_dot.slab(k) + c2_c_[k] * td.M.slab(k);
  } else {
    for (int k = 0; k < nz; ++k) {
      for (long p = 0; p < nxy; ++p) {
        const long q = nxy * k + p;
        te_dot.data[q] = d.cell_sat[std::size_t(q)]
                             ? sat_slope_ * theta_dot.data[q]
                             : c1_c_[k] * theta_dot.data[q] + c2_c_[k] * td.M.data[q];
      }
    }
  }

  Field3<double> ud = d.u, vd = d.v;
  sp_.dealias(ud);
  sp_.dealias(vd);
  const Field3<double> adv = advect(ud, vd, d.theta_e);
  d.w = Field3<double>(grid_, "w", "m s^-1");
  for (int k = 0; k < nz; ++k)
    d.w.slab(k) = -inv_dthe_c_[k] * (te_dot.slab(k) + adv.slab(k));
  d.has_w = true;
}

ScalarDiagnostics Dynamics::scalars(const PrognosticState& s, const DiagnosticState& d) const {
  const int nz = grid_.nz;
  const long nxy = long(grid_.nx) * grid_.ny;
  ScalarDiagnostics out;
  out.t = s.t;
  const Field3<double> px = sp_.deriv_x(d.phi);
  const Field3<double> py = sp_.deriv_y(d.phi);
  out.energy = (px.data.square() + py.data.square()).mean();
  out.pv_mean = s.pv_e.data.mean();
  out.pv_var = (s.pv_e.data - out.pv_mean).square().mean();

  long sat_cells = 0;
  if (s.variant == Variant::fast) {
    for (std::uint8_t c : d.cell_sat) sat_cells += c != 0;
  } else {
    const double lam = opts_.inversion.lambda_qvs;
    for (long q = 0; q < nxy * nz; ++q) sat_cells += d.q_v.data[q] > lam * d.theta.data[q];
  }
  out.sat_fraction = double(sat_cells) / double(nxy * nz);

  const double cellvol = grid_.dx() * grid_.dy() * grid_.dz();
  for (int k = 0; k < nz; ++k) {
    const double wk = rho_c_[k] * cellvol;
    out.vapor_total += wk * d.q_v.slab(k).sum();
    out.cloud_total += wk * d.q_c.slab(k).sum();
    out.rain_total += wk * d.q_r.slab(k).sum();
    out.water_total +=
        wk * (d.q_v.slab(k).abs() + d.q_c.slab(k) + d.q_r.slab(k)).sum();
  }
  return out;
}

PrognosticState make_initial_state(const Grid<double>& g, const InitialCondition& ic,
                                   Variant variant) {
  validate(g);
  if (!(ic.pv_amp >= 0) || !(ic.k_peak > 0) || ic.vertical_modes < 0 ||
      !(ic.vortex_radius > 0))
    throw std::invalid_argument("initial condition: nonpositive amplitude/scale parameter");
  const Spectral sp(g);
  const int nz = g.nz;

  PrognosticState s;
  s.variant = variant;
  s.t = 0;
  s.pv_e = Field3<double>(g, "pv_e", "s^-1");
  s.M = Field3<double>(g, "M", "K");
  s.q_c = Field3<double>(g, "q_c", "kg/kg");

  auto envelope = [&](int k) { return 0.6 + 0.4 * std::cos(M_PI * (k + 0.5) / nz); };
  switch (ic.family) {
    case ICFamily::random_spectrum:
      s.pv_e.data =
          ic.pv_amp * synth(g, sp, ic.seed, ic.k_peak, ic.vertical_modes).data;
      break;
    case ICFamily::zonal_jet: {
      for (int k = 0; k < nz; ++k) {
        const double env = envelope(k);
        for (int j = 0; j < g.ny; ++j) {
          const double row = ic.pv_amp * env * std::sin(2.0 * M_PI * j / g.ny);
          for (int i = 0; i < g.nx; ++i) s.pv_e(i, j, k) = row;
        }
      }
      if (ic.perturb != 0)
        s.pv_e.data += ic.perturb * ic.pv_amp *
                       synth(g, sp, ic.seed, ic.k_peak, ic.vertical_modes).data;
      break;
    }
    case ICFamily::vortex: {
      const double sigma = ic.vortex_radius * std::min(g.Lx, g.Ly);
      const double x0 = 0.5 * g.Lx, y0 = 0.5 * g.Ly;
      for (int k = 0; k < nz; ++k) {
        const double env = envelope(k);
        for (int j = 0; j < g.ny; ++j) {
          const double ry = g.y(j) - y0;
          for (int i = 0; i < g.nx; ++i) {
            const double rx = g.x(i) - x0;
            s.pv_e(i, j, k) =
                ic.pv_amp * env * std::exp(-(rx * rx + ry * ry) / (2.0 * sigma * sigma));
          }
        }
      }
      if (ic.perturb != 0)
        s.pv_e.data += ic.perturb * ic.pv_amp *
                       synth(g, sp, ic.seed, ic.k_peak, ic.vertical_modes).data;
      break;
    }
  }
  if (ic.M_amp != 0)
    s.M.data = ic.M_amp *
               synth(g, sp, ic.seed ^ 0x4d6f697374214d21ull, ic.k_peak, ic.vertical_modes).data;
  s.M.data += ic.M_offset;
  sp.dealias(s.pv_e);
  sp.dealias(s.M);
  return s;
}

}  // namespace pqg
