#include "pqg/inversion.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "pqg/spectral.hpp"

namespace pqg {
namespace {

using ArrayXd = Eigen::ArrayXd;
using ArrayXXd = Eigen::ArrayXXd;
using ArrayXcd = Eigen::ArrayXcd;
using Cplx = std::complex<double>;

void check_grid_against_background(const Grid<double>& g, const BackgroundState<double>& bg) {
  if (g.nz != bg.nz)
    throw std::invalid_argument("inversion: grid has " + std::to_string(g.nz) +
                                " cells but background has " + std::to_string(bg.nz));
  const double slack = 1e-9 * std::max(g.H, 1.0);
  if (std::abs(g.H - bg.H) > slack)
    throw std::invalid_argument("inversion: grid depth " + std::to_string(g.H) +
                                " != background depth " + std::to_string(bg.H));
}

// Face-level elliptic coefficients, all z-only. P_* are the flux
// coefficients multiplying d(phi)/dz on each branch:
//   dry            theta/dtheta_dz        -> 1/N2
//   unsaturated    (c1 theta + c2 M)/d(theta_e)_dz -> c1/Ne2 (+ M-driven flux)
//   saturated      (1 + L_c lambda) theta/d(theta_e)_dz -> (1+L_c lambda)/Ne2
struct FaceCoeffs {
  int nz = 0;
  double dz = 0, f = 0, g_over_theta = 0;
  double sat_slope = 1;  // 1 + L_c lambda: d(theta_e)/d(theta) when saturated
  ArrayXd rho_f;   // nz+1 faces
  ArrayXd rho_c;   // nz cells, face-averaged
  ArrayXd Ne2;     // (g/theta_ref) dtheta_e_dz
  ArrayXd c1, c2, inv_dthe;
  ArrayXd P_dry, P_unsat, P_sat;
};

FaceCoeffs make_face_coeffs(const Grid<double>& g, const BackgroundState<double>& bg,
                            const ThermoParams<double>& tp, double lambda_qvs) {
  check_grid_against_background(g, bg);
  if (!(lambda_qvs >= 0))
    throw std::invalid_argument("inversion: lambda_qvs must be >= 0");
  FaceCoeffs fc;
  fc.nz = bg.nz;
  fc.dz = bg.dz();
  fc.f = tp.f;
  fc.g_over_theta = tp.g / tp.theta_ref;
  fc.rho_f = bg.rho_bar;
  fc.rho_c.resize(fc.nz);
  for (int k = 0; k < fc.nz; ++k) fc.rho_c[k] = 0.5 * (bg.rho_bar[k] + bg.rho_bar[k + 1]);
  fc.Ne2 = (tp.g / tp.theta_ref) * bg.dtheta_e_dz;
  if (!(fc.Ne2 > 0).all() || !(bg.N2 > 0).all())
    throw solver_error("inversion: vertical operator is singular (nonpositive stratification)");
  fc.c1 = bg.coeff_c1;
  fc.c2 = bg.coeff_c2;
  fc.inv_dthe = 1.0 / bg.dtheta_e_dz;
  fc.P_dry = 1.0 / bg.N2;
  fc.P_unsat = bg.coeff_c1 / fc.Ne2;
  fc.sat_slope = 1.0 + bg.L_c * lambda_qvs;
  fc.P_sat = fc.sat_slope / fc.Ne2;
  return fc;
}

// Cell field sampled onto the nz+1 faces: interior averages, one-sided
// extrapolation at the lids. Column jf of the result is the face-jf slab.
ArrayXXd cell_to_face(const Field3<double>& a) {
  const long nxy = long(a.grid.nx) * a.grid.ny;
  const int nz = a.grid.nz;
  ArrayXXd out(nxy, nz + 1);
  out.col(0) = 1.5 * a.slab(0) - 0.5 * a.slab(1);
  for (int jf = 1; jf < nz; ++jf) out.col(jf) = 0.5 * (a.slab(jf - 1) + a.slab(jf));
  out.col(nz) = 1.5 * a.slab(nz - 1) - 0.5 * a.slab(nz - 2);
  return out;
}

// M-driven part of the face flux (density not included): 0 on saturated
// faces, c2*Mf/dtheta_e_dz on unsaturated ones. mask == nullptr means
// everywhere unsaturated (the linear moist solve).
ArrayXXd branch_Q(const FaceCoeffs& fc, const ArrayXXd& Mf, const SaturationMask* mask) {
  ArrayXXd Q(Mf.rows(), Mf.cols());
  for (int jf = 0; jf <= fc.nz; ++jf) {
    const double s = fc.c2[jf] * fc.inv_dthe[jf];
    for (long p = 0; p < Mf.rows(); ++p) {
      const bool sat = mask != nullptr && mask->sat[mask->idx(0, 0, jf) + p] != 0;
      Q(p, jf) = sat ? 0.0 : s * Mf(p, jf);
    }
  }
  return Q;
}

// (1/f) * horizontal spectral Laplacian.
Field3<double> laplacian_over_f(const Spectral& sp, const Field3<double>& a, double f) {
  Spectral::SpecField s = sp.forward(a);
  const int nx = a.grid.nx, ny = a.grid.ny;
  for (auto& slab : s)
    for (int j = 0; j < ny; ++j)
      for (int i = 0; i < nx; ++i) slab(i, j) *= -sp.k2(i, j) / f;
  Field3<double> out(a.grid, a.name, a.units);
  sp.inverse(s, out);
  return out;
}

// Vertical flux divergence with homogeneous lid fluxes. P gives the face
// coefficient: either a z-only array or a per-point (nxy, nz+1) table.
template <typename PAt>
void add_vertical(Field3<double>& out, const Field3<double>& phi, const FaceCoeffs& fc, PAt&& P) {
  const long nxy = long(phi.grid.nx) * phi.grid.ny;
  const int nz = fc.nz;
  ArrayXd flux(nxy);  // rho_f * P * (phi_k - phi_{k-1}) at one face
  ArrayXd below(nxy); // flux at face k (starts at lid: zero)
  below.setZero();
  for (int k = 0; k < nz; ++k) {
    if (k + 1 < nz) {
      const int jf = k + 1;
      flux = fc.rho_f[jf] * P(jf) * (phi.slab(k + 1) - phi.slab(k));
    } else {
      flux.setZero();
    }
    out.slab(k) += (fc.f / (fc.rho_c[k] * fc.dz * fc.dz)) * (flux - below);
    below = flux;
  }
}

// Right-hand side of the discrete problem: pv minus the known flux
// divergences (the M-driven part Q on every face, and the prescribed lid
// theta through the branch coefficient at the lid faces).
template <typename PBot, typename PTop>
Field3<double> assemble_rhs(const Field3<double>& pv, const ArrayXXd* Q, const FaceCoeffs& fc,
                            const InversionOptions& opts, PBot&& P_bot, PTop&& P_top) {
  Field3<double> b = pv;
  const int nz = fc.nz;
  if (Q != nullptr) {
    for (int k = 0; k < nz; ++k)
      b.slab(k) -= (fc.f / (fc.rho_c[k] * fc.dz)) *
                   (fc.rho_f[k + 1] * Q->col(k + 1) - fc.rho_f[k] * Q->col(k));
  }
  const double dphi_lo = fc.g_over_theta * opts.theta_bc_bottom;
  const double dphi_hi = fc.g_over_theta * opts.theta_bc_top;
  if (dphi_lo != 0.0)
    b.slab(0) += (fc.f / (fc.rho_c[0] * fc.dz)) * fc.rho_f[0] * dphi_lo * P_bot();
  if (dphi_hi != 0.0)
    b.slab(nz - 1) -= (fc.f / (fc.rho_c[nz - 1] * fc.dz)) * fc.rho_f[nz] * dphi_hi * P_top();
  return b;
}

// Per-mode vertical tridiagonal solve, in place on the spectral slabs.
// The (0,0) mode is the singular Neumann column: its RHS is shifted onto the
// solvable range (constants are the nullspace) and phi(0) is pinned.
void solve_modes(const Spectral& sp, const FaceCoeffs& fc, const ArrayXd& P_f,
                 Spectral::SpecField& bhat) {
  const int nx = sp.grid().nx, ny = sp.grid().ny, nz = fc.nz;
  ArrayXd wf(nz + 1);  // f * rho_f * P / dz^2
  for (int jf = 0; jf <= nz; ++jf) wf[jf] = fc.f * fc.rho_f[jf] * P_f[jf] / (fc.dz * fc.dz);

  ArrayXd diag(nz), sub(nz), sup(nz), cp(nz);
  ArrayXcd rhs(nz), dp(nz);
  const double wsum = fc.rho_c.sum();
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      const double k2_over_f = sp.k2(i, j) / fc.f;
      for (int k = 0; k < nz; ++k) {
        sub[k] = k > 0 ? wf[k] / fc.rho_c[k] : 0.0;
        sup[k] = k < nz - 1 ? wf[k + 1] / fc.rho_c[k] : 0.0;
        diag[k] = -k2_over_f - sub[k] - sup[k];
        rhs[k] = bhat[k](i, j);
      }
      if (i == 0 && j == 0) {
        Cplx s(0, 0);
        for (int k = 0; k < nz; ++k) s += fc.rho_c[k] * rhs[k];
        rhs -= s / wsum;
        diag[0] = 1.0;
        sup[0] = 0.0;
        rhs[0] = Cplx(0, 0);
      }
      cp[0] = sup[0] / diag[0];
      dp[0] = rhs[0] / diag[0];
      for (int k = 1; k < nz; ++k) {
        const double m = diag[k] - sub[k] * cp[k - 1];
        cp[k] = sup[k] / m;
        dp[k] = (rhs[k] - sub[k] * dp[k - 1]) / m;
      }
      bhat[nz - 1](i, j) = dp[nz - 1];
      for (int k = nz - 2; k >= 0; --k) bhat[k](i, j) = dp[k] - cp[k] * bhat[k + 1](i, j);
    }
  }
}

// One linear solve with a z-only face coefficient: used directly by the dry
// and linear-moist inversions and by the fast solver whenever the mask is
// horizontally uniform on every face level.
Field3<double> solve_separable(const Field3<double>& pv, const ArrayXXd* Q, const ArrayXd& P_f,
                               const FaceCoeffs& fc, const Spectral& sp,
                               const InversionOptions& opts, const std::string& name) {
  Field3<double> b =
      assemble_rhs(pv, Q, fc, opts, [&] { return P_f[0]; }, [&] { return P_f[fc.nz]; });
  Spectral::SpecField bhat = sp.forward(b);
  solve_modes(sp, fc, P_f, bhat);
  Field3<double> phi(pv.grid, name, "m^2 s^-2");
  sp.inverse(bhat, phi);
  phi.data -= phi.data.mean();
  return phi;
}

// rho-weighted inner product and mean projection (weights are the cell
// densities; the uniform dz and horizontal measure drop out).
double dot_w(const Field3<double>& a, const Field3<double>& b, const FaceCoeffs& fc) {
  double s = 0;
  for (int k = 0; k < fc.nz; ++k) s += fc.rho_c[k] * (a.slab(k) * b.slab(k)).sum();
  return s;
}

void project_w(Field3<double>& a, const FaceCoeffs& fc) {
  double num = 0, den = 0;
  const long nxy = long(a.grid.nx) * a.grid.ny;
  for (int k = 0; k < fc.nz; ++k) {
    num += fc.rho_c[k] * a.slab(k).sum();
    den += fc.rho_c[k] * nxy;
  }
  a.data -= num / den;
}

// Negated masked operator application: S(phi) = -[(1/f) lap(phi) + vertical],
// SPD on the mean-free subspace in the rho-weighted product.
Field3<double> apply_spd(const Field3<double>& phi, const ArrayXXd& P_eff, const FaceCoeffs& fc,
                         const Spectral& sp) {
  Field3<double> out = laplacian_over_f(sp, phi, fc.f);
  add_vertical(out, phi, fc, [&](int jf) { return P_eff.col(jf); });
  out.data = -out.data;
  return out;
}

// Preconditioned conjugate gradients for a mixed saturation mask. The
// preconditioner is the separable solve with the horizontally averaged face
// coefficient.
Field3<double> solve_masked_pcg(const Field3<double>& pv, const ArrayXXd& P_eff,
                                const ArrayXXd& Q_eff, const FaceCoeffs& fc, const Spectral& sp,
                                const InversionOptions& opts, const Field3<double>& x0,
                                int& cg_iters) {
  Field3<double> b = assemble_rhs(pv, &Q_eff, fc, opts, [&] { return P_eff.col(0); },
                                  [&] { return P_eff.col(fc.nz); });
  b.data = -b.data;  // solve S phi = -b with S = -A
  project_w(b, fc);

  ArrayXd P_bar(fc.nz + 1);
  for (int jf = 0; jf <= fc.nz; ++jf) P_bar[jf] = P_eff.col(jf).mean();
  auto precond = [&](const Field3<double>& r) {
    Spectral::SpecField rhat = sp.forward(r);
    for (auto& slab : rhat) slab = -slab;  // separable solver expects A, not -A
    solve_modes(sp, fc, P_bar, rhat);
    Field3<double> z(r.grid);
    sp.inverse(rhat, z);
    project_w(z, fc);
    return z;
  };

  Field3<double> x = x0;
  project_w(x, fc);
  Field3<double> r = b;
  {
    Field3<double> sx = apply_spd(x, P_eff, fc, sp);
    r.data -= sx.data;
  }
  const double bnorm = std::sqrt(dot_w(b, b, fc));
  if (bnorm == 0.0) {
    x.data.setZero();
    cg_iters = 0;
    return x;
  }
  Field3<double> z = precond(r);
  Field3<double> p = z;
  double rz = dot_w(r, z, fc);
  for (int it = 1; it <= opts.cg_max_iter; ++it) {
    Field3<double> q = apply_spd(p, P_eff, fc, sp);
    const double pq = dot_w(p, q, fc);
    if (!(pq > 0))
      throw solver_error("fast inversion: masked operator lost positivity (p'Sp = " +
                         std::to_string(pq) + ")");
    const double alpha = rz / pq;
    x.data += alpha * p.data;
    r.data -= alpha * q.data;
    if (std::sqrt(dot_w(r, r, fc)) <= opts.cg_tol * bnorm) {
      cg_iters = it;
      return x;
    }
    z = precond(r);
    const double rz_new = dot_w(r, z, fc);
    p.data = z.data + (rz_new / rz) * p.data;
    rz = rz_new;
  }
  throw solver_error("fast inversion: PCG stalled after " + std::to_string(opts.cg_max_iter) +
                     " iterations");
}

// theta at face jf of column p (bc values at the lids, differences inside).
struct FaceTheta {
  const Field3<double>* phi;  // nullptr -> phi = 0
  const FaceCoeffs* fc;
  const InversionOptions* opts;
  double operator()(long p, int jf) const {
    if (jf == 0) return opts->theta_bc_bottom;
    if (jf == fc->nz) return opts->theta_bc_top;
    if (phi == nullptr) return 0.0;
    const long nxy = long(phi->grid.nx) * phi->grid.ny;
    return (phi->data[nxy * jf + p] - phi->data[nxy * (jf - 1) + p]) /
           (fc->g_over_theta * fc->dz);
  }
};

// Saturation rule: the branch giving the smaller theta_e wins; ties (within
// mask_tol) resolve to the unsaturated branch so the dry limit never
// saturates spuriously.
SaturationMask compute_mask(const Field3<double>* phi, const ArrayXXd& Mf, const FaceCoeffs& fc,
                            const InversionOptions& opts, const Grid<double>& g) {
  SaturationMask m(g.nx, g.ny, fc.nz + 1);
  const FaceTheta tf{phi, &fc, &opts};
  for (int jf = 0; jf <= fc.nz; ++jf) {
    for (long p = 0; p < Mf.rows(); ++p) {
      const double th = tf(p, jf);
      const double sat_val = fc.sat_slope * th;
      const double unsat_val = fc.c1[jf] * th + fc.c2[jf] * Mf(p, jf);
      m.sat[m.idx(0, 0, jf) + p] = sat_val < unsat_val - opts.mask_tol ? 1 : 0;
    }
  }
  return m;
}

// Worst pointwise violation of theta_e = min(saturated, unsaturated) [K].
double min_form_residual(const Field3<double>& phi, const ArrayXXd& Mf, const SaturationMask& m,
                         const FaceCoeffs& fc, const InversionOptions& opts) {
  const FaceTheta tf{&phi, &fc, &opts};
  double worst = 0;
  for (int jf = 0; jf <= fc.nz; ++jf) {
    for (long p = 0; p < Mf.rows(); ++p) {
      const double th = tf(p, jf);
      const double sat_val = fc.sat_slope * th;
      const double unsat_val = fc.c1[jf] * th + fc.c2[jf] * Mf(p, jf);
      const double used = m.sat[m.idx(0, 0, jf) + p] ? sat_val : unsat_val;
      worst = std::max(worst, used - std::min(sat_val, unsat_val));
    }
  }
  return worst;
}

bool level_uniform(const SaturationMask& m, std::vector<std::uint8_t>& level) {
  level.assign(m.nfaces, 0);
  const long nxy = long(m.nx) * m.ny;
  for (int jf = 0; jf < m.nfaces; ++jf) {
    const std::uint8_t first = m.sat[m.idx(0, 0, jf)];
    for (long p = 1; p < nxy; ++p)
      if (m.sat[m.idx(0, 0, jf) + p] != first) return false;
    level[jf] = first;
  }
  return true;
}

long count_diff(const SaturationMask& a, const SaturationMask& b) {
  long n = 0;
  for (std::size_t q = 0; q < a.sat.size(); ++q) n += a.sat[q] != b.sat[q];
  return n;
}

}  // namespace

long SaturationMask::count_saturated() const {
  long n = 0;
  for (std::uint8_t v : sat) n += v != 0;
  return n;
}

Field3<double> invert_dry(const Field3<double>& pv, const BackgroundState<double>& bg,
                          const ThermoParams<double>& tp, const InversionOptions& opts) {
  const FaceCoeffs fc = make_face_coeffs(pv.grid, bg, tp, opts.lambda_qvs);
  const Spectral sp(pv.grid);
  return solve_separable(pv, nullptr, fc.P_dry, fc, sp, opts, "phi");
}

Field3<double> invert_moist_linear(const Field3<double>& pv_e, const Field3<double>& M,
                                   const BackgroundState<double>& bg,
                                   const ThermoParams<double>& tp, const InversionOptions& opts) {
  require_same_grid(pv_e, M);
  const FaceCoeffs fc = make_face_coeffs(pv_e.grid, bg, tp, opts.lambda_qvs);
  const Spectral sp(pv_e.grid);
  const ArrayXXd Mf = cell_to_face(M);
  const ArrayXXd Q = branch_Q(fc, Mf, nullptr);
  return solve_separable(pv_e, &Q, fc.P_unsat, fc, sp, opts, "phi");
}

FastInversion invert_moist_fast(const Field3<double>& pv_e, const Field3<double>& M,
                                const BackgroundState<double>& bg,
                                const ThermoParams<double>& tp, const InversionOptions& opts) {
  require_same_grid(pv_e, M);
  const Grid<double>& g = pv_e.grid;
  const FaceCoeffs fc = make_face_coeffs(g, bg, tp, opts.lambda_qvs);
  const Spectral sp(g);
  const ArrayXXd Mf = cell_to_face(M);
  const long nxy = long(g.nx) * g.ny;

  FastInversion res;
  res.phi = Field3<double>(g, "phi", "m^2 s^-2");
  SaturationMask mask = compute_mask(nullptr, Mf, fc, opts, g);
  SaturationMask older;  // mask from two sweeps back, for cycle detection
  bool have_older = false;
  int solves = 0;

  std::vector<std::uint8_t> level;
  auto log_line = [&](const char* kind, long changed, long sat, int cg) {
    if (opts.log != nullptr)
      *opts.log << "fast-inversion sweep=" << solves << " solver=" << kind
                << " changed=" << changed << " saturated=" << sat << "/" << mask.sat.size()
                << (cg >= 0 ? " cg_iters=" + std::to_string(cg) : std::string()) << "\n";
  };

  for (int it = 1; it <= opts.max_iter; ++it) {
    const char* kind;
    int cg = -1;
    if (level_uniform(mask, level)) {
      ArrayXd P_f(fc.nz + 1);
      for (int jf = 0; jf <= fc.nz; ++jf) P_f[jf] = level[jf] ? fc.P_sat[jf] : fc.P_unsat[jf];
      const ArrayXXd Q = branch_Q(fc, Mf, &mask);
      res.phi = solve_separable(pv_e, &Q, P_f, fc, sp, opts, "phi");
      kind = "direct";
    } else {
      ArrayXXd P_eff(nxy, fc.nz + 1), Q_eff(nxy, fc.nz + 1);
      for (int jf = 0; jf <= fc.nz; ++jf) {
        const double s = fc.c2[jf] * fc.inv_dthe[jf];
        for (long p = 0; p < nxy; ++p) {
          const bool sat = mask.sat[mask.idx(0, 0, jf) + p] != 0;
          P_eff(p, jf) = sat ? fc.P_sat[jf] : fc.P_unsat[jf];
          Q_eff(p, jf) = sat ? 0.0 : s * Mf(p, jf);
        }
      }
      res.phi = solve_masked_pcg(pv_e, P_eff, Q_eff, fc, sp, opts, res.phi, cg);
      res.phi.data -= res.phi.data.mean();
      kind = "pcg";
    }
    ++solves;

    SaturationMask next = compute_mask(&res.phi, Mf, fc, opts, g);
    const long changed = count_diff(next, mask);
    log_line(kind, changed, next.count_saturated(), cg);
    if (changed == 0) {
      res.mask = std::move(next);
      res.iterations = solves;
      res.min_residual = min_form_residual(res.phi, Mf, res.mask, fc, opts);
      res.saturated_faces = res.mask.count_saturated();
      return res;
    }

    if (have_older && next == older) {
      // 2-cycle: re-solve once with the oscillating faces blended half-way
      // between the branches, then re-derive the mask from that solution.
      ArrayXXd P_eff(nxy, fc.nz + 1), Q_eff(nxy, fc.nz + 1);
      long osc = 0;
      for (int jf = 0; jf <= fc.nz; ++jf) {
        const double s = fc.c2[jf] * fc.inv_dthe[jf];
        for (long p = 0; p < nxy; ++p) {
          const std::size_t q = mask.idx(0, 0, jf) + p;
          if (mask.sat[q] != next.sat[q]) {
            ++osc;
            P_eff(p, jf) = 0.5 * (fc.P_sat[jf] + fc.P_unsat[jf]);
            Q_eff(p, jf) = 0.5 * s * Mf(p, jf);
          } else {
            P_eff(p, jf) = mask.sat[q] ? fc.P_sat[jf] : fc.P_unsat[jf];
            Q_eff(p, jf) = mask.sat[q] ? 0.0 : s * Mf(p, jf);
          }
        }
      }
      int cg_damp = -1;
      res.phi = solve_masked_pcg(pv_e, P_eff, Q_eff, fc, sp, opts, res.phi, cg_damp);
      res.phi.data -= res.phi.data.mean();
      ++solves;
      SaturationMask damped = compute_mask(&res.phi, Mf, fc, opts, g);
      if (opts.log != nullptr)
        *opts.log << "fast-inversion sweep=" << solves << " solver=pcg-damped oscillating=" << osc
                  << " changed=" << count_diff(damped, mask) << " cg_iters=" << cg_damp << "\n";
      next = std::move(damped);
    }

    older = std::move(mask);
    have_older = true;
    mask = std::move(next);
  }

  const long osc = have_older ? count_diff(mask, older) : long(mask.sat.size());
  throw nonconvergence_error(
      "fast inversion: saturation mask failed to settle after " + std::to_string(opts.max_iter) +
          " sweeps (" + std::to_string(osc) + " oscillating faces)",
      osc);
}

Field3<double> invert_moist_masked(const Field3<double>& pv_e, const Field3<double>& M,
                                   const SaturationMask& mask, const BackgroundState<double>& bg,
                                   const ThermoParams<double>& tp, const InversionOptions& opts) {
  require_same_grid(pv_e, M);
  const Grid<double>& g = pv_e.grid;
  const FaceCoeffs fc = make_face_coeffs(g, bg, tp, opts.lambda_qvs);
  if (mask.nx != g.nx || mask.ny != g.ny || mask.nfaces != fc.nz + 1)
    throw std::invalid_argument("inversion: saturation mask does not match the grid");
  const Spectral sp(g);
  const ArrayXXd Mf = cell_to_face(M);

  std::vector<std::uint8_t> level;
  if (level_uniform(mask, level)) {
    ArrayXd P_f(fc.nz + 1);
    for (int jf = 0; jf <= fc.nz; ++jf) P_f[jf] = level[jf] ? fc.P_sat[jf] : fc.P_unsat[jf];
    const ArrayXXd Q = branch_Q(fc, Mf, &mask);
    return solve_separable(pv_e, &Q, P_f, fc, sp, opts, "phi");
  }

  const long nxy = long(g.nx) * g.ny;
  ArrayXXd P_eff(nxy, fc.nz + 1), Q_eff(nxy, fc.nz + 1);
  for (int jf = 0; jf <= fc.nz; ++jf) {
    const double s = fc.c2[jf] * fc.inv_dthe[jf];
    for (long p = 0; p < nxy; ++p) {
      const bool sat = mask.sat[mask.idx(0, 0, jf) + p] != 0;
      P_eff(p, jf) = sat ? fc.P_sat[jf] : fc.P_unsat[jf];
      Q_eff(p, jf) = sat ? 0.0 : s * Mf(p, jf);
    }
  }
  int cg = -1;
  Field3<double> phi(g, "phi", "m^2 s^-2");
  phi = solve_masked_pcg(pv_e, P_eff, Q_eff, fc, sp, opts, phi, cg);
  phi.data -= phi.data.mean();
  phi.name = "phi";
  phi.units = "m^2 s^-2";
  return phi;
}

Balances diagnose_balances(const Field3<double>& phi, const ThermoParams<double>& tp) {
  const Grid<double>& g = phi.grid;
  const Spectral sp(g);
  Balances b;
  b.u = sp.deriv_y(phi);
  b.u.data *= -1.0 / tp.f;
  b.u.name = "u";
  b.u.units = "m s^-1";
  b.v = sp.deriv_x(phi);
  b.v.data *= 1.0 / tp.f;
  b.v.name = "v";
  b.v.units = "m s^-1";
  Field3<double> vx = sp.deriv_x(b.v), uy = sp.deriv_y(b.u);
  b.zeta = Field3<double>(g, "zeta", "s^-1");
  b.zeta.data = vx.data - uy.data;

  b.theta = Field3<double>(g, "theta", "K");
  const double scale = tp.theta_ref / tp.g;
  const double dz = g.dz();
  const int nz = g.nz;
  b.theta.slab(0) = scale / (2 * dz) *
                    (4.0 * (phi.slab(1) - phi.slab(0)) - (phi.slab(2) - phi.slab(0)));
  for (int k = 1; k < nz - 1; ++k)
    b.theta.slab(k) = scale / (2 * dz) * (phi.slab(k + 1) - phi.slab(k - 1));
  b.theta.slab(nz - 1) = scale / (2 * dz) * ((phi.slab(nz - 3) - phi.slab(nz - 1)) -
                                             4.0 * (phi.slab(nz - 2) - phi.slab(nz - 1)));
  return b;
}

Field3<double> apply_dry_operator(const Field3<double>& phi, const BackgroundState<double>& bg,
                                  const ThermoParams<double>& tp) {
  const FaceCoeffs fc = make_face_coeffs(phi.grid, bg, tp, 0.0);
  const Spectral sp(phi.grid);
  Field3<double> out = laplacian_over_f(sp, phi, fc.f);
  add_vertical(out, phi, fc, [&](int jf) { return fc.P_dry[jf]; });
  out.name = "pv";
  out.units = "s^-1";
  return out;
}

Field3<double> apply_moist_linear_operator(const Field3<double>& phi,
                                           const BackgroundState<double>& bg,
                                           const ThermoParams<double>& tp) {
  const FaceCoeffs fc = make_face_coeffs(phi.grid, bg, tp, 0.0);
  const Spectral sp(phi.grid);
  Field3<double> out = laplacian_over_f(sp, phi, fc.f);
  add_vertical(out, phi, fc, [&](int jf) { return fc.P_unsat[jf]; });
  out.name = "pv_e_phi_part";
  out.units = "s^-1";
  return out;
}

Field3<double> moist_rhs_divergence(const Field3<double>& M, const BackgroundState<double>& bg,
                                    const ThermoParams<double>& tp) {
  const FaceCoeffs fc = make_face_coeffs(M.grid, bg, tp, 0.0);
  const ArrayXXd Mf = cell_to_face(M);
  const ArrayXXd Q = branch_Q(fc, Mf, nullptr);
  Field3<double> out(M.grid, "moist_rhs", "s^-1");
  for (int k = 0; k < fc.nz; ++k)
    out.slab(k) = (fc.f / (fc.rho_c[k] * fc.dz)) *
                  (fc.rho_f[k + 1] * Q.col(k + 1) - fc.rho_f[k] * Q.col(k));
  return out;
}

Field3<double> apply_fast_operator(const Field3<double>& phi, const Field3<double>& M,
                                   const SaturationMask& mask, const BackgroundState<double>& bg,
                                   const ThermoParams<double>& tp, const InversionOptions& opts) {
  require_same_grid(phi, M);
  const Grid<double>& g = phi.grid;
  const FaceCoeffs fc = make_face_coeffs(g, bg, tp, opts.lambda_qvs);
  if (mask.nx != g.nx || mask.ny != g.ny || mask.nfaces != fc.nz + 1)
    throw std::invalid_argument("apply_fast_operator: mask shape mismatch");
  const Spectral sp(g);
  const ArrayXXd Mf = cell_to_face(M);
  const long nxy = long(g.nx) * g.ny;

  ArrayXXd P_eff(nxy, fc.nz + 1), Q_eff(nxy, fc.nz + 1);
  for (int jf = 0; jf <= fc.nz; ++jf) {
    const double s = fc.c2[jf] * fc.inv_dthe[jf];
    for (long p = 0; p < nxy; ++p) {
      const bool sat = mask.sat[mask.idx(0, 0, jf) + p] != 0;
      P_eff(p, jf) = sat ? fc.P_sat[jf] : fc.P_unsat[jf];
      Q_eff(p, jf) = sat ? 0.0 : s * Mf(p, jf);
    }
  }

  Field3<double> out = laplacian_over_f(sp, phi, fc.f);
  add_vertical(out, phi, fc, [&](int jf) { return P_eff.col(jf); });
  // known flux contributions: Q on every face, prescribed lid theta
  const int nz = fc.nz;
  for (int k = 0; k < nz; ++k)
    out.slab(k) += (fc.f / (fc.rho_c[k] * fc.dz)) *
                   (fc.rho_f[k + 1] * Q_eff.col(k + 1) - fc.rho_f[k] * Q_eff.col(k));
  const double dphi_lo = fc.g_over_theta * opts.theta_bc_bottom;
  const double dphi_hi = fc.g_over_theta * opts.theta_bc_top;
  if (dphi_lo != 0.0)
    out.slab(0) -= (fc.f / (fc.rho_c[0] * fc.dz)) * fc.rho_f[0] * dphi_lo * P_eff.col(0);
  if (dphi_hi != 0.0)
    out.slab(nz - 1) += (fc.f / (fc.rho_c[nz - 1] * fc.dz)) * fc.rho_f[nz] * dphi_hi * P_eff.col(nz);
  out.name = "pv_e";
  out.units = "s^-1";
  return out;
}

}  // namespace pqg
