#include "pqg/run.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "pqg/frame_io.hpp"
#include "pqg/regime.hpp"
#include "pqg/rng.hpp"

namespace pqg {

namespace {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

struct Timer {
  std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  }
};

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void ensure_dir(const std::string& out_dir) {
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw io_error("run: cannot create output directory '" + out_dir + "'");
}

std::ofstream open_out(const std::string& out_dir, const std::string& name) {
  const std::string path = (fs::path(out_dir) / name).string();
  std::ofstream f(path, std::ios::binary);
  if (!f) throw io_error("run: cannot write '" + path + "'");
  return f;
}

void add_check(ExperimentSummary& s, const std::string& name, double measured,
               double threshold, bool pass) {
  s.checks.push_back({name, pass, measured, threshold});
  s.pass = s.pass && pass;
}

// checks of the form "measured stays below threshold"
void add_bound(ExperimentSummary& s, const std::string& name, double measured,
               double threshold) {
  add_check(s, name, measured, threshold, measured <= threshold);
}

}  // namespace

void write_summary(const ExperimentSummary& s, const std::string& out_dir) {
  ordered_json checks = ordered_json::array();
  for (const CheckResult& c : s.checks)
    checks.push_back(ordered_json{{"name", c.name},
                                  {"pass", c.pass},
                                  {"measured", c.measured},
                                  {"threshold", c.threshold}});
  ordered_json metrics = ordered_json::object();
  for (const auto& [k, v] : s.metrics) metrics[k] = v;
  ordered_json doc = {{"subcommand", s.subcommand},
                      {"pass", s.pass},
                      {"runtime_seconds", s.runtime_seconds},
                      {"checks", checks},
                      {"metrics", metrics},
                      {"outputs", s.outputs}};
  std::ofstream f = open_out(out_dir, "summary.json");
  f << doc.dump(2) << "\n";
  if (!f.flush()) throw io_error("run: failed writing summary.json");
}

ExperimentSummary run_experiment(const RunConfig& cfg, const std::string& out_dir,
                                 std::ostream* log) {
  Timer timer;
  ExperimentSummary sum;
  sum.subcommand = "run";

  validate_config(cfg);
  ensure_dir(out_dir);

  const BackgroundState<double> bg = build_background(cfg.background, cfg.thermo);
  const Dynamics dyn(cfg.grid, bg, cfg.thermo, cfg.microphysics, dynamics_options(cfg));
  PrognosticState s =
      make_initial_state(cfg.grid, initial_condition(cfg), cfg.dynamics.variant);

  // output schedule: t = 0, every output_every, and t_end (index-based so the
  // cadence does not accumulate roundoff)
  const double T = cfg.dynamics.t_end;
  std::vector<double> out_times{0.0};
  if (cfg.dynamics.output_every > 0) {
    const double every = cfg.dynamics.output_every;
    for (int k = 1; k * every < T * (1.0 - 1e-12); ++k) out_times.push_back(k * every);
  }
  if (T > 0) out_times.push_back(T);

  std::ofstream csv = open_out(out_dir, "scalars.csv");
  csv << "time,energy,pv_mean,pv_var,sat_fraction,vapor_total,cloud_total,rain_total,"
         "water_total,cfl,clipped_cum,fast_sweeps\n";

  long n_steps = 0, sweeps_total = 0;
  double clipped_cum = 0, cfl_observed = 0, last_cfl = 0;
  double qc_min = 0, qr_min = 0;
  double pv_mean0 = 0, pv_mean_end = 0, water_end = 0;

  int frame_index = 0;
  auto write_output = [&]() {
    DiagnosticState d = dyn.close_diagnostics(s);
    dyn.diagnose_w(s, d);
    const ScalarDiagnostics sd = dyn.scalars(s, d);
    qc_min = std::min(qc_min, double(d.q_c.data.minCoeff()));
    qr_min = std::min(qr_min, double(d.q_r.data.minCoeff()));
    if (frame_index == 0) pv_mean0 = sd.pv_mean;
    pv_mean_end = sd.pv_mean;
    water_end = sd.water_total;

    csv << num(sd.t) << ',' << num(sd.energy) << ',' << num(sd.pv_mean) << ','
        << num(sd.pv_var) << ',' << num(sd.sat_fraction) << ',' << num(sd.vapor_total)
        << ',' << num(sd.cloud_total) << ',' << num(sd.rain_total) << ','
        << num(sd.water_total) << ',' << num(last_cfl) << ',' << num(clipped_cum) << ','
        << sweeps_total << "\n";

    char name[32];
    std::snprintf(name, sizeof name, "frame_%06d.pqgf", frame_index);
    Frame fr;
    fr.grid = cfg.grid;
    fr.time = s.t;
    fr.fields = {s.pv_e, s.M,  d.q_c,     d.q_v, d.q_r, d.theta,
                 d.theta_e,    d.phi,     d.u,   d.v,   d.zeta, d.w};
    write_frame(fr, (fs::path(out_dir) / name).string());
    sum.outputs.push_back(name);
    if (log)
      (*log) << "t=" << sd.t << " frame=" << frame_index << " cfl=" << last_cfl
             << " sat=" << sd.sat_fraction << " water=" << sd.water_total << "\n";
    ++frame_index;
  };

  write_output();
  for (std::size_t it = 1; it < out_times.size(); ++it) {
    const double target = out_times[it];
    const double tol = 1e-9 * std::max(1.0, T);
    while (s.t < target - tol) {
      double dt = target - s.t;
      if (cfg.dynamics.dt > 0) {
        dt = std::min(cfg.dynamics.dt, dt);
      } else {
        // auto step: hold the Courant number at 90% of the configured bound
        const DiagnosticState d = dyn.close_diagnostics(s);
        const double vmax =
            std::max(d.u.data.abs().maxCoeff(), d.v.data.abs().maxCoeff());
        if (vmax > 0) {
          const double dx = std::min(cfg.grid.dx(), cfg.grid.dy());
          dt = std::min(dt, 0.9 * cfg.dynamics.cfl_max * dx / vmax);
        }
      }
      StepStats st;
      s = dyn.step(s, dt, &st);
      clipped_cum += st.clipped_mass;
      cfl_observed = std::max(cfl_observed, st.cfl);
      last_cfl = st.cfl;
      sweeps_total += st.fast_sweeps;
      ++n_steps;
    }
    if (std::abs(target - s.t) <= tol) s.t = target;
    write_output();
  }
  if (!csv.flush()) throw io_error("run: failed writing scalars.csv");
  sum.outputs.push_back("scalars.csv");

  const double clipped_frac =
      water_end > 0 ? clipped_cum / water_end : (clipped_cum > 0 ? 1.0 : 0.0);
  add_check(sum, "q_c_nonnegative_at_outputs", qc_min, 0.0, qc_min >= 0.0);
  add_check(sum, "q_r_nonnegative_at_outputs", qr_min, 0.0, qr_min >= 0.0);
  add_bound(sum, "clipped_mass_fraction", clipped_frac, 1e-6);
  add_check(sum, "all_fields_finite", 0.0, 0.0,
            s.pv_e.finite() && s.M.finite() && s.q_c.finite());

  sum.metrics.emplace_back("n_steps", double(n_steps));
  sum.metrics.emplace_back("t_final", s.t);
  sum.metrics.emplace_back("cfl_max_observed", cfl_observed);
  sum.metrics.emplace_back("clipped_total", clipped_cum);
  sum.metrics.emplace_back("water_total_final", water_end);
  sum.metrics.emplace_back("pv_mean_initial", pv_mean0);
  sum.metrics.emplace_back("pv_mean_final", pv_mean_end);
  sum.metrics.emplace_back(
      "pv_mean_drift_rel",
      std::abs(pv_mean_end - pv_mean0) / std::max(std::abs(pv_mean0), 1e-300));

  sum.runtime_seconds = timer.seconds();
  write_summary(sum, out_dir);
  return sum;
}

ExperimentSummary relaxation_study(const MicrophysicsParams<double>& mp, double t_end,
                                   int n_lo, int n_hi, double err_tol,
                                   const std::string& out_dir) {
  Timer timer;
  ExperimentSummary sum;
  sum.subcommand = "relaxation-study";

  try {
    validate(mp);
  } catch (const std::invalid_argument& e) {
    throw config_error(std::string("relaxation-study: ") + e.what());
  }
  if (n_lo < 1 || n_hi < n_lo)
    throw config_error("relaxation-study: need 1 <= n_lo <= n_hi");
  if (t_end <= 0) throw config_error("relaxation-study: t_end must be positive");
  ensure_dir(out_dir);

  // supersaturated single cell with all three species present; the instant
  // adjustment of the same totals is the target of the stiff limit
  const MoistureCell<double> cell{1.6, 0.25, 0.05, 1.0};
  const double q_t = cell.q_v + cell.q_c + cell.q_r;

  std::ofstream csv = open_out(out_dir, "relaxation.csv");
  csv << "n,rate_scale,q_v_end,q_c_end,q_r_end,err_qv,err_qc,err_max\n";

  std::vector<double> errs;
  for (int n = n_lo; n <= n_hi; ++n) {
    MicrophysicsParams<double> mpn = mp;
    mpn.n = n;
    const double scale = fast_rate_factor(mpn);
    const auto traj = column_relaxation(cell, mpn, t_end, 4);
    const RelaxationSample end = traj.back();
    const AdjustedCell<double> adj = saturation_adjust(q_t, end.q_r, cell.q_vs);
    const double err_qv = std::abs(end.q_v - adj.q_v);
    const double err_qc = std::abs(end.q_c - adj.q_c);
    const double err = std::max(err_qv, err_qc);
    errs.push_back(err);
    csv << n << ',' << num(scale) << ',' << num(end.q_v) << ',' << num(end.q_c) << ','
        << num(end.q_r) << ',' << num(err_qv) << ',' << num(err_qc) << ',' << num(err)
        << "\n";
    sum.metrics.emplace_back("err_n" + std::to_string(n), err);
  }
  if (!csv.flush()) throw io_error("run: failed writing relaxation.csv");
  sum.outputs.push_back("relaxation.csv");

  // monotone decay down to the integrator noise floor
  const double floor = 1e-9;
  double worst = 0;
  for (std::size_t i = 1; i < errs.size(); ++i)
    worst = std::max(worst, errs[i] - std::max(errs[i - 1], floor));
  add_bound(sum, "error_monotone_to_noise_floor", worst, 0.0);
  add_bound(sum, "error_at_n_hi", errs.back(), err_tol);

  sum.runtime_seconds = timer.seconds();
  write_summary(sum, out_dir);
  return sum;
}

ExperimentSummary inversion_verify(const ThermoParams<double>& tp, int nz_max,
                                   const std::string& out_dir) {
  Timer timer;
  ExperimentSummary sum;
  sum.subcommand = "inversion-verify";

  try {
    validate(tp);
  } catch (const std::invalid_argument& e) {
    throw config_error(std::string("inversion-verify: ") + e.what());
  }
  if (nz_max < 32) throw config_error("inversion-verify: nz_max must be at least 32");
  ensure_dir(out_dir);

  const double H = 1e4, Lx = 1e5, Ly = 1e5;
  const double Gamma = 3.0e-3, q0 = 0.01, hq = 3000.0;
  const double N2 = tp.g * Gamma / tp.theta_ref;
  const double h_sc = derived_quantities(tp).h_sc;
  const double L_c = tp.L_ref / tp.c_pd;
  const double kx = 2.0 * M_PI / Lx, ky = 2.0 * M_PI / Ly;
  const double K2 = kx * kx + ky * ky;

  auto grid_of = [&](int n, int nz) {
    Grid<double> g;
    g.nx = n;
    g.ny = n;
    g.nz = nz;
    g.Lx = Lx;
    g.Ly = Ly;
    g.H = H;
    return g;
  };
  auto background = [&](int nz, ProfileFamily family, double qvs0) {
    BackgroundConfig<double> bc;
    bc.family = family;
    bc.nz = nz;
    bc.H = H;
    bc.Gamma_e = Gamma;
    bc.q_vs0 = qvs0;
    bc.h_q = hq;
    if (qvs0 == 0) bc.dq_vs_dz = 0;
    return build_background(bc, tp);
  };
  auto gauge = [](Field3<double>& f) { f.data -= f.data.mean(); };
  auto sup_diff = [](const Field3<double>& a, const Field3<double>& b) {
    return double((a.data - b.data).abs().maxCoeff());
  };

  std::ofstream csv = open_out(out_dir, "convergence.csv");
  csv << "case,nx,ny,nz,error,order\n";

  // 1. exact discrete eigenmode: constant coefficients, solver accuracy only
  double eig_err = 0;
  {
    const Grid<double> g = grid_of(8, 16);
    const BackgroundState<double> bg = background(g.nz, ProfileFamily::boussinesq, 0.0);
    const int m = 3;
    const double sn = std::sin(0.5 * M_PI * m / g.nz);
    const double lam = -4.0 * sn * sn / (g.dz() * g.dz());
    const double sfac = -K2 / tp.f + tp.f * lam / N2;
    Field3<double> phi_star(g, "phi", "m^2 s^-2");
    for (int k = 0; k < g.nz; ++k)
      for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i)
          phi_star(i, j, k) = std::sin(2.0 * M_PI * i / g.nx) *
                              std::cos(2.0 * M_PI * j / g.ny) *
                              std::cos(M_PI * m * (k + 0.5) / g.nz);
    Field3<double> pv = phi_star;
    pv.data *= sfac;
    Field3<double> phi = invert_dry(pv, bg, tp);
    gauge(phi_star);
    eig_err = sup_diff(phi, phi_star) / phi_star.data.abs().maxCoeff();
    csv << "eigenmode," << g.nx << ',' << g.ny << ',' << g.nz << ',' << num(eig_err)
        << ",\n";
  }
  add_bound(sum, "eigenmode_recovery_rel_error", eig_err, 1e-10);

  // 2. vertical second-order convergence of the dry and moist-linear routes
  // against smooth manufactured solutions of the continuous operator
  auto manufactured_error = [&](int nz, bool moist) {
    const int n = std::min(nz, 64);
    const Grid<double> g = grid_of(n, nz);
    const BackgroundState<double> bg = background(nz, ProfileFamily::exponential, moist ? q0 : 0.0);
    auto P = [&](double z) {
      const double d = moist ? Gamma + L_c * q0 / hq * std::exp(-z / hq) : Gamma;
      return (tp.theta_ref / tp.g) / d;
    };
    auto Pp = [&](double z) {
      if (!moist) return 0.0;
      const double d = Gamma + L_c * q0 / hq * std::exp(-z / hq);
      return (tp.theta_ref / tp.g) * (L_c * q0 / (hq * hq)) * std::exp(-z / hq) / (d * d);
    };
    Field3<double> phi_star(g, "phi", "m^2 s^-2"), pv(g, "pv", "s^-1");
    const Field3<double> M(g, "M", "K");
    for (int k = 0; k < nz; ++k) {
      const double z = g.z_center(k);
      const double cz = std::cos(M_PI * z / H), sz = std::sin(M_PI * z / H);
      const double phz = -(M_PI / H) * sz, phzz = -(M_PI / H) * (M_PI / H) * cz;
      for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
          const double tr =
              std::sin(2.0 * M_PI * i / g.nx) * std::cos(2.0 * M_PI * j / g.ny);
          phi_star(i, j, k) = tr * cz;
          pv(i, j, k) = tr * (-K2 / tp.f * cz +
                              tp.f * (Pp(z) * phz + P(z) * phzz - P(z) * phz / h_sc));
        }
    }
    Field3<double> phi =
        moist ? invert_moist_linear(pv, M, bg, tp) : invert_dry(pv, bg, tp);
    gauge(phi_star);
    return sup_diff(phi, phi_star);
  };

  for (const bool moist : {false, true}) {
    std::vector<int> sizes;
    for (int nz = 16; nz <= nz_max; nz *= 2) sizes.push_back(nz);
    std::vector<double> errs;
    double order = 0;
    for (std::size_t i = 0; i < sizes.size(); ++i) {
      errs.push_back(manufactured_error(sizes[i], moist));
      std::ostringstream row;
      row << (moist ? "moist_linear" : "dry") << ',' << std::min(sizes[i], 64) << ','
          << std::min(sizes[i], 64) << ',' << sizes[i] << ',' << num(errs.back()) << ',';
      if (i > 0) {
        order = std::log2(errs[i - 1] / errs[i]);
        row << num(order);
      }
      csv << row.str() << "\n";
    }
    const std::string name = moist ? "moist_vertical_order" : "dry_vertical_order";
    add_bound(sum, name + "_deviation", std::abs(order - 2.0), 0.2);
    sum.metrics.emplace_back(name, order);
  }

  // 3. the moist-linear operator with identity coefficients is the dry one
  double ident = 0;
  {
    const Grid<double> g = grid_of(16, 8);
    const BackgroundState<double> bg = background(g.nz, ProfileFamily::boussinesq, 0.0);
    Field3<double> x(g, "noise", "-");
    for (long p = 0; p < x.data.size(); ++p)
      x.data[p] = 2.0 * rng::uniform01(0x5eedu, p) - 1.0;
    const Field3<double> Ax_dry = apply_dry_operator(x, bg, tp);
    const Field3<double> Ax_ml = apply_moist_linear_operator(x, bg, tp);
    ident = sup_diff(Ax_dry, Ax_ml);
    const Field3<double> pv = Ax_dry;
    const Field3<double> M(g, "M", "K");
    const Field3<double> phi_dry = invert_dry(pv, bg, tp);
    const Field3<double> phi_ml = invert_moist_linear(pv, M, bg, tp);
    ident = std::max(ident, sup_diff(phi_dry, phi_ml));
  }
  add_check(sum, "dry_reduction_identity", ident, 0.0, ident == 0.0);

  if (!csv.flush()) throw io_error("run: failed writing convergence.csv");
  sum.outputs.push_back("convergence.csv");
  sum.metrics.emplace_back("eigenmode_rel_error", eig_err);

  sum.runtime_seconds = timer.seconds();
  write_summary(sum, out_dir);
  return sum;
}

ExperimentSummary cc_tables(const ThermoParams<double>& tp, double epsilon,
                            const std::string& out_dir) {
  Timer timer;
  ExperimentSummary sum;
  sum.subcommand = "cc-tables";

  try {
    validate(tp);
  } catch (const std::invalid_argument& e) {
    throw config_error(std::string("cc-tables: ") + e.what());
  }
  if (!(epsilon > 0 && epsilon < 1))
    throw config_error("cc-tables: epsilon must lie in (0, 1)");
  ensure_dir(out_dir);

  const DerivedQuantities<double> dq = derived_quantities(tp);
  const PiParameters<double> pi = pi_parameters(tp);

  struct Row {
    const char* name;
    double value, reference, tol;
  };
  const Row rows[] = {
      {"rho_ref", dq.rho_ref, 1.25, 0.05},   {"h_sc", dq.h_sc, 11000.0, 0.05},
      {"c_ref", dq.c_ref, 330.0, 0.05},      {"c_int", dq.c_int, 110.0, 0.05},
      {"u_ref", dq.u_ref, 12.0, 0.05},       {"Pi_1", pi.Pi1, 1.6e-3, 0.10},
      {"Pi_2", pi.Pi2, 0.15, 0.10},          {"Pi_3", pi.Pi3, 0.47, 0.10},
  };

  std::ofstream csv = open_out(out_dir, "derived_scales.csv");
  csv << "name,value,reference,rel_err,tol,pass\n";
  for (const Row& r : rows) {
    const double rel = std::abs(r.value - r.reference) / std::abs(r.reference);
    csv << r.name << ',' << num(r.value) << ',' << num(r.reference) << ',' << num(rel)
        << ',' << num(r.tol) << ',' << (rel <= r.tol ? 1 : 0) << "\n";
    add_bound(sum, std::string(r.name) + "_rel_err", rel, r.tol);
    sum.metrics.emplace_back(r.name, r.value);
  }
  if (!csv.flush()) throw io_error("run: failed writing derived_scales.csv");
  sum.outputs.push_back("derived_scales.csv");

  for (const int alpha : {0, 1}) {
    const RegimeReport rep = regime_consistency_report(fit_regime(tp, alpha, epsilon), tp);
    const std::string base = "regime_alpha" + std::to_string(alpha);
    std::ofstream rc = open_out(out_dir, base + ".csv");
    rc << "name,value,assigned_order,prefactor,formal_order,in_band,documented_mismatch\n";
    int out_of_band = 0;
    for (const RegimeRow& r : rep.rows) {
      rc << r.name << ',' << num(r.value) << ',' << r.assigned_order << ','
         << num(r.prefactor) << ',' << r.formal_order << ','
         << (r.prefactor_in_band ? 1 : 0) << ',' << (r.inconsistent ? 1 : 0) << "\n";
      // the sigma combination nearly cancels, so its O(1) assignment leaves a
      // small prefactor by construction; documented order mismatches are
      // likewise reported, not failed
      const bool expected_out = r.inconsistent ||
                                r.name == "(c_pv/c_pd)(R_d/c_pd)-R_v/c_pd";
      if (!r.prefactor_in_band && !expected_out) ++out_of_band;
    }
    rc << "es_ref_over_p_ref," << num(rep.es_ratio) << ',' << (1 + alpha) << ','
       << num(rep.es_prefactor) << ',' << (1 + alpha) << ",1,0\n";
    if (!rc.flush()) throw io_error("run: failed writing " + base + ".csv");
    sum.outputs.push_back(base + ".csv");
    add_bound(sum, base + "_unexpected_out_of_band", double(out_of_band), 0.0);
    sum.metrics.emplace_back(base + "_es_prefactor", rep.es_prefactor);

    std::ofstream txt = open_out(out_dir, base + "_report.txt");
    txt << rep.text();
    sum.outputs.push_back(base + "_report.txt");
  }

  sum.runtime_seconds = timer.seconds();
  write_summary(sum, out_dir);
  return sum;
}

}  // namespace pqg
