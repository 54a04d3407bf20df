// pqg: numerical laboratory for the precipitating quasi-geostrophic model
// family. Subcommands run experiments and write CSV/frame outputs plus a
// machine-readable summary.json; exit code 0 = all checks pass, 2 = config
// error, 3 = numerical or I/O failure.

#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "pqg/run.hpp"

namespace {

void print_summary(const pqg::ExperimentSummary& s, const std::string& out_dir) {
  for (const pqg::CheckResult& c : s.checks)
    std::cout << (c.pass ? "PASS" : "FAIL") << "  " << c.name
              << "  measured=" << c.measured << " threshold=" << c.threshold << "\n";
  std::cout << s.subcommand << ": " << (s.pass ? "pass" : "FAIL") << " ("
            << s.runtime_seconds << " s, outputs in " << out_dir << ")\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"pqg: precipitating quasi-geostrophic laboratory"};
  app.require_subcommand(1);

  // run
  std::string run_config, run_out = "out";
  std::uint64_t run_seed = 0;
  bool run_has_seed = false;
  std::string run_variant;
  double run_t_end = -1, run_dt = -1, run_output_every = -1;
  bool run_verbose = false;
  CLI::App* cmd_run = app.add_subcommand("run", "time integration per a config file");
  cmd_run->add_option("--config", run_config, "config file (JSON)")
      ->required()
      ->check(CLI::ExistingFile);
  cmd_run->add_option("--out", run_out, "output directory (default: out)");
  cmd_run->add_option("--seed", run_seed, "override dynamics.seed")
      ->each([&](const std::string&) { run_has_seed = true; });
  cmd_run->add_option("--variant", run_variant, "override dynamics.variant")
      ->check(CLI::IsMember({"continuous", "fast"}));
  cmd_run->add_option("--t-end", run_t_end, "override dynamics.t_end [s]");
  cmd_run->add_option("--dt", run_dt, "override dynamics.dt [s] (0 = automatic)");
  cmd_run->add_option("--output-every", run_output_every,
                      "override dynamics.output_every [s]");
  cmd_run->add_flag("--verbose", run_verbose, "per-frame progress on stderr");

  // relaxation-study
  std::string rs_config, rs_out = "out";
  double rs_t_end = 3.0, rs_err_tol = 1e-3, rs_epsilon = -1;
  int rs_n_lo = 1, rs_n_hi = 6;
  CLI::App* cmd_rs = app.add_subcommand(
      "relaxation-study",
      "0-D stiff-relaxation error vs instant adjustment, n = n_lo..n_hi");
  cmd_rs->add_option("--config", rs_config, "config file for the microphysics block")
      ->check(CLI::ExistingFile);
  cmd_rs->add_option("--out", rs_out, "output directory (default: out)");
  cmd_rs->add_option("--t-end", rs_t_end, "relaxation horizon [s] (default: 3)");
  cmd_rs->add_option("--n-lo", rs_n_lo, "smallest rate exponent (default: 1)");
  cmd_rs->add_option("--n-hi", rs_n_hi, "largest rate exponent (default: 6)");
  cmd_rs->add_option("--err-tol", rs_err_tol, "error bound at n_hi (default: 1e-3)");
  cmd_rs->add_option("--epsilon", rs_epsilon, "override microphysics.epsilon");

  // inversion-verify
  std::string iv_config, iv_out = "out";
  int iv_nz_max = 64;
  CLI::App* cmd_iv = app.add_subcommand(
      "inversion-verify", "manufactured-solution verification of the PV inversions");
  cmd_iv->add_option("--config", iv_config, "config file for the thermo block")
      ->check(CLI::ExistingFile);
  cmd_iv->add_option("--out", iv_out, "output directory (default: out)");
  cmd_iv->add_option("--nz-max", iv_nz_max, "finest vertical resolution (default: 64)");

  // cc-tables
  std::string cc_config, cc_out = "out";
  double cc_epsilon = -1;
  CLI::App* cmd_cc = app.add_subcommand(
      "cc-tables", "derived scales and regime prefactor reports");
  cmd_cc->add_option("--config", cc_config, "config file for the thermo/regime blocks")
      ->check(CLI::ExistingFile);
  cmd_cc->add_option("--out", cc_out, "output directory (default: out)");
  cmd_cc->add_option("--epsilon", cc_epsilon, "override regime.epsilon");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);  // prints help or the parse error
    return rc == 0 ? 0 : 2;     // malformed command line is a config error
  }

  try {
    pqg::ExperimentSummary sum;
    std::string out_dir;
    if (cmd_run->parsed()) {
      pqg::RunConfig cfg = pqg::parse_config(run_config);
      if (run_has_seed) cfg.dynamics.seed = run_seed;
      if (!run_variant.empty())
        cfg.dynamics.variant =
            run_variant == "fast" ? pqg::Variant::fast : pqg::Variant::continuous;
      if (run_t_end >= 0) cfg.dynamics.t_end = run_t_end;
      if (run_dt >= 0) cfg.dynamics.dt = run_dt;
      if (run_output_every >= 0) cfg.dynamics.output_every = run_output_every;
      out_dir = run_out;
      sum = pqg::run_experiment(cfg, out_dir, run_verbose ? &std::cerr : nullptr);
    } else if (cmd_rs->parsed()) {
      pqg::MicrophysicsParams<double> mp;
      if (!rs_config.empty()) mp = pqg::parse_config(rs_config).microphysics;
      if (rs_epsilon > 0) mp.epsilon = rs_epsilon;
      out_dir = rs_out;
      sum = pqg::relaxation_study(mp, rs_t_end, rs_n_lo, rs_n_hi, rs_err_tol, out_dir);
    } else if (cmd_iv->parsed()) {
      pqg::ThermoParams<double> tp;
      if (!iv_config.empty()) tp = pqg::parse_config(iv_config).thermo;
      out_dir = iv_out;
      sum = pqg::inversion_verify(tp, iv_nz_max, out_dir);
    } else {
      pqg::ThermoParams<double> tp;
      double eps = 0.1;
      if (!cc_config.empty()) {
        const pqg::RunConfig cfg = pqg::parse_config(cc_config);
        tp = cfg.thermo;
        eps = cfg.regime.epsilon;
      }
      if (cc_epsilon > 0) eps = cc_epsilon;
      out_dir = cc_out;
      sum = pqg::cc_tables(tp, eps, out_dir);
    }
    print_summary(sum, out_dir);
    return sum.pass ? 0 : 3;
  } catch (const pqg::config_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}
