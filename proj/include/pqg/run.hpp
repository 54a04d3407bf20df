#ifndef PQG_RUN_HPP
#define PQG_RUN_HPP

// Experiment drivers behind the CLI subcommands. Each driver writes its CSV
// and frame outputs into an output directory plus a machine-readable
// summary.json (pass/fail per check, measured numbers, runtime); the CSV
// column orders and the frame field order are frozen in docs/formats.md.

#include <iosfwd>
#include <string>
#include <vector>

#include "pqg/config.hpp"

namespace pqg {

struct CheckResult {
  std::string name;
  bool pass = false;
  double measured = 0.0;   // the quantity the check constrains
  double threshold = 0.0;  // the bound it is held to
};

struct ExperimentSummary {
  std::string subcommand;
  bool pass = true;  // conjunction of all checks
  double runtime_seconds = 0.0;
  std::vector<CheckResult> checks;
  std::vector<std::pair<std::string, double>> metrics;
  std::vector<std::string> outputs;  // paths relative to the output directory
};

// summary.json writer shared by all drivers. Throws io_error on failure.
void write_summary(const ExperimentSummary& s, const std::string& out_dir);

// Time integration per the config: frames at the output cadence in PQGF
// format, one scalar-diagnostics CSV row per output time (t_end = 0 gives
// the initial state only), positivity and clipped-mass checks in the summary.
// dt <= 0 selects automatic CFL-targeted steps. Numerical failures propagate.
ExperimentSummary run_experiment(const RunConfig& cfg, const std::string& out_dir,
                                 std::ostream* log = nullptr);

// 0-D condensation relaxation versus instantaneous saturation adjustment on
// the standard supersaturated cell, for rescaling exponents n_lo..n_hi.
// Checks: end-state error monotone (above the ODE noise floor) and below
// err_tol at n_hi.
ExperimentSummary relaxation_study(const MicrophysicsParams<double>& mp, double t_end,
                                   int n_lo, int n_hi, double err_tol,
                                   const std::string& out_dir);

// Manufactured-solution verification of the PV inversions: discrete-eigenmode
// recovery at solver accuracy, vertical second-order convergence with
// variable coefficients (dry and moist-linear routes), and the dry-reduction
// identity of the moist operator.
ExperimentSummary inversion_verify(const ThermoParams<double>& tp, int nz_max,
                                   const std::string& out_dir);

// Derived reference scales and the regime prefactor reports for both alpha
// selectors, checked against the documented reference magnitudes.
ExperimentSummary cc_tables(const ThermoParams<double>& tp, double epsilon,
                            const std::string& out_dir);

}  // namespace pqg

#endif  // PQG_RUN_HPP
