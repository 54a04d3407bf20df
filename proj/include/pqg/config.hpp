#ifndef PQG_CONFIG_HPP
#define PQG_CONFIG_HPP

// Run configuration: one JSON document with seven blocks (thermo, regime,
// background, microphysics, grid, dynamics, solver), every key optional with
// the defaults below, unknown keys rejected. parse_config applies defaults,
// validates the assembled record, and reports problems with the full key
// path; serialize_config writes a document that parses back to the same
// configuration (semantic round trip). The schema is frozen in
// docs/formats.md.

#include <cstdint>
#include <string>

#include "pqg/background.hpp"
#include "pqg/dynamics.hpp"
#include "pqg/errors.hpp"
#include "pqg/grid.hpp"
#include "pqg/inversion.hpp"
#include "pqg/microphysics.hpp"
#include "pqg/thermo.hpp"

namespace pqg {

struct RegimeBlock {
  int alpha = 0;          // regime selector, 0 or 1
  double epsilon = 0.1;   // expansion parameter for the scaling report
};

struct DynamicsBlock {
  Variant variant = Variant::continuous;
  double dt = 0.0;           // step [s]; <= 0 selects automatic CFL-based steps
  double t_end = 0.0;        // integration horizon [s]
  double output_every = 0.0; // output cadence [s]; <= 0 means start and end only
  std::uint64_t seed = 1;
  double cfl_max = 0.5;
  double cond_scale = 1.0;   // condensation/nucleation rate multiplier
  bool lagged_mask = false;
  InitialCondition ic;       // ic.seed is overridden by the seed above
};

struct SolverBlock {
  double lambda_qvs = 0.0;
  int max_iter = 50;
  double mask_tol = 1e-12;
  double cg_tol = 1e-12;
  int cg_max_iter = 4000;
};

struct RunConfig {
  ThermoParams<double> thermo;
  RegimeBlock regime;
  BackgroundConfig<double> background;  // nz and H are taken from the grid block
  MicrophysicsParams<double> microphysics;
  Grid<double> grid;
  DynamicsBlock dynamics;
  SolverBlock solver;
};

// Parse + validate. Throws config_error naming the offending key path (or the
// parse position for malformed documents).
RunConfig parse_config(const std::string& path);
RunConfig parse_config_text(const std::string& text);

// Validation only (defaults are valid). Throws config_error.
void validate_config(const RunConfig& cfg);

// Serialization; serialize_config(parse_config(x)) parses to the same record.
std::string serialize_config(const RunConfig& cfg);
void write_config(const RunConfig& cfg, const std::string& path);

// Assembled option records for the dynamics core.
DynamicsOptions dynamics_options(const RunConfig& cfg);
InitialCondition initial_condition(const RunConfig& cfg);

const char* to_string(Variant v);
const char* to_string(ProfileFamily f);
const char* to_string(ICFamily f);

}  // namespace pqg

#endif  // PQG_CONFIG_HPP
