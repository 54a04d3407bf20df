#include <cstdio>
#include <fstream>
#include <string>

#include "doctest.h"
#include "pqg/config.hpp"

using pqg::config_error;
using pqg::RunConfig;

namespace {

const char* kMinimal = R"({
  "grid": {"nx": 16, "ny": 16, "nz": 8, "Lx": 1e5, "Ly": 1e5, "H": 1e4},
  "dynamics": {"variant": "fast"}
})";

std::string message_of(const std::string& text) {
  try {
    pqg::parse_config_text(text);
  } catch (const config_error& e) {
    return e.what();
  }
  return "";
}

// full config exercising every block and a non-default in each
const char* kFull = R"({
  "thermo": {"DeltaTheta": 35.0, "f": 1.2e-4},
  "regime": {"alpha": 1, "epsilon": 0.05},
  "background": {"family": "exponential", "Gamma_e": 2.5e-3, "q_vs0": 0.008, "h_q": 2500},
  "microphysics": {"C_cd": 0.9, "n": 3, "epsilon": 0.05},
  "grid": {"nx": 8, "ny": 16, "nz": 4, "Lx": 2e5, "Ly": 3e5, "H": 9e3},
  "dynamics": {
    "variant": "continuous",
    "dt": 25.0,
    "t_end": 100.0,
    "output_every": 50.0,
    "seed": 42,
    "cfl_max": 0.4,
    "cond_scale": 2.0,
    "lagged_mask": true,
    "ic": {"family": "zonal_jet", "pv_amp": 2e-6, "perturb": 0.05, "M_offset": 0.3}
  },
  "solver": {"max_iter": 80, "mask_tol": 1e-11}
})";

}  // namespace

TEST_CASE("config: minimal document applies defaults") {
  const RunConfig cfg = pqg::parse_config_text(kMinimal);
  CHECK(cfg.grid.nx == 16);
  CHECK(cfg.grid.H == 1e4);
  CHECK(cfg.dynamics.variant == pqg::Variant::fast);
  // defaults everywhere else
  CHECK(cfg.thermo.R_d == 287.0);
  CHECK(cfg.regime.alpha == 0);
  CHECK(cfg.regime.epsilon == 0.1);
  CHECK(cfg.microphysics.C_cd == 0.7);
  CHECK(cfg.dynamics.dt == 0.0);
  CHECK(cfg.dynamics.seed == 1);
  CHECK(cfg.solver.max_iter == 50);
  // blocks tied to the grid are synchronized
  CHECK(cfg.background.nz == 8);
  CHECK(cfg.background.H == 1e4);
  CHECK(cfg.dynamics.ic.seed == cfg.dynamics.seed);
}

TEST_CASE("config: serialize-parse round-trip is semantically idempotent") {
  const RunConfig a = pqg::parse_config_text(kFull);
  const std::string text = pqg::serialize_config(a);
  const RunConfig b = pqg::parse_config_text(text);

  CHECK(b.thermo.DeltaTheta == a.thermo.DeltaTheta);
  CHECK(b.thermo.f == a.thermo.f);
  CHECK(b.regime.alpha == 1);
  CHECK(b.regime.epsilon == 0.05);
  CHECK(b.background.family == pqg::ProfileFamily::exponential);
  CHECK(b.background.Gamma_e == a.background.Gamma_e);
  CHECK(b.background.q_vs0 == a.background.q_vs0);
  CHECK(b.background.h_q == a.background.h_q);
  CHECK(b.microphysics.C_cd == 0.9);
  CHECK(b.microphysics.n == 3);
  CHECK(b.grid.nx == 8);
  CHECK(b.grid.ny == 16);
  CHECK(b.grid.Ly == 3e5);
  CHECK(b.dynamics.variant == pqg::Variant::continuous);
  CHECK(b.dynamics.dt == 25.0);
  CHECK(b.dynamics.output_every == 50.0);
  CHECK(b.dynamics.seed == 42);
  CHECK(b.dynamics.cfl_max == 0.4);
  CHECK(b.dynamics.cond_scale == 2.0);
  CHECK(b.dynamics.lagged_mask == true);
  CHECK(b.dynamics.ic.family == pqg::ICFamily::zonal_jet);
  CHECK(b.dynamics.ic.pv_amp == 2e-6);
  CHECK(b.dynamics.ic.M_offset == 0.3);
  CHECK(b.solver.max_iter == 80);
  CHECK(b.solver.mask_tol == 1e-11);

  // a second round trip reproduces the text exactly
  CHECK(pqg::serialize_config(b) == text);
}

TEST_CASE("config: tabulated background tables survive the round trip") {
  const char* text = R"({
    "grid": {"nx": 8, "ny": 8, "nz": 4, "Lx": 1e5, "Ly": 1e5, "H": 1e4},
    "background": {
      "family": "tabulated",
      "tab_rho": {"z": [0, 5000, 10000], "v": [1.2, 0.7, 0.4]},
      "tab_theta_e": {"z": [0, 10000], "v": [300, 330]},
      "tab_q_vs": {"z": [0, 10000], "v": [0.01, 0.001]},
      "tab_theta": {"z": [0, 10000], "v": [300, 325]}
    }
  })";
  const RunConfig a = pqg::parse_config_text(text);
  const RunConfig b = pqg::parse_config_text(pqg::serialize_config(a));
  CHECK(b.background.family == pqg::ProfileFamily::tabulated);
  REQUIRE(b.background.tab_rho.z.size() == 3);
  CHECK(b.background.tab_rho.v[1] == 0.7);
  CHECK(b.background.tab_theta_e.v[1] == 330);
  CHECK(b.background.tab_q_vs.v[0] == 0.01);
  CHECK(b.background.tab_theta.v[1] == 325);
}

TEST_CASE("config: rejections name the offending key") {
  SUBCASE("regime selector out of range") {
    const std::string m = message_of(R"({
      "grid": {"nx": 8, "ny": 8, "nz": 4, "Lx": 1e5, "Ly": 1e5, "H": 1e4},
      "regime": {"alpha": 2}
    })");
    CHECK(m.find("regime.alpha") != std::string::npos);
    CHECK(m.find("must be 0 or 1") != std::string::npos);
  }

  SUBCASE("unstable background profile names the invariant") {
    const std::string m = message_of(R"({
      "grid": {"nx": 8, "ny": 8, "nz": 4, "Lx": 1e5, "Ly": 1e5, "H": 1e4},
      "background": {"family": "exponential", "Gamma_e": -1e-3, "q_vs0": 0.0}
    })");
    CHECK(m.find("stability") != std::string::npos);
    CHECK(m.find("theta_e_bar") != std::string::npos);
  }

  SUBCASE("unknown key carries the full path") {
    const std::string m = message_of(R"({
      "grid": {"nx": 8, "ny": 8, "nz": 4, "Lx": 1e5, "Ly": 1e5, "H": 1e4},
      "dynamics": {"ic": {"family": "vortex", "radius": 0.2}}
    })");
    CHECK(m.find("dynamics.ic.radius") != std::string::npos);
    CHECK(m.find("unknown") != std::string::npos);
  }

  SUBCASE("unknown block is rejected") {
    const std::string m = message_of(R"({
      "grid": {"nx": 8, "ny": 8, "nz": 4, "Lx": 1e5, "Ly": 1e5, "H": 1e4},
      "forcing": {}
    })");
    CHECK(m.find("forcing") != std::string::npos);
  }

  SUBCASE("wrong type names the key") {
    const std::string m = message_of(R"({
      "grid": {"nx": "eight", "ny": 8, "nz": 4, "Lx": 1e5, "Ly": 1e5, "H": 1e4}
    })");
    CHECK(m.find("grid.nx") != std::string::npos);
  }

  SUBCASE("bad enum value lists the alternatives") {
    const std::string m = message_of(R"({
      "grid": {"nx": 8, "ny": 8, "nz": 4, "Lx": 1e5, "Ly": 1e5, "H": 1e4},
      "dynamics": {"variant": "implicit"}
    })");
    CHECK(m.find("dynamics.variant") != std::string::npos);
    CHECK(m.find("continuous") != std::string::npos);
    CHECK(m.find("fast") != std::string::npos);
  }

  SUBCASE("background nz/H come from the grid, not the block") {
    const std::string m = message_of(R"({
      "grid": {"nx": 8, "ny": 8, "nz": 4, "Lx": 1e5, "Ly": 1e5, "H": 1e4},
      "background": {"nz": 16}
    })");
    CHECK(m.find("background.nz") != std::string::npos);
    CHECK(m.find("grid") != std::string::npos);
  }
}

TEST_CASE("config: malformed document reports line and column") {
  const std::string m = message_of("{\n  \"grid\": {\"nx\": 8,,}\n}");
  CHECK(m.find("config:") != std::string::npos);
  // nlohmann's parse error carries the line/column position
  CHECK(m.find("line") != std::string::npos);
  CHECK(m.find("column") != std::string::npos);
}

TEST_CASE("config: missing file raises a config error") {
  CHECK_THROWS_AS(pqg::parse_config("/nonexistent/path/to.json"), config_error);
}

TEST_CASE("config: file round trip") {
  const RunConfig a = pqg::parse_config_text(kFull);
  const std::string path = "test_config_roundtrip.json";
  pqg::write_config(a, path);
  const RunConfig b = pqg::parse_config(path);
  CHECK(pqg::serialize_config(b) == pqg::serialize_config(a));
  std::remove(path.c_str());
}

TEST_CASE("config: dynamics options and initial condition mirror the blocks") {
  const RunConfig cfg = pqg::parse_config_text(kFull);
  const pqg::DynamicsOptions opts = pqg::dynamics_options(cfg);
  CHECK(opts.cond_scale == 2.0);
  CHECK(opts.cfl_max == 0.4);
  CHECK(opts.lagged_mask == true);
  CHECK(opts.inversion.max_iter == 80);
  CHECK(opts.inversion.mask_tol == 1e-11);

  const pqg::InitialCondition ic = pqg::initial_condition(cfg);
  CHECK(ic.family == pqg::ICFamily::zonal_jet);
  CHECK(ic.seed == 42);
  CHECK(ic.pv_amp == 2e-6);
}
