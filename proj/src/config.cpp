#include "pqg/config.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"

namespace pqg {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

[[noreturn]] void bad(const std::string& path, const std::string& what) {
  throw config_error("config: " + path + ": " + what);
}

double as_num(const json& v, const std::string& path) {
  if (!v.is_number()) bad(path, "expected a number");
  return v.get<double>();
}

int as_int(const json& v, const std::string& path) {
  if (!v.is_number_integer()) bad(path, "expected an integer");
  return v.get<int>();
}

std::uint64_t as_u64(const json& v, const std::string& path) {
  if (!(v.is_number_unsigned() || (v.is_number_integer() && v.get<long long>() >= 0)))
    bad(path, "expected a nonnegative integer");
  return v.get<std::uint64_t>();
}

bool as_bool(const json& v, const std::string& path) {
  if (!v.is_boolean()) bad(path, "expected true or false");
  return v.get<bool>();
}

std::string as_str(const json& v, const std::string& path) {
  if (!v.is_string()) bad(path, "expected a string");
  return v.get<std::string>();
}

const json& as_obj(const json& v, const std::string& path) {
  if (!v.is_object()) bad(path, "expected an object");
  return v;
}

Variant parse_variant(const json& v, const std::string& path) {
  const std::string s = as_str(v, path);
  if (s == "continuous") return Variant::continuous;
  if (s == "fast") return Variant::fast;
  bad(path, "expected \"continuous\" or \"fast\", got \"" + s + "\"");
}

ProfileFamily parse_family(const json& v, const std::string& path) {
  const std::string s = as_str(v, path);
  if (s == "exponential") return ProfileFamily::exponential;
  if (s == "boussinesq") return ProfileFamily::boussinesq;
  if (s == "tabulated") return ProfileFamily::tabulated;
  bad(path, "expected \"exponential\", \"boussinesq\" or \"tabulated\", got \"" + s + "\"");
}

ICFamily parse_ic_family(const json& v, const std::string& path) {
  const std::string s = as_str(v, path);
  if (s == "random_spectrum") return ICFamily::random_spectrum;
  if (s == "zonal_jet") return ICFamily::zonal_jet;
  if (s == "vortex") return ICFamily::vortex;
  bad(path, "expected \"random_spectrum\", \"zonal_jet\" or \"vortex\", got \"" + s + "\"");
}

ProfileTable<double> parse_table(const json& v, const std::string& path) {
  const json& o = as_obj(v, path);
  ProfileTable<double> t;
  for (const auto& [key, val] : o.items()) {
    if (key != "z" && key != "v") bad(path + "." + key, "unknown key");
    if (!val.is_array()) bad(path + "." + key, "expected an array of numbers");
    std::vector<double>& dst = key == "z" ? t.z : t.v;
    for (std::size_t i = 0; i < val.size(); ++i)
      dst.push_back(as_num(val[i], path + "." + key + "[" + std::to_string(i) + "]"));
  }
  if (t.z.size() != t.v.size()) bad(path, "z and v must have equal length");
  return t;
}

void parse_thermo(const json& o, ThermoParams<double>& p, const std::string& path) {
  for (const auto& [key, v] : o.items()) {
    const std::string kp = path + "." + key;
    if (key == "R_d") p.R_d = as_num(v, kp);
    else if (key == "R_v") p.R_v = as_num(v, kp);
    else if (key == "c_pd") p.c_pd = as_num(v, kp);
    else if (key == "c_pv") p.c_pv = as_num(v, kp);
    else if (key == "c_l") p.c_l = as_num(v, kp);
    else if (key == "L_ref") p.L_ref = as_num(v, kp);
    else if (key == "T_ref") p.T_ref = as_num(v, kp);
    else if (key == "p_ref") p.p_ref = as_num(v, kp);
    else if (key == "es_ref") p.es_ref = as_num(v, kp);
    else if (key == "g") p.g = as_num(v, kp);
    else if (key == "a") p.a = as_num(v, kp);
    else if (key == "Omega") p.Omega = as_num(v, kp);
    else if (key == "DeltaTheta") p.DeltaTheta = as_num(v, kp);
    else if (key == "f") p.f = as_num(v, kp);
    else if (key == "beta") p.beta = as_num(v, kp);
    else if (key == "theta_ref") p.theta_ref = as_num(v, kp);
    else bad(kp, "unknown key");
  }
}

void parse_regime(const json& o, RegimeBlock& r, const std::string& path) {
  for (const auto& [key, v] : o.items()) {
    const std::string kp = path + "." + key;
    if (key == "alpha") r.alpha = as_int(v, kp);
    else if (key == "epsilon") r.epsilon = as_num(v, kp);
    else bad(kp, "unknown key");
  }
}

void parse_background(const json& o, BackgroundConfig<double>& b, const std::string& path) {
  for (const auto& [key, v] : o.items()) {
    const std::string kp = path + "." + key;
    if (key == "family") b.family = parse_family(v, kp);
    else if (key == "theta_e0") b.theta_e0 = as_num(v, kp);
    else if (key == "Gamma_e") b.Gamma_e = as_num(v, kp);
    else if (key == "q_vs0") b.q_vs0 = as_num(v, kp);
    else if (key == "h_q") b.h_q = as_num(v, kp);
    else if (key == "dq_vs_dz") b.dq_vs_dz = as_num(v, kp);
    else if (key == "tab_rho") b.tab_rho = parse_table(v, kp);
    else if (key == "tab_theta_e") b.tab_theta_e = parse_table(v, kp);
    else if (key == "tab_q_vs") b.tab_q_vs = parse_table(v, kp);
    else if (key == "tab_theta") b.tab_theta = parse_table(v, kp);
    else bad(kp, "unknown key (nz and H come from the grid block)");
  }
}

void parse_microphysics(const json& o, MicrophysicsParams<double>& m, const std::string& path) {
  for (const auto& [key, v] : o.items()) {
    const std::string kp = path + "." + key;
    if (key == "C_ev") m.C_ev = as_num(v, kp);
    else if (key == "C_cn") m.C_cn = as_num(v, kp);
    else if (key == "C_cd") m.C_cd = as_num(v, kp);
    else if (key == "C_ac") m.C_ac = as_num(v, kp);
    else if (key == "C_cr") m.C_cr = as_num(v, kp);
    else if (key == "q_cn") m.q_cn = as_num(v, kp);
    else if (key == "q_ac") m.q_ac = as_num(v, kp);
    else if (key == "V_r") m.V_r = as_num(v, kp);
    else if (key == "n") m.n = as_int(v, kp);
    else if (key == "epsilon") m.epsilon = as_num(v, kp);
    else bad(kp, "unknown key");
  }
}

void parse_grid(const json& o, Grid<double>& g, const std::string& path) {
  for (const auto& [key, v] : o.items()) {
    const std::string kp = path + "." + key;
    if (key == "nx") g.nx = as_int(v, kp);
    else if (key == "ny") g.ny = as_int(v, kp);
    else if (key == "nz") g.nz = as_int(v, kp);
    else if (key == "Lx") g.Lx = as_num(v, kp);
    else if (key == "Ly") g.Ly = as_num(v, kp);
    else if (key == "H") g.H = as_num(v, kp);
    else bad(kp, "unknown key");
  }
}

void parse_ic(const json& o, InitialCondition& ic, const std::string& path) {
  for (const auto& [key, v] : o.items()) {
    const std::string kp = path + "." + key;
    if (key == "family") ic.family = parse_ic_family(v, kp);
    else if (key == "pv_amp") ic.pv_amp = as_num(v, kp);
    else if (key == "k_peak") ic.k_peak = as_num(v, kp);
    else if (key == "vertical_modes") ic.vertical_modes = as_int(v, kp);
    else if (key == "vortex_radius") ic.vortex_radius = as_num(v, kp);
    else if (key == "perturb") ic.perturb = as_num(v, kp);
    else if (key == "M_offset") ic.M_offset = as_num(v, kp);
    else if (key == "M_amp") ic.M_amp = as_num(v, kp);
    else bad(kp, "unknown key");
  }
}

void parse_dynamics(const json& o, DynamicsBlock& d, const std::string& path) {
  for (const auto& [key, v] : o.items()) {
    const std::string kp = path + "." + key;
    if (key == "variant") d.variant = parse_variant(v, kp);
    else if (key == "dt") d.dt = as_num(v, kp);
    else if (key == "t_end") d.t_end = as_num(v, kp);
    else if (key == "output_every") d.output_every = as_num(v, kp);
    else if (key == "seed") d.seed = as_u64(v, kp);
    else if (key == "cfl_max") d.cfl_max = as_num(v, kp);
    else if (key == "cond_scale") d.cond_scale = as_num(v, kp);
    else if (key == "lagged_mask") d.lagged_mask = as_bool(v, kp);
    else if (key == "ic") parse_ic(as_obj(v, kp), d.ic, kp);
    else bad(kp, "unknown key");
  }
}

void parse_solver(const json& o, SolverBlock& s, const std::string& path) {
  for (const auto& [key, v] : o.items()) {
    const std::string kp = path + "." + key;
    if (key == "lambda_qvs") s.lambda_qvs = as_num(v, kp);
    else if (key == "max_iter") s.max_iter = as_int(v, kp);
    else if (key == "mask_tol") s.mask_tol = as_num(v, kp);
    else if (key == "cg_tol") s.cg_tol = as_num(v, kp);
    else if (key == "cg_max_iter") s.cg_max_iter = as_int(v, kp);
    else bad(kp, "unknown key");
  }
}

ordered_json table_json(const ProfileTable<double>& t) {
  return ordered_json{{"z", t.z}, {"v", t.v}};
}

}  // namespace

RunConfig parse_config_text(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw config_error(std::string("config: ") + e.what());
  }
  if (!doc.is_object()) throw config_error("config: top level must be an object");

  RunConfig cfg;
  for (const auto& [key, v] : doc.items()) {
    if (key == "thermo") parse_thermo(as_obj(v, key), cfg.thermo, key);
    else if (key == "regime") parse_regime(as_obj(v, key), cfg.regime, key);
    else if (key == "background") parse_background(as_obj(v, key), cfg.background, key);
    else if (key == "microphysics") parse_microphysics(as_obj(v, key), cfg.microphysics, key);
    else if (key == "grid") parse_grid(as_obj(v, key), cfg.grid, key);
    else if (key == "dynamics") parse_dynamics(as_obj(v, key), cfg.dynamics, key);
    else if (key == "solver") parse_solver(as_obj(v, key), cfg.solver, key);
    else bad(key, "unknown block");
  }
  cfg.background.nz = cfg.grid.nz;
  cfg.background.H = cfg.grid.H;
  cfg.dynamics.ic.seed = cfg.dynamics.seed;
  validate_config(cfg);
  return cfg;
}

RunConfig parse_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw config_error("config: cannot read '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

void validate_config(const RunConfig& cfg) {
  try {
    validate(cfg.thermo);
  } catch (const std::invalid_argument& e) {
    bad("thermo", e.what());
  }
  if (cfg.regime.alpha != 0 && cfg.regime.alpha != 1)
    bad("regime.alpha", "regime selector must be 0 or 1");
  if (!(cfg.regime.epsilon > 0.0 && cfg.regime.epsilon < 1.0))
    bad("regime.epsilon", "must be in (0, 1)");
  try {
    validate(cfg.grid);
  } catch (const std::invalid_argument& e) {
    bad("grid", e.what());
  }
  try {
    validate(cfg.microphysics);
  } catch (const std::invalid_argument& e) {
    bad("microphysics", e.what());
  }
  // building the background enforces the stability and moisture invariants
  BackgroundConfig<double> bc = cfg.background;
  bc.nz = cfg.grid.nz;
  bc.H = cfg.grid.H;
  try {
    build_background(bc, cfg.thermo);
  } catch (const config_error&) {
    throw;  // already carries the "background:" prefix
  } catch (const std::exception& e) {
    bad("background", e.what());
  }

  const DynamicsBlock& d = cfg.dynamics;
  if (!(d.t_end >= 0.0)) bad("dynamics.t_end", "must be >= 0");
  if (!(d.cfl_max > 0.0)) bad("dynamics.cfl_max", "must be > 0");
  if (!(d.cond_scale > 0.0)) bad("dynamics.cond_scale", "must be > 0");
  if (!(d.ic.pv_amp >= 0.0)) bad("dynamics.ic.pv_amp", "must be >= 0");
  if (!(d.ic.k_peak > 0.0)) bad("dynamics.ic.k_peak", "must be > 0");
  if (d.ic.vertical_modes < 0) bad("dynamics.ic.vertical_modes", "must be >= 0");
  if (!(d.ic.vortex_radius > 0.0)) bad("dynamics.ic.vortex_radius", "must be > 0");

  const SolverBlock& s = cfg.solver;
  if (!(s.lambda_qvs >= 0.0)) bad("solver.lambda_qvs", "must be >= 0");
  if (s.max_iter < 1) bad("solver.max_iter", "must be >= 1");
  if (!(s.mask_tol >= 0.0)) bad("solver.mask_tol", "must be >= 0");
  if (!(s.cg_tol > 0.0)) bad("solver.cg_tol", "must be > 0");
  if (s.cg_max_iter < 1) bad("solver.cg_max_iter", "must be >= 1");
}

std::string serialize_config(const RunConfig& cfg) {
  const ThermoParams<double>& p = cfg.thermo;
  const BackgroundConfig<double>& b = cfg.background;
  const MicrophysicsParams<double>& m = cfg.microphysics;
  const DynamicsBlock& d = cfg.dynamics;
  const SolverBlock& s = cfg.solver;

  ordered_json bg{{"family", to_string(b.family)}, {"theta_e0", b.theta_e0},
                  {"Gamma_e", b.Gamma_e},          {"q_vs0", b.q_vs0},
                  {"h_q", b.h_q},                  {"dq_vs_dz", b.dq_vs_dz}};
  if (b.family == ProfileFamily::tabulated) {
    bg["tab_rho"] = table_json(b.tab_rho);
    bg["tab_theta_e"] = table_json(b.tab_theta_e);
    bg["tab_q_vs"] = table_json(b.tab_q_vs);
    if (!b.tab_theta.z.empty()) bg["tab_theta"] = table_json(b.tab_theta);
  }

  ordered_json doc{
      {"thermo",
       {{"R_d", p.R_d}, {"R_v", p.R_v}, {"c_pd", p.c_pd}, {"c_pv", p.c_pv},
        {"c_l", p.c_l}, {"L_ref", p.L_ref}, {"T_ref", p.T_ref}, {"p_ref", p.p_ref},
        {"es_ref", p.es_ref}, {"g", p.g}, {"a", p.a}, {"Omega", p.Omega},
        {"DeltaTheta", p.DeltaTheta}, {"f", p.f}, {"beta", p.beta},
        {"theta_ref", p.theta_ref}}},
      {"regime", {{"alpha", cfg.regime.alpha}, {"epsilon", cfg.regime.epsilon}}},
      {"background", bg},
      {"microphysics",
       {{"C_ev", m.C_ev}, {"C_cn", m.C_cn}, {"C_cd", m.C_cd}, {"C_ac", m.C_ac},
        {"C_cr", m.C_cr}, {"q_cn", m.q_cn}, {"q_ac", m.q_ac}, {"V_r", m.V_r},
        {"n", m.n}, {"epsilon", m.epsilon}}},
      {"grid",
       {{"nx", cfg.grid.nx}, {"ny", cfg.grid.ny}, {"nz", cfg.grid.nz},
        {"Lx", cfg.grid.Lx}, {"Ly", cfg.grid.Ly}, {"H", cfg.grid.H}}},
      {"dynamics",
       {{"variant", to_string(d.variant)}, {"dt", d.dt}, {"t_end", d.t_end},
        {"output_every", d.output_every}, {"seed", d.seed}, {"cfl_max", d.cfl_max},
        {"cond_scale", d.cond_scale}, {"lagged_mask", d.lagged_mask},
        {"ic",
         {{"family", to_string(d.ic.family)}, {"pv_amp", d.ic.pv_amp},
          {"k_peak", d.ic.k_peak}, {"vertical_modes", d.ic.vertical_modes},
          {"vortex_radius", d.ic.vortex_radius}, {"perturb", d.ic.perturb},
          {"M_offset", d.ic.M_offset}, {"M_amp", d.ic.M_amp}}}}},
      {"solver",
       {{"lambda_qvs", s.lambda_qvs}, {"max_iter", s.max_iter}, {"mask_tol", s.mask_tol},
        {"cg_tol", s.cg_tol}, {"cg_max_iter", s.cg_max_iter}}}};
  return doc.dump(2) + "\n";
}

void write_config(const RunConfig& cfg, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw io_error("config: cannot write '" + path + "'");
  out << serialize_config(cfg);
  if (!out) throw io_error("config: write failed for '" + path + "'");
}

DynamicsOptions dynamics_options(const RunConfig& cfg) {
  DynamicsOptions o;
  o.inversion.lambda_qvs = cfg.solver.lambda_qvs;
  o.inversion.max_iter = cfg.solver.max_iter;
  o.inversion.mask_tol = cfg.solver.mask_tol;
  o.inversion.cg_tol = cfg.solver.cg_tol;
  o.inversion.cg_max_iter = cfg.solver.cg_max_iter;
  o.cond_scale = cfg.dynamics.cond_scale;
  o.cfl_max = cfg.dynamics.cfl_max;
  o.lagged_mask = cfg.dynamics.lagged_mask;
  return o;
}

InitialCondition initial_condition(const RunConfig& cfg) {
  InitialCondition ic = cfg.dynamics.ic;
  ic.seed = cfg.dynamics.seed;
  return ic;
}

const char* to_string(Variant v) {
  return v == Variant::continuous ? "continuous" : "fast";
}

const char* to_string(ProfileFamily f) {
  switch (f) {
    case ProfileFamily::exponential: return "exponential";
    case ProfileFamily::boussinesq: return "boussinesq";
    default: return "tabulated";
  }
}

const char* to_string(ICFamily f) {
  switch (f) {
    case ICFamily::random_spectrum: return "random_spectrum";
    case ICFamily::zonal_jet: return "zonal_jet";
    default: return "vortex";
  }
}

}  // namespace pqg
