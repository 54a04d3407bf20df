#include <cmath>
#include <vector>

#include "doctest.h"
#include "pqg/thermo.hpp"
#include "support/oracles.hpp"

using pqg::ThermoParams;

namespace {
ThermoParams<double> standard() { return ThermoParams<double>{}; }
}  // namespace

TEST_CASE("thermo: parameter validation") {
  CHECK_NOTHROW(pqg::validate(standard()));

  auto p = standard();
  p.R_v = 100.0;  // violates R_v > R_d
  CHECK_THROWS_AS(pqg::validate(p), std::invalid_argument);

  p = standard();
  p.c_pv = 5000.0;  // violates c_l > c_pv
  CHECK_THROWS_AS(pqg::validate(p), std::invalid_argument);

  p = standard();
  p.es_ref = 6000.0;  // violates es_ref << p_ref
  CHECK_THROWS_AS(pqg::validate(p), std::invalid_argument);

  p = standard();
  p.g = -9.81;
  CHECK_THROWS_AS(pqg::validate(p), std::invalid_argument);
}

TEST_CASE("thermo: derived reference quantities") {
  const auto d = pqg::derived_quantities(standard());
  CHECK(d.rho_ref == doctest::Approx(1.25).epsilon(0.03));
  CHECK(d.h_sc == doctest::Approx(11.0e3).epsilon(0.05));
  CHECK(d.c_ref == doctest::Approx(330.0).epsilon(0.05));
  CHECK(d.c_int == doctest::Approx(110.0).epsilon(0.05));
  CHECK(d.u_ref == doctest::Approx(12.0).epsilon(0.05));

  // rho_ref = p_ref/(R_d T_ref): doubling R_d halves it exactly.
  auto p = standard();
  p.R_d = 2.0 * p.R_d;
  const auto d2 = pqg::derived_quantities(p);
  CHECK(d2.rho_ref == 0.5 * d.rho_ref);
}

TEST_CASE("thermo: dimensionless Pi parameters") {
  const auto p = standard();
  const auto pi = pqg::pi_parameters(p);
  CHECK(pi.Pi1 == doctest::Approx(1.6e-3).epsilon(0.10));
  CHECK(pi.Pi2 == doctest::Approx(1.5e-1).epsilon(0.10));
  CHECK(pi.Pi3 == doctest::Approx(4.7e-1).epsilon(0.10));

  auto pa = p;
  pa.a = 2.0 * p.a;
  const auto pi2 = pqg::pi_parameters(pa);
  CHECK(pi2.Pi1 == 0.5 * pi.Pi1);
  CHECK(pi2.Pi3 == 0.5 * pi.Pi3);

  auto pd = p;
  pd.DeltaTheta = 1e-300;  // effectively zero while satisfying positivity
  CHECK(pqg::pi_parameters(pd).Pi2 == doctest::Approx(0.0));
}

TEST_CASE("thermo: latent heat") {
  const auto p = standard();
  CHECK(pqg::latent_heat(p.T_ref, p) == p.L_ref);
  CHECK(pqg::latent_heat(p.T_ref + 10.0, p) ==
        doctest::Approx(p.L_ref - 10.0 * (p.c_l - p.c_pv)).epsilon(1e-14));

  // Independent oracle: integrate dL/dT = -(c_l - c_pv) numerically.
  const double L250 = pqg::latent_heat(250.0, p);
  const double L250_oracle =
      oracle::latent_heat_quadrature(250.0, p.L_ref, p.T_ref, p.c_l, p.c_pv);
  CHECK(L250 == doctest::Approx(L250_oracle).epsilon(1e-10));
  // Tabulated L(250 K) is about 2.55e6 J/kg.
  CHECK(L250 == doctest::Approx(2.55e6).epsilon(0.02));

  // Affine: L(T1) + L(T2) = 2 L((T1+T2)/2), exactly representable choices.
  const double T1 = 260.0, T2 = 300.0;
  CHECK(pqg::latent_heat(T1, p) + pqg::latent_heat(T2, p) ==
        2.0 * pqg::latent_heat(0.5 * (T1 + T2), p));

  CHECK_THROWS_AS(pqg::latent_heat(100.0, p), std::domain_error);
  CHECK_THROWS_AS(pqg::latent_heat(400.0, p), std::domain_error);
}

TEST_CASE("thermo: saturation vapor pressure vs quadrature oracle") {
  const auto p = standard();
  CHECK(pqg::saturation_vapor_pressure(p.T_ref, p) == p.es_ref);

  // Closed form against adaptive quadrature of the Clausius-Clapeyron ODE over
  // the full validation window.
  for (int i = 0; i <= 100; ++i) {
    const double T = 230.0 + 80.0 * i / 100.0;
    const double es = pqg::saturation_vapor_pressure(T, p);
    const double es_oracle =
        oracle::es_quadrature(T, p.es_ref, p.L_ref, p.T_ref, p.R_v, p.c_l, p.c_pv);
    CHECK(std::fabs(es - es_oracle) / es_oracle < 1e-6);
  }

  // Monotonicity sample and a spot value against standard met tables
  // (Magnus-type fits give ~95.6 Pa at 250 K).
  CHECK(pqg::saturation_vapor_pressure(280.0, p) > pqg::saturation_vapor_pressure(270.0, p));
  CHECK(pqg::saturation_vapor_pressure(270.0, p) > pqg::saturation_vapor_pressure(260.0, p));
  CHECK(pqg::saturation_vapor_pressure(250.0, p) == doctest::Approx(95.6).epsilon(0.01));

  // Strict monotonicity on a fine grid.
  double prev = pqg::saturation_vapor_pressure(231.0, p);
  for (double T = 232.0; T <= 309.0; T += 1.0) {
    const double cur = pqg::saturation_vapor_pressure(T, p);
    CHECK(cur > prev);
    prev = cur;
  }

  CHECK_THROWS_AS(pqg::saturation_vapor_pressure(100.0, p), std::domain_error);
}

TEST_CASE("thermo: saturation mixing ratio") {
  const auto p = standard();
  const double q = pqg::saturation_mixing_ratio(1e5, 273.15, p);
  CHECK(q == doctest::Approx(0.0038).epsilon(0.05));

  // q_vs -> 0 as e_s -> 0 (very low T).
  CHECK(pqg::saturation_mixing_ratio(1e5, 160.0, p) < 1e-8);

  // p_total = 2 e_s gives exactly R_d/R_v.
  const double es = pqg::saturation_vapor_pressure(280.0, p);
  CHECK(pqg::saturation_mixing_ratio(2.0 * es, 280.0, p) == p.R_d / p.R_v);

  // Monotone in e_s (via T) and decreasing in p_total.
  CHECK(pqg::saturation_mixing_ratio(1e5, 290.0, p) > pqg::saturation_mixing_ratio(1e5, 280.0, p));
  CHECK(pqg::saturation_mixing_ratio(9e4, 280.0, p) > pqg::saturation_mixing_ratio(1e5, 280.0, p));

  CHECK_THROWS_AS(pqg::saturation_mixing_ratio(50.0, 273.15, p), std::domain_error);
}

TEST_CASE("thermo: dry-limit decay demo") {
  const auto p = standard();
  const std::vector<double> eps = {0.1, 0.05, 0.025};
  const auto ex = pqg::dry_limit_decay_demo(250.0, eps, p);
  REQUIRE(ex.size() == 3);

  // Exponent is negative below T_ref and scales like 1/eps.
  CHECK(ex[0] < 0.0);
  CHECK(std::fabs(ex[1] / ex[0] - 2.0) < 1e-2);
  CHECK(std::fabs(ex[2] / ex[1] - 2.0) < 1e-2);

  // es(eps)/es(2 eps) = exp(exponent(eps) - exponent(2 eps)) = exp(exponent(eps)/2):
  // at eps = 0.05 the ratio is ~1.1e-8, i.e. already far below eps^5 and falling
  // with unbounded order; freeze that value here.
  const double ratio_half = std::exp(0.5 * ex[1]);
  CHECK(ratio_half < 1e-7);
  CHECK(ratio_half == doctest::Approx(1.08e-8).epsilon(0.05));

  // Measured decay order across the dyadic eps ladder exceeds any fixed k
  // window we sample; successive orders grow.
  const double r01 = std::exp(0.5 * ex[0]);
  const double r005 = std::exp(0.5 * ex[1]);
  const double r0025 = std::exp(0.5 * ex[2]);
  const double order_a = std::log(r005 / r01) / std::log(0.5);
  const double order_b = std::log(r0025 / r005) / std::log(0.5);
  CHECK(order_a > 10.0);
  CHECK(order_b > order_a);

  CHECK_THROWS_AS(pqg::dry_limit_decay_demo(280.0, eps, p), std::domain_error);
}
