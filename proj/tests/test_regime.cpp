#include <cmath>

#include "doctest.h"
#include "pqg/regime.hpp"

using pqg::ThermoParams;

TEST_CASE("regime: fitted prefactors at eps = 0.1") {
  const ThermoParams<double> p;
  const auto r0 = pqg::fit_regime(p, 0);
  const auto r1 = pqg::fit_regime(p, 1);

  // L_ref/(c_pd T_ref) ~ 9.1 so L ~ 0.91 in both regimes.
  CHECK(r0.L == doctest::Approx(0.91).epsilon(0.01));
  CHECK(r1.L == r0.L);

  // R_d/R_v ~ 0.62: alpha=0 fits E ~ 6.2, alpha=1 fits E ~ 0.62.
  CHECK(r0.E == doctest::Approx(6.2).epsilon(0.01));
  CHECK(r1.E == doctest::Approx(0.62).epsilon(0.01));

  CHECK(r0.Gamma == doctest::Approx(2.86).epsilon(0.01));
  CHECK(r0.A == doctest::Approx(1005.0 / 462.0).epsilon(1e-12));
  CHECK(r0.k_l == doctest::Approx(0.42).epsilon(0.01));
  CHECK(r0.k_v == doctest::Approx(0.184).epsilon(0.01));
  CHECK(r1.k_v == doctest::Approx(1.84).epsilon(0.01));

  // Identity R_d/R_v = eps E for alpha = 0, = E for alpha = 1.
  CHECK(p.R_d / p.R_v == doctest::Approx(r0.epsilon * r0.E).epsilon(1e-14));
  CHECK(p.R_d / p.R_v == doctest::Approx(r1.E).epsilon(1e-14));

  // Dry-limit prefactors of the Pi parameters are O(1).
  CHECK(r0.c1 == doctest::Approx(1.76).epsilon(0.01));
  CHECK(r0.c2 == doctest::Approx(1.46).epsilon(0.01));
  CHECK(r0.c3 == doctest::Approx(1.39).epsilon(0.01));

  CHECK_THROWS_AS(pqg::fit_regime(p, 2), std::invalid_argument);
  CHECK_THROWS_AS(pqg::fit_regime(p, 0, 1.5), std::invalid_argument);
}

TEST_CASE("regime: consistency report") {
  const ThermoParams<double> p;

  SUBCASE("alpha = 0 is formally consistent") {
    const auto rep = pqg::regime_consistency_report(pqg::fit_regime(p, 0), p);
    REQUIRE(rep.rows.size() == 7);
    for (const auto& row : rep.rows) CHECK_FALSE(row.inconsistent);

    // The paper's quoted physical values.
    CHECK(rep.rows[0].value == doctest::Approx(0.29).epsilon(0.02));   // R_d/c_pd
    CHECK(rep.rows[4].value == doctest::Approx(9.1).epsilon(0.01));    // L_ref/(c_pd T_ref)
    CHECK(rep.rows[5].value == doctest::Approx(0.62).epsilon(0.01));   // R_d/R_v
    CHECK(rep.rows[6].value == doctest::Approx(0.067).epsilon(0.03));  // sigma combination

    // All prefactors land in [0.1, 10] except the sigma row, whose O(1)
    // assignment leaves the small physical value 0.066 as its own prefactor.
    for (const auto& row : rep.rows) {
      if (row.name == "(c_pv/c_pd)(R_d/c_pd)-R_v/c_pd") {
        CHECK_FALSE(row.prefactor_in_band);
        CHECK(row.prefactor == doctest::Approx(0.066).epsilon(0.02));
      } else {
        CHECK(row.prefactor_in_band);
      }
    }
    CHECK(rep.es_prefactor == doctest::Approx(0.0611).epsilon(1e-6));
  }

  SUBCASE("alpha = 1 carries exactly the two documented inconsistencies") {
    const auto rep = pqg::regime_consistency_report(pqg::fit_regime(p, 1), p);
    int n_incon = 0;
    for (const auto& row : rep.rows) {
      if (row.inconsistent) {
        ++n_incon;
        const bool expected = row.name == "R_d/R_v" ||
                              row.name == "(c_pv/c_pd)(R_d/c_pd)-R_v/c_pd";
        CHECK(expected);
      } else {
        CHECK(row.prefactor_in_band);
      }
    }
    CHECK(n_incon == 2);
    CHECK(rep.es_prefactor == doctest::Approx(0.611).epsilon(1e-6));
  }

  SUBCASE("report text renders every row") {
    const auto rep = pqg::regime_consistency_report(pqg::fit_regime(p, 1), p);
    const std::string txt = rep.text();
    CHECK(txt.find("R_d/R_v") != std::string::npos);
    CHECK(txt.find("INCON") != std::string::npos);
    CHECK(txt.find("es_ref/p_ref") != std::string::npos);
  }
}
