#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "doctest.h"
#include "pireg/examples.hpp"
#include "pireg/global_iss.hpp"
#include "pireg/oracle.hpp"

using namespace pireg;

TEST_CASE("sector parameter validation") {
  const ScenarioFile ex = example_41();
  const SectorBoundsCheck ok = validate_sector_bounds(*ex.h2, ex.scenario, ex.gains);
  CHECK(ok.ok);
  CHECK(ok.r_bound == doctest::Approx(-0.9792347510).epsilon(1e-9));
  CHECK(ok.beta == doctest::Approx(1.0).epsilon(1e-12));

  SectorBounds loose = *ex.h2;
  loose.r = -0.5;  // violates the feedforward slope bound
  const SectorBoundsCheck bad = validate_sector_bounds(loose, ex.scenario, ex.gains);
  CHECK_FALSE(bad.ok);
  REQUIRE(bad.violations.size() >= 1);

  SectorBounds weight = *ex.h2;
  weight.M = 1.0;
  CHECK_FALSE(validate_sector_bounds(weight, ex.scenario, ex.gains).ok);
}

TEST_CASE("sector verification passes on the first example") {
  const ScenarioFile ex = example_41();
  const SectorReport rep =
      verify_sector_conditions(ex.outflow, ex.scenario, ex.gains, *ex.h2, 10001);
  CHECK(rep.pass);
  CHECK_FALSE(rep.forms_disagree);
  for (const MarginRecord& m : rep.margins) {
    INFO(m.name);
    CHECK(m.worst >= 0.0);
    CHECK(m.pass);
  }
  // the tight congested-region margin observed on a fine independent grid
  const MarginRecord* congested = nullptr;
  for (const MarginRecord& m : rep.margins) {
    if (m.name == "congested_lower") congested = &m;
  }
  REQUIRE(congested != nullptr);
  CHECK(congested->worst == doctest::Approx(0.0264).epsilon(0.05));
  CHECK(congested->worst_x == doctest::Approx(14.1212).epsilon(1e-3));
}

TEST_CASE("sector verification serial and parallel paths agree bitwise") {
  const ScenarioFile ex = example_41();
  const SectorReport par =
      verify_sector_conditions(ex.outflow, ex.scenario, ex.gains, *ex.h2, 3001);
  const SectorReport ser =
      verify_sector_conditions_serial(ex.outflow, ex.scenario, ex.gains, *ex.h2, 3001);
  REQUIRE(par.margins.size() == ser.margins.size());
  for (std::size_t i = 0; i < par.margins.size(); ++i) {
    REQUIRE(par.margins[i].worst == ser.margins[i].worst);
    REQUIRE(par.margins[i].worst_x == ser.margins[i].worst_x);
  }
}

TEST_CASE("sector verification refusals") {
  const ScenarioFile ex = example_41();
  CHECK_THROWS_AS(verify_sector_conditions(ex.outflow, ex.scenario, ex.gains, *ex.h2, 50),
                  RefusalError);

  SectorBounds loose = *ex.h2;
  loose.r = -0.5;
  CHECK_THROWS_AS(verify_sector_conditions(ex.outflow, ex.scenario, ex.gains, loose, 1000),
                  RefusalError);

  Scenario cramped = ex.scenario;
  cramped.a = 13.0;  // x* + v* + b_max exceeds the capacity
  CHECK_THROWS_AS(verify_sector_conditions(ex.outflow, cramped, ex.gains, *ex.h2, 1000),
                  RefusalError);
}

TEST_CASE("a vanishing outflow violates the above-set-point sector") {
  const ScenarioFile ex = example_41();
  OutflowModel tiny;
  tiny.members = {OutflowMember{1e-9, 1.0, 1.0}};
  const SectorReport rep = verify_sector_conditions(tiny, ex.scenario, ex.gains, *ex.h2, 1000);
  CHECK_FALSE(rep.pass);
  bool above_upper_fails = false;
  for (const MarginRecord& m : rep.margins) {
    if (m.name == "above_sector_upper" && m.worst < 0.0) above_upper_fails = true;
  }
  CHECK(above_upper_fails);
}

TEST_CASE("iss certificate numbers for the first example") {
  const ScenarioFile ex = example_41();
  const IssCertificate cert = iss_certificate(ex.gains, *ex.h2, ex.scenario);
  CHECK(cert.lambda == doctest::Approx(0.99975).epsilon(1e-9));
  CHECK(cert.gamma == doctest::Approx(4.034).epsilon(1e-9));
  CHECK(cert.margin == doctest::Approx(1.0411502231e-3).epsilon(1e-6));
  CHECK(cert.gain_min == doctest::Approx(1.0256410256).epsilon(1e-9));
  CHECK(cert.m_lower == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(cert.gain_first);
  CHECK(cert.weight_window);
  CHECK(cert.valid);
}

TEST_CASE("iss certificate flags degenerate weights") {
  const ScenarioFile ex = example_41();
  SectorBounds p = *ex.h2;
  p.M = 1.0;
  p.r = 1.0 - ex.gains.k1 - ex.gains.k2;  // beta = 1, so lambda >= 1/M = 1
  const IssCertificate cert = iss_certificate(ex.gains, p, ex.scenario);
  CHECK(cert.lambda >= 1.0);
  CHECK_FALSE(cert.valid);
}

TEST_CASE("iss trajectory bound") {
  const ScenarioFile ex = example_41();
  const Scenario& sc = ex.scenario;
  const IssCertificate cert = iss_certificate(ex.gains, *ex.h2, sc);

  const std::vector<double> quiet{sc.v_star};
  CHECK(iss_bound(cert, sc, ex.gains, *ex.h2, LoopState{sc.x_star, sc.x_star, sc.u_star},
                  quiet) == 0.0);

  // one step from (12, 12, 1): lambda * M * 3.96 * 4
  CHECK(iss_bound(cert, sc, ex.gains, *ex.h2, LoopState{12.0, 12.0, 1.0}, quiet) ==
        doctest::Approx(16.2319410).epsilon(1e-6));

  // nonincreasing in t when v stays at v*
  std::vector<double> history;
  double prev = std::numeric_limits<double>::infinity();
  for (int t = 1; t <= 50; ++t) {
    history.push_back(sc.v_star);
    const double bound =
        iss_bound(cert, sc, ex.gains, *ex.h2, LoopState{12.0, 12.0, 1.0}, history);
    CHECK(bound <= prev);
    prev = bound;
  }
  CHECK_THROWS_AS(
      iss_bound(cert, sc, ex.gains, *ex.h2, LoopState{12.0, 12.0, 1.0}, std::vector<double>{}),
      DomainError);
}

TEST_CASE("one-step dissipation of the iss lyapunov function") {
  const ScenarioFile ex = example_41();
  const Scenario& sc = ex.scenario;
  const IssCertificate cert = iss_certificate(ex.gains, *ex.h2, sc);
  std::mt19937_64 rng(613);
  std::uniform_real_distribution<double> uy(0.0, sc.a);
  std::uniform_real_distribution<double> uw(sc.b_min, sc.b_max);
  std::uniform_real_distribution<double> uv(0.0, 2.0 * sc.v_star);
  for (int i = 0; i < 20000; ++i) {
    const double y = uy(rng), w = uw(rng), v = uv(rng);
    const ReducedState next =
        reduced_step_disturbed(sc, ex.outflow, ex.gains, ReducedState{y, w}, 0, v);
    const double slack = iss_lyapunov(sc, *ex.h2, next.x, next.w) -
                         cert.lambda * iss_lyapunov(sc, *ex.h2, y, w) -
                         cert.gamma * std::abs(v - sc.v_star);
    REQUIRE(slack <= 1e-10);
  }
}

TEST_CASE("piecewise weight function") {
  CHECK(one_sided_weight(0.4, 2.0) == 2.0);
  CHECK(one_sided_weight(0.4, -2.0) == 0.8);
  CHECK(one_sided_weight(0.4, 0.0) == 0.0);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-5.0, 5.0);
  for (int i = 0; i < 20000; ++i) {
    const double x = u(rng), y = u(rng);
    CHECK(std::abs(one_sided_weight(1.0, x) - one_sided_weight(1.0, y)) <= std::abs(x - y));
    CHECK(std::abs(one_sided_weight(0.3, x) - one_sided_weight(0.3, y)) <=
          std::abs(x - y) * (1.0 + 1e-15));
  }
}

TEST_CASE("necessary conditions fail on the second example") {
  const ScenarioFile ex = example_42();
  const NecessaryReport rep = necessary_conditions(ex.outflow, ex.scenario, ex.gains);
  CHECK(rep.k2_positive);
  CHECK(rep.bmin_condition == VerdictState::fail);
  CHECK_FALSE(rep.pass());
  bool found_witness = false;
  for (const RootRecord& r : rep.bmin_roots[0]) {
    REQUIRE(r.residual <= 1e-10);
    if (r.y > 3.5 && r.y < 3.6) found_witness = true;
  }
  CHECK(found_witness);
  CHECK(rep.bmax_condition == VerdictState::pass);
}

TEST_CASE("necessary conditions pass on the first example") {
  const ScenarioFile ex = example_41();
  const NecessaryReport rep = necessary_conditions(ex.outflow, ex.scenario, ex.gains);
  CHECK(rep.pass());
  REQUIRE(rep.bmin_roots[0].size() == 1);
  CHECK(rep.bmin_roots[0][0].y == doctest::Approx(3.9938245254).epsilon(1e-6));
  CHECK(rep.bmin_roots[0][0].y < ex.scenario.x_star);
  REQUIRE(rep.bmax_roots[0].size() == 1);
  CHECK(rep.bmax_roots[0][0].y > 13.2);
  CHECK(rep.bmax_roots[0][0].y < 13.3);

  const NecessaryReport no_integral =
      necessary_conditions(ex.outflow, ex.scenario, Gains{0.9, 0.0});
  CHECK_FALSE(no_integral.k2_positive);
  CHECK_FALSE(no_integral.pass());
}

TEST_CASE("tangency of the outflow with the inflow level is reported") {
  // b_max + v* grazes the outflow maximum at the set-point
  ScenarioFile ex = example_41();
  Scenario sc = ex.scenario;
  const double f_peak = outflow(ex.outflow, 0, 10.0, sc.a);
  sc.b_max = 0.5;
  sc.u_star = 0.25;
  sc.v_star = f_peak - 0.5;
  const NecessaryReport rep = necessary_conditions(ex.outflow, sc, ex.gains);
  CHECK(rep.tangency_warnings.size() >= 1);
  if (!rep.tangency_warnings.empty()) {
    CHECK(rep.tangency_warnings[0] == doctest::Approx(10.0).epsilon(1e-3));
  }
}

TEST_CASE("spurious saturated state is a closed-loop fixed point") {
  const ScenarioFile ex = example_42();
  const Scenario& sc = ex.scenario;
  const NecessaryReport rep = necessary_conditions(ex.outflow, sc, ex.gains);
  double y_star = 0.0;
  for (const RootRecord& r : rep.bmin_roots[0]) {
    if (r.y > 3.5 && r.y < 3.6) y_star = r.y;
  }
  REQUIRE(y_star > 0.0);
  const LoopState fixed{y_star, y_star, sc.b_min};
  const LoopState next = closed_loop_step(sc, ex.outflow, ex.gains, fixed, 0, sc.v_star);
  CHECK(std::abs(next.x - y_star) <= 1e-9);
  CHECK(std::abs(next.y - y_star) <= 1e-9);
  CHECK(std::abs(next.w - sc.b_min) <= 1e-9);
}

TEST_CASE("necessary conditions refuse without capacity headroom") {
  ScenarioFile ex = example_42();
  Scenario cramped = ex.scenario;
  cramped.a = 6.9;  // x* + v* + b_max = 7 exceeds it
  CHECK_THROWS_AS(necessary_conditions(ex.outflow, cramped, ex.gains), RefusalError);
}

TEST_CASE("allowable outflow band contains the model outflow pointwise") {
  const ScenarioFile ex = example_41();
  const auto env = sector_envelope(ex.scenario, ex.gains, *ex.h2, 2001);
  REQUIRE(env.size() == 2001);
  double worst = std::numeric_limits<double>::infinity();
  for (const EnvelopePoint& p : env) {
    const double fx = outflow(ex.outflow, 0, p.x, ex.scenario.a);
    worst = std::min({worst, fx - p.f_min, p.f_max - fx});
  }
  CHECK(worst >= 0.0);
}
