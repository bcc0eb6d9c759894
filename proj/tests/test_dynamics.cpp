#include <cmath>
#include <random>

#include "doctest.h"
#include "pireg/dynamics.hpp"
#include "pireg/examples.hpp"

using namespace pireg;

TEST_CASE("saturate clamps and validates bounds") {
  CHECK(saturate(2.0, 0.0, 3.1) == 2.0);
  CHECK(saturate(-1.0, 0.0, 3.1) == 0.0);
  CHECK(saturate(5.0, 0.0, 3.1) == 3.1);
  CHECK_THROWS_AS(saturate(1.0, 2.0, 1.0), DomainError);
}

TEST_CASE("saturate and capped-inflow are nonexpansive") {
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> u(-10.0, 10.0);
  for (int i = 0; i < 20000; ++i) {
    const double x = u(rng), y = u(rng);
    CHECK(std::abs(saturate(x, 0.0, 3.1) - saturate(y, 0.0, 3.1)) <= std::abs(x - y));
    const double cap = u(rng);
    CHECK(std::abs(std::min(x, cap) - std::min(y, cap)) <= std::abs(x - y));
  }
}

TEST_CASE("outflow family values") {
  const ScenarioFile ex41 = example_41();
  const ScenarioFile ex42 = example_42();
  CHECK(outflow(ex41.outflow, 0, 10.0, 16.8) == doctest::Approx(3.678794).epsilon(1e-6));
  CHECK(outflow(ex41.outflow, 0, 10.0, 16.8) == 10.0 * std::exp(-1.0));
  CHECK(outflow(ex41.outflow, 0, 0.0, 16.8) == 0.0);
  CHECK(outflow(ex42.outflow, 0, 3.0, 20.0) == doctest::Approx(1.219709).epsilon(1e-6));
  CHECK_THROWS_AS(outflow(ex41.outflow, 0, -0.5, 16.8), DomainError);
  CHECK_THROWS_AS(outflow(ex41.outflow, 0, 17.0, 16.8), DomainError);
  CHECK_THROWS_AS(outflow(ex41.outflow, 3, 1.0, 16.8), DomainError);
}

TEST_CASE("outflow derivative closed form") {
  const ScenarioFile ex41 = example_41();
  const ScenarioFile ex42 = example_42();
  CHECK(outflow_derivative(ex41.outflow, 0, 10.0, 16.8) == 0.0);
  CHECK(outflow_derivative(ex41.outflow, 0, 0.0, 16.8) == ex41.outflow.members[0].p);
  const double closed = outflow_derivative(ex42.outflow, 0, 3.0, 20.0);
  CHECK(closed == doctest::Approx(-0.325255).epsilon(1e-5));
  const double h = 1e-6;
  const double central =
      (outflow(ex42.outflow, 0, 3.0 + h, 20.0) - outflow(ex42.outflow, 0, 3.0 - h, 20.0)) /
      (2.0 * h);
  CHECK(closed == doctest::Approx(central).epsilon(1e-6));
}

TEST_CASE("plant step fixed point, capacity edge, and interior value") {
  const ScenarioFile ex = example_41();
  const Scenario& sc = ex.scenario;
  CHECK(plant_step(sc, ex.outflow, sc.x_star, sc.u_star, 0, sc.v_star) ==
        doctest::Approx(sc.x_star).epsilon(1e-14));

  const double at_cap = plant_step(sc, ex.outflow, sc.a, 1.0, 0, 5.0);
  CHECK(at_cap == doctest::Approx(sc.a - outflow(ex.outflow, 0, sc.a, sc.a)).epsilon(1e-14));

  // higher-precision re-evaluation of the same map
  const long double v_star_l = 10.0L * std::exp(-1.0L) - 1.0L;
  const long double f12_l = 12.0L * std::exp(-1.2L);
  const long double expected = 12.0L - f12_l + (1.0L + v_star_l);
  CHECK(plant_step(sc, ex.outflow, 12.0, 1.0, 0, sc.v_star) ==
        doctest::Approx(static_cast<double>(expected)).epsilon(1e-12));
  CHECK(plant_step(sc, ex.outflow, 12.0, 1.0, 0, sc.v_star) ==
        doctest::Approx(12.064463868767998).epsilon(1e-9));

  CHECK_THROWS_AS(plant_step(sc, ex.outflow, -1.0, 1.0, 0, 0.0), DomainError);
  CHECK_THROWS_AS(plant_step(sc, ex.outflow, 5.0, 99.0, 0, 0.0), DomainError);
  CHECK_THROWS_AS(plant_step(sc, ex.outflow, 5.0, 1.0, 0, -0.1), DomainError);
}

TEST_CASE("plant step stays inside [0, a] on random draws") {
  const ScenarioFile ex = example_41();
  const Scenario& sc = ex.scenario;
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> ux(0.0, sc.a);
  std::uniform_real_distribution<double> uu(sc.b_min, sc.b_max);
  std::uniform_real_distribution<double> uv(0.0, 3.0 * sc.v_star);
  for (int i = 0; i < 1000000; ++i) {
    const double next = plant_step(sc, ex.outflow, ux(rng), uu(rng), 0, uv(rng));
    REQUIRE(next >= 0.0);
    REQUIRE(next <= sc.a);
  }
}

TEST_CASE("pi control law") {
  const ScenarioFile ex = example_41();
  const Scenario& sc = ex.scenario;
  CHECK(pi_control(ex.gains, sc, sc.x_star, sc.x_star, sc.u_star) == sc.u_star);
  CHECK(pi_control(ex.gains, sc, 11.0, 10.0, 1.0) == 0.0);  // P(1 - 0.9 - 1.08) clamps low
  CHECK(pi_control(Gains{0.0, 0.0}, sc, 4.0, 9.0, 2.0) == 2.0);
}

TEST_CASE("closed loop equilibrium is fixed for every member") {
  ScenarioFile ex = example_41();
  // second member with matching set-point outflow: p2 x exp(-c2 x) = f(x*) at x*
  const double f_star = outflow(ex.outflow, 0, ex.scenario.x_star, ex.scenario.a);
  const double p2 = 0.9;
  const double c2 = -std::log(f_star / (p2 * ex.scenario.x_star)) / ex.scenario.x_star;
  ex.outflow.members.push_back(OutflowMember{p2, c2, 1.0});
  REQUIRE(check_scenario(ex.scenario, ex.outflow).equilibrium_ok);

  const LoopState eq{ex.scenario.x_star, ex.scenario.x_star, ex.scenario.u_star};
  for (std::size_t d = 0; d < ex.outflow.size(); ++d) {
    const LoopState next = closed_loop_step(ex.scenario, ex.outflow, ex.gains, eq, d,
                                            ex.scenario.v_star);
    CHECK(std::abs(next.x - eq.x) <= 1e-12);
    CHECK(std::abs(next.y - eq.y) <= 1e-12);
    CHECK(std::abs(next.w - eq.w) <= 1e-12);
  }
}

TEST_CASE("closed loop step from a displaced state") {
  const ScenarioFile ex = example_41();
  const LoopState next =
      closed_loop_step(ex.scenario, ex.outflow, ex.gains, LoopState{11.0, 10.0, 1.0}, 0,
                       ex.scenario.v_star);
  CHECK(next.w == 0.0);
  CHECK(next.y == 11.0);
  CHECK(next.x == doctest::Approx(10.017212491035547).epsilon(1e-9));
}

TEST_CASE("closed loop range contract on random states") {
  const ScenarioFile ex = example_41();
  const Scenario& sc = ex.scenario;
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> ux(0.0, sc.a);
  std::uniform_real_distribution<double> uw(sc.b_min - 5.0, sc.b_max + 5.0);
  std::uniform_real_distribution<double> uv(0.0, 3.0 * sc.v_star);
  for (int i = 0; i < 100000; ++i) {
    const LoopState next = closed_loop_step(sc, ex.outflow, ex.gains,
                                            LoopState{ux(rng), ux(rng), uw(rng)}, 0, uv(rng));
    REQUIRE(next.x >= 0.0);
    REQUIRE(next.x <= sc.a);
    REQUIRE(next.y >= 0.0);
    REQUIRE(next.y <= sc.a);
    REQUIRE(next.w >= sc.b_min);
    REQUIRE(next.w <= sc.b_max);
  }
}

TEST_CASE("reduced step equilibrium, displaced state, capacity branch") {
  const ScenarioFile ex = example_41();
  const Scenario& sc = ex.scenario;
  const ReducedState eq = reduced_step(sc, ex.outflow, ex.gains,
                                       ReducedState{sc.x_star, sc.u_star});
  CHECK(eq.x == sc.x_star);
  CHECK(eq.w == sc.u_star);

  const ReducedState displaced =
      reduced_step(sc, ex.outflow, ex.gains, ReducedState{11.0, 1.0});
  CHECK(displaced.x == doctest::Approx(11.017212491035547).epsilon(1e-9));
  CHECK(displaced.w == 0.0);

  // w + v* >= a - x selects the capacity branch
  const ReducedState capped = reduced_step(sc, ex.outflow, ex.gains, ReducedState{16.0, 3.0});
  CHECK(capped.x == 16.0 - outflow(ex.outflow, 0, 16.0, sc.a) + (sc.a - 16.0));
}

TEST_CASE("reduced step refuses ambiguous models") {
  ScenarioFile ex = example_41();
  ex.outflow.members.push_back(ex.outflow.members[0]);
  CHECK_THROWS_AS(reduced_step(ex.scenario, ex.outflow, ex.gains, ReducedState{10.0, 1.0}),
                  AmbiguityError);
}

TEST_CASE("full loop trace embeds into the reduced system") {
  const ScenarioFile ex = example_41();
  const Scenario& sc = ex.scenario;
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> ux(0.0, sc.a);
  std::uniform_real_distribution<double> uw(sc.b_min - 2.0, sc.b_max + 2.0);
  for (int trial = 0; trial < 20; ++trial) {
    LoopState full{ux(rng), ux(rng), uw(rng)};
    full = closed_loop_step(sc, ex.outflow, ex.gains, full, 0, sc.v_star);
    ReducedState red{full.y, full.w};  // (y(1), w(1)) = (x(0), u(0))
    for (int t = 0; t < 500; ++t) {
      full = closed_loop_step(sc, ex.outflow, ex.gains, full, 0, sc.v_star);
      red = reduced_step(sc, ex.outflow, ex.gains, red);
      REQUIRE(std::abs(red.x - full.y) <= 1e-12);
      REQUIRE(std::abs(red.w - full.w) <= 1e-12);
    }
  }
}

TEST_CASE("scenario check accepts the bundled examples and flags violations") {
  const ScenarioFile ex41 = example_41();
  const ScenarioCheck ok = check_scenario(ex41.scenario, ex41.outflow);
  CHECK(ok.pass());
  CHECK(ok.equilibrium_worst_residual <= 1e-9 * (ex41.scenario.u_star + ex41.scenario.v_star));
  CHECK(ok.global_headroom);

  Scenario bad = ex41.scenario;
  bad.u_star = bad.b_min;
  CHECK_FALSE(check_scenario(bad, ex41.outflow).input_interior);
  CHECK_FALSE(check_scenario(bad, ex41.outflow).pass());

  OutflowModel over;
  over.members = {OutflowMember{1.5, 0.1, 1.0}};
  const ScenarioCheck bounds = check_scenario(ex41.scenario, over);
  CHECK_FALSE(bounds.members_ok);
  CHECK_FALSE(bounds.pass());

  const ScenarioFile ex42 = example_42();
  CHECK(check_scenario(ex42.scenario, ex42.outflow).pass());
}
