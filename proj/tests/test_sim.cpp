#include <cmath>
#include <random>

#include "doctest.h"
#include "pireg/examples.hpp"
#include "pireg/global_iss.hpp"
#include "pireg/local_stability.hpp"
#include "pireg/oracle.hpp"
#include "pireg/sim.hpp"

using namespace pireg;

TEST_CASE("disturbance sequences validate and extend cyclically") {
  const ScenarioFile ex = example_41();
  DisturbanceSequence dist;
  dist.d_seq = {0};
  dist.v_seq = {1.0, 2.0, 3.0};
  dist.validate(ex.outflow);
  CHECK(dist.v_at(0) == 1.0);
  CHECK(dist.v_at(4) == 2.0);
  CHECK(dist.d_at(17) == 0);

  DisturbanceSequence bad = dist;
  bad.v_seq = {1.0, -0.5};
  CHECK_THROWS_AS(bad.validate(ex.outflow), DomainError);
  bad = dist;
  bad.d_seq = {2};
  CHECK_THROWS_AS(bad.validate(ex.outflow), DomainError);
}

TEST_CASE("equilibrium rollout is constant") {
  const ScenarioFile ex = example_41();
  const Scenario& sc = ex.scenario;
  const Trajectory traj =
      rollout_full(sc, ex.outflow, ex.gains, LoopState{sc.x_star, sc.x_star, sc.u_star},
                   DisturbanceSequence::constant(0, sc.v_star), 200);
  for (const LoopState& s : traj.states) {
    REQUIRE(s.x == sc.x_star);
    REQUIRE(s.w == sc.u_star);
  }
  CHECK(convergence_metric(traj, sc.x_star) == 0.0);
  CHECK_FALSE(detect_saturation(traj, sc.a));
}

TEST_CASE("displaced rollout converges to the set-point") {
  const ScenarioFile ex = example_41();
  const Scenario& sc = ex.scenario;
  const Trajectory traj =
      rollout_full(sc, ex.outflow, ex.gains, LoopState{12.0, 12.0, 1.0},
                   DisturbanceSequence::constant(0, sc.v_star), 2000);
  CHECK(std::abs(traj.states.back().x - sc.x_star) < 1e-6);
  CHECK(convergence_metric(traj, sc.x_star) < 1e-6);
}

TEST_CASE("rollouts are deterministic") {
  const ScenarioFile ex = example_41();
  const Scenario& sc = ex.scenario;
  const auto run = [&] {
    return rollout_full(sc, ex.outflow, ex.gains, LoopState{12.0, 11.0, 2.0},
                        DisturbanceSequence{{0}, {sc.v_star, sc.v_star * 1.01}}, 500);
  };
  const Trajectory t1 = run();
  const Trajectory t2 = run();
  REQUIRE(t1.states.size() == t2.states.size());
  for (std::size_t i = 0; i < t1.states.size(); ++i) {
    REQUIRE(t1.states[i].x == t2.states[i].x);
    REQUIRE(t1.states[i].y == t2.states[i].y);
    REQUIRE(t1.states[i].w == t2.states[i].w);
  }
}

TEST_CASE("spurious saturated equilibrium holds a rollout in place") {
  const ScenarioFile ex = example_42();
  const Scenario& sc = ex.scenario;
  const double y_star = bisect(
      [&](double y) { return outflow(ex.outflow, 0, y, sc.a) - std::min(sc.b_min + sc.v_star, sc.a - y); },
      3.5, 3.6, 1e-15);
  const Trajectory traj =
      rollout_full(sc, ex.outflow, ex.gains, LoopState{y_star, y_star, sc.b_min},
                   DisturbanceSequence::constant(0, sc.v_star), 30);
  for (const LoopState& s : traj.states) {
    REQUIRE(std::abs(s.x - y_star) <= 1e-9);
    REQUIRE(s.w == sc.b_min);
  }

  const ReducedTrajectory red =
      rollout_reduced(sc, ex.outflow, ex.gains, ReducedState{y_star, sc.b_min}, 30);
  for (const ReducedState& s : red.states) {
    REQUIRE(std::abs(s.x - y_star) <= 1e-9);
    REQUIRE(s.w == sc.b_min);
  }
}

TEST_CASE("reduced rollouts from inside the certified region converge") {
  const ScenarioFile ex = example_42();
  const RoaCertificate cert =
      roa_certificate(ex.outflow, ex.scenario, ex.gains, RoaMethod::gain_matched);
  for (const ReducedState& s : sample_omega_rho(cert, ex.scenario, ex.outflow, 10, 314)) {
    const ReducedTrajectory traj = rollout_reduced(ex.scenario, ex.outflow, ex.gains, s, 3000);
    REQUIRE(std::abs(traj.states.back().x - ex.scenario.x_star) < 1e-6);
    REQUIRE(std::abs(traj.states.back().w - ex.scenario.u_star) < 1e-6);
  }
}

TEST_CASE("saturation detector looks at the trajectory tail") {
  const ScenarioFile ex = example_41();
  const Scenario& sc = ex.scenario;
  Trajectory pinned;
  for (int t = 0; t <= 100; ++t) pinned.states.push_back(LoopState{sc.a, sc.a, sc.b_max});
  CHECK(detect_saturation(pinned, sc.a));
  CHECK(convergence_metric(pinned, sc.x_star) == sc.a - sc.x_star);

  // hits capacity early but not in the final 10%
  Trajectory early;
  early.states.push_back(LoopState{sc.a, sc.a, sc.b_max});
  for (int t = 1; t <= 100; ++t) early.states.push_back(LoopState{sc.x_star, sc.x_star, 1.0});
  CHECK_FALSE(detect_saturation(early, sc.a));
}

TEST_CASE("disturbances below the certified margin never saturate the network") {
  const ScenarioFile ex = example_41();
  const Scenario& sc = ex.scenario;
  const IssCertificate cert = iss_certificate(ex.gains, *ex.h2, sc);
  REQUIRE(cert.valid);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> ux(0.0, sc.a);
  std::uniform_real_distribution<double> noise(-0.9 * cert.margin, 0.9 * cert.margin);
  for (int trial = 0; trial < 5; ++trial) {
    DisturbanceSequence dist;
    dist.d_seq = {0};
    for (int t = 0; t < 2000; ++t) dist.v_seq.push_back(sc.v_star + noise(rng));
    const Trajectory traj = rollout_full(sc, ex.outflow, ex.gains,
                                         LoopState{ux(rng), ux(rng), sc.b_max}, dist, 2000);
    CHECK_FALSE(detect_saturation(traj, sc.a));
  }
}
