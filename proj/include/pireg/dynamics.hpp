#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "pireg/errors.hpp"

namespace pireg {

// One member of the finite uncertainty set D. The outflow family is
// f(d, x) = p * x * exp(-c * x^delta) with 0 < p <= 1, c > 0, delta > 0.
struct OutflowMember {
  double p = 1.0;
  double c = 0.1;
  double delta = 1.0;
};

struct OutflowModel {
  std::vector<OutflowMember> members;
  std::size_t size() const { return members.size(); }
};

// Plant limits and equilibrium data. The equilibrium (x_star, u_star, v_star)
// is supplied, not solved for; validity is checked by check_scenario().
struct Scenario {
  double a = 0.0;       // storage capacity
  double b_min = 0.0;   // controlled-inflow lower bound
  double b_max = 0.0;   // controlled-inflow upper bound
  double x_star = 0.0;  // set-point storage
  double u_star = 0.0;  // equilibrium controlled inflow
  double v_star = 0.0;  // equilibrium uncontrolled inflow
};

struct Gains {
  double k1 = 0.0;  // proportional-difference gain
  double k2 = 0.0;  // set-point gain
  double sigma() const { return k1 + k2; }
};

// Full closed-loop state: current storage, previous storage, previous applied
// input. w is unconstrained initially and lands in [b_min, b_max] after one step.
struct LoopState {
  double x = 0.0;
  double y = 0.0;
  double w = 0.0;
};

// Reduced 2-D state: storage and integrator value.
struct ReducedState {
  double x = 0.0;
  double w = 0.0;
};

// max(lo, min(v, hi)); throws DomainError when lo > hi.
double saturate(double v, double lo, double hi);

// f(d, x) for member d; requires x in [0, a].
double outflow(const OutflowModel& model, std::size_t d, double x, double a);

// Closed-form d/dx of the family: p * exp(-c x^delta) * (1 - c delta x^delta).
double outflow_derivative(const OutflowModel& model, std::size_t d, double x, double a);

// x+ = x - f(d,x) + min(u + v, a - x); the result is clamped into [0, a] so the
// forward-invariance contract holds bit-exactly.
double plant_step(const Scenario& sc, const OutflowModel& model, double x, double u,
                  std::size_t d, double v);

// Saturated PI law: P(w - k1 (x - y) - k2 (x - x_star)).
double pi_control(const Gains& gains, const Scenario& sc, double x, double y, double w);

// One step of the 3-D closed loop.
LoopState closed_loop_step(const Scenario& sc, const OutflowModel& model, const Gains& gains,
                           const LoopState& state, std::size_t d, double v);

// The argument of the saturation in the reduced integrator update:
// w + sigma f(x) - sigma min(w + v, a - x) - k2 (x - x_star).
double reduced_presaturation(const Scenario& sc, const OutflowModel& model, const Gains& gains,
                             const ReducedState& state, std::size_t d, double v);

// One step of the reduced 2-D system with explicit disturbance inputs (d, v).
ReducedState reduced_step_disturbed(const Scenario& sc, const OutflowModel& model,
                                    const Gains& gains, const ReducedState& state, std::size_t d,
                                    double v);

// Disturbance-free reduced step (v = v_star). Defined only for a single-member
// model; throws AmbiguityError otherwise.
ReducedState reduced_step(const Scenario& sc, const OutflowModel& model, const Gains& gains,
                          const ReducedState& state);

// --- scenario validation (drives the `check` subcommand) ---

struct ScenarioCheck {
  bool members_ok = false;       // non-empty, 0 < p <= 1, c > 0, delta > 0
  std::string member_violation;  // first violation, empty when ok
  bool ranges_ok = false;        // a > 0, 0 <= b_min < b_max, x* in (0,a), v* >= 0
  std::string range_violation;
  bool outflow_bounded = false;  // 0 <= f(d,x) <= x on the grid, every d
  double outflow_worst_margin = 0.0;
  double outflow_worst_x = 0.0;
  std::size_t outflow_worst_d = 0;
  bool equilibrium_ok = false;  // |f(d,x*) - u* - v*| within tolerance, every d
  double equilibrium_worst_residual = 0.0;
  std::size_t equilibrium_worst_d = 0;
  bool input_interior = false;   // u* strictly inside (b_min, b_max)
  bool inflow_headroom = false;  // u* + v* < a - x*
  bool global_headroom = false;  // x* + v* + b_max < a (info; required by global analyses only)
  double global_headroom_margin = 0.0;

  bool pass() const {
    return members_ok && ranges_ok && outflow_bounded && equilibrium_ok && input_interior &&
           inflow_headroom;
  }
};

// Equilibrium residual tolerance: 1e-9 * max(1, u* + v*), relative.
ScenarioCheck check_scenario(const Scenario& sc, const OutflowModel& model, int grid_n = 10000);

}  // namespace pireg
