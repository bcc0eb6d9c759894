#include "pireg/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

namespace pireg {

namespace {

void require_member(const OutflowModel& model, std::size_t d) {
  if (d >= model.members.size()) {
    throw DomainError("outflow: member index " + std::to_string(d) + " out of range (model has " +
                      std::to_string(model.members.size()) + " members)");
  }
}

void require_storage(double x, double a, const char* who) {
  if (!(x >= 0.0) || !(x <= a)) {
    char buf[128];
    std::snprintf(buf, sizeof buf, "%s: storage %.17g outside [0, %.17g]", who, x, a);
    throw DomainError(buf);
  }
}

double clamp_storage(double x, double a) { return std::max(0.0, std::min(x, a)); }

}  // namespace

double saturate(double v, double lo, double hi) {
  if (lo > hi) throw DomainError("saturate: lo > hi");
  return std::max(lo, std::min(v, hi));
}

double outflow(const OutflowModel& model, std::size_t d, double x, double a) {
  require_member(model, d);
  require_storage(x, a, "outflow");
  const OutflowMember& m = model.members[d];
  const double t = std::pow(x, m.delta);
  return m.p * x * std::exp(-m.c * t);
}

double outflow_derivative(const OutflowModel& model, std::size_t d, double x, double a) {
  require_member(model, d);
  require_storage(x, a, "outflow_derivative");
  const OutflowMember& m = model.members[d];
  const double t = std::pow(x, m.delta);
  return m.p * std::exp(-m.c * t) * (1.0 - m.c * m.delta * t);
}

double plant_step(const Scenario& sc, const OutflowModel& model, double x, double u, std::size_t d,
                  double v) {
  require_storage(x, sc.a, "plant_step");
  if (!(u >= sc.b_min) || !(u <= sc.b_max)) throw DomainError("plant_step: u outside [b_min, b_max]");
  if (!(v >= 0.0)) throw DomainError("plant_step: v must be nonnegative");
  const double fx = outflow(model, d, x, sc.a);
  const double next = x - fx + std::min(u + v, sc.a - x);
  return clamp_storage(next, sc.a);
}

double pi_control(const Gains& gains, const Scenario& sc, double x, double y, double w) {
  return saturate(w - gains.k1 * (x - y) - gains.k2 * (x - sc.x_star), sc.b_min, sc.b_max);
}

LoopState closed_loop_step(const Scenario& sc, const OutflowModel& model, const Gains& gains,
                           const LoopState& state, std::size_t d, double v) {
  require_storage(state.x, sc.a, "closed_loop_step");
  require_storage(state.y, sc.a, "closed_loop_step");
  const double u = pi_control(gains, sc, state.x, state.y, state.w);
  const double next_x = plant_step(sc, model, state.x, u, d, v);
  return LoopState{next_x, state.x, u};
}

double reduced_presaturation(const Scenario& sc, const OutflowModel& model, const Gains& gains,
                             const ReducedState& state, std::size_t d, double v) {
  const double fx = outflow(model, d, state.x, sc.a);
  const double inflow = std::min(state.w + v, sc.a - state.x);
  const double sigma = gains.sigma();
  return state.w + sigma * fx - sigma * inflow - gains.k2 * (state.x - sc.x_star);
}

ReducedState reduced_step_disturbed(const Scenario& sc, const OutflowModel& model,
                                    const Gains& gains, const ReducedState& state, std::size_t d,
                                    double v) {
  require_storage(state.x, sc.a, "reduced_step");
  if (!(v >= 0.0)) throw DomainError("reduced_step: v must be nonnegative");
  const double fx = outflow(model, d, state.x, sc.a);
  const double inflow = std::min(state.w + v, sc.a - state.x);
  const double next_x = clamp_storage(state.x - fx + inflow, sc.a);
  const double sigma = gains.sigma();
  const double arg = state.w + sigma * fx - sigma * inflow - gains.k2 * (state.x - sc.x_star);
  return ReducedState{next_x, saturate(arg, sc.b_min, sc.b_max)};
}

ReducedState reduced_step(const Scenario& sc, const OutflowModel& model, const Gains& gains,
                          const ReducedState& state) {
  if (model.size() != 1) {
    throw AmbiguityError("reduced_step: the reduced system is disturbance-free and needs exactly "
                         "one outflow member, got " +
                         std::to_string(model.size()));
  }
  return reduced_step_disturbed(sc, model, gains, state, 0, sc.v_star);
}

ScenarioCheck check_scenario(const Scenario& sc, const OutflowModel& model, int grid_n) {
  ScenarioCheck rep;
  if (grid_n < 2) grid_n = 2;

  rep.members_ok = !model.members.empty();
  if (!rep.members_ok) rep.member_violation = "outflow model has no members";
  for (std::size_t d = 0; d < model.members.size() && rep.members_ok; ++d) {
    const OutflowMember& m = model.members[d];
    if (!(m.p > 0.0) || !(m.p <= 1.0)) {
      rep.members_ok = false;
      rep.member_violation = "member " + std::to_string(d) + ": p must be in (0, 1]";
    } else if (!(m.c > 0.0)) {
      rep.members_ok = false;
      rep.member_violation = "member " + std::to_string(d) + ": c must be > 0";
    } else if (!(m.delta > 0.0)) {
      rep.members_ok = false;
      rep.member_violation = "member " + std::to_string(d) + ": delta must be > 0";
    }
  }

  rep.ranges_ok = true;
  if (!(sc.a > 0.0)) {
    rep.ranges_ok = false;
    rep.range_violation = "a must be > 0";
  } else if (!(sc.b_min >= 0.0) || !(sc.b_min < sc.b_max)) {
    rep.ranges_ok = false;
    rep.range_violation = "bounds must satisfy 0 <= b_min < b_max";
  } else if (!(sc.x_star > 0.0) || !(sc.x_star < sc.a)) {
    rep.ranges_ok = false;
    rep.range_violation = "x_star must lie strictly inside (0, a)";
  } else if (!(sc.v_star >= 0.0)) {
    rep.ranges_ok = false;
    rep.range_violation = "v_star must be nonnegative";
  }

  if (!rep.members_ok || !rep.ranges_ok) return rep;

  // 0 <= f(d,x) <= x sampled on a uniform grid over [0, a].
  rep.outflow_bounded = true;
  rep.outflow_worst_margin = std::numeric_limits<double>::infinity();
  for (std::size_t d = 0; d < model.members.size(); ++d) {
    for (int i = 0; i <= grid_n; ++i) {
      const double x = sc.a * static_cast<double>(i) / static_cast<double>(grid_n);
      const double fx = outflow(model, d, x, sc.a);
      const double margin = std::min(fx, x - fx);
      if (margin < rep.outflow_worst_margin) {
        rep.outflow_worst_margin = margin;
        rep.outflow_worst_x = x;
        rep.outflow_worst_d = d;
      }
    }
  }
  rep.outflow_bounded = rep.outflow_worst_margin >= 0.0;

  const double inflow_star = sc.u_star + sc.v_star;
  const double tol = 1e-9 * std::max(1.0, inflow_star);
  rep.equilibrium_ok = true;
  rep.equilibrium_worst_residual = 0.0;
  for (std::size_t d = 0; d < model.members.size(); ++d) {
    const double resid = std::abs(outflow(model, d, sc.x_star, sc.a) - inflow_star);
    if (resid > rep.equilibrium_worst_residual) {
      rep.equilibrium_worst_residual = resid;
      rep.equilibrium_worst_d = d;
    }
  }
  rep.equilibrium_ok = rep.equilibrium_worst_residual <= tol;

  rep.input_interior = sc.u_star > sc.b_min && sc.u_star < sc.b_max;
  rep.inflow_headroom = inflow_star < sc.a - sc.x_star;
  rep.global_headroom_margin = sc.a - (sc.x_star + sc.v_star + sc.b_max);
  rep.global_headroom = rep.global_headroom_margin > 0.0;
  return rep;
}

}  // namespace pireg
