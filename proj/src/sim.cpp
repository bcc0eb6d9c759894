#include "pireg/sim.hpp"

#include <algorithm>
#include <cmath>

namespace pireg {

namespace {

constexpr double kSaturationTol = 1e-12;

// Inclusive start index of the final-10% window of a horizon-T trajectory.
std::size_t tail_start(std::size_t n_states) {
  const std::size_t T = n_states - 1;
  return T - T / 10;
}

template <class States>
bool tail_hits_capacity(const States& states, double a) {
  for (std::size_t t = tail_start(states.size()); t < states.size(); ++t) {
    if (std::abs(states[t].x - a) <= kSaturationTol) return true;
  }
  return false;
}

template <class States>
double tail_deviation(const States& states, double x_star) {
  double worst = 0.0;
  for (std::size_t t = tail_start(states.size()); t < states.size(); ++t) {
    worst = std::max(worst, std::abs(states[t].x - x_star));
  }
  return worst;
}

}  // namespace

void DisturbanceSequence::validate(const OutflowModel& model) const {
  if (d_seq.empty() || v_seq.empty()) {
    throw DomainError("disturbance sequence: d_seq and v_seq must be non-empty");
  }
  for (double v : v_seq) {
    if (!(v >= 0.0)) throw DomainError("disturbance sequence: every v must be nonnegative");
  }
  for (std::size_t d : d_seq) {
    if (d >= model.size()) throw DomainError("disturbance sequence: member index out of range");
  }
}

Trajectory rollout_full(const Scenario& sc, const OutflowModel& model, const Gains& gains,
                        const LoopState& initial, const DisturbanceSequence& dist, std::int64_t T) {
  if (T < 1) throw DomainError("rollout_full: horizon must be >= 1");
  dist.validate(model);
  Trajectory traj;
  traj.states.reserve(static_cast<std::size_t>(T) + 1);
  traj.applied_u.reserve(static_cast<std::size_t>(T));
  traj.states.push_back(initial);
  LoopState s = initial;
  for (std::int64_t t = 0; t < T; ++t) {
    s = closed_loop_step(sc, model, gains, s, dist.d_at(t), dist.v_at(t));
    traj.states.push_back(s);
    traj.applied_u.push_back(s.w);  // w+ carries the input just applied
  }
  return traj;
}

ReducedTrajectory rollout_reduced(const Scenario& sc, const OutflowModel& model,
                                  const Gains& gains, const ReducedState& initial, std::int64_t T) {
  if (T < 1) throw DomainError("rollout_reduced: horizon must be >= 1");
  ReducedTrajectory traj;
  traj.states.reserve(static_cast<std::size_t>(T) + 1);
  traj.states.push_back(initial);
  ReducedState s = initial;
  for (std::int64_t t = 0; t < T; ++t) {
    s = reduced_step(sc, model, gains, s);
    traj.states.push_back(s);
  }
  return traj;
}

bool detect_saturation(const Trajectory& traj, double a) {
  return tail_hits_capacity(traj.states, a);
}

bool detect_saturation(const ReducedTrajectory& traj, double a) {
  return tail_hits_capacity(traj.states, a);
}

double convergence_metric(const Trajectory& traj, double x_star) {
  return tail_deviation(traj.states, x_star);
}

double convergence_metric(const ReducedTrajectory& traj, double x_star) {
  return tail_deviation(traj.states, x_star);
}

}  // namespace pireg
