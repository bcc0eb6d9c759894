#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "pireg/dynamics.hpp"

namespace pireg {

// Disturbance inputs for a rollout. Sequences shorter than the horizon are
// extended cyclically.
struct DisturbanceSequence {
  std::vector<std::size_t> d_seq;
  std::vector<double> v_seq;

  static DisturbanceSequence constant(std::size_t d, double v) {
    return DisturbanceSequence{{d}, {v}};
  }
  std::size_t d_at(std::int64_t t) const {
    return d_seq[static_cast<std::size_t>(t) % d_seq.size()];
  }
  double v_at(std::int64_t t) const { return v_seq[static_cast<std::size_t>(t) % v_seq.size()]; }
  // every v >= 0, every d a valid member index, both sequences non-empty
  void validate(const OutflowModel& model) const;
};

struct Trajectory {
  std::vector<LoopState> states;  // length T + 1
  std::vector<double> applied_u;  // length T; applied_u[t] moves state t to t+1
  std::int64_t horizon() const { return static_cast<std::int64_t>(states.size()) - 1; }
};

struct ReducedTrajectory {
  std::vector<ReducedState> states;  // length T + 1
  std::int64_t horizon() const { return static_cast<std::int64_t>(states.size()) - 1; }
};

Trajectory rollout_full(const Scenario& sc, const OutflowModel& model, const Gains& gains,
                        const LoopState& initial, const DisturbanceSequence& dist, std::int64_t T);

ReducedTrajectory rollout_reduced(const Scenario& sc, const OutflowModel& model,
                                  const Gains& gains, const ReducedState& initial, std::int64_t T);

// True iff x(t) reaches the capacity a (within 1e-12) somewhere in the final
// 10% of the horizon; a finite-horizon proxy for recurrent saturation.
bool detect_saturation(const Trajectory& traj, double a);
bool detect_saturation(const ReducedTrajectory& traj, double a);

// max over the final 10% of steps of |x(t) - x_star|.
double convergence_metric(const Trajectory& traj, double x_star);
double convergence_metric(const ReducedTrajectory& traj, double x_star);

}  // namespace pireg
