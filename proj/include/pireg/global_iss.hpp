#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "pireg/dynamics.hpp"
#include "pireg/exec.hpp"

namespace pireg {

// Sector-condition parameter set for the global analysis. Serialized as the
// "h2" section of a scenario file.
struct SectorBounds {
  double r = 0.0;        // feedforward slope, r <= (b_min - u*) / (a - v* - x* - b_max)
  double q = 1.0;        // negative-side weight in (0, 1]
  double L = 0.0;        // congested-case contraction in [0, 1)
  double M = 1.0;        // Lyapunov weight > 1
  double lambda1 = 0.0;  // above-set-point sector rate in [0, 1)
  double gamma1 = 0.0;   // above-set-point gain in (0, 1 - lambda1)
  double lambda2 = 0.0;  // below-set-point sector rate in [0, 1)
  double gamma2 = 0.0;   // below-set-point gain in (0, 1 - lambda2)

  double beta(const Gains& gains) const { return gains.k1 + gains.k2 + r; }
};

struct SectorBoundsCheck {
  bool ok = false;
  std::vector<std::string> violations;
  double r_bound = 0.0;  // (b_min - u*) / (a - v* - x* - b_max)
  double beta = 0.0;
};

SectorBoundsCheck validate_sector_bounds(const SectorBounds& p, const Scenario& sc,
                                         const Gains& gains);

// Worst margin of one sector inequality over the verification grid; a
// nonnegative worst margin means the inequality holds everywhere sampled.
struct MarginRecord {
  std::string name;
  double worst = 0.0;
  double worst_x = 0.0;
  std::size_t worst_d = 0;
  bool pass = false;
};

struct SectorReport {
  std::vector<MarginRecord> margins;
  int grid_n = 0;
  bool pass = false;
  // The congested-region inequalities are checked both in their scaled form
  // and in the raw pre-division form; a sign disagreement between the two is
  // flagged instead of silently resolved.
  bool forms_disagree = false;
};

// Grid verification of the sector conditions on their three x-intervals for
// every member of D. Near-zero grid points are re-checked on a 4x refined
// local grid. Refuses when the headroom premise x* + v* + b_max < a fails,
// when grid_n < 100, or when the parameter set is invalid.
SectorReport verify_sector_conditions(const OutflowModel& model, const Scenario& sc,
                                      const Gains& gains, const SectorBounds& params, int grid_n,
                                      Exec exec = Exec::parallel);
SectorReport verify_sector_conditions_serial(const OutflowModel& model, const Scenario& sc,
                                             const Gains& gains, const SectorBounds& params,
                                             int grid_n);

struct IssCertificate {
  double lambda = 0.0;  // decay factor
  double gamma = 0.0;   // input gain
  double margin = 0.0;  // saturation margin (1 - lambda) a / gamma
  // lambda candidates, reported for diagnostics
  double m_inv_term = 0.0;  // 1/M + |1 - beta|
  double case_congested = 0.0;  // L
  double case_above = 0.0;      // lambda1 + M gamma1
  double case_below = 0.0;      // lambda2 + M gamma2
  // weight conditions: gain_first is 1 + G |1 - beta| < G with
  // G = min_i (1 - lambda_i) / gamma_i; weight_window is 1/(1-|1-beta|) < M < G.
  double gain_min = 0.0;
  double m_lower = 0.0;
  bool gain_first = false;
  bool weight_window = false;
  bool valid = false;  // lambda < 1 and both weight conditions hold
};

IssCertificate iss_certificate(const Gains& gains, const SectorBounds& params, const Scenario& sc);

// Right side of the trajectory estimate at time t = v_history.size():
// lambda^t M (1+|r|+|k1|+|k2|) (|x0-x*| + |y0-x*| + |w0-u*|)
//   + gamma/(1-lambda) max_i |v(i) - v*|.
double iss_bound(const IssCertificate& cert, const Scenario& sc, const Gains& gains,
                 const SectorBounds& params, const LoopState& initial,
                 std::span<const double> v_history);

// Piecewise weight g(z) = z for z >= 0, -q z for z < 0.
double one_sided_weight(double q, double z);

// ISS Lyapunov function V(y, w) = g(y - x*) + M |w - P(u* + r (y - x*))|.
double iss_lyapunov(const Scenario& sc, const SectorBounds& params, double y, double w);

// Tightest allowable outflow band implied by the sector conditions at one
// abscissa; the band is the intersection over every region containing x.
struct EnvelopePoint {
  double x = 0.0;
  double f_min = 0.0;
  double f_max = 0.0;
};

std::vector<EnvelopePoint> sector_envelope(const Scenario& sc, const Gains& gains,
                                           const SectorBounds& params, int n_points = 2001);

enum class VerdictState { pass, boundary, fail };

std::string to_string(VerdictState v);

struct RootRecord {
  double y = 0.0;
  double residual = 0.0;
  double bracket_lo = 0.0;
  double bracket_hi = 0.0;
};

// Necessary stabilizability conditions: k2 > 0; every root of
// f(d,y) = min(b_max + v*, a - y) lies in (x*, a]; every root of
// f(d,y) = min(b_min + v*, a - y) lies in [0, x*]. A root within tolerance of
// x* yields the separate boundary verdict.
struct NecessaryReport {
  bool k2_positive = false;
  std::vector<std::vector<RootRecord>> bmax_roots;  // per member
  std::vector<std::vector<RootRecord>> bmin_roots;  // per member
  std::vector<double> tangency_warnings;            // x locations of suspected double roots
  VerdictState bmax_condition = VerdictState::fail;
  VerdictState bmin_condition = VerdictState::fail;
  bool pass() const {
    return k2_positive && bmax_condition == VerdictState::pass &&
           bmin_condition == VerdictState::pass;
  }
};

NecessaryReport necessary_conditions(const OutflowModel& model, const Scenario& sc,
                                     const Gains& gains, int scan_n = 10000);

}  // namespace pireg
