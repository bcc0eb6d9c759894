#pragma once

#include <functional>
#include <vector>

#include "pireg/dynamics.hpp"
#include "pireg/exec.hpp"

namespace pireg {

enum class StabilityBranch { complex_pair, real_pair, unstable };

// Verdict of the second-order characteristic test s^2 + b s + c for the
// linearized reduced loop, plus the three triangle margins in (s, k2) space
// with s = 1 - f'(x*) - sigma.
struct LocalVerdict {
  double b = 0.0;
  double c = 0.0;
  double s = 0.0;
  bool stable = false;
  StabilityBranch branch = StabilityBranch::unstable;
  double margin_k2 = 0.0;    // k2 > 0
  double margin_outer = 0.0; // 2 + 2 s + k2 > 0
  double margin_unit = 0.0;  // s + k2 < 1
};

LocalVerdict local_verdict(double fprime_at_xstar, const Gains& gains);

struct TriangleCell {
  double s = 0.0;
  double k2 = 0.0;
  bool stable = false;
  StabilityBranch branch = StabilityBranch::unstable;
  bool slope_cert_ok = false;  // slope-matched certificate applicable here
};

struct TriangleMap {
  double s_lo = 0.0, s_hi = 0.0, k2_lo = 0.0, k2_hi = 0.0;
  int ns = 0, nk = 0;
  std::vector<TriangleCell> cells;  // s-major: cells[is * nk + ik]
  const TriangleCell& at(int is, int ik) const {
    return cells[static_cast<std::size_t>(is) * static_cast<std::size_t>(nk) +
                 static_cast<std::size_t>(ik)];
  }
};

// Classifies every (s, k2) grid point; grid endpoints inclusive. The gains at
// a point are recovered from k1 = 1 - f'(x*) - s - k2.
TriangleMap gain_triangle_map(double fprime_at_xstar, double s_lo, double s_hi, double k2_lo,
                              double k2_hi, int ns, int nk, Exec exec = Exec::parallel);
TriangleMap gain_triangle_map_serial(double fprime_at_xstar, double s_lo, double s_hi,
                                     double k2_lo, double k2_hi, int ns, int nk);

// The two region-of-attraction certificate constructions. CLI ids: 21 maps to
// slope_matched (shape from q = (sigma + f'(x*))/2), 22 to gain_matched
// (F = 1 - k1, g = 1 - k2).
enum class RoaMethod { slope_matched, gain_matched };

struct RoaApplicability {
  bool applicable = false;
  double q = 0.0;         // (sigma + f'(x*)) / 2 (slope_matched diagnostics)
  double deviation = 0.0; // |k2 - q^2| or |f'(x*) - 1 + k1|
  double bound = 0.0;     // (|1-q| - 1)^2 or (1 - |1-k2|) / (k2 + 1 - |1-k2|)
};

// Requires local exponential stability; throws RefusalError otherwise.
RoaApplicability roa_applicability(const OutflowModel& model, const Scenario& sc,
                                   const Gains& gains, RoaMethod method);

struct RoaCertificate {
  RoaMethod method = RoaMethod::slope_matched;
  double q = 0.0;      // slope_matched shape parameter; 1 - g in general
  double F = 0.0;      // linearization slope the deviation is measured against
  double g = 0.0;      // Lyapunov shape parameter, |g| < 1
  double M = 0.0;      // Lyapunov weight, > 1
  double L = 0.0;      // slope-deviation bound
  double eta = 0.0;    // radius at which the deviation bound is attained
  double rho = 0.0;    // sublevel radius of the certified region
  double lambda_at_rho = 0.0;  // contraction factor at the full sublevel radius
  double interval_lo = 0.0;    // admissible M interval at the certificate L
  double interval_hi = 0.0;
  // gains snapshot, so V and the contraction factor are functions of the
  // certificate alone
  double sigma = 0.0;
  double k2 = 0.0;
};

// Builds the certificate; throws RefusalError when not applicable and
// CertificateError when M falls outside its admissible interval.
RoaCertificate roa_certificate(const OutflowModel& model, const Scenario& sc, const Gains& gains,
                               RoaMethod method, int scan_n = 10000);

// Smallest radius r such that max{dev(xi) : xi in [0,a], |xi - x_star| <= r}
// reaches `bound` (uniform scan + bisection to 1e-10). Falls back to
// min(x_star, a - x_star) when the bound is never reached on [0, a].
double deviation_radius(const std::function<double(double)>& dev, double x_star, double a,
                        double bound, int scan_n);

// max{|f'(xi) - F| : xi in [0,a], |xi - x_star| <= radius}, scanned with
// endpoints included.
double effective_lipschitz(const RoaCertificate& cert, const Scenario& sc,
                           const OutflowModel& model, double radius, int scan_n = 2000);

struct ContractionFactor {
  double lambda = 0.0;
  double term_transfer = 0.0;  // 1/M + |2 - sigma - g - F| + L
  double term_state = 0.0;     // |g| + M |k2 + (1-F-sigma-g)(1-g)| + M L |1-g|
  bool contractive = false;    // lambda < 1
};

// Fact-style contraction factor at a caller-supplied effective slope bound.
// lambda >= 1 is flagged, not thrown: the asymptotic claim still stands.
ContractionFactor contraction_factor(const RoaCertificate& cert, double effective_L);

// V(x, w) = |x - x*| + M |w + v* - f(x) + (1 - g)(x - x*)|; zero exactly at
// the equilibrium. Single-member models only.
double lyapunov_value(const RoaCertificate& cert, const Scenario& sc, const OutflowModel& model,
                      double x, double w);

// Strict sublevel test V(x, w) < rho; false for x outside [0, a].
bool in_roa(const RoaCertificate& cert, const Scenario& sc, const OutflowModel& model, double x,
            double w);

// One row of the level curve V = rho: at abscissa x the curve consists of the
// two branches w = f(x) - v* - (1-g)(x - x*) -+ (rho - |x - x*|)/M.
struct BoundaryPoint {
  double x = 0.0;
  double w_lower = 0.0;
  double w_upper = 0.0;
};

std::vector<BoundaryPoint> roa_boundary(const RoaCertificate& cert, const Scenario& sc,
                                        const OutflowModel& model, int n_points = 512);

}  // namespace pireg
