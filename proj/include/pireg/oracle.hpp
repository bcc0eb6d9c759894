#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "pireg/dynamics.hpp"
#include "pireg/errors.hpp"
#include "pireg/exec.hpp"
#include "pireg/global_iss.hpp"
#include "pireg/local_stability.hpp"

namespace pireg {

// Bisection on a bracketing interval; returns the midpoint of the final
// bracket, whose width is at most tol.
template <class F>
double bisect(F&& fn, double lo, double hi, double tol) {
  if (!(lo <= hi)) throw DomainError("bisect: lo must not exceed hi");
  double flo = fn(lo);
  if (flo == 0.0) return lo;
  double fhi = fn(hi);
  if (fhi == 0.0) return hi;
  if ((flo < 0.0) == (fhi < 0.0)) throw BracketingError("bisect: no sign change on the interval");
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;  // bracket at floating-point resolution
    const double fm = fn(mid);
    if (fm == 0.0) return mid;
    if ((fm < 0.0) == (flo < 0.0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

struct ScanRoot {
  double root = 0.0;
  double residual = 0.0;
  double bracket_lo = 0.0;
  double bracket_hi = 0.0;
};

struct RootScan {
  std::vector<ScanRoot> roots;
  std::vector<double> tangency_warnings;  // |fn| locally small without a sign change
};

// All roots of fn on [lo, hi] by uniform sign-change bracketing plus
// bisection; grid values that are exactly zero are taken as roots directly.
template <class F>
RootScan scan_roots(F&& fn, double lo, double hi, int intervals, double bisect_tol,
                    double tangency_tol = 1e-6) {
  if (intervals < 2) throw RefusalError("scan_roots: need at least 2 intervals");
  RootScan out;
  std::vector<double> vals(static_cast<std::size_t>(intervals) + 1);
  auto grid = [&](int i) {
    return lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(intervals);
  };
  for (int i = 0; i <= intervals; ++i) vals[static_cast<std::size_t>(i)] = fn(grid(i));

  auto push_root = [&](double root, double blo, double bhi) {
    if (!out.roots.empty() && std::abs(out.roots.back().root - root) <= 10.0 * bisect_tol) return;
    out.roots.push_back(ScanRoot{root, std::abs(fn(root)), blo, bhi});
  };

  for (int i = 0; i <= intervals; ++i) {
    const double v = vals[static_cast<std::size_t>(i)];
    if (v == 0.0) {
      push_root(grid(i), grid(i), grid(i));
      continue;
    }
    if (i == intervals) break;
    const double vn = vals[static_cast<std::size_t>(i) + 1];
    if (vn == 0.0) continue;  // handled at the next grid point
    if ((v < 0.0) != (vn < 0.0)) {
      const double root = bisect(fn, grid(i), grid(i + 1), bisect_tol);
      push_root(root, grid(i), grid(i + 1));
    }
  }

  // Interior |fn| minima that stay on one side of zero but come suspiciously
  // close: likely double roots, reported as warnings.
  for (int i = 1; i < intervals; ++i) {
    const double v = vals[static_cast<std::size_t>(i)];
    const double vl = vals[static_cast<std::size_t>(i) - 1];
    const double vr = vals[static_cast<std::size_t>(i) + 1];
    if (v == 0.0 || vl == 0.0 || vr == 0.0) continue;
    if ((v < 0.0) == (vl < 0.0) && (v < 0.0) == (vr < 0.0) && std::abs(v) < tangency_tol &&
        std::abs(v) <= std::abs(vl) && std::abs(v) <= std::abs(vr)) {
      bool near_root = false;
      for (const ScanRoot& r : out.roots) {
        if (std::abs(r.root - grid(i)) <= 2.0 * (hi - lo) / intervals) near_root = true;
      }
      if (!near_root) out.tangency_warnings.push_back(grid(i));
    }
  }
  return out;
}

enum class CellVerdict : std::uint8_t { converged, diverged_to_spurious, saturated, undecided };

const char* to_string(CellVerdict v);

struct GridSpec {
  double x_lo = 0.0, x_hi = 0.0;
  double w_lo = 0.0, w_hi = 0.0;
  int nx = 0, nw = 0;
};

struct RoaGrid {
  GridSpec spec;
  std::int64_t horizon = 0;
  double tol = 0.0;
  std::vector<CellVerdict> verdicts;                    // [ix * nw + iw]
  std::vector<std::array<double, 2>> spurious_targets;  // saturated fixed points (y, w)

  double cell_x(int ix) const {
    return spec.x_lo + (spec.x_hi - spec.x_lo) * (static_cast<double>(ix) + 0.5) /
                           static_cast<double>(spec.nx);
  }
  double cell_w(int iw) const {
    return spec.w_lo + (spec.w_hi - spec.w_lo) * (static_cast<double>(iw) + 0.5) /
                           static_cast<double>(spec.nw);
  }
  CellVerdict at(int ix, int iw) const {
    return verdicts[static_cast<std::size_t>(ix) * static_cast<std::size_t>(spec.nw) +
                    static_cast<std::size_t>(iw)];
  }
};

// Exhaustive simulation of the reduced system from every cell center.
// converged: the final state lies within tol of the equilibrium (in the
// |x - x*| + |w - u*| metric); diverged-to-spurious: the trajectory settled at
// a saturated fixed point; saturated: the final storage sits at capacity;
// undecided otherwise. Requires T >= 1000 and at least 50 cells per axis.
RoaGrid brute_force_roa(const Scenario& sc, const OutflowModel& model, const Gains& gains,
                        const GridSpec& grid, std::int64_t T, double tol,
                        Exec exec = Exec::parallel);
RoaGrid brute_force_roa_serial(const Scenario& sc, const OutflowModel& model, const Gains& gains,
                               const GridSpec& grid, std::int64_t T, double tol);

// Worst |closed-form derivative - central difference| over the samples; the
// samples must keep x +- h inside [0, a].
double fd_derivative_check(const OutflowModel& model, std::size_t d, std::span<const double> xs,
                           double h, double a);

struct DecreaseScan {
  double worst_slack = 0.0;  // max of V+ - lambda V - gamma |v - v*|
  double worst_ratio = 0.0;  // max of V+/V over samples with V > 0
  double worst_x = 0.0, worst_w = 0.0, worst_v = 0.0;
  std::size_t worst_d = 0;
  int n_samples = 0;
  // saturation-free evidence over the sampled sublevel (reduced-system scan)
  double presat_margin_lo = 0.0;   // min of (presaturation - b_min)
  double presat_margin_hi = 0.0;   // min of (b_max - presaturation)
  bool min_branch_free = false;    // min(w + v*, a - x) picked w + v* everywhere
};

// Per-sample contraction check inside the certified sublevel set: for each
// sampled point the factor lambda is evaluated at that point's own sublevel
// radius. gamma-term absent (disturbance-free).
DecreaseScan lyapunov_decrease_scan(const RoaCertificate& cert, const Scenario& sc,
                                    const OutflowModel& model, const Gains& gains, int n_samples,
                                    std::uint64_t seed, Exec exec = Exec::parallel);

// One-step dissipation check of the ISS Lyapunov function over
// D x [0, 2 v*] x [0, a] x [b_min, b_max].
DecreaseScan lyapunov_decrease_scan(const SectorBounds& params, const IssCertificate& cert,
                                    const Scenario& sc, const OutflowModel& model,
                                    const Gains& gains, int n_samples, std::uint64_t seed,
                                    Exec exec = Exec::parallel);

// Uniform-in-x rejection sampling of the open sublevel set V < rho; w is drawn
// from the exact per-x interval, so no samples are wasted.
std::vector<ReducedState> sample_omega_rho(const RoaCertificate& cert, const Scenario& sc,
                                           const OutflowModel& model, int n_samples,
                                           std::uint64_t seed);

// Saturated fixed points (y, b_min) with y > x* and (y, b_max) with y < x* of
// the reduced system, located by root scan; these are the spurious targets of
// brute_force_roa.
std::vector<std::array<double, 2>> spurious_fixed_points(const Scenario& sc,
                                                         const OutflowModel& model, int scan_n = 10000);

}  // namespace pireg
