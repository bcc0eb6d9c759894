#include "pireg/global_iss.hpp"

#include <algorithm>
#include <cmath>
#include <iterator>
#include <limits>

#include "pireg/oracle.hpp"

namespace pireg {

namespace {

double positive_part(double z) { return std::max(z, 0.0); }

// The sector conditions are margin functions of (d, x): nonnegative margin
// means the inequality holds at that point. Margins for two-sided conditions
// are split into separate lower/upper records.
struct MarginKernel {
  std::string name;
  double x_lo, x_hi;
  double (*eval)(const Scenario&, const Gains&, const SectorBounds&, double fx, double x);
};

double sat_input(const Scenario& sc, const SectorBounds& p, double x) {
  return std::max(sc.b_min, std::min(sc.u_star + p.r * (x - sc.x_star), sc.b_max));
}

// Combination term shared by the above/below gain bands:
// (1-beta) P(u* + r z) + beta f - beta v* - (beta - k1) z - u*, grouped as
// (P - u*) - beta (P - f + v*) - (beta - k1) z so that it cancels exactly at
// the set-point, where P = u* and f = u* + v* hold bit-for-bit.
double gain_band_term(const Scenario& sc, const Gains& g, const SectorBounds& p, double fx,
                      double x) {
  const double beta = p.beta(g);
  const double z = x - sc.x_star;
  const double pv = sat_input(sc, p, x);
  return (pv - sc.u_star) - beta * (pv - fx + sc.v_star) - (beta - g.k1) * z;
}

// congested region [a - v* - b_max, a]
double margin_congested_lower(const Scenario& sc, const Gains& g, const SectorBounds& p, double fx,
                              double x) {
  const double beta = p.beta(g);
  const double minv = 1.0 / p.M;
  const double zp = positive_part(x - sc.x_star);
  const double floor_inflow = std::max(sc.b_min, sc.a - sc.v_star - x);
  const double bound = -(g.k1 + p.L * minv) / (beta + minv) * zp +
                       (p.L * sc.b_min + sc.u_star - (1.0 + p.L) * floor_inflow) / (beta + minv);
  return (fx + sc.x_star - sc.a) - bound;
}

double margin_congested_upper(const Scenario& sc, const Gains&, const SectorBounds&, double fx,
                              double x) {
  return 0.0 - (fx + sc.x_star - sc.a);
}

double margin_congested_weighted(const Scenario& sc, const Gains& g, const SectorBounds& p,
                                 double fx, double x) {
  const double beta = p.beta(g);
  const double minv = 1.0 / p.M;
  const double zp = positive_part(x - sc.x_star);
  const double rhs = (p.L * minv - g.k1) * zp + sc.u_star - p.L * sc.b_min - (1.0 - p.L) * sc.b_max;
  return rhs - (fx + sc.x_star - sc.a) * (beta - minv);
}

// Raw (pre-division) forms of the congested-region conditions.
double margin_congested_raw_upper(const Scenario& sc, const Gains& g, const SectorBounds& p,
                                  double fx, double x) {
  const double beta = p.beta(g);
  const double minv = 1.0 / p.M;
  const double z = x - sc.x_star;
  const double lhs = (1.0 - p.L) * sc.b_max + beta * (fx + x - sc.a) - sc.u_star;
  const double rhs =
      (beta - g.k1 + p.L * minv) * z - p.L * sc.b_min - minv * (sc.a - fx - sc.x_star);
  return rhs - lhs;
}

double margin_congested_raw_lower(const Scenario& sc, const Gains& g, const SectorBounds& p,
                                  double fx, double x) {
  const double beta = p.beta(g);
  const double minv = 1.0 / p.M;
  const double z = x - sc.x_star;
  const double floor_inflow = std::max(sc.b_min, sc.a - sc.v_star - x);
  const double lhs = (1.0 + p.L) * floor_inflow + beta * (fx + x - sc.a) - sc.u_star;
  const double rhs =
      (beta - g.k1 - p.L * minv) * z + p.L * sc.b_min + minv * (sc.a - fx - sc.x_star);
  return lhs - rhs;
}

// above-set-point region [x*, a - v* - b_min]
double margin_above_sector_lower(const Scenario& sc, const Gains&, const SectorBounds& p,
                                 double fx, double x) {
  const double z = x - sc.x_star;
  const double mid = sat_input(sc, p, x) - fx + sc.v_star;
  return mid - (-(p.lambda1 / p.q + 1.0) * z);
}

double margin_above_sector_upper(const Scenario& sc, const Gains&, const SectorBounds& p,
                                 double fx, double x) {
  const double z = x - sc.x_star;
  const double mid = sat_input(sc, p, x) - fx + sc.v_star;
  return (p.lambda1 - 1.0) * z - mid;
}

double margin_above_gain_band(const Scenario& sc, const Gains& g, const SectorBounds& p, double fx,
                              double x) {
  const double z = x - sc.x_star;
  return p.gamma1 * z - std::abs(gain_band_term(sc, g, p, fx, x));
}

// below-set-point region [0, x*]
double margin_below_sector_lower(const Scenario& sc, const Gains&, const SectorBounds& p,
                                 double fx, double x) {
  const double z = x - sc.x_star;
  const double mid = sat_input(sc, p, x) - fx + sc.v_star;
  return mid - (p.lambda2 - 1.0) * z;
}

double margin_below_sector_upper(const Scenario& sc, const Gains&, const SectorBounds& p,
                                 double fx, double x) {
  const double z = x - sc.x_star;
  const double mid = sat_input(sc, p, x) - fx + sc.v_star;
  return -(p.lambda2 * p.q + 1.0) * z - mid;
}

double margin_below_gain_band(const Scenario& sc, const Gains& g, const SectorBounds& p, double fx,
                              double x) {
  const double z = x - sc.x_star;
  return p.gamma2 * p.q * std::abs(z) - std::abs(gain_band_term(sc, g, p, fx, x));
}

}  // namespace

SectorBoundsCheck validate_sector_bounds(const SectorBounds& p, const Scenario& sc,
                                         const Gains& gains) {
  SectorBoundsCheck out;
  out.beta = p.beta(gains);
  const double denom = sc.a - sc.v_star - sc.x_star - sc.b_max;
  if (!(denom > 0.0)) {
    out.violations.push_back("headroom premise x* + v* + b_max < a fails");
    out.r_bound = -std::numeric_limits<double>::infinity();
  } else {
    out.r_bound = (sc.b_min - sc.u_star) / denom;
    if (!(p.r <= out.r_bound)) {
      out.violations.push_back("r exceeds (b_min - u*) / (a - v* - x* - b_max)");
    }
  }
  if (!(out.beta > 0.0) || !(out.beta < 2.0)) {
    out.violations.push_back("beta = k1 + k2 + r must lie in (0, 2)");
  }
  if (!(p.q > 0.0) || !(p.q <= 1.0)) out.violations.push_back("q must lie in (0, 1]");
  if (!(p.L >= 0.0) || !(p.L < 1.0)) out.violations.push_back("L must lie in [0, 1)");
  if (!(p.M > 1.0)) out.violations.push_back("M must be > 1");
  if (!(p.lambda1 >= 0.0) || !(p.lambda1 < 1.0)) out.violations.push_back("lambda1 must lie in [0, 1)");
  if (!(p.lambda2 >= 0.0) || !(p.lambda2 < 1.0)) out.violations.push_back("lambda2 must lie in [0, 1)");
  if (!(p.gamma1 > 0.0) || !(p.gamma1 < 1.0 - p.lambda1)) {
    out.violations.push_back("gamma1 must lie in (0, 1 - lambda1)");
  }
  if (!(p.gamma2 > 0.0) || !(p.gamma2 < 1.0 - p.lambda2)) {
    out.violations.push_back("gamma2 must lie in (0, 1 - lambda2)");
  }
  out.ok = out.violations.empty();
  return out;
}

namespace {

SectorReport run_sector_verification(const OutflowModel& model, const Scenario& sc,
                                     const Gains& gains, const SectorBounds& params, int grid_n,
                                     bool parallel) {
  if (!(sc.x_star + sc.v_star + sc.b_max < sc.a)) {
    throw RefusalError("sector verification requires the headroom premise x* + v* + b_max < a");
  }
  if (grid_n < 100) throw RefusalError("sector verification: grid_n < 100 is under-resolved");
  const SectorBoundsCheck check = validate_sector_bounds(params, sc, gains);
  if (!check.ok) {
    std::string msg = "sector parameters invalid:";
    for (const std::string& v : check.violations) msg += " [" + v + "]";
    throw RefusalError(msg);
  }

  const double congested_lo = sc.a - sc.v_star - sc.b_max;
  const double above_hi = sc.a - sc.v_star - sc.b_min;
  const MarginKernel kernels[] = {
      {"congested_lower", congested_lo, sc.a, &margin_congested_lower},
      {"congested_upper", congested_lo, sc.a, &margin_congested_upper},
      {"congested_weighted", congested_lo, sc.a, &margin_congested_weighted},
      {"congested_raw_upper", congested_lo, sc.a, &margin_congested_raw_upper},
      {"congested_raw_lower", congested_lo, sc.a, &margin_congested_raw_lower},
      {"above_sector_lower", sc.x_star, above_hi, &margin_above_sector_lower},
      {"above_sector_upper", sc.x_star, above_hi, &margin_above_sector_upper},
      {"above_gain_band", sc.x_star, above_hi, &margin_above_gain_band},
      {"below_sector_lower", 0.0, sc.x_star, &margin_below_sector_lower},
      {"below_sector_upper", 0.0, sc.x_star, &margin_below_sector_upper},
      {"below_gain_band", 0.0, sc.x_star, &margin_below_gain_band},
  };
  constexpr int n_kernels = static_cast<int>(std::size(kernels));

  SectorReport report;
  report.grid_n = grid_n;
  const std::size_t n_members = model.size();
  const std::size_t per_kernel = static_cast<std::size_t>(grid_n) * n_members;
  std::vector<double> margins(per_kernel * n_kernels);

  const std::int64_t total = static_cast<std::int64_t>(margins.size());
#pragma omp parallel for schedule(static) if (parallel)
  for (std::int64_t idx = 0; idx < total; ++idx) {
    const int k = static_cast<int>(idx / static_cast<std::int64_t>(per_kernel));
    const std::size_t rem = static_cast<std::size_t>(idx % static_cast<std::int64_t>(per_kernel));
    const std::size_t d = rem / static_cast<std::size_t>(grid_n);
    const int i = static_cast<int>(rem % static_cast<std::size_t>(grid_n));
    const MarginKernel& ker = kernels[k];
    const double x = ker.x_lo + (ker.x_hi - ker.x_lo) * static_cast<double>(i) /
                                    static_cast<double>(grid_n - 1);
    const double fx = outflow(model, d, x, sc.a);
    margins[static_cast<std::size_t>(idx)] = ker.eval(sc, gains, params, fx, x);
  }

  report.pass = true;
  for (int k = 0; k < n_kernels; ++k) {
    MarginRecord rec;
    rec.name = kernels[k].name;
    rec.worst = std::numeric_limits<double>::infinity();
    for (std::size_t d = 0; d < n_members; ++d) {
      for (int i = 0; i < grid_n; ++i) {
        const double m = margins[static_cast<std::size_t>(k) * per_kernel +
                                 d * static_cast<std::size_t>(grid_n) +
                                 static_cast<std::size_t>(i)];
        if (m < rec.worst) {
          rec.worst = m;
          rec.worst_d = d;
          rec.worst_x = kernels[k].x_lo + (kernels[k].x_hi - kernels[k].x_lo) *
                                              static_cast<double>(i) /
                                              static_cast<double>(grid_n - 1);
        }
      }
    }
    rec.pass = rec.worst >= 0.0;
    report.margins.push_back(rec);
  }

  // Refine around near-zero points at 4x resolution; grid aliasing on thin
  // certificates must not turn a negative margin into a pass.
  const double near_zero = 1e-3;
  const double step_scale = 0.25;
  for (int k = 0; k < n_kernels; ++k) {
    MarginRecord& rec = report.margins[static_cast<std::size_t>(k)];
    const MarginKernel& ker = kernels[k];
    const double step = (ker.x_hi - ker.x_lo) / static_cast<double>(grid_n - 1);
    for (std::size_t d = 0; d < n_members; ++d) {
      for (int i = 0; i < grid_n; ++i) {
        const double m = margins[static_cast<std::size_t>(k) * per_kernel +
                                 d * static_cast<std::size_t>(grid_n) +
                                 static_cast<std::size_t>(i)];
        if (m > near_zero) continue;
        const double x_c = ker.x_lo + step * static_cast<double>(i);
        for (int j = -4; j <= 4; ++j) {
          const double x = std::clamp(x_c + step_scale * step * j, ker.x_lo, ker.x_hi);
          const double refined = ker.eval(sc, gains, params, outflow(model, d, x, sc.a), x);
          if (refined < rec.worst) {
            rec.worst = refined;
            rec.worst_x = x;
            rec.worst_d = d;
          }
        }
      }
    }
    rec.pass = rec.worst >= 0.0;
    report.pass = report.pass && rec.pass;
  }

  // Scaled vs raw congested forms must agree in sign pointwise.
  const int pairs[2][2] = {{0, 4}, {2, 3}};  // lower vs raw_lower, weighted vs raw_upper
  for (const auto& pr : pairs) {
    for (std::size_t d = 0; d < n_members; ++d) {
      for (int i = 0; i < grid_n; ++i) {
        const std::size_t off = d * static_cast<std::size_t>(grid_n) + static_cast<std::size_t>(i);
        const double scaled = margins[static_cast<std::size_t>(pr[0]) * per_kernel + off];
        const double raw = margins[static_cast<std::size_t>(pr[1]) * per_kernel + off];
        if ((scaled < 0.0) != (raw < 0.0)) report.forms_disagree = true;
      }
    }
  }
  return report;
}

}  // namespace

SectorReport verify_sector_conditions(const OutflowModel& model, const Scenario& sc,
                                      const Gains& gains, const SectorBounds& params, int grid_n,
                                      Exec exec) {
  return run_sector_verification(model, sc, gains, params, grid_n, exec == Exec::parallel);
}

SectorReport verify_sector_conditions_serial(const OutflowModel& model, const Scenario& sc,
                                             const Gains& gains, const SectorBounds& params,
                                             int grid_n) {
  return run_sector_verification(model, sc, gains, params, grid_n, false);
}

IssCertificate iss_certificate(const Gains& gains, const SectorBounds& params,
                               const Scenario& sc) {
  IssCertificate cert;
  const double beta = params.beta(gains);
  cert.m_inv_term = 1.0 / params.M + std::abs(1.0 - beta);
  cert.case_congested = params.L;
  cert.case_above = params.lambda1 + params.M * params.gamma1;
  cert.case_below = params.lambda2 + params.M * params.gamma2;
  cert.lambda = std::max({cert.m_inv_term, cert.case_congested, cert.case_above, cert.case_below});
  cert.gamma = 1.0 + params.M * std::abs(gains.k1 + gains.k2) + params.M * std::abs(params.r);
  cert.margin = (1.0 - cert.lambda) * sc.a / cert.gamma;
  cert.gain_min = std::min((1.0 - params.lambda1) / params.gamma1,
                           (1.0 - params.lambda2) / params.gamma2);
  cert.gain_first = 1.0 + cert.gain_min * std::abs(1.0 - beta) < cert.gain_min;
  cert.m_lower = std::abs(1.0 - beta) < 1.0 ? 1.0 / (1.0 - std::abs(1.0 - beta))
                                            : std::numeric_limits<double>::infinity();
  cert.weight_window = cert.m_lower < params.M && params.M < cert.gain_min;
  cert.valid = cert.lambda < 1.0 && cert.gain_first && cert.weight_window;
  return cert;
}

double iss_bound(const IssCertificate& cert, const Scenario& sc, const Gains& gains,
                 const SectorBounds& params, const LoopState& initial,
                 std::span<const double> v_history) {
  if (v_history.empty()) throw DomainError("iss_bound: needs at least one disturbance value");
  double worst_dev = 0.0;
  for (double v : v_history) worst_dev = std::max(worst_dev, std::abs(v - sc.v_star));
  const double transient = params.M *
                           (1.0 + std::abs(params.r) + std::abs(gains.k1) + std::abs(gains.k2)) *
                           (std::abs(initial.x - sc.x_star) + std::abs(initial.y - sc.x_star) +
                            std::abs(initial.w - sc.u_star));
  const double t = static_cast<double>(v_history.size());
  return std::pow(cert.lambda, t) * transient + cert.gamma / (1.0 - cert.lambda) * worst_dev;
}

double one_sided_weight(double q, double z) { return z >= 0.0 ? z : -q * z; }

double iss_lyapunov(const Scenario& sc, const SectorBounds& params, double y, double w) {
  const double ref = std::max(sc.b_min, std::min(sc.u_star + params.r * (y - sc.x_star), sc.b_max));
  return one_sided_weight(params.q, y - sc.x_star) + params.M * std::abs(w - ref);
}

std::vector<EnvelopePoint> sector_envelope(const Scenario& sc, const Gains& gains,
                                           const SectorBounds& params, int n_points) {
  if (n_points < 2) throw RefusalError("sector_envelope: need at least 2 points");
  const double beta = params.beta(gains);
  const double minv = 1.0 / params.M;
  const double congested_lo = sc.a - sc.v_star - sc.b_max;
  const double above_hi = sc.a - sc.v_star - sc.b_min;
  std::vector<EnvelopePoint> pts;
  pts.reserve(static_cast<std::size_t>(n_points));
  for (int i = 0; i < n_points; ++i) {
    const double x = sc.a * static_cast<double>(i) / static_cast<double>(n_points - 1);
    const double z = x - sc.x_star;
    const double pv = sat_input(sc, params, x);
    double f_min = -std::numeric_limits<double>::infinity();
    double f_max = std::numeric_limits<double>::infinity();
    // gain-band term rewritten as A + beta f with
    // A = (P - u*) - beta (P + v*) - (beta - k1) z
    const double band_a =
        (pv - sc.u_star) - beta * (pv + sc.v_star) - (beta - gains.k1) * z;
    if (x >= sc.x_star && x <= above_hi) {
      f_min = std::max(f_min, pv + sc.v_star - (params.lambda1 - 1.0) * z);
      f_max = std::min(f_max, pv + sc.v_star + (params.lambda1 / params.q + 1.0) * z);
      f_min = std::max(f_min, (-params.gamma1 * z - band_a) / beta);
      f_max = std::min(f_max, (params.gamma1 * z - band_a) / beta);
    }
    if (x <= sc.x_star) {
      f_max = std::min(f_max, pv + sc.v_star - (params.lambda2 - 1.0) * z);
      f_min = std::max(f_min, pv + sc.v_star + (params.lambda2 * params.q + 1.0) * z);
      f_min = std::max(f_min, (-params.gamma2 * params.q * std::abs(z) - band_a) / beta);
      f_max = std::min(f_max, (params.gamma2 * params.q * std::abs(z) - band_a) / beta);
    }
    if (x >= congested_lo) {
      f_max = std::min(f_max, sc.a - sc.x_star);
      const double floor_inflow = std::max(sc.b_min, sc.a - sc.v_star - x);
      const double lower_bound =
          -(gains.k1 + params.L * minv) / (beta + minv) * positive_part(z) +
          (params.L * sc.b_min + sc.u_star - (1.0 + params.L) * floor_inflow) / (beta + minv);
      f_min = std::max(f_min, lower_bound + sc.a - sc.x_star);
      const double r_side = (params.L * minv - gains.k1) * positive_part(z) + sc.u_star -
                            params.L * sc.b_min - (1.0 - params.L) * sc.b_max;
      const double scale = beta - minv;
      if (scale > 0.0) {
        f_max = std::min(f_max, r_side / scale + sc.a - sc.x_star);
      } else if (scale < 0.0) {
        f_min = std::max(f_min, r_side / scale + sc.a - sc.x_star);
      }
    }
    pts.push_back(EnvelopePoint{x, f_min, f_max});
  }
  return pts;
}

std::string to_string(VerdictState v) {
  switch (v) {
    case VerdictState::pass: return "pass";
    case VerdictState::boundary: return "boundary";
    case VerdictState::fail: return "fail";
  }
  return "fail";
}

NecessaryReport necessary_conditions(const OutflowModel& model, const Scenario& sc,
                                     const Gains& gains, int scan_n) {
  if (!(sc.x_star + sc.v_star + sc.b_max < sc.a)) {
    throw RefusalError("necessary_conditions requires the headroom premise x* + v* + b_max < a");
  }
  NecessaryReport rep;
  rep.k2_positive = gains.k2 > 0.0;
  rep.bmax_roots.resize(model.size());
  rep.bmin_roots.resize(model.size());

  const double boundary_tol = 1e-9;
  rep.bmax_condition = VerdictState::pass;
  rep.bmin_condition = VerdictState::pass;

  for (std::size_t d = 0; d < model.size(); ++d) {
    const auto upper = scan_roots(
        [&](double y) {
          return outflow(model, d, y, sc.a) - std::min(sc.b_max + sc.v_star, sc.a - y);
        },
        0.0, sc.a, scan_n, 1e-12);
    const auto lower = scan_roots(
        [&](double y) {
          return outflow(model, d, y, sc.a) - std::min(sc.b_min + sc.v_star, sc.a - y);
        },
        0.0, sc.a, scan_n, 1e-12);
    for (const ScanRoot& r : upper.roots) {
      rep.bmax_roots[d].push_back(RootRecord{r.root, r.residual, r.bracket_lo, r.bracket_hi});
      if (std::abs(r.root - sc.x_star) <= boundary_tol) {
        if (rep.bmax_condition == VerdictState::pass) rep.bmax_condition = VerdictState::boundary;
      } else if (r.root < sc.x_star) {
        rep.bmax_condition = VerdictState::fail;
      }
    }
    for (const ScanRoot& r : lower.roots) {
      rep.bmin_roots[d].push_back(RootRecord{r.root, r.residual, r.bracket_lo, r.bracket_hi});
      if (std::abs(r.root - sc.x_star) <= boundary_tol) {
        if (rep.bmin_condition == VerdictState::pass) rep.bmin_condition = VerdictState::boundary;
      } else if (r.root > sc.x_star) {
        rep.bmin_condition = VerdictState::fail;
      }
    }
    for (double t : upper.tangency_warnings) rep.tangency_warnings.push_back(t);
    for (double t : lower.tangency_warnings) rep.tangency_warnings.push_back(t);
  }
  return rep;
}

}  // namespace pireg
