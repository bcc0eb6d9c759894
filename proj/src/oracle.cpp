#include "pireg/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace pireg {

const char* to_string(CellVerdict v) {
  switch (v) {
    case CellVerdict::converged: return "converged";
    case CellVerdict::diverged_to_spurious: return "diverged-to-spurious";
    case CellVerdict::saturated: return "saturated";
    case CellVerdict::undecided: return "undecided";
  }
  return "undecided";
}

std::vector<std::array<double, 2>> spurious_fixed_points(const Scenario& sc,
                                                         const OutflowModel& model, int scan_n) {
  std::vector<std::array<double, 2>> targets;
  const auto low = scan_roots(
      [&](double y) { return outflow(model, 0, y, sc.a) - std::min(sc.b_min + sc.v_star, sc.a - y); },
      0.0, sc.a, scan_n, 1e-12);
  for (const ScanRoot& r : low.roots) {
    if (r.root > sc.x_star) targets.push_back({r.root, sc.b_min});
  }
  const auto high = scan_roots(
      [&](double y) { return outflow(model, 0, y, sc.a) - std::min(sc.b_max + sc.v_star, sc.a - y); },
      0.0, sc.a, scan_n, 1e-12);
  for (const ScanRoot& r : high.roots) {
    if (r.root < sc.x_star) targets.push_back({r.root, sc.b_max});
  }
  return targets;
}

namespace {

CellVerdict classify_cell(const Scenario& sc, const OutflowModel& model, const Gains& gains,
                          double x0, double w0, std::int64_t T, double tol,
                          std::span<const std::array<double, 2>> targets) {
  const double exit_tol = tol * 1e-3;
  auto eq_dist = [&](const ReducedState& s) {
    return std::abs(s.x - sc.x_star) + std::abs(s.w - sc.u_star);
  };
  ReducedState s{x0, w0};
  for (std::int64_t t = 0; t < T; ++t) {
    const ReducedState next = reduced_step(sc, model, gains, s);
    if (eq_dist(next) < exit_tol) return CellVerdict::converged;
    if (next.x == s.x && next.w == s.w) {
      // settled on an exact fixed point away from the equilibrium
      return eq_dist(next) < tol ? CellVerdict::converged : CellVerdict::diverged_to_spurious;
    }
    s = next;
  }
  if (eq_dist(s) < tol) return CellVerdict::converged;
  for (const auto& tgt : targets) {
    if (std::abs(s.x - tgt[0]) + std::abs(s.w - tgt[1]) < tol) {
      return CellVerdict::diverged_to_spurious;
    }
  }
  if (std::abs(s.x - sc.a) <= 1e-12) return CellVerdict::saturated;
  return CellVerdict::undecided;
}

RoaGrid run_brute_force(const Scenario& sc, const OutflowModel& model, const Gains& gains,
                        const GridSpec& grid, std::int64_t T, double tol, bool parallel) {
  if (T < 1000) throw RefusalError("brute_force_roa: horizon must be >= 1000");
  if (grid.nx < 50 || grid.nw < 50) {
    throw RefusalError("brute_force_roa: need at least 50 cells per axis");
  }
  if (model.size() != 1) {
    throw AmbiguityError("brute_force_roa: the reduced system needs exactly one outflow member");
  }
  if (!(grid.x_lo >= 0.0) || !(grid.x_hi <= sc.a) || !(grid.x_lo < grid.x_hi) ||
      !(grid.w_lo < grid.w_hi)) {
    throw RefusalError("brute_force_roa: grid must lie inside [0, a] x R with nonempty ranges");
  }
  if (!(sc.v_star >= 0.0)) throw DomainError("brute_force_roa: v_star must be nonnegative");
  RoaGrid out;
  out.spec = grid;
  out.horizon = T;
  out.tol = tol;
  out.spurious_targets = spurious_fixed_points(sc, model);
  out.verdicts.assign(static_cast<std::size_t>(grid.nx) * static_cast<std::size_t>(grid.nw),
                      CellVerdict::undecided);
  const std::int64_t total = static_cast<std::int64_t>(out.verdicts.size());
  const std::span<const std::array<double, 2>> targets{out.spurious_targets};
#pragma omp parallel for schedule(dynamic, 64) if (parallel)
  for (std::int64_t idx = 0; idx < total; ++idx) {
    const int ix = static_cast<int>(idx / grid.nw);
    const int iw = static_cast<int>(idx % grid.nw);
    out.verdicts[static_cast<std::size_t>(idx)] =
        classify_cell(sc, model, gains, out.cell_x(ix), out.cell_w(iw), T, tol, targets);
  }
  return out;
}

}  // namespace

RoaGrid brute_force_roa(const Scenario& sc, const OutflowModel& model, const Gains& gains,
                        const GridSpec& grid, std::int64_t T, double tol, Exec exec) {
  return run_brute_force(sc, model, gains, grid, T, tol, exec == Exec::parallel);
}

RoaGrid brute_force_roa_serial(const Scenario& sc, const OutflowModel& model, const Gains& gains,
                               const GridSpec& grid, std::int64_t T, double tol) {
  return run_brute_force(sc, model, gains, grid, T, tol, false);
}

double fd_derivative_check(const OutflowModel& model, std::size_t d, std::span<const double> xs,
                           double h, double a) {
  if (!(h > 0.0)) throw DomainError("fd_derivative_check: h must be positive");
  double worst = 0.0;
  for (double x : xs) {
    const double central =
        (outflow(model, d, x + h, a) - outflow(model, d, x - h, a)) / (2.0 * h);
    worst = std::max(worst, std::abs(outflow_derivative(model, d, x, a) - central));
  }
  return worst;
}

namespace {

struct SampleResult {
  double slack = -std::numeric_limits<double>::infinity();
  double ratio = 0.0;
  bool has_ratio = false;
  double presat_lo = std::numeric_limits<double>::infinity();
  double presat_hi = std::numeric_limits<double>::infinity();
  bool min_branch_free = true;
};

DecreaseScan reduce_samples(const std::vector<SampleResult>& results,
                            const std::vector<std::array<double, 4>>& points) {
  DecreaseScan out;
  out.n_samples = static_cast<int>(results.size());
  out.worst_slack = -std::numeric_limits<double>::infinity();
  out.worst_ratio = 0.0;
  out.presat_margin_lo = std::numeric_limits<double>::infinity();
  out.presat_margin_hi = std::numeric_limits<double>::infinity();
  out.min_branch_free = true;
  for (std::size_t i = 0; i < results.size(); ++i) {
    const SampleResult& r = results[i];
    if (r.slack > out.worst_slack) {
      out.worst_slack = r.slack;
      out.worst_x = points[i][0];
      out.worst_w = points[i][1];
      out.worst_v = points[i][2];
      out.worst_d = static_cast<std::size_t>(points[i][3]);
    }
    if (r.has_ratio) out.worst_ratio = std::max(out.worst_ratio, r.ratio);
    out.presat_margin_lo = std::min(out.presat_margin_lo, r.presat_lo);
    out.presat_margin_hi = std::min(out.presat_margin_hi, r.presat_hi);
    out.min_branch_free = out.min_branch_free && r.min_branch_free;
  }
  return out;
}

}  // namespace

std::vector<ReducedState> sample_omega_rho(const RoaCertificate& cert, const Scenario& sc,
                                           const OutflowModel& model, int n_samples,
                                           std::uint64_t seed) {
  if (n_samples < 1) throw DomainError("sample_omega_rho: need at least one sample");
  std::mt19937_64 rng(seed);
  const double x_lo = std::max(0.0, sc.x_star - cert.rho);
  const double x_hi = std::min(sc.a, sc.x_star + cert.rho);
  std::uniform_real_distribution<double> ux(x_lo, x_hi);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::vector<ReducedState> samples;
  samples.reserve(static_cast<std::size_t>(n_samples));
  std::int64_t attempts_left = 1000 + 100ll * n_samples;
  while (samples.size() < static_cast<std::size_t>(n_samples)) {
    if (--attempts_left < 0) {
      throw RefusalError("sample_omega_rho: rejection sampling failed; sublevel set degenerate?");
    }
    const double x = ux(rng);
    const double half = (cert.rho - std::abs(x - sc.x_star)) / cert.M;
    const double center =
        outflow(model, 0, x, sc.a) - sc.v_star - (1.0 - cert.g) * (x - sc.x_star);
    const double w = center + half * unit(rng);
    if (in_roa(cert, sc, model, x, w)) samples.push_back(ReducedState{x, w});
  }
  return samples;
}

DecreaseScan lyapunov_decrease_scan(const RoaCertificate& cert, const Scenario& sc,
                                    const OutflowModel& model, const Gains& gains, int n_samples,
                                    std::uint64_t seed, Exec exec) {
  const std::vector<ReducedState> samples = sample_omega_rho(cert, sc, model, n_samples, seed);
  std::vector<std::array<double, 4>> points(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    points[i] = {samples[i].x, samples[i].w, sc.v_star, 0.0};
  }
  std::vector<SampleResult> results(samples.size());
  const std::int64_t total = static_cast<std::int64_t>(samples.size());
  const bool parallel = exec == Exec::parallel;
#pragma omp parallel for schedule(static) if (parallel)
  for (std::int64_t i = 0; i < total; ++i) {
    const ReducedState& s = samples[static_cast<std::size_t>(i)];
    SampleResult r;
    const double v = lyapunov_value(cert, sc, model, s.x, s.w);
    const double eff_l = effective_lipschitz(cert, sc, model, v);
    const double lambda = contraction_factor(cert, eff_l).lambda;
    const ReducedState next = reduced_step(sc, model, gains, s);
    const double v_next = lyapunov_value(cert, sc, model, next.x, next.w);
    r.slack = v_next - lambda * v;
    if (v > 0.0) {
      r.ratio = v_next / v;
      r.has_ratio = true;
    }
    const double arg = reduced_presaturation(sc, model, gains, s, 0, sc.v_star);
    r.presat_lo = arg - sc.b_min;
    r.presat_hi = sc.b_max - arg;
    r.min_branch_free = std::min(s.w + sc.v_star, sc.a - s.x) == s.w + sc.v_star;
    results[static_cast<std::size_t>(i)] = r;
  }
  return reduce_samples(results, points);
}

DecreaseScan lyapunov_decrease_scan(const SectorBounds& params, const IssCertificate& cert,
                                    const Scenario& sc, const OutflowModel& model,
                                    const Gains& gains, int n_samples, std::uint64_t seed,
                                    Exec exec) {
  if (n_samples < 1) throw DomainError("lyapunov_decrease_scan: need at least one sample");
  if (model.size() == 0) throw DomainError("lyapunov_decrease_scan: empty outflow model");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uy(0.0, sc.a);
  std::uniform_real_distribution<double> uw(sc.b_min, sc.b_max);
  std::uniform_real_distribution<double> uv(0.0, 2.0 * sc.v_star);
  std::uniform_int_distribution<std::size_t> ud(0, model.size() - 1);
  std::vector<std::array<double, 4>> points(static_cast<std::size_t>(n_samples));
  for (auto& p : points) {
    p = {uy(rng), uw(rng), uv(rng), static_cast<double>(ud(rng))};
  }
  std::vector<SampleResult> results(points.size());
  const std::int64_t total = static_cast<std::int64_t>(points.size());
  const bool parallel = exec == Exec::parallel;
#pragma omp parallel for schedule(static) if (parallel)
  for (std::int64_t i = 0; i < total; ++i) {
    const auto& p = points[static_cast<std::size_t>(i)];
    const double y = p[0], w = p[1], v = p[2];
    const std::size_t d = static_cast<std::size_t>(p[3]);
    SampleResult r;
    const double val = iss_lyapunov(sc, params, y, w);
    const ReducedState next = reduced_step_disturbed(sc, model, gains, ReducedState{y, w}, d, v);
    const double val_next = iss_lyapunov(sc, params, next.x, next.w);
    r.slack = val_next - cert.lambda * val - cert.gamma * std::abs(v - sc.v_star);
    if (val > 0.0) {
      r.ratio = val_next / val;
      r.has_ratio = true;
    }
    r.presat_lo = std::numeric_limits<double>::infinity();
    r.presat_hi = std::numeric_limits<double>::infinity();
    results[static_cast<std::size_t>(i)] = r;
  }
  return reduce_samples(results, points);
}

}  // namespace pireg
