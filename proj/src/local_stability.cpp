#include "pireg/local_stability.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "pireg/oracle.hpp"

namespace pireg {

namespace {

double require_single_member_fprime(const OutflowModel& model, const Scenario& sc) {
  if (model.size() != 1) {
    throw AmbiguityError("local analysis is disturbance-free and needs exactly one outflow member");
  }
  return outflow_derivative(model, 0, sc.x_star, sc.a);
}

TriangleCell classify_triangle_point(double fprime, double s, double k2) {
  const double k1 = 1.0 - fprime - s - k2;
  const LocalVerdict v = local_verdict(fprime, Gains{k1, k2});
  TriangleCell cell;
  cell.s = s;
  cell.k2 = k2;
  cell.stable = v.stable;
  cell.branch = v.branch;
  const double q = 0.5 * (1.0 - s);  // (sigma + f')/2 expressed in s
  const double bound = (std::abs(1.0 - q) - 1.0) * (std::abs(1.0 - q) - 1.0);
  cell.slope_cert_ok = v.stable && q > 0.0 && q < 2.0 && std::abs(k2 - q * q) < bound;
  return cell;
}

TriangleMap make_triangle_map(double fprime, double s_lo, double s_hi, double k2_lo, double k2_hi,
                              int ns, int nk, bool parallel) {
  if (ns < 2 || nk < 2) throw RefusalError("gain_triangle_map: resolution must be >= 2 per axis");
  TriangleMap map;
  map.s_lo = s_lo;
  map.s_hi = s_hi;
  map.k2_lo = k2_lo;
  map.k2_hi = k2_hi;
  map.ns = ns;
  map.nk = nk;
  map.cells.resize(static_cast<std::size_t>(ns) * static_cast<std::size_t>(nk));
  const std::int64_t total = static_cast<std::int64_t>(map.cells.size());
#pragma omp parallel for schedule(static) if (parallel)
  for (std::int64_t idx = 0; idx < total; ++idx) {
    const int is = static_cast<int>(idx / nk);
    const int ik = static_cast<int>(idx % nk);
    const double s = s_lo + (s_hi - s_lo) * static_cast<double>(is) / static_cast<double>(ns - 1);
    const double k2 =
        k2_lo + (k2_hi - k2_lo) * static_cast<double>(ik) / static_cast<double>(nk - 1);
    map.cells[static_cast<std::size_t>(idx)] = classify_triangle_point(fprime, s, k2);
  }
  return map;
}

}  // namespace

LocalVerdict local_verdict(double fprime_at_xstar, const Gains& gains) {
  const double sigma = gains.sigma();
  const double trace = 2.0 - fprime_at_xstar - sigma;
  LocalVerdict v;
  v.b = -trace;
  v.c = 1.0 - fprime_at_xstar - sigma + gains.k2;
  v.s = 1.0 - fprime_at_xstar - sigma;
  const bool complex_pair = trace * trace < 4.0 * v.c && 4.0 * v.c < 4.0;
  const bool real_pair = std::abs(trace) < 2.0 && std::abs(trace) - 1.0 < v.c &&
                         v.c <= 0.25 * trace * trace;
  v.stable = complex_pair || real_pair;
  v.branch = complex_pair ? StabilityBranch::complex_pair
                          : (real_pair ? StabilityBranch::real_pair : StabilityBranch::unstable);
  v.margin_k2 = gains.k2;
  v.margin_outer = 2.0 + 2.0 * v.s + gains.k2;
  v.margin_unit = 1.0 - (v.s + gains.k2);
  return v;
}

TriangleMap gain_triangle_map(double fprime_at_xstar, double s_lo, double s_hi, double k2_lo,
                              double k2_hi, int ns, int nk, Exec exec) {
  return make_triangle_map(fprime_at_xstar, s_lo, s_hi, k2_lo, k2_hi, ns, nk,
                           exec == Exec::parallel);
}

TriangleMap gain_triangle_map_serial(double fprime_at_xstar, double s_lo, double s_hi,
                                     double k2_lo, double k2_hi, int ns, int nk) {
  return make_triangle_map(fprime_at_xstar, s_lo, s_hi, k2_lo, k2_hi, ns, nk, false);
}

RoaApplicability roa_applicability(const OutflowModel& model, const Scenario& sc,
                                   const Gains& gains, RoaMethod method) {
  const double fprime = require_single_member_fprime(model, sc);
  const LocalVerdict verdict = local_verdict(fprime, gains);
  if (!verdict.stable) {
    throw RefusalError("roa certificate: the equilibrium is not locally exponentially stable");
  }
  RoaApplicability app;
  if (method == RoaMethod::slope_matched) {
    app.q = 0.5 * (gains.sigma() + fprime);
    app.deviation = std::abs(gains.k2 - app.q * app.q);
    app.bound = (std::abs(1.0 - app.q) - 1.0) * (std::abs(1.0 - app.q) - 1.0);
    app.applicable = app.q > 0.0 && app.q < 2.0 && app.deviation < app.bound;
  } else {
    app.q = gains.k2;
    app.deviation = std::abs(fprime - 1.0 + gains.k1);
    app.bound = (1.0 - std::abs(1.0 - gains.k2)) / (gains.k2 + 1.0 - std::abs(1.0 - gains.k2));
    app.applicable = gains.k2 > 0.0 && gains.k2 < 2.0 && app.deviation < app.bound;
  }
  return app;
}

double deviation_radius(const std::function<double(double)>& dev, double x_star, double a,
                        double bound, int scan_n) {
  if (scan_n < 2) throw RefusalError("deviation_radius: scan resolution must be >= 2");
  double best = std::numeric_limits<double>::infinity();
  for (int side = 0; side < 2; ++side) {
    const double endpoint = side == 0 ? a : 0.0;
    const double len = std::abs(endpoint - x_star);
    if (len == 0.0) continue;
    double prev_xi = x_star;
    for (int i = 1; i <= scan_n; ++i) {
      const double xi =
          x_star + (endpoint - x_star) * static_cast<double>(i) / static_cast<double>(scan_n);
      if (dev(xi) >= bound) {
        const double crossing =
            bisect([&](double z) { return dev(z) - bound; }, prev_xi, xi, 1e-10);
        best = std::min(best, std::abs(crossing - x_star));
        break;
      }
      prev_xi = xi;
    }
  }
  if (!std::isfinite(best)) return std::min(x_star, a - x_star);
  return best;
}

namespace {

// Admissible M interval of the contraction construction at slope bound L.
// At the certificate's own L the interval degenerates to the single point M,
// so membership is accepted within a 1e-9 relative tolerance; every interior
// sublevel then has M strictly inside.
std::pair<double, double> admissible_m_interval(double sigma, double k2, double F, double g,
                                                double L) {
  const double denom_lo = 1.0 - L - std::abs(2.0 - sigma - g - F);
  const double lo = denom_lo > 0.0 ? 1.0 / denom_lo : std::numeric_limits<double>::infinity();
  const double denom_hi =
      std::abs(k2 + (1.0 - F - sigma - g) * (1.0 - g)) + L * std::abs(1.0 - g);
  const double hi = denom_hi > 0.0 ? (1.0 - std::abs(g)) / denom_hi
                                   : std::numeric_limits<double>::infinity();
  return {lo, hi};
}

}  // namespace

RoaCertificate roa_certificate(const OutflowModel& model, const Scenario& sc, const Gains& gains,
                               RoaMethod method, int scan_n) {
  const double fprime = require_single_member_fprime(model, sc);
  const RoaApplicability app = roa_applicability(model, sc, gains, method);
  if (!app.applicable) {
    throw RefusalError("roa certificate not applicable: deviation " + std::to_string(app.deviation) +
                       " does not stay below bound " + std::to_string(app.bound));
  }

  RoaCertificate cert;
  cert.method = method;
  cert.sigma = gains.sigma();
  cert.k2 = gains.k2;
  const double sigma = cert.sigma;
  const double k2 = gains.k2;

  if (method == RoaMethod::slope_matched) {
    const double q = app.q;
    cert.q = q;
    cert.F = fprime;
    cert.g = 1.0 - q;
    cert.L = (app.bound - app.deviation) / (std::abs(q) + 1.0 - std::abs(1.0 - q));
    cert.M = (std::abs(q) + 1.0 - std::abs(1.0 - q)) /
             (std::abs(q) * (1.0 - std::abs(1.0 - q)) + std::abs(k2 - q * q));
  } else {
    cert.q = k2;
    cert.F = 1.0 - gains.k1;
    cert.g = 1.0 - k2;
    cert.L = app.bound;
    cert.M = (k2 + 1.0 - std::abs(1.0 - k2)) / k2;
  }

  const auto [lo, hi] = admissible_m_interval(sigma, k2, cert.F, cert.g, cert.L);
  cert.interval_lo = lo;
  cert.interval_hi = hi;
  const double m_tol = 1e-9 * std::max(1.0, std::abs(cert.M));
  if (!(cert.M >= lo - m_tol) || !(cert.M <= hi + m_tol)) {
    throw CertificateError("roa certificate: weight M falls outside its admissible interval",
                           cert.M, lo, hi);
  }

  const double F = cert.F;
  cert.eta = deviation_radius(
      [&](double xi) { return std::abs(outflow_derivative(model, 0, xi, sc.a) - F); }, sc.x_star,
      sc.a, cert.L, scan_n);

  const double input_room = std::min(sc.b_max - sc.u_star, sc.u_star - sc.b_min);
  const double input_rate = std::max(std::abs(1.0 - sigma) / cert.M,
                                     cert.L + std::abs(k2 + (1.0 - sigma) * (1.0 - cert.g) - F));
  const double capacity_room = sc.a - sc.v_star - sc.u_star - sc.x_star;
  const double capacity_rate = 1.0 + cert.L + std::abs(1.0 - F - cert.g);
  cert.rho = std::min({cert.eta, input_room / input_rate, capacity_room / capacity_rate});

  cert.lambda_at_rho =
      contraction_factor(cert, effective_lipschitz(cert, sc, model, cert.rho)).lambda;
  return cert;
}

double effective_lipschitz(const RoaCertificate& cert, const Scenario& sc,
                           const OutflowModel& model, double radius, int scan_n) {
  if (!(radius >= 0.0)) throw DomainError("effective_lipschitz: radius must be nonnegative");
  const double lo = std::max(0.0, sc.x_star - radius);
  const double hi = std::min(sc.a, sc.x_star + radius);
  double worst = 0.0;
  const int n = std::max(scan_n, 2);
  for (int i = 0; i <= n; ++i) {
    const double xi = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n);
    worst = std::max(worst, std::abs(outflow_derivative(model, 0, xi, sc.a) - cert.F));
  }
  return worst;
}

ContractionFactor contraction_factor(const RoaCertificate& cert, double effective_L) {
  ContractionFactor out;
  out.term_transfer =
      1.0 / cert.M + std::abs(2.0 - cert.sigma - cert.g - cert.F) + effective_L;
  out.term_state = std::abs(cert.g) +
                   cert.M * std::abs(cert.k2 + (1.0 - cert.F - cert.sigma - cert.g) * (1.0 - cert.g)) +
                   cert.M * effective_L * std::abs(1.0 - cert.g);
  out.lambda = std::max(out.term_transfer, out.term_state);
  out.contractive = out.lambda < 1.0;
  return out;
}

double lyapunov_value(const RoaCertificate& cert, const Scenario& sc, const OutflowModel& model,
                      double x, double w) {
  const double fx = outflow(model, 0, x, sc.a);
  return std::abs(x - sc.x_star) +
         cert.M * std::abs(w + sc.v_star - fx + (1.0 - cert.g) * (x - sc.x_star));
}

bool in_roa(const RoaCertificate& cert, const Scenario& sc, const OutflowModel& model, double x,
            double w) {
  if (!(x >= 0.0) || !(x <= sc.a)) return false;
  return lyapunov_value(cert, sc, model, x, w) < cert.rho;
}

std::vector<BoundaryPoint> roa_boundary(const RoaCertificate& cert, const Scenario& sc,
                                        const OutflowModel& model, int n_points) {
  if (n_points < 2) throw RefusalError("roa_boundary: need at least 2 points");
  const double lo = std::max(0.0, sc.x_star - cert.rho);
  const double hi = std::min(sc.a, sc.x_star + cert.rho);
  std::vector<BoundaryPoint> pts;
  pts.reserve(static_cast<std::size_t>(n_points));
  for (int i = 0; i < n_points; ++i) {
    const double x =
        lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n_points - 1);
    const double fx = outflow(model, 0, x, sc.a);
    const double center = fx - sc.v_star - (1.0 - cert.g) * (x - sc.x_star);
    const double half = (cert.rho - std::abs(x - sc.x_star)) / cert.M;
    pts.push_back(BoundaryPoint{x, center - half, center + half});
  }
  return pts;
}

}  // namespace pireg
