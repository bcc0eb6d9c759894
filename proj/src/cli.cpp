#include "pireg/cli.hpp"

#include <filesystem>
#include <optional>
#include <string_view>

#include "CLI11.hpp"
#include "pireg/dynamics.hpp"
#include "pireg/examples.hpp"
#include "pireg/global_iss.hpp"
#include "pireg/io.hpp"
#include "pireg/local_stability.hpp"
#include "pireg/oracle.hpp"
#include "pireg/sim.hpp"

namespace pireg {

namespace {

namespace fs = std::filesystem;

const char* branch_name(StabilityBranch b) {
  switch (b) {
    case StabilityBranch::complex_pair: return "complex";
    case StabilityBranch::real_pair: return "real";
    case StabilityBranch::unstable: return "unstable";
  }
  return "unstable";
}

// Common per-subcommand state.
struct Ctx {
  std::string scenario_path;
  std::string out_dir;
  std::ostream* out = nullptr;

  bool has_out() const { return !out_dir.empty(); }
  fs::path out_path(std::string_view name) const { return fs::path(out_dir) / name; }
  void ensure_out() const {
    if (has_out()) fs::create_directories(out_dir);
  }
  void finish(const Report& rep) const {
    rep.print(*out);
    if (has_out()) {
      ensure_out();
      rep.save(out_path("report.txt"));
    }
  }
};

void write_boundary_csv(const fs::path& path, const ScenarioFile& file,
                        const std::vector<std::pair<int, RoaCertificate>>& certs, int n_points) {
  static constexpr std::string_view header[] = {"method", "x", "w_lower", "w_upper"};
  CsvWriter csv(path, header);
  for (const auto& [id, cert] : certs) {
    for (const BoundaryPoint& p : roa_boundary(cert, file.scenario, file.outflow, n_points)) {
      csv.row({static_cast<double>(id), p.x, p.w_lower, p.w_upper});
    }
  }
}

void write_triangle_csv(const fs::path& path, const TriangleMap& map) {
  static constexpr std::string_view header[] = {"s", "k2", "stable", "branch", "slope_cert"};
  CsvWriter csv(path, header);
  for (const TriangleCell& c : map.cells) {
    const std::string cells[] = {format_double(c.s), format_double(c.k2),
                                 c.stable ? "1" : "0", branch_name(c.branch),
                                 c.slope_cert_ok ? "1" : "0"};
    csv.row(cells);
  }
}

void write_envelope_csv(const fs::path& path, const ScenarioFile& file, int n_points) {
  static constexpr std::string_view header[] = {"x", "f", "f_min", "f_max"};
  CsvWriter csv(path, header);
  for (const EnvelopePoint& p :
       sector_envelope(file.scenario, file.gains, *file.h2, n_points)) {
    csv.row({p.x, outflow(file.outflow, 0, p.x, file.scenario.a), p.f_min, p.f_max});
  }
}

void add_margin_records(Report& rep, const SectorReport& sector) {
  rep.add("sector_grid_n", sector.grid_n);
  for (const MarginRecord& m : sector.margins) {
    rep.add("margin." + m.name, m.worst);
    rep.add("margin." + m.name + ".x", m.worst_x);
    rep.add("margin." + m.name + ".d", m.worst_d);
    rep.add("margin." + m.name + ".pass", m.pass);
  }
  rep.add("sector_pass", sector.pass);
  rep.add("sector_forms_disagree", sector.forms_disagree);
}

void add_iss_records(Report& rep, const IssCertificate& cert) {
  rep.add("lambda", cert.lambda);
  rep.add("gamma", cert.gamma);
  rep.add("saturation_margin", cert.margin);
  rep.add("lambda_term_weight", cert.m_inv_term);
  rep.add("lambda_term_congested", cert.case_congested);
  rep.add("lambda_term_above", cert.case_above);
  rep.add("lambda_term_below", cert.case_below);
  rep.add("gain_min", cert.gain_min);
  rep.add("weight_lower", cert.m_lower);
  rep.add("gain_condition", cert.gain_first);
  rep.add("weight_window", cert.weight_window);
  rep.add("certificate_valid", cert.valid);
}

void add_certificate_records(Report& rep, int method_id, const RoaCertificate& cert) {
  rep.add("method", static_cast<std::int64_t>(method_id));
  rep.add("q", cert.q);
  rep.add("F", cert.F);
  rep.add("g", cert.g);
  rep.add("M", cert.M);
  rep.add("L", cert.L);
  rep.add("eta", cert.eta);
  rep.add("rho", cert.rho);
  rep.add("lambda_at_rho", cert.lambda_at_rho);
  rep.add("interval_lo", cert.interval_lo);
  rep.add("interval_hi", cert.interval_hi);
}

int cmd_check(const Ctx& ctx, int grid_n) {
  const ScenarioFile file = load_scenario_file(ctx.scenario_path);
  const ScenarioCheck chk = check_scenario(file.scenario, file.outflow, grid_n);
  Report rep;
  rep.add("members_ok", chk.members_ok);
  if (!chk.member_violation.empty()) rep.add("member_violation", chk.member_violation);
  rep.add("ranges_ok", chk.ranges_ok);
  if (!chk.range_violation.empty()) rep.add("range_violation", chk.range_violation);
  rep.add("outflow_bounded", chk.outflow_bounded);
  rep.add("outflow_worst_margin", chk.outflow_worst_margin);
  rep.add("outflow_worst_x", chk.outflow_worst_x);
  rep.add("equilibrium_ok", chk.equilibrium_ok);
  rep.add("equilibrium_worst_residual", chk.equilibrium_worst_residual);
  rep.add("input_interior", chk.input_interior);
  rep.add("inflow_headroom", chk.inflow_headroom);
  rep.add("global_headroom", chk.global_headroom ? "satisfied" : "violated");
  rep.add("global_headroom_margin", chk.global_headroom_margin);
  rep.add("result", chk.pass() ? "pass" : "fail");
  ctx.finish(rep);
  return chk.pass() ? 0 : 1;
}

int cmd_local(const Ctx& ctx) {
  const ScenarioFile file = load_scenario_file(ctx.scenario_path);
  const double fprime =
      outflow_derivative(file.outflow, 0, file.scenario.x_star, file.scenario.a);
  const LocalVerdict v = local_verdict(fprime, file.gains);
  Report rep;
  rep.add("fprime_at_xstar", fprime);
  rep.add("b", v.b);
  rep.add("c", v.c);
  rep.add("s", v.s);
  rep.add("stable", v.stable);
  rep.add("branch", branch_name(v.branch));
  rep.add("margin_k2", v.margin_k2);
  rep.add("margin_outer", v.margin_outer);
  rep.add("margin_unit", v.margin_unit);
  if (v.stable) {
    for (const auto& [id, method] :
         {std::pair{21, RoaMethod::slope_matched}, std::pair{22, RoaMethod::gain_matched}}) {
      const RoaApplicability app =
          roa_applicability(file.outflow, file.scenario, file.gains, method);
      const std::string prefix = id == 21 ? "slope_cert" : "gain_cert";
      rep.add(prefix + ".applicable", app.applicable);
      rep.add(prefix + ".deviation", app.deviation);
      rep.add(prefix + ".bound", app.bound);
      if (id == 21) rep.add(prefix + ".q", app.q);
    }
  }
  rep.add("result", v.stable ? "stable" : "unstable");
  ctx.finish(rep);
  return v.stable ? 0 : 1;
}

int cmd_roa(const Ctx& ctx, int method_id, int scan_n, int boundary_n, bool brute, int brute_nx,
            int brute_nw, std::int64_t horizon, double tol, bool serial) {
  const ScenarioFile file = load_scenario_file(ctx.scenario_path);
  const RoaMethod method = method_id == 21 ? RoaMethod::slope_matched : RoaMethod::gain_matched;
  const RoaCertificate cert =
      roa_certificate(file.outflow, file.scenario, file.gains, method, scan_n);
  Report rep;
  add_certificate_records(rep, method_id, cert);
  rep.add("result", "valid");
  if (ctx.has_out()) {
    ctx.ensure_out();
    write_boundary_csv(ctx.out_path("roa_boundary.csv"), file, {{method_id, cert}}, boundary_n);
  }
  if (brute) {
    const GridSpec grid{0.0, file.scenario.a, file.scenario.b_min, file.scenario.b_max, brute_nx,
                        brute_nw};
    const RoaGrid oracle_grid =
        brute_force_roa(file.scenario, file.outflow, file.gains, grid, horizon, tol,
                        serial ? Exec::serial : Exec::parallel);
    std::size_t counts[4] = {0, 0, 0, 0};
    for (CellVerdict v : oracle_grid.verdicts) counts[static_cast<std::size_t>(v)]++;
    rep.add("brute_converged", counts[0]);
    rep.add("brute_spurious", counts[1]);
    rep.add("brute_saturated", counts[2]);
    rep.add("brute_undecided", counts[3]);
    if (ctx.has_out()) {
      static constexpr std::string_view header[] = {"x", "w", "verdict"};
      CsvWriter csv(ctx.out_path("roa_grid.csv"), header);
      for (int ix = 0; ix < grid.nx; ++ix) {
        for (int iw = 0; iw < grid.nw; ++iw) {
          const std::string cells[] = {format_double(oracle_grid.cell_x(ix)),
                                       format_double(oracle_grid.cell_w(iw)),
                                       to_string(oracle_grid.at(ix, iw))};
          csv.row(cells);
        }
      }
    }
  }
  ctx.finish(rep);
  return 0;
}

int cmd_iss(const Ctx& ctx, int grid_n, bool serial) {
  const ScenarioFile file = load_scenario_file(ctx.scenario_path);
  if (!file.h2) throw RefusalError("iss: scenario file has no h2 section");
  const SectorReport sector =
      verify_sector_conditions(file.outflow, file.scenario, file.gains, *file.h2, grid_n,
                               serial ? Exec::serial : Exec::parallel);
  const IssCertificate cert = iss_certificate(file.gains, *file.h2, file.scenario);
  Report rep;
  add_margin_records(rep, sector);
  add_iss_records(rep, cert);
  const bool ok = sector.pass && cert.valid;
  rep.add("result", ok ? "globally-iss" : "not-certified");
  ctx.finish(rep);
  return ok ? 0 : 1;
}

int cmd_necessary(const Ctx& ctx, int scan_n) {
  const ScenarioFile file = load_scenario_file(ctx.scenario_path);
  const NecessaryReport nec = necessary_conditions(file.outflow, file.scenario, file.gains, scan_n);
  Report rep;
  rep.add("k2_positive", nec.k2_positive);
  rep.add("bmax_condition", to_string(nec.bmax_condition));
  rep.add("bmin_condition", to_string(nec.bmin_condition));
  auto add_roots = [&](const char* tag, const std::vector<std::vector<RootRecord>>& all) {
    for (std::size_t d = 0; d < all.size(); ++d) {
      const std::string base = std::string(tag) + "." + std::to_string(d);
      rep.add(base + ".count", all[d].size());
      for (std::size_t i = 0; i < all[d].size(); ++i) {
        const std::string key = base + "." + std::to_string(i);
        rep.add(key, all[d][i].y);
        rep.add(key + ".residual", all[d][i].residual);
        rep.add(key + ".bracket_lo", all[d][i].bracket_lo);
        rep.add(key + ".bracket_hi", all[d][i].bracket_hi);
      }
    }
  };
  add_roots("bmax_root", nec.bmax_roots);
  add_roots("bmin_root", nec.bmin_roots);
  rep.add("tangency_warnings", nec.tangency_warnings.size());
  const bool pass = nec.pass();
  std::string verdict = "necessary-conditions-met";
  if (!pass) {
    verdict = nec.bmin_condition == VerdictState::fail || !nec.k2_positive
                  ? "global-iss-impossible"
                  : "boundary";
  }
  rep.add("verdict", verdict);
  rep.add("result", pass ? "pass" : "fail");
  ctx.finish(rep);
  return pass ? 0 : 1;
}

int cmd_simulate(const Ctx& ctx, std::int64_t horizon, double tol, bool reduced,
                 std::optional<double> x0, std::optional<double> y0, std::optional<double> w0,
                 const std::string& v_seq_path, const std::string& d_seq_path) {
  const ScenarioFile file = load_scenario_file(ctx.scenario_path);
  const Scenario& sc = file.scenario;
  DisturbanceSequence dist = DisturbanceSequence::constant(0, sc.v_star);
  if (!v_seq_path.empty()) dist.v_seq = read_column(v_seq_path);
  if (!d_seq_path.empty()) {
    dist.d_seq.clear();
    for (double d : read_column(d_seq_path)) {
      if (d < 0.0 || d != std::floor(d)) throw ParseError("d-seq: entries must be nonneg integers");
      dist.d_seq.push_back(static_cast<std::size_t>(d));
    }
  }
  Report rep;
  rep.add("horizon", horizon);
  if (reduced) {
    const ReducedState init{x0.value_or(sc.x_star), w0.value_or(sc.u_star)};
    const ReducedTrajectory traj = rollout_reduced(sc, file.outflow, file.gains, init, horizon);
    rep.add("final_x", traj.states.back().x);
    rep.add("final_w", traj.states.back().w);
    rep.add("convergence_metric", convergence_metric(traj, sc.x_star));
    rep.add("saturated", detect_saturation(traj, sc.a));
    rep.add("converged", convergence_metric(traj, sc.x_star) < tol);
    if (ctx.has_out()) {
      ctx.ensure_out();
      static constexpr std::string_view header[] = {"t", "x", "w"};
      CsvWriter csv(ctx.out_path("trajectory.csv"), header);
      for (std::size_t t = 0; t < traj.states.size(); ++t) {
        csv.row({static_cast<double>(t), traj.states[t].x, traj.states[t].w});
      }
    }
  } else {
    const LoopState init{x0.value_or(sc.x_star), y0.value_or(sc.x_star), w0.value_or(sc.u_star)};
    const Trajectory traj = rollout_full(sc, file.outflow, file.gains, init, dist, horizon);
    rep.add("final_x", traj.states.back().x);
    rep.add("final_y", traj.states.back().y);
    rep.add("final_w", traj.states.back().w);
    rep.add("convergence_metric", convergence_metric(traj, sc.x_star));
    rep.add("saturated", detect_saturation(traj, sc.a));
    rep.add("converged", convergence_metric(traj, sc.x_star) < tol);
    if (ctx.has_out()) {
      ctx.ensure_out();
      static constexpr std::string_view header[] = {"t", "x", "y", "w"};
      CsvWriter csv(ctx.out_path("trajectory.csv"), header);
      for (std::size_t t = 0; t < traj.states.size(); ++t) {
        csv.row({static_cast<double>(t), traj.states[t].x, traj.states[t].y, traj.states[t].w});
      }
    }
  }
  rep.add("result", "completed");
  ctx.finish(rep);
  return 0;
}

int cmd_sweep(const Ctx& ctx, double s_lo, double s_hi, double k2_lo, double k2_hi, int res,
              bool serial) {
  const ScenarioFile file = load_scenario_file(ctx.scenario_path);
  const double fprime =
      outflow_derivative(file.outflow, 0, file.scenario.x_star, file.scenario.a);
  const TriangleMap map = gain_triangle_map(fprime, s_lo, s_hi, k2_lo, k2_hi, res, res,
                                            serial ? Exec::serial : Exec::parallel);
  std::size_t stable = 0, cert_ok = 0;
  for (const TriangleCell& c : map.cells) {
    stable += c.stable ? 1 : 0;
    cert_ok += c.slope_cert_ok ? 1 : 0;
  }
  Report rep;
  rep.add("fprime_at_xstar", fprime);
  rep.add("cells", map.cells.size());
  rep.add("stable_cells", stable);
  rep.add("slope_cert_cells", cert_ok);
  if (ctx.has_out()) {
    ctx.ensure_out();
    write_triangle_csv(ctx.out_path("sweep.csv"), map);
  }
  rep.add("result", "completed");
  ctx.finish(rep);
  return 0;
}

int cmd_reproduce(const Ctx& ctx, const std::string& example_id, int grid_n, int scan_n,
                  bool serial) {
  const ScenarioFile file = builtin_example(example_id);
  const Exec exec = serial ? Exec::serial : Exec::parallel;
  ctx.ensure_out();
  save_scenario_file(file, ctx.out_path("scenario.json"));

  Report rep;
  rep.add("example", example_id);
  const double fprime =
      outflow_derivative(file.outflow, 0, file.scenario.x_star, file.scenario.a);
  const LocalVerdict v = local_verdict(fprime, file.gains);
  rep.add("stable", v.stable);
  rep.add("branch", branch_name(v.branch));

  write_triangle_csv(ctx.out_path("fig1_triangle.csv"),
                     gain_triangle_map(fprime, -3.5, 1.5, -0.5, 4.5, 201, 201, exec));

  std::vector<std::pair<int, RoaCertificate>> certs;
  for (const auto& [id, method] :
       {std::pair{21, RoaMethod::slope_matched}, std::pair{22, RoaMethod::gain_matched}}) {
    const RoaCertificate cert =
        roa_certificate(file.outflow, file.scenario, file.gains, method, scan_n);
    certs.emplace_back(id, cert);
    const std::string prefix = "roa" + std::to_string(id);
    rep.add(prefix + ".rho", cert.rho);
    rep.add(prefix + ".M", cert.M);
    rep.add(prefix + ".eta", cert.eta);
  }
  const std::string boundary_name =
      example_id == "4.1" ? "fig3_roa_boundaries.csv" : "fig5_roa_boundaries.csv";
  write_boundary_csv(ctx.out_path(boundary_name), file, certs, 512);

  if (file.h2) {
    write_envelope_csv(ctx.out_path("fig2_envelope.csv"), file, 2001);
    const SectorReport sector =
        verify_sector_conditions(file.outflow, file.scenario, file.gains, *file.h2, grid_n, exec);
    add_margin_records(rep, sector);
    add_iss_records(rep, iss_certificate(file.gains, *file.h2, file.scenario));
  } else {
    const NecessaryReport nec =
        necessary_conditions(file.outflow, file.scenario, file.gains, scan_n);
    rep.add("k2_positive", nec.k2_positive);
    rep.add("bmax_condition", to_string(nec.bmax_condition));
    rep.add("bmin_condition", to_string(nec.bmin_condition));
    rep.add("verdict", nec.pass() ? "necessary-conditions-met" : "global-iss-impossible");
  }
  rep.add("result", "completed");
  ctx.finish(rep);
  return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"stability workbench for saturated PI-controlled reservoir models"};
  app.require_subcommand(1);

  Ctx ctx;
  ctx.out = &out;
  int grid_n = 10000;
  int scan_n = 10000;
  std::int64_t horizon = 1000;
  double tol = 1e-6;
  bool serial = false;

  auto add_common = [&](CLI::App* sub, bool needs_scenario = true) {
    if (needs_scenario) {
      sub->add_option("--scenario", ctx.scenario_path, "scenario file (JSON)")->required();
    }
    sub->add_option("--out", ctx.out_dir, "output directory for reports and CSV data");
    sub->add_flag("--serial", serial, "run kernels on a single thread");
  };

  CLI::App* check = app.add_subcommand("check", "validate a scenario file");
  add_common(check);
  check->add_option("--grid-n", grid_n, "verification grid resolution");

  CLI::App* local = app.add_subcommand("local", "characteristic-equation stability verdict");
  add_common(local);

  CLI::App* roa = app.add_subcommand("roa", "region-of-attraction certificate");
  add_common(roa);
  int method_id = 22;
  int boundary_n = 512;
  bool brute = false;
  int brute_nx = 200, brute_nw = 200;
  roa->add_option("--prop", method_id, "certificate construction (21 or 22)")
      ->required()
      ->check(CLI::IsMember({21, 22}));
  roa->add_option("--scan-n", scan_n, "radius scan resolution");
  roa->add_option("--boundary-n", boundary_n, "points per boundary branch");
  roa->add_flag("--brute", brute, "also run the brute-force grid oracle");
  roa->add_option("--brute-nx", brute_nx, "brute-force grid cells along x");
  roa->add_option("--brute-nw", brute_nw, "brute-force grid cells along w");
  std::int64_t brute_horizon = 100000;
  roa->add_option("--horizon", brute_horizon, "brute-force rollout horizon")
      ->capture_default_str();
  roa->add_option("--tol", tol, "brute-force convergence tolerance");

  CLI::App* iss = app.add_subcommand("iss", "sector verification and ISS certificate");
  add_common(iss);
  iss->add_option("--grid-n", grid_n, "sector verification grid resolution");

  CLI::App* nec = app.add_subcommand("necessary", "necessary stabilizability conditions");
  add_common(nec);
  nec->add_option("--scan-n", scan_n, "root scan intervals");

  CLI::App* sim = app.add_subcommand("simulate", "roll out the closed loop");
  add_common(sim);
  bool reduced = false;
  std::optional<double> x0, y0, w0;
  std::string v_seq_path, d_seq_path;
  sim->add_option("--horizon", horizon, "steps to simulate")->capture_default_str();
  sim->add_option("--tol", tol, "convergence tolerance for the report");
  sim->add_flag("--reduced", reduced, "simulate the reduced 2-D system");
  sim->add_option("--x0", x0, "initial storage (default x_star)");
  sim->add_option("--y0", y0, "initial previous storage (default x_star)");
  sim->add_option("--w0", w0, "initial input/integrator (default u_star)");
  sim->add_option("--v-seq", v_seq_path, "single-column CSV of uncontrolled inflows");
  sim->add_option("--d-seq", d_seq_path, "single-column CSV of member indices");

  CLI::App* sweep = app.add_subcommand("sweep", "stability map over the (s, k2) plane");
  add_common(sweep);
  double s_lo = -3.5, s_hi = 1.5, k2_lo = -0.5, k2_hi = 4.5;
  int res = 201;
  sweep->add_option("--s-min", s_lo, "lower s bound")->capture_default_str();
  sweep->add_option("--s-max", s_hi, "upper s bound")->capture_default_str();
  sweep->add_option("--k2-min", k2_lo, "lower k2 bound")->capture_default_str();
  sweep->add_option("--k2-max", k2_hi, "upper k2 bound")->capture_default_str();
  sweep->add_option("--res", res, "grid resolution per axis")->capture_default_str();

  CLI::App* repro = app.add_subcommand("reproduce", "emit figure data for a bundled example");
  std::string example_id;
  repro->add_option("--example", example_id, "example id (4.1 or 4.2)")->required();
  repro->add_option("--out", ctx.out_dir, "output directory")->required();
  repro->add_flag("--serial", serial, "run kernels on a single thread");
  repro->add_option("--grid-n", grid_n, "sector verification grid resolution");
  repro->add_option("--scan-n", scan_n, "radius scan resolution");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {  // --help
      out << app.help();
      return 0;
    }
    err << "usage error: " << e.what() << "\n";
    return 2;
  }

  try {
    if (check->parsed()) return cmd_check(ctx, grid_n);
    if (local->parsed()) return cmd_local(ctx);
    if (roa->parsed()) {
      return cmd_roa(ctx, method_id, scan_n, boundary_n, brute, brute_nx, brute_nw, brute_horizon,
                     tol, serial);
    }
    if (iss->parsed()) return cmd_iss(ctx, grid_n, serial);
    if (nec->parsed()) return cmd_necessary(ctx, scan_n);
    if (sim->parsed()) {
      return cmd_simulate(ctx, horizon, tol, reduced, x0, y0, w0, v_seq_path, d_seq_path);
    }
    if (sweep->parsed()) return cmd_sweep(ctx, s_lo, s_hi, k2_lo, k2_hi, res, serial);
    if (repro->parsed()) return cmd_reproduce(ctx, example_id, grid_n, scan_n, serial);
  } catch (const CertificateError& e) {
    err << "invalid certificate: " << e.what() << " (value " << format_double(e.value)
        << ", admissible [" << format_double(e.lo) << ", " << format_double(e.hi) << "])\n";
    return 1;
  } catch (const RefusalError& e) {
    err << "refused: " << e.what() << "\n";
    return 2;
  } catch (const ParseError& e) {
    err << "input error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
  err << "no subcommand\n";
  return 2;
}

}  // namespace pireg
