// Command-line driver: simulate, sweep, terminal-set, diagnose, roa-grid.
//
// Exit codes: 0 ok, 1 configuration or usage error, 2 solver failure
// (including a non-stabilizable linearization), 3 I/O or other error.

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "tdo/tdo.hpp"

#ifndef TDO_VERSION
#define TDO_VERSION "0.1.0"
#endif

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace tdo;

namespace {

class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

class DiagnosticFailure : public std::runtime_error {
 public:
  explicit DiagnosticFailure(const std::string& what) : std::runtime_error(what) {}
};

std::string utc_timestamp() {
  const std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::vector<double> parse_number_list(const std::string& s, const std::string& what) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    try {
      out.push_back(parse_double(cell));
    } catch (const std::exception&) {
      throw ConfigError("bad number '" + cell + "' in " + what);
    }
  }
  return out;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string cell;
  while (std::getline(ss, cell, sep)) out.push_back(cell);
  return out;
}

/// Flags shared by every command. Each one overrides the config file.
struct CommonFlags {
  std::string config;
  std::string out;
  std::uint64_t seed = 0;
  std::string x0;
  bool no_disturbance = false;
  int steps = 0;
  std::string init;
  bool record_timing = false;
  bool abort_on_failure = false;
  CLI::Option* seed_opt = nullptr;
  CLI::Option* steps_opt = nullptr;
  CLI::Option* out_opt = nullptr;

  void add_to(CLI::App* app) {
    app->add_option("--config", config, "JSON configuration file");
    out_opt = app->add_option("--out", out, "output directory (else $TDO_OUT_DIR, else ./tdo_out)");
    seed_opt = app->add_option("--seed", seed, "gust RNG seed");
    app->add_option("--x0", x0, "initial state y,psi,nu,omega,delta_f,delta_r (radians)");
    app->add_flag("--no-disturbance", no_disturbance, "turn the wind gusts off");
    steps_opt = app->add_option("--steps", steps, "closed-loop steps");
    app->add_option("--init", init, "compensator initialisation: presolve or cold");
    app->add_flag("--record-timing", record_timing, "append a wall_time column (not reproducible)");
    app->add_flag("--abort-on-failure", abort_on_failure, "treat a failed QP as fatal (exit 2)");
  }

  RunConfig resolve() const {
    RunConfig rc = config.empty() ? RunConfig{} : load_config(config);
    ScenarioConfig& s = rc.scenario;
    if (seed_opt->count()) s.seed = seed;
    if (steps_opt->count()) s.steps = steps;
    if (!x0.empty()) {
      const std::vector<double> v = parse_number_list(x0, "--x0");
      if (static_cast<int>(v.size()) != kStateDim) throw ConfigError("--x0 needs 6 comma-separated values");
      for (int i = 0; i < kStateDim; ++i) s.x0[i] = v[static_cast<std::size_t>(i)];
    }
    if (no_disturbance) s.disturbance_on = false;
    if (!init.empty()) {
      try {
        s.init = parse_init_strategy(init);
      } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
      }
    }
    if (abort_on_failure) s.abort_on_failure = true;
    return rc;
  }

  fs::path output_dir() const {
    fs::path dir = "tdo_out";
    if (out_opt->count()) {
      dir = out;
    } else if (const char* env = std::getenv("TDO_OUT_DIR"); env && *env) {
      dir = env;
    }
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create output directory '" + dir.string() + "': " + ec.message());
    return dir;
  }
};

struct Manifest {
  json doc;
  std::string run_id;
  fs::path dir;

  Manifest(const std::string& command, const CommonFlags& flags, const RunConfig& rc, fs::path out_dir,
           const json& extra = json::object())
      : dir(std::move(out_dir)) {
    const json cfg = config_to_json(rc);
    run_id = compute_run_id({{"command", command}, {"config", cfg.dump()}, {"extra", extra.dump()}});
    doc = {{"run_id", run_id},
           {"command", command},
           {"config_path", flags.config},
           {"seed", rc.scenario.seed},
           {"version", TDO_VERSION},
           {"output_dir", dir.string()},
           {"start_time", utc_timestamp()},
           {"config", cfg},
           {"options", extra},
           {"files", json::array()}};
  }

  fs::path file(const std::string& name) {
    doc["files"].push_back(name);
    return dir / name;
  }

  void save() {
    std::ofstream out(dir / "manifest.json");
    if (!out) throw IoError("cannot write manifest.json");
    out << doc.dump(2) << '\n';
  }
};

std::ofstream open_out(const fs::path& p) {
  std::ofstream out(p);
  if (!out) throw IoError("cannot open '" + p.string() + "' for writing");
  return out;
}

std::vector<double> times(const ClosedLoopLog& log, double ts) {
  std::vector<double> t;
  for (const auto& r : log.records) t.push_back(r.k * ts);
  return t;
}

std::vector<double> state_trace(const ClosedLoopLog& log, int j, double scale = 1.0) {
  std::vector<double> v;
  for (const auto& r : log.records) v.push_back(r.x[j] * scale);
  return v;
}

std::string fmt(double v) { return format_double(v); }

// ---------------------------------------------------------------------------

int cmd_simulate(const CommonFlags& flags, const std::string& controller, int ell, const std::string& mode,
                 bool compute_error) {
  RunConfig rc = flags.resolve();
  if (!controller.empty()) rc.scenario.controller = parse_controller(controller);
  if (ell > 0) rc.scenario.sqp.ell = ell;
  if (!mode.empty()) {
    try {
      rc.scenario.sqp.mode.kind = parse_hessian_kind(mode);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
  }
  if (controller == "rti") {
    if (ell > 1 || (!mode.empty() && mode != "gn")) throw ConfigError("rti means gn with ell = 1");
    rc.scenario.sqp.mode.kind = HessianKind::gauss_newton;
    rc.scenario.sqp.ell = 1;
  }
  if (compute_error) rc.scenario.compute_error = true;
  validate_config(rc);

  const fs::path dir = flags.output_dir();
  Manifest man("simulate", flags, rc, dir, {{"record_timing", flags.record_timing}});
  const Benchmark bm = make_benchmark(rc.bench);
  const ClosedLoopLog log = run_scenario(bm, rc.scenario);
  const double ts = rc.bench.vehicle.ts;
  save_log(man.file("log.csv").string(), log, ts, flags.record_timing, man.run_id);

  const std::vector<double> t = times(log, ts);
  PlotPanel py{"lateral position", "t [s]", "y [m]", {{"y", t, state_trace(log, kY)}},
               {{rc.bench.x_ub[kY], "y max"}, {rc.bench.x_lb[kY], "y min"}}};
  PlotPanel pp{"yaw angle", "t [s]", "psi [deg]", {{"psi", t, state_trace(log, kPsi, 1.0 / kDeg)}},
               {{rc.bench.x_ub[kPsi] / kDeg, "psi max"}, {rc.bench.x_lb[kPsi] / kDeg, "psi min"}}};
  std::vector<double> u1, u2;
  for (const auto& r : log.records) {
    u1.push_back(r.u[0]);
    u2.push_back(r.u[1]);
  }
  PlotPanel pu{"steering rates", "t [s]", "u", {{"u1", t, u1}, {"u2", t, u2, palette()[1]}}, {}};
  save_svg(man.file("traj.svg").string(), {py, pp, pu}, man.run_id);
  man.save();

  std::cout << "run_id " << man.run_id << "\n"
            << "controller " << to_string(rc.scenario.controller) << " mode " << to_string(rc.scenario.sqp.mode.kind)
            << " ell " << rc.scenario.sqp.ell << "\n"
            << "final |x| " << log.x_final.norm() << "\n"
            << "max |psi| [deg] " << log.max_abs_state(kPsi) / kDeg << "\n"
            << "cumulative cost " << log.cumulative_cost() << "\n"
            << "clamp events " << log.clamp_events << "\n"
            << "failure events " << log.failure_events << "\n";
  if (log.failure_events > 0) std::cerr << "warning: " << log.failure_events << " QP failures (z held)\n";
  return 0;
}

int cmd_sweep(const CommonFlags& flags, const std::string& ells_s, const std::string& modes_s) {
  RunConfig rc = flags.resolve();
  validate_config(rc);
  std::vector<int> ells;
  for (double v : parse_number_list(ells_s, "--ell")) {
    if (v < 1 || v != static_cast<int>(v)) throw ConfigError("--ell entries must be positive integers");
    ells.push_back(static_cast<int>(v));
  }
  std::vector<HessianMode> modes;
  for (const std::string& m : split(modes_s, ',')) {
    HessianMode hm = rc.scenario.sqp.mode;
    try {
      hm.kind = parse_hessian_kind(m);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
    modes.push_back(hm);
  }
  if (ells.empty() || modes.empty()) throw ConfigError("sweep needs at least one ell and one mode");

  const fs::path dir = flags.output_dir();
  Manifest man("sweep", flags, rc, dir, {{"ell", ells_s}, {"mode", modes_s}, {"record_timing", flags.record_timing}});
  const Benchmark bm = make_benchmark(rc.bench);
  const std::vector<SweepCell> cells = sweep_ell(bm, rc.scenario, ells, modes);
  const double ts = rc.bench.vehicle.ts;

  std::vector<std::vector<std::string>> rows;
  PlotPanel pres{"natural residual", "t [s]", "pi", {}, {}, true};
  PlotPanel ppsi{"yaw angle", "t [s]", "psi [deg]", {}, {{rc.bench.x_ub[kPsi] / kDeg, "7 deg"}}};
  int fatal = 0;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const SweepCell& c = cells[i];
    const std::string name = std::string(to_string(c.mode)) + "_ell" + std::to_string(c.ell);
    if (!c.ok) {
      ++fatal;
      std::cerr << "cell " << name << " failed: " << c.error << "\n";
      rows.push_back({to_string(c.mode), std::to_string(c.ell), "0", "nan", "nan", "nan", "nan", "0", "0"});
      continue;
    }
    save_log(man.file("sweep_" + name + ".csv").string(), c.log, ts, flags.record_timing, man.run_id);
    rows.push_back({to_string(c.mode), std::to_string(c.ell), "1", fmt(c.max_abs_psi_deg), fmt(c.median_pi),
                    fmt(c.max_pi), fmt(c.cum_cost), std::to_string(c.log.clamp_events),
                    std::to_string(c.log.failure_events)});
    const std::string col = palette()[i % palette().size()];
    pres.series.push_back({name, times(c.log, ts), c.log.residuals(), col});
    ppsi.series.push_back({name, times(c.log, ts), state_trace(c.log, kPsi, 1.0 / kDeg), col});
  }
  {
    std::ofstream out = open_out(man.file("sweep_summary.csv"));
    write_table(out, {{"run_id", man.run_id}},
                {"mode", "ell", "ok", "max_abs_psi_deg", "median_pi", "max_pi", "cum_cost", "clamp_events",
                 "failure_events"},
                rows);
  }
  save_svg(man.file("sweep.svg").string(), {pres, ppsi}, man.run_id);
  man.save();

  std::cout << "run_id " << man.run_id << "\n";
  std::cout << "mode ell max|psi|[deg] median_pi cum_cost\n";
  for (const auto& r : rows) std::cout << r[0] << ' ' << r[1] << ' ' << r[3] << ' ' << r[4] << ' ' << r[6] << "\n";
  if (fatal > 0) throw SolverFatalError(std::to_string(fatal) + " sweep cell(s) failed");
  return 0;
}

int cmd_terminal_set(const CommonFlags& flags, int samples) {
  RunConfig rc = flags.resolve();
  validate_config(rc);
  const fs::path dir = flags.output_dir();
  Manifest man("terminal-set", flags, rc, dir, {{"samples", samples}});
  const TerminalIngredients ti = compute_terminal_ingredients(rc.bench, true);
  if (!ti.certified) throw SolverFatalError("terminal set not certified within mas_cap iterations");
  ti.set.save((dir / "terminal").string());
  man.doc["files"].push_back("terminal_A.txt");
  man.doc["files"].push_back("terminal_b.txt");
  save_matrix(man.file("terminal_P.txt").string(), ti.dare.p);
  save_matrix(man.file("terminal_K.txt").string(), ti.dare.k);
  const InvarianceReport rep = check_invariance(ti.set, ti.a_cl(), ti.state_constraints, ti.input_constraints,
                                                samples, rc.scenario.seed);
  man.doc["dare_residual"] = ti.dare.residual;
  man.doc["rows"] = ti.set.rows();
  man.doc["iterations"] = ti.iterations;
  man.doc["invariance_violations"] = rep.invariance_violations;
  man.doc["admissibility_violations"] = rep.admissibility_violations;
  man.save();
  std::cout << "run_id " << man.run_id << "\n"
            << "DARE residual " << ti.dare.residual << " (" << ti.dare.iterations << " iterations)\n"
            << "closed-loop spectral radius " << spectral_radius(ti.a_cl()) << "\n"
            << "terminal set rows " << ti.set.rows() << ", certified after " << ti.iterations << " iterations\n"
            << "invariance check: " << rep.samples << " samples, " << rep.invariance_violations
            << " invariance violations, " << rep.admissibility_violations << " admissibility violations\n"
            << "load with ocp.terminal_set_prefix = \"" << (dir / "terminal").string() << "\"\n";
  return rep.ok() ? 0 : 2;
}

int cmd_diagnose(const CommonFlags& flags, int trials, int max_ell, bool small_gain) {
  RunConfig rc = flags.resolve();
  validate_config(rc);
  if (trials < 10) throw ConfigError("--trials must be >= 10");
  if (max_ell < 1) throw ConfigError("--max-ell must be >= 1");
  const fs::path dir = flags.output_dir();
  Manifest man("diagnose", flags, rc, dir, {{"trials", trials}, {"max_ell", max_ell}, {"small_gain", small_gain}});
  const Benchmark bm = make_benchmark(rc.bench);
  const Eigen::VectorXd x = rc.scenario.x0;

  const SolveResult star = solve_oracle(bm.instance, x, bm.instance->zero_point());
  if (!star.converged()) throw DiagnosticFailure("oracle solve failed at the probe state");

  // Solution-map Lipschitz estimate along a short segment in y.
  std::vector<Eigen::VectorXd> seg;
  for (int j = 0; j <= 10; ++j) {
    Eigen::VectorXd xs = x;
    xs[kY] += 0.02 * j;
    seg.push_back(xs);
  }
  const LipschitzEstimate lip = estimate_solution_lipschitz(bm.instance, seg);
  std::ostringstream summary;
  summary << "run_id " << man.run_id << "\n";
  summary << "oracle residual " << star.residual << "\n";
  if (lip.refused) {
    summary << "solution Lipschitz estimate refused: " << lip.reason << "\n";
  } else {
    summary << "b_hat " << lip.b_hat << "\n";
  }

  std::vector<int> ells;
  for (int l = 1; l <= max_ell; ++l) ells.push_back(l);
  double gamma3 = 0.0;
  if (small_gain) {
    const Gamma3Estimate g3 = estimate_gamma3_slope(bm, {0.01, 0.02, 0.04});
    gamma3 = g3.slope;
    summary << "gamma3 slope (empirical surrogate) " << gamma3 << "\n";
  }
  double q_gn = 0.0, q_jn = 0.0;
  for (HessianKind kind : {HessianKind::gauss_newton, HessianKind::josephy_newton}) {
    HessianMode mode = rc.scenario.sqp.mode;
    mode.kind = kind;
    const std::string name = to_string(kind);
    RateExperiment ex;
    try {
      ex = fit_rate(bm.instance, x, mode, default_fit_radii(), trials, rc.scenario.seed, &star);
    } catch (const std::runtime_error& e) {
      summary << name << ": rate fit refused: " << e.what() << "\n";
      continue;
    }
    (kind == HessianKind::gauss_newton ? q_gn : q_jn) = ex.fit.q_hat;
    {
      std::vector<std::vector<std::string>> rows;
      for (std::size_t i = 0; i < ex.pairs.size(); ++i) {
        rows.push_back({std::to_string(i), fmt(ex.radii[i]), fmt(ex.pairs[i].e0), fmt(ex.pairs[i].e1)});
      }
      std::ofstream out = open_out(man.file("rate_" + name + ".csv"));
      write_table(out, {{"run_id", man.run_id}, {"mode", name}}, {"trial", "radius", "e0", "e1"}, rows);
    }
    summary << name << ": q_hat " << ex.fit.q_hat << " (slope " << ex.fit.slope << ") eta_hat " << ex.fit.eta_hat
            << " eps_hat " << ex.fit.eps_hat << " R2 " << ex.fit.r_squared << " samples " << ex.fit.sample_count
            << "\n";
    if (lip.refused) continue;
    try {
      const IssGains g = compute_gains(ex.fit, lip.b_hat, ells);
      std::vector<std::vector<std::string>> rows;
      for (std::size_t i = 0; i < g.ells.size(); ++i) {
        rows.push_back({std::to_string(g.ells[i]), fmt(g.a_of_ell[i]), fmt(g.theta_of_ell[i]),
                        fmt(g.sigma_of_ell[i]), fmt(g.tau_of_ell[i])});
      }
      std::ofstream out = open_out(man.file("gains_" + name + ".csv"));
      write_table(out, {{"run_id", man.run_id}, {"mode", name}, {"b_hat", fmt(lip.b_hat)}},
                  {"ell", "a", "theta", "sigma", "tau"}, rows);
      summary << name << ": gains tabulated for ell = 1.." << max_ell << (g.valid ? "" : " (a not monotone)")
              << ", sigma(1) " << g.sigma_of_ell.front() << ", sigma(" << max_ell << ") " << g.sigma_of_ell.back()
              << "\n";
      if (small_gain) {
        const SmallGainResult sg = small_gain_check(g, 1.0, gamma3);
        summary << name << ": small-gain surrogate " << (sg.satisfied ? "met at ell = " + std::to_string(sg.ell_star)
                                                                     : std::string("not met in the table"))
                << " (" << sg.note << ")\n";
      }
    } catch (const HypothesisViolated& e) {
      summary << name << ": gains undefined: " << e.what() << "\n";
    }
  }
  if (q_gn > 0.0 && q_jn > 0.0) summary << "rate ordering JN > GN: " << (q_jn > q_gn ? "yes" : "no") << "\n";

  const LicqReport licq = licq_monitor(*bm.instance, star.z, x);
  HessianMode exact;
  exact.kind = HessianKind::josephy_newton;
  const SsoscReport ssosc =
      ssosc_monitor(*bm.instance, star.z, x, hessian_for(*bm.instance, star.z, x, exact));
  {
    std::ofstream out = open_out(man.file("regularity.csv"));
    write_table(out, {{"run_id", man.run_id}},
                {"licq_rows", "licq_rank", "licq_deficiency", "ssosc_null_dim", "ssosc_min_eig"},
                {{std::to_string(licq.rows), std::to_string(licq.rank), std::to_string(licq.deficiency),
                  std::to_string(ssosc.null_dim), fmt(ssosc.min_eigenvalue)}});
  }
  summary << "LICQ deficiency " << licq.deficiency << " (" << licq.rows << " rows)\n"
          << "reduced Hessian min eigenvalue " << ssosc.min_eigenvalue << " (null space " << ssosc.null_dim << ")\n";
  {
    std::ofstream out = open_out(man.file("diagnose_summary.txt"));
    out << summary.str();
  }
  man.save();
  std::cout << summary.str();
  return 0;
}

int cmd_roa_grid(const CommonFlags& flags, const std::string& grid_s, double tol) {
  RunConfig rc = flags.resolve();
  validate_config(rc);
  std::vector<std::pair<double, double>> grid;
  if (grid_s.empty()) {
    grid = default_ic_grid();
  } else {
    for (const std::string& item : split(grid_s, ';')) {
      const std::vector<double> v = parse_number_list([&] {
        std::string s = item;
        for (char& c : s) {
          if (c == ':') c = ',';
        }
        return s;
      }(), "--grid");
      if (v.size() != 2) throw ConfigError("--grid entries are y0:psi0_deg separated by ';'");
      grid.emplace_back(v[0], v[1] * kDeg);
    }
  }
  const fs::path dir = flags.output_dir();
  Manifest man("roa-grid", flags, rc, dir, {{"grid", grid_s}, {"tol", tol}});
  const Benchmark bm = make_benchmark(rc.bench);
  std::vector<IcRun> runs;
  try {
    runs = multi_initial_conditions(bm, rc.scenario, grid);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  const double ts = rc.bench.vehicle.ts;
  std::vector<std::vector<std::string>> rows;
  PlotPanel py{"lateral position, all initial conditions", "t [s]", "y [m]", {},
               {{rc.bench.x_ub[kY], "y max"}, {rc.bench.x_lb[kY], "y min"}}};
  bool all = true;
  for (std::size_t i = 0; i < runs.size(); ++i) {
    const IcRun& r = runs[i];
    const bool conv = r.ok && r.log.x_final.norm() <= tol;
    all = all && conv;
    rows.push_back({std::to_string(i), fmt(r.y0), fmt(r.psi0 / kDeg), r.ok ? "1" : "0",
                    r.ok ? fmt(r.log.x_final.norm()) : "nan", conv ? "1" : "0",
                    r.ok ? fmt(r.log.max_abs_state(kPsi) / kDeg) : "nan",
                    r.ok ? std::to_string(r.log.failure_events) : "0"});
    if (!r.ok) {
      std::cerr << "run " << i << " failed: " << r.error << "\n";
      continue;
    }
    save_log(man.file("roa_" + std::to_string(i) + ".csv").string(), r.log, ts, flags.record_timing, man.run_id);
    py.series.push_back({"", times(r.log, ts), state_trace(r.log, kY), palette()[i % palette().size()]});
  }
  {
    std::ofstream out = open_out(man.file("roa_summary.csv"));
    write_table(out, {{"run_id", man.run_id}, {"all_converged", all ? "true" : "false"}},
                {"run", "y0", "psi0_deg", "ok", "final_norm", "converged", "max_abs_psi_deg", "failure_events"},
                rows);
  }
  save_svg(man.file("roa.svg").string(), {py}, man.run_id);
  man.doc["all_converged"] = all;
  man.save();
  std::cout << "run_id " << man.run_id << "\n"
            << runs.size() << " initial conditions, all converged (|x_final| <= " << tol
            << "): " << (all ? "yes" : "no") << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Time-distributed SQP for nonlinear MPC of a lane-change manoeuvre"};
  app.require_subcommand(1);

  CommonFlags sim_flags, sweep_flags, ts_flags, diag_flags, roa_flags;

  CLI::App* sim = app.add_subcommand("simulate", "run one closed-loop scenario");
  sim_flags.add_to(sim);
  std::string controller, mode;
  int ell = 0;
  bool compute_error = false;
  sim->add_option("--controller", controller, "rti, tdo, optimal or lqr");
  sim->add_option("--ell", ell, "SQP iterations per sampling instant");
  sim->add_option("--mode", mode, "Hessian: gn, jn or jn_aug");
  sim->add_flag("--compute-error", compute_error, "also solve to tolerance each step and log e_k, u_opt");

  CLI::App* sweep = app.add_subcommand("sweep", "run every (mode, ell) cell on the same gusts");
  sweep_flags.add_to(sweep);
  std::string ells_s = "1,2", modes_s = "gn,jn";
  sweep->add_option("--ell", ells_s, "comma-separated ell values");
  sweep->add_option("--mode", modes_s, "comma-separated Hessian modes");

  CLI::App* tset = app.add_subcommand("terminal-set", "compute the DARE weight and the terminal set");
  ts_flags.add_to(tset);
  int samples = 10000;
  tset->add_option("--samples", samples, "invariance sampling points");

  CLI::App* diag = app.add_subcommand("diagnose", "rate fits, gains and regularity monitors");
  diag_flags.add_to(diag);
  int trials = 40, max_ell = 10;
  diag->add_option("--trials", trials, "perturbation trials per mode");
  diag->add_option("--max-ell", max_ell, "largest ell in the gains table");
  bool small_gain = false;
  diag->add_flag("--small-gain", small_gain, "also fit the gamma3 slope and run the small-gain check");

  CLI::App* roa = app.add_subcommand("roa-grid", "RTI runs from a grid of initial positions and yaw angles");
  roa_flags.add_to(roa);
  std::string grid_s;
  double tol = 1e-2;
  roa->add_option("--grid", grid_s, "y0:psi0_deg pairs separated by ';' (default 15-point grid)");
  roa->add_option("--tol", tol, "final-state norm counted as converged");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (*sim) return cmd_simulate(sim_flags, controller, ell, mode, compute_error);
    if (*sweep) return cmd_sweep(sweep_flags, ells_s, modes_s);
    if (*tset) return cmd_terminal_set(ts_flags, samples);
    if (*diag) return cmd_diagnose(diag_flags, trials, max_ell, small_gain);
    if (*roa) return cmd_roa_grid(roa_flags, grid_s, tol);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const NonStabilizableError& e) {
    std::cerr << "solver error: " << e.what() << "\n";
    return 2;
  } catch (const SolverFatalError& e) {
    std::cerr << "solver error: " << e.what() << "\n";
    return 2;
  } catch (const DiagnosticFailure& e) {
    std::cerr << "solver error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 1;
}
