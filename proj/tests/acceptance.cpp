// Acceptance checks. One PASS/FAIL line per criterion; nonzero exit on any
// failure.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "tdo/tdo.hpp"

namespace {

using namespace tdo;
using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

const Benchmark& bench() {
  static const Benchmark bm = make_benchmark();
  return bm;
}

// ---------------------------------------------------------------------------

Outcome c1_derivatives() {
  const auto t0 = Clock::now();
  const VehicleParams p;
  const OcpInstance& inst = *bench().instance;
  std::mt19937_64 rng(101);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  const PlantState scale = (PlantState() << 4.0, 0.12, 2.0, 0.5, 0.6, 0.07).finished();
  const double h = 1e-6;
  double worst_dyn = 0.0, worst_kkt = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    PlantState x;
    for (int i = 0; i < kStateDim; ++i) x[i] = scale[i] * uni(rng);
    const Input u(1.2 * uni(rng), 0.6 * uni(rng));
    const Linearization lin = jacobians(x, u, p);
    for (int j = 0; j < kStateDim + kInputDim; ++j) {
      PlantState xp = x, xm = x;
      Input up = u, um = u;
      if (j < kStateDim) {
        xp[j] += h;
        xm[j] -= h;
      } else {
        up[j - kStateDim] += h;
        um[j - kStateDim] -= h;
      }
      const PlantState fd = (step<double>(xp, up, 0.0, p) - step<double>(xm, um, 0.0, p)) / (2 * h);
      const PlantState ad = j < kStateDim ? PlantState(lin.A.col(j)) : PlantState(lin.B.col(j - kStateDim));
      worst_dyn = std::max(worst_dyn, ((fd - ad).array().abs() / (1.0 + ad.array().abs())).maxCoeff());
    }

    // ∇_w L against differences of the scalar Lagrangian, on a random
    // subset of coordinates.
    PrimalDualPoint z = inst.zero_point();
    for (int i = 0; i < z.w.size(); ++i) z.w[i] = 0.05 * uni(rng);
    for (int i = 0; i < z.lam.size(); ++i) z.lam[i] = uni(rng);
    for (int i = 0; i < z.v.size(); ++i) z.v[i] = std::abs(uni(rng));
    const Eigen::VectorXd xv = x;
    const Eigen::VectorXd grad = inst.lagrangian_gradient(z, inst.linearize_eq(z.w, xv));
    auto lagr = [&](const Eigen::VectorXd& w) {
      return inst.objective(w) + z.lam.dot(inst.eq_residual(w, xv)) + z.v.dot(inst.ineq_values(w));
    };
    std::uniform_int_distribution<int> pick(0, inst.n_w() - 1);
    for (int s = 0; s < 20; ++s) {
      const int i = pick(rng);
      Eigen::VectorXd wp = z.w, wm = z.w;
      wp[i] += h;
      wm[i] -= h;
      const double fd = (lagr(wp) - lagr(wm)) / (2 * h);
      worst_kkt = std::max(worst_kkt, std::abs(fd - grad[i]) / (1.0 + std::abs(grad[i])));
    }
  }
  const double secs = seconds_since(t0);
  Outcome o;
  o.pass = worst_dyn <= 1e-5 && worst_kkt <= 1e-5 && secs < 10.0;
  o.detail = "max rel err dynamics " + fmt("%.2e", worst_dyn) + ", lagrangian gradient " + fmt("%.2e", worst_kkt) +
             ", " + fmt("%.1f s", secs);
  return o;
}

// ---------------------------------------------------------------------------

struct Enumerated {
  bool found = false;
  Eigen::VectorXd x, pi, eta;
};

Enumerated enumerate(const Eigen::MatrixXd& h, const Eigen::VectorXd& g, const Eigen::MatrixXd& e,
                     const Eigen::VectorXd& e_rhs, const Eigen::MatrixXd& c, const Eigen::VectorXd& c_rhs) {
  const int n = static_cast<int>(g.size());
  const int ne = static_cast<int>(e.rows());
  const int m = static_cast<int>(c.rows());
  Enumerated best;
  for (int mask = 0; mask < (1 << m); ++mask) {
    std::vector<int> s;
    for (int i = 0; i < m; ++i) {
      if (mask & (1 << i)) s.push_back(i);
    }
    const int k = ne + static_cast<int>(s.size());
    if (k > n) continue;
    Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(n + k, n + k);
    Eigen::VectorXd rhs(n + k);
    kkt.topLeftCorner(n, n) = h;
    rhs.head(n) = -g;
    for (int r = 0; r < ne; ++r) {
      kkt.block(n + r, 0, 1, n) = e.row(r);
      kkt.block(0, n + r, n, 1) = e.row(r).transpose();
      rhs[n + r] = -e_rhs[r];
    }
    for (std::size_t j = 0; j < s.size(); ++j) {
      const int r = n + ne + static_cast<int>(j);
      kkt.block(r, 0, 1, n) = c.row(s[j]);
      kkt.block(0, r, n, 1) = c.row(s[j]).transpose();
      rhs[r] = -c_rhs[s[j]];
    }
    Eigen::FullPivLU<Eigen::MatrixXd> lu(kkt);
    if (!lu.isInvertible()) continue;
    const Eigen::VectorXd sol = lu.solve(rhs);
    const Eigen::VectorXd x = sol.head(n);
    if (m > 0 && (c * x + c_rhs).maxCoeff() > 1e-9) continue;
    Eigen::VectorXd eta = Eigen::VectorXd::Zero(m);
    bool dual_ok = true;
    for (std::size_t j = 0; j < s.size(); ++j) {
      eta[s[j]] = sol[n + ne + static_cast<int>(j)];
      if (eta[s[j]] < -1e-9) dual_ok = false;
    }
    if (!dual_ok) continue;
    best.found = true;
    best.x = x;
    best.pi = sol.segment(n, ne);
    best.eta = eta;
    return best;
  }
  return best;
}

Outcome c2_qp_oracle() {
  const auto t0 = Clock::now();
  std::mt19937_64 gen(2024);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  std::uniform_int_distribution<int> dim(1, 6);
  double worst = 0.0;
  int mismatches = 0, compared = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const int n = dim(gen);
    const int m = std::uniform_int_distribution<int>(0, 4)(gen);
    Eigen::MatrixXd l(n, n);
    for (int i = 0; i < n * n; ++i) l.data()[i] = uni(gen);
    const Eigen::MatrixXd h = l * l.transpose() + 0.1 * Eigen::MatrixXd::Identity(n, n);
    Eigen::VectorXd g(n), xf(n);
    for (int i = 0; i < n; ++i) {
      g[i] = 3.0 * uni(gen);
      xf[i] = uni(gen);
    }
    Eigen::MatrixXd c(m, n);
    for (int i = 0; i < m * n; ++i) c.data()[i] = uni(gen);
    Eigen::VectorXd c_rhs(m);
    for (int i = 0; i < m; ++i) c_rhs[i] = -c.row(i).dot(xf) - 0.5 * (uni(gen) + 1.0);
    const Eigen::MatrixXd e(0, n);
    const Eigen::VectorXd e_rhs(0);

    const Enumerated oracle = enumerate(h, g, e, e_rhs, c, c_rhs);
    QpSubproblem sub;
    sub.hess = h.sparseView(0.0, 0.0);
    sub.grad = g;
    sub.eq_jac = e.sparseView(0.0, 0.0);
    sub.eq_rhs = e_rhs;
    sub.ineq_jac = c.sparseView(0.0, 0.0);
    sub.ineq_rhs = c_rhs;
    const QpSolution sol = solve_qp(sub);
    if (!oracle.found || sol.status != QpStatus::solved) {
      ++mismatches;
      continue;
    }
    ++compared;
    const double err = std::max((sol.dw - oracle.x).cwiseAbs().maxCoeff(),
                                m > 0 ? (sol.eta - oracle.eta).cwiseAbs().maxCoeff() : 0.0);
    worst = std::max(worst, err);
    if (err > 1e-7) ++mismatches;
  }
  const double secs = seconds_since(t0);
  Outcome o;
  o.pass = mismatches == 0 && compared == 200 && secs < 30.0;
  o.detail = std::to_string(compared) + " QPs compared, " + std::to_string(mismatches) + " mismatches, max err " +
             fmt("%.2e", worst) + ", " + fmt("%.1f s", secs);
  return o;
}

// ---------------------------------------------------------------------------

Outcome c3_fixed_point() {
  const auto inst = bench().instance;
  const Eigen::VectorXd x = lane_change_x0();
  const SolveResult sol = solve_oracle(inst, x, inst->zero_point());
  if (!sol.converged()) return {false, "oracle did not converge"};
  double worst = 0.0;
  std::string per;
  for (HessianKind kind : {HessianKind::gauss_newton, HessianKind::josephy_newton, HessianKind::jn_augmented}) {
    SqpConfig cfg;
    cfg.mode.kind = kind;
    if (kind == HessianKind::jn_augmented) cfg.mode.rho_aug = 10.0;
    SqpEngine eng(inst, cfg);
    PrimalDualPoint z = sol.z;
    std::vector<int> warm = sol.active_set;
    const StepReport rep = eng.td_step(z, x, warm);
    const double d = rep.ok() ? z.distance(sol.z) : INFINITY;
    worst = std::max(worst, d);
    per += std::string(per.empty() ? "" : ", ") + to_string(kind) + " " + fmt("%.1e", d);
  }
  return {worst <= 1e-7, "step length at z*: " + per + " (pi(z*) = " + fmt("%.1e", sol.residual) + ")"};
}

// ---------------------------------------------------------------------------

Outcome c4_rates() {
  const auto t0 = Clock::now();
  const auto inst = bench().instance;
  const Eigen::VectorXd x = lane_change_x0();
  const SolveResult oracle = solve_oracle(inst, x, inst->zero_point());
  if (!oracle.converged()) return {false, "oracle did not converge"};
  const int trials = 40;
  const RateExperiment gn =
      fit_rate(inst, x, HessianMode{HessianKind::gauss_newton}, default_fit_radii(), trials, 7, &oracle);
  const RateExperiment jn =
      fit_rate(inst, x, HessianMode{HessianKind::josephy_newton}, default_fit_radii(), trials, 7, &oracle);
  const double secs = seconds_since(t0);
  Outcome o;
  o.pass = jn.fit.q_hat >= 1.7 && gn.fit.q_hat <= 1.3 && gn.fit.eta_hat < 1.0 && gn.fit.r_squared >= 0.95 &&
           jn.fit.r_squared >= 0.95 && gn.fit.trials >= 30 && jn.fit.trials >= 30 && secs < 120.0;
  o.detail = "JN q=" + fmt("%.3f", jn.fit.q_hat) + " R2=" + fmt("%.3f", jn.fit.r_squared) +
             "; GN q=" + fmt("%.3f", gn.fit.q_hat) + " (slope " + fmt("%.3f", gn.fit.slope) + ") eta=" +
             fmt("%.3f", gn.fit.eta_hat) + " R2=" + fmt("%.3f", gn.fit.r_squared) + "; " + std::to_string(trials) +
             " trials each, " + fmt("%.1f s", secs);
  return o;
}

// ---------------------------------------------------------------------------

Outcome c5_gains() {
  std::vector<int> ells;
  for (int l = 1; l <= 10; ++l) ells.push_back(l);
  const IssGains lin = compute_gains(1.0, 0.5, 0.1, 2.0, ells);
  const IssGains quad = compute_gains(2.0, 1.0, 0.5, 2.0, ells);
  bool ok = true;
  // q = 1: a = 0.5^ℓ, θ = 2a, σ = 2a/(1 − a).
  for (int i = 0; i < 10; ++i) {
    const double a = std::pow(0.5, i + 1);
    ok &= std::abs(lin.a_of_ell[i] - a) <= 1e-15 * a;
    ok &= std::abs(lin.theta_of_ell[i] - 2 * a) <= 1e-15 * a;
    ok &= std::abs(lin.sigma_of_ell[i] - 2 * a / (1 - a)) <= 2e-15 * (2 * a / (1 - a));
    const double aq = std::pow(0.5, std::pow(2.0, i + 1) - 1.0);
    ok &= std::abs(quad.a_of_ell[i] - aq) <= 1e-14 * aq;
  }
  ok &= lin.sigma_of_ell[0] == 2.0;
  ok &= quad.a_of_ell[0] == 0.5 && quad.a_of_ell[1] == 0.125;
  bool decreasing = true;
  for (int i = 1; i < 10; ++i) {
    decreasing &= lin.a_of_ell[i] < lin.a_of_ell[i - 1] && quad.a_of_ell[i] < quad.a_of_ell[i - 1];
  }
  const bool sigma_vanishes = lin.sigma_of_ell[9] < 1e-2 * lin.sigma_of_ell[0] && quad.sigma_of_ell[9] < 1e-100;
  return {ok && decreasing && sigma_vanishes && lin.valid && quad.valid,
          "sigma(1)=" + fmt("%.3g", lin.sigma_of_ell[0]) + " sigma(10)=" + fmt("%.3g", lin.sigma_of_ell[9]) +
              " (q=1); a(1..2)=" + fmt("%.3g", quad.a_of_ell[0]) + "," + fmt("%.3g", quad.a_of_ell[1]) +
              " (q=2); monotone " + (decreasing ? "yes" : "no")};
}

// ---------------------------------------------------------------------------

Outcome c6_stabilization() {
  const auto t0 = Clock::now();
  ScenarioConfig cfg;
  cfg.disturbance_on = false;
  cfg.init = InitStrategy::presolve;
  cfg.steps = 250;
  const ClosedLoopLog log = run_scenario(bench(), cfg);
  const double secs = seconds_since(t0);
  const double xn = log.x_final.norm();
  return {xn <= 1e-2 && secs < 60.0 && log.failure_events == 0,
          "|x_250| = " + fmt("%.2e", xn) + ", " + std::to_string(log.failure_events) + " QP failures, " +
              fmt("%.1f s", secs)};
}

// ---------------------------------------------------------------------------

struct SeedRuns {
  std::vector<double> psi_gn1, psi_gn2, med_gn1, med_jn1;
  std::vector<double> cost_gn1;
  int failures = 0;
};

const SeedRuns& seed_runs() {
  static const SeedRuns runs = [] {
    SeedRuns r;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      auto run = [&](HessianKind kind, int ell) {
        ScenarioConfig cfg;
        cfg.seed = seed;
        cfg.sqp.mode.kind = kind;
        cfg.sqp.ell = ell;
        ClosedLoopLog log = run_scenario(bench(), cfg);
        r.failures += log.failure_events;
        return log;
      };
      const ClosedLoopLog gn1 = run(HessianKind::gauss_newton, 1);
      const ClosedLoopLog gn2 = run(HessianKind::gauss_newton, 2);
      const ClosedLoopLog jn1 = run(HessianKind::josephy_newton, 1);
      r.psi_gn1.push_back(gn1.max_abs_state(kPsi) / kDeg);
      r.psi_gn2.push_back(gn2.max_abs_state(kPsi) / kDeg);
      r.med_gn1.push_back(median_of(gn1.residuals()));
      r.med_jn1.push_back(median_of(jn1.residuals()));
      r.cost_gn1.push_back(gn1.cumulative_cost());
    }
    return r;
  }();
  return runs;
}

Outcome c7_constraints() {
  const SeedRuns& r = seed_runs();
  bool ok = true;
  std::string d;
  for (std::size_t i = 0; i < r.psi_gn2.size(); ++i) {
    ok &= r.psi_gn2[i] <= 7.1 && r.psi_gn2[i] <= r.psi_gn1[i];
    d += (d.empty() ? "" : "; ") + std::string("seed ") + std::to_string(i + 1) + ": " + fmt("%.4f", r.psi_gn2[i]) +
         " (l=2) vs " + fmt("%.4f", r.psi_gn1[i]) + " (l=1) deg";
  }
  return {ok, "max|psi| " + d};
}

Outcome c8_residuals() {
  const SeedRuns& r = seed_runs();
  bool ok = true;
  std::string d;
  for (std::size_t i = 0; i < r.med_jn1.size(); ++i) {
    ok &= r.med_jn1[i] <= r.med_gn1[i];
    d += (d.empty() ? "" : "; ") + std::string("seed ") + std::to_string(i + 1) + ": " + fmt("%.2e", r.med_jn1[i]) +
         " vs " + fmt("%.2e", r.med_gn1[i]);
  }
  return {ok, "median pi JN vs GN (l=1) " + d};
}

// ---------------------------------------------------------------------------

Outcome c9_rti_vs_lqr() {
  ScenarioConfig cfg;
  cfg.seed = 1;
  const ClosedLoopLog rti = run_scenario(bench(), cfg);
  cfg.controller = ControllerKind::lqr;
  const ClosedLoopLog lqr = run_scenario(bench(), cfg);
  bool rti_in_bounds = true;
  for (const StepRecord& r : rti.records) {
    rti_in_bounds &= (r.u.array() <= lane_change_u_ub().array() + 1e-9).all() &&
                     (r.u.array() >= lane_change_u_lb().array() - 1e-9).all();
  }
  const bool ok = rti.cumulative_cost() <= lqr.cumulative_cost() && rti.clamp_events == 0 && rti_in_bounds &&
                  lqr.clamp_events > 0;
  return {ok, "cumulative cost RTI " + fmt("%.2f", rti.cumulative_cost()) + " vs LQR " +
                  fmt("%.2f", lqr.cumulative_cost()) + "; clamp events RTI " + std::to_string(rti.clamp_events) +
                  ", LQR " + std::to_string(lqr.clamp_events)};
}

// ---------------------------------------------------------------------------

Outcome c10_rti_vs_optimal() {
  ScenarioConfig cfg;
  cfg.disturbance_on = false;
  cfg.sqp.mode.kind = HessianKind::gauss_newton;
  cfg.sqp.ell = 50;
  cfg.sqp.stop_tol = 1e-12;
  cfg.compute_error = true;
  const ClosedLoopLog log = run_scenario(bench(), cfg);
  double worst = 0.0;
  for (const StepRecord& r : log.records) worst = std::max(worst, (r.u - r.u_opt).norm());

  // Relative timing on the gust scenario, from the per-step controller time
  // (presolve excluded). Without wind the full solve needs no iterations once
  // the state has settled, which says nothing about per-step cost.
  ScenarioConfig timing;
  timing.seed = 1;
  timing.steps = 100;
  const ClosedLoopLog rti = run_scenario(bench(), timing);
  timing.controller = ControllerKind::optimal;
  const ClosedLoopLog opt = run_scenario(bench(), timing);
  double t_rti = 0.0, t_opt = 0.0, sqp_iters = 0.0;
  for (const StepRecord& r : rti.records) t_rti += r.wall_time;
  for (const StepRecord& r : opt.records) {
    t_opt += r.wall_time;
    sqp_iters += r.qp_iterations;
  }
  const double n = static_cast<double>(timing.steps);
  const double ratio = t_rti / t_opt;
  const bool ok = std::isfinite(worst) && worst <= 1e-3 && ratio < 0.2 && log.failure_events == 0 &&
                  rti.failure_events == 0 && opt.failure_events == 0;
  return {ok, "max |u_tdo - u_opt| at l=50 = " + fmt("%.2e", worst) + "; per-step time RTI/optimal = " +
                  fmt("%.3f", ratio) + " (" + fmt("%.2f", 1e3 * t_rti / n) + " ms vs " + fmt("%.2f", 1e3 * t_opt / n) +
                  " ms; warm-started full solve averages " + fmt("%.2f", sqp_iters / n) + " SQP iterations)"};
}

// ---------------------------------------------------------------------------

Outcome c11_terminal_set() {
  const TerminalIngredients& ti = bench().terminal;
  const InvarianceReport rep =
      check_invariance(ti.set, ti.a_cl(), ti.state_constraints, ti.input_constraints, 10000, 11, 1e-9);
  return {ti.certified && rep.samples == 10000 && rep.ok(),
          std::to_string(ti.set.rows()) + " rows, certified " + (ti.certified ? "yes" : "no") + ", " +
              std::to_string(rep.samples) + " samples, " + std::to_string(rep.invariance_violations) +
              " invariance / " + std::to_string(rep.admissibility_violations) + " admissibility violations"};
}

// ---------------------------------------------------------------------------

Outcome c12_regularity() {
  const auto inst = bench().instance;
  int bad = 0, unsolved = 0;
  int worst_def = 0;
  double min_eig = INFINITY;
  for (const auto& [y0, psi0] : default_ic_grid()) {
    Eigen::VectorXd x = Eigen::VectorXd::Zero(kStateDim);
    x[kY] = y0;
    x[kPsi] = psi0;
    const SolveResult sol = solve_oracle(inst, x, inst->zero_point());
    if (!sol.converged()) {
      ++unsolved;
      continue;
    }
    const LicqReport licq = licq_monitor(*inst, sol.z, x);
    const SsoscReport ss = ssosc_monitor(*inst, sol.z, x, jn_hessian(*inst, sol.z, x, HessianMode{}));
    worst_def = std::max(worst_def, licq.deficiency);
    min_eig = std::min(min_eig, ss.min_eigenvalue);
    if (licq.deficiency != 0 || !(ss.min_eigenvalue > 0.0)) ++bad;
  }
  return {bad == 0 && unsolved == 0,
          std::to_string(default_ic_grid().size()) + " initial conditions, " + std::to_string(unsolved) +
              " unsolved, max LICQ deficiency " + std::to_string(worst_def) + ", min reduced-Hessian eigenvalue " +
              fmt("%.3g", min_eig)};
}

// ---------------------------------------------------------------------------

Outcome c13_determinism() {
  auto render = [](const ClosedLoopLog& log) {
    std::ostringstream os;
    write_log(os, log, bench().options.vehicle.ts);
    return os.str();
  };
  ScenarioConfig cfg;
  cfg.seed = 3;
  cfg.steps = 120;
  const std::string a = render(run_scenario(bench(), cfg));
  const std::string b = render(run_scenario(bench(), cfg));
  cfg.sqp.mode.kind = HessianKind::josephy_newton;
  cfg.sqp.ell = 2;
  cfg.compute_error = true;
  const std::string c = render(run_scenario(bench(), cfg));
  const std::string d = render(run_scenario(bench(), cfg));
  const Benchmark again = make_benchmark();
  std::ostringstream m1, m2;
  write_matrix(m1, bench().terminal.set.a_mat);
  write_matrix(m2, again.terminal.set.a_mat);
  const bool ok = a == b && c == d && a != c && m1.str() == m2.str();
  return {ok, "RTI log " + std::to_string(a.size()) + " bytes " + (a == b ? "identical" : "DIFFER") +
                  ", JN l=2 log " + (c == d ? "identical" : "DIFFER") + ", terminal set " +
                  (m1.str() == m2.str() ? "identical" : "DIFFER")};
}

}  // namespace

// --expect-fail C10,...: exit 0 only if exactly these criteria fail. Used to
// keep a documented, unattained criterion visible without failing the suite.
int main(int argc, char** argv) {
  std::set<std::string> expected;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--expect-fail" && i + 1 < argc) {
      std::stringstream ss(argv[++i]);
      std::string item;
      while (std::getline(ss, item, ',')) expected.insert(item);
    } else {
      std::fprintf(stderr, "usage: acceptance [--expect-fail C1,C2,...]\n");
      return 2;
    }
  }
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"C1", c1_derivatives},    {"C2", c2_qp_oracle},       {"C3", c3_fixed_point},
      {"C4", c4_rates},          {"C5", c5_gains},           {"C6", c6_stabilization},
      {"C7", c7_constraints},    {"C8", c8_residuals},       {"C9", c9_rti_vs_lqr},
      {"C10", c10_rti_vs_optimal}, {"C11", c11_terminal_set}, {"C12", c12_regularity},
      {"C13", c13_determinism}};
  std::set<std::string> failed;
  for (const auto& [name, fn] : criteria) {
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) failed.insert(name);
    std::printf("%s %s %s\n", o.pass ? "PASS" : "FAIL", name, o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%zu/%zu criteria passed\n", criteria.size() - failed.size(), criteria.size());
  if (!expected.empty()) {
    std::string list;
    for (const auto& e : expected) list += (list.empty() ? "" : ",") + e;
    std::printf("expected failures: %s -> %s\n", list.c_str(),
                failed == expected ? "matched" : "MISMATCH (update the list or fix the regression)");
    return failed == expected ? 0 : 1;
  }
  return failed.empty() ? 0 : 1;
}
