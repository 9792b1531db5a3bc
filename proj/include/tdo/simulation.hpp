#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "tdo/benchmark.hpp"
#include "tdo/controller.hpp"
#include "tdo/matrix_io.hpp"
#include "tdo/sqp.hpp"
#include "tdo/vehicle.hpp"

namespace tdo {

/// Seeded Gaussian source: 64-bit Mersenne Twister (fully specified by the
/// C++ standard) feeding a Box–Muller transform, so sequences do not depend
/// on the standard library's distribution implementation.
class GaussianRng {
 public:
  static constexpr const char* kIdentity = "mt19937_64+box-muller";

  explicit GaussianRng(std::uint64_t seed) : gen_(seed) {}

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = 1.0 - uniform();  // (0, 1]
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double th = 2.0 * 3.14159265358979323846 * u2;
    spare_ = r * std::sin(th);
    has_spare_ = true;
    return r * std::cos(th);
  }

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

 private:
  std::mt19937_64 gen_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

enum class ControllerKind { tdo, optimal, lqr };

inline const char* to_string(ControllerKind k) {
  switch (k) {
    case ControllerKind::tdo: return "tdo";
    case ControllerKind::optimal: return "optimal";
    case ControllerKind::lqr: return "lqr";
  }
  return "unknown";
}

struct ScenarioConfig {
  PlantState x0 = lane_change_x0();
  int steps = 250;
  std::uint64_t seed = 1;
  double gust_mean = 15.0;
  double gust_std = 5.0;
  bool disturbance_on = true;
  ControllerKind controller = ControllerKind::tdo;
  SqpConfig sqp;
  InitStrategy init = InitStrategy::presolve;
  /// Solve the OCP to tolerance at every x_k and log ‖z_k − z*(x_k)‖ and κ(x_k).
  bool compute_error = false;
  /// Throw on the first failed QP instead of holding z.
  bool abort_on_failure = false;

  void validate() const {
    if (steps < 1) throw std::invalid_argument("ScenarioConfig: steps must be >= 1");
    if (!(gust_std >= 0.0)) throw std::invalid_argument("ScenarioConfig: gust_std must be >= 0");
    if (!std::isfinite(gust_mean)) throw std::invalid_argument("ScenarioConfig: gust_mean");
    if (!x0.allFinite()) throw std::invalid_argument("ScenarioConfig: x0");
    sqp.validate();
  }
};

/// The sequence d_0..d_{steps−1} a scenario will see.
inline std::vector<double> gust_sequence(const ScenarioConfig& cfg) {
  std::vector<double> d(static_cast<std::size_t>(cfg.steps), 0.0);
  if (!cfg.disturbance_on) return d;
  GaussianRng rng(cfg.seed);
  for (double& v : d) v = rng.normal(cfg.gust_mean, cfg.gust_std);
  return d;
}

class SolverFatalError : public std::runtime_error {
 public:
  explicit SolverFatalError(const std::string& what) : std::runtime_error(what) {}
};

struct StepRecord {
  int k = 0;
  PlantState x = PlantState::Zero();
  Input u = Input::Zero();
  double d = 0.0;
  double pi = std::numeric_limits<double>::quiet_NaN();
  double e_norm = std::numeric_limits<double>::quiet_NaN();
  Input u_opt = Input::Constant(std::numeric_limits<double>::quiet_NaN());
  double margin_y = 0.0;
  double margin_psi = 0.0;
  double margin_max = 0.0;
  double stage_cost = 0.0;
  double cum_cost = 0.0;
  int ell = 0;
  std::string mode;
  double pi_before = std::numeric_limits<double>::quiet_NaN();
  double pi_after = std::numeric_limits<double>::quiet_NaN();
  double reg_delta = 0.0;
  int active_set_size = 0;
  int qp_iterations = 0;
  bool clamped = false;
  bool failed = false;
  double wall_time = 0.0;
};

struct ClosedLoopLog {
  std::vector<std::pair<std::string, std::string>> header;
  std::vector<StepRecord> records;
  PlantState x_final = PlantState::Zero();
  int clamp_events = 0;
  int failure_events = 0;

  double max_abs_state(int j) const {
    double m = 0.0;
    for (const auto& r : records) m = std::max(m, std::abs(r.x[j]));
    return std::max(m, std::abs(x_final[j]));
  }
  double cumulative_cost() const { return records.empty() ? 0.0 : records.back().cum_cost; }
  std::vector<double> residuals() const {
    std::vector<double> v;
    for (const auto& r : records) v.push_back(r.pi);
    return v;
  }
};

/// Stage cost used for reporting: ½xᵀQx + ½uᵀRu + ρ·(violation of the
/// softened bounds), the same weighting the OCP applies.
inline double reported_stage_cost(const OcpConfig& c, const Eigen::VectorXd& x, const Eigen::VectorXd& u) {
  double cost = 0.5 * x.dot(c.q_weight * x) + 0.5 * u.dot(c.r_weight * u);
  for (int j : c.soft_indices) {
    cost += c.penalty_rho * (std::max(0.0, x[j] - c.x_ub[j]) + std::max(0.0, c.x_lb[j] - x[j]));
  }
  return cost;
}

inline std::vector<std::pair<std::string, std::string>> scenario_header(const ScenarioConfig& cfg) {
  std::vector<std::pair<std::string, std::string>> h;
  std::string x0;
  for (int i = 0; i < kStateDim; ++i) x0 += (i ? "," : "") + format_double(cfg.x0[i]);
  h.emplace_back("x0", x0);
  h.emplace_back("steps", std::to_string(cfg.steps));
  h.emplace_back("seed", std::to_string(cfg.seed));
  h.emplace_back("gust_mean", format_double(cfg.gust_mean));
  h.emplace_back("gust_std", format_double(cfg.gust_std));
  h.emplace_back("disturbance_on", cfg.disturbance_on ? "true" : "false");
  h.emplace_back("controller", to_string(cfg.controller));
  h.emplace_back("mode", to_string(cfg.sqp.mode.kind));
  h.emplace_back("ell", std::to_string(cfg.sqp.ell));
  h.emplace_back("rho_aug", format_double(cfg.sqp.mode.rho_aug));
  h.emplace_back("fd_step", format_double(cfg.sqp.mode.fd_step));
  h.emplace_back("kkt_tol", format_double(cfg.sqp.kkt_tol));
  h.emplace_back("stop_tol", format_double(cfg.sqp.stop_tol));
  h.emplace_back("init", cfg.init == InitStrategy::presolve ? "presolve" : "cold");
  h.emplace_back("rng", GaussianRng::kIdentity);
  return h;
}

/// Plant + controller loop: d_k ~ N(mean, std) (or 0), u_k from the chosen
/// law at x_k, x_{k+1} = step(x_k, u_k, d_k).
inline ClosedLoopLog run_scenario(const Benchmark& bm, const ScenarioConfig& cfg) {
  cfg.validate();
  const OcpInstance& inst = *bm.instance;
  const OcpConfig& oc = inst.config();
  const std::vector<double> gusts = gust_sequence(cfg);

  ClosedLoopLog log;
  log.header = scenario_header(cfg);

  std::unique_ptr<TdoController> tdo;
  std::unique_ptr<OptimalController> opt;
  std::unique_ptr<LqrController> lqr;
  InitResult init;
  if (cfg.controller == ControllerKind::lqr) {
    lqr = std::make_unique<LqrController>(bm.terminal.dare.k, oc.u_lb, oc.u_ub);
  } else {
    init = initialize(bm.instance, cfg.x0, cfg.init);
    if (cfg.controller == ControllerKind::tdo) {
      tdo = std::make_unique<TdoController>(bm.instance, cfg.sqp);
      tdo->reset(init.z, init.active_set);
    } else {
      opt = std::make_unique<OptimalController>(bm.instance, cfg.sqp);
      opt->reset(init.z, init.active_set);
    }
    log.header.emplace_back("presolved", init.presolved ? "true" : "false");
  }

  // Oracle for e_k and κ(x_k), tracked by warm starts.
  std::unique_ptr<SqpEngine> oracle;
  PrimalDualPoint z_star;
  std::vector<int> star_set;
  if (cfg.compute_error) {
    SqpConfig ocfg;
    ocfg.kkt_tol = cfg.sqp.kkt_tol;
    oracle = std::make_unique<SqpEngine>(bm.instance, ocfg);
    z_star = init.presolved ? init.z : inst.zero_point();
    star_set = init.active_set;
  }

  PlantState x = cfg.x0;
  double cum = 0.0;
  for (int k = 0; k < cfg.steps; ++k) {
    StepRecord rec;
    rec.k = k;
    rec.x = x;
    rec.d = gusts[static_cast<std::size_t>(k)];
    const Eigen::VectorXd xv = x;

    const auto t0 = std::chrono::steady_clock::now();
    ControlOutput out;
    if (tdo) {
      out = tdo->control(xv);
    } else if (opt) {
      out = opt->control(xv);
    } else {
      out = lqr->control(xv);
    }
    rec.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    rec.u = out.u;
    rec.clamped = out.clamped;
    rec.failed = out.failed;
    if (out.clamped) ++log.clamp_events;
    if (out.failed) ++log.failure_events;
    if (out.failed && cfg.abort_on_failure) {
      throw SolverFatalError("run_scenario: QP failure at step " + std::to_string(k));
    }
    if (tdo || opt) {
      rec.mode = to_string(cfg.sqp.mode.kind);
      rec.ell = tdo ? cfg.sqp.ell : 0;
      const PrimalDualPoint& zk = tdo ? tdo->state() : opt->state();
      rec.pi = out.reports.empty() ? inst.natural_residual(zk, xv) : out.reports.back().pi_after;
      if (!out.reports.empty()) {
        rec.pi_before = out.reports.front().pi_before;
        rec.pi_after = out.reports.back().pi_after;
        double reg = 0.0;
        int qp_it = 0;
        for (const auto& r : out.reports) {
          reg = std::max(reg, r.reg_delta);
          qp_it += r.qp_iterations;
        }
        rec.reg_delta = reg;
        rec.qp_iterations = qp_it;
        rec.active_set_size = static_cast<int>(out.reports.back().active_set.size());
      }
      if (oracle) {
        const SolveResult s = oracle->solve_to_tolerance(z_star, xv, star_set);
        if (s.converged()) {
          z_star = s.z;
          star_set = s.active_set;
          rec.e_norm = zk.distance(z_star);
          rec.u_opt = inst.first_input(z_star.w);
        }
      }
    } else {
      rec.mode = "lqr";
    }

    const Eigen::VectorXd bm_marg = inst.state_bound_margins(xv);
    rec.margin_y = std::max(bm_marg[2 * kY], bm_marg[2 * kY + 1]);
    rec.margin_psi = std::max(bm_marg[2 * kPsi], bm_marg[2 * kPsi + 1]);
    rec.margin_max = bm_marg.maxCoeff();
    rec.stage_cost = reported_stage_cost(oc, xv, rec.u);
    cum += rec.stage_cost;
    rec.cum_cost = cum;

    x = step<double>(x, rec.u, rec.d, bm.dynamics->params());
    log.records.push_back(std::move(rec));
  }
  log.x_final = x;
  return log;
}

struct SweepCell {
  HessianKind mode = HessianKind::gauss_newton;
  int ell = 1;
  ClosedLoopLog log;
  bool ok = true;
  std::string error;
  double max_abs_psi_deg = 0.0;
  double max_pi = 0.0;
  double median_pi = 0.0;
  double cum_cost = 0.0;
};

inline double median_of(std::vector<double> v) {
  std::vector<double> finite;
  for (double x : v) {
    if (std::isfinite(x)) finite.push_back(x);
  }
  if (finite.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(finite.begin(), finite.end());
  const std::size_t n = finite.size();
  return n % 2 ? finite[n / 2] : 0.5 * (finite[n / 2 - 1] + finite[n / 2]);
}

inline void summarize(SweepCell& cell) {
  cell.max_abs_psi_deg = cell.log.max_abs_state(kPsi) / kDeg;
  double mx = 0.0;
  for (const auto& r : cell.log.records) {
    if (std::isfinite(r.pi)) mx = std::max(mx, r.pi);
  }
  cell.max_pi = mx;
  cell.median_pi = median_of(cell.log.residuals());
  cell.cum_cost = cell.log.cumulative_cost();
}

/// Runs every (mode, ℓ) pair on the same seed, so all cells see the same
/// gust realization.
inline std::vector<SweepCell> sweep_ell(const Benchmark& bm, const ScenarioConfig& base,
                                        const std::vector<int>& ells,
                                        const std::vector<HessianMode>& modes) {
  if (ells.empty() || modes.empty()) throw std::invalid_argument("sweep_ell: empty list");
  std::vector<SweepCell> cells;
  for (const HessianMode& m : modes) {
    for (int ell : ells) {
      SweepCell cell;
      cell.mode = m.kind;
      cell.ell = ell;
      ScenarioConfig cfg = base;
      cfg.controller = ControllerKind::tdo;
      cfg.sqp.mode = m;
      cfg.sqp.ell = ell;
      try {
        cell.log = run_scenario(bm, cfg);
        summarize(cell);
      } catch (const std::exception& e) {
        cell.ok = false;
        cell.error = e.what();
      }
      cells.push_back(std::move(cell));
    }
  }
  return cells;
}

/// (y0, ψ0) pairs over {−3.7, −1.85, 0} × {−6°, −3°, 0°, 3°, 6°}.
inline std::vector<std::pair<double, double>> default_ic_grid() {
  std::vector<std::pair<double, double>> g;
  for (double y : {-3.7, -1.85, 0.0}) {
    for (double p : {-6.0, -3.0, 0.0, 3.0, 6.0}) g.emplace_back(y, p * kDeg);
  }
  return g;
}

struct IcRun {
  double y0 = 0.0;
  double psi0 = 0.0;
  ClosedLoopLog log;
  bool ok = true;
  std::string error;
};

/// One RTI run per grid point; all other initial states are zero.
inline std::vector<IcRun> multi_initial_conditions(const Benchmark& bm, const ScenarioConfig& base,
                                                   const std::vector<std::pair<double, double>>& grid) {
  std::vector<IcRun> runs;
  for (const auto& [y0, psi0] : grid) {
    IcRun run;
    run.y0 = y0;
    run.psi0 = psi0;
    ScenarioConfig cfg = base;
    cfg.x0 = PlantState::Zero();
    cfg.x0[kY] = y0;
    cfg.x0[kPsi] = psi0;
    if (!Polytope::box(bm.ocp.x_lb, bm.ocp.x_ub).contains(cfg.x0)) {
      throw std::invalid_argument("multi_initial_conditions: grid point outside the state box");
    }
    cfg.controller = ControllerKind::tdo;
    cfg.sqp.mode.kind = HessianKind::gauss_newton;
    cfg.sqp.ell = 1;
    try {
      run.log = run_scenario(bm, cfg);
    } catch (const std::exception& e) {
      run.ok = false;
      run.error = e.what();
    }
    runs.push_back(std::move(run));
  }
  return runs;
}

}  // namespace tdo
