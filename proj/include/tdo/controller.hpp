#pragma once

#include <limits>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "tdo/ocp.hpp"
#include "tdo/riccati.hpp"
#include "tdo/sqp.hpp"

namespace tdo {

/// Componentwise clamp; reports whether anything moved.
inline bool clamp_input(Eigen::VectorXd& u, const Eigen::VectorXd& lb, const Eigen::VectorXd& ub) {
  const Eigen::VectorXd c = u.cwiseMax(lb).cwiseMin(ub);
  const bool moved = (c - u).cwiseAbs().maxCoeff() > 0.0;
  u = c;
  return moved;
}

struct ControlOutput {
  Eigen::VectorXd u;
  bool clamped = false;
  bool failed = false;  // a QP failed; z was held
  std::vector<StepReport> reports;
  std::vector<double> trace;
};

enum class InitStrategy { cold, presolve };

inline InitStrategy parse_init_strategy(const std::string& s) {
  if (s == "cold") return InitStrategy::cold;
  if (s == "presolve") return InitStrategy::presolve;
  throw std::invalid_argument("unknown init strategy '" + s + "'");
}

struct InitResult {
  PrimalDualPoint z;
  std::vector<int> active_set;
  bool presolved = false;
  bool fell_back = false;  // presolve failed, cold start used
  double residual = 0.0;
};

/// z_0 for the compensator. Presolve runs Gauss-Newton to tolerance and
/// retries with the exact Hessian when that does not converge.
inline InitResult initialize(std::shared_ptr<const OcpInstance> inst, const Eigen::VectorXd& x0,
                             InitStrategy strategy, double kkt_tol = 1e-8) {
  InitResult out;
  out.z = inst->zero_point();
  if (strategy == InitStrategy::cold) {
    out.residual = inst->natural_residual(out.z, x0);
    return out;
  }
  SqpConfig cfg;
  cfg.kkt_tol = kkt_tol;
  SqpEngine eng(inst, cfg);
  SolveResult sol = eng.solve_to_tolerance(out.z, x0);
  if (!sol.converged()) {
    cfg.mode.kind = HessianKind::josephy_newton;
    SqpEngine exact(inst, cfg);
    sol = exact.solve_to_tolerance(out.z, x0);
  }
  if (!sol.converged()) {
    out.fell_back = true;
    out.residual = inst->natural_residual(out.z, x0);
    return out;
  }
  out.z = sol.z;
  out.active_set = sol.active_set;
  out.presolved = true;
  out.residual = sol.residual;
  return out;
}

/// The time-distributed optimizer as a dynamic compensator:
/// z_k = T_ℓ(z_{k−1}, x_k), u_k = Ξ z_k.
class TdoController {
 public:
  TdoController(std::shared_ptr<const OcpInstance> inst, SqpConfig cfg)
      : engine_(inst, cfg), z_(inst->zero_point()) {}

  void reset(const PrimalDualPoint& z, std::vector<int> active_set = {}) {
    engine_.instance().check_point(z);
    z_ = z;
    warm_ = std::move(active_set);
  }

  ControlOutput control(const Eigen::VectorXd& x) {
    ControlOutput out;
    std::vector<int> warm = warm_;
    IterateResult it = engine_.iterate(z_, x, warm);
    out.reports = std::move(it.reports);
    out.trace = std::move(it.trace);
    if (it.ok) {
      z_ = std::move(it.z);
      warm_ = std::move(warm);
    } else {
      out.failed = true;
    }
    out.u = engine_.instance().first_input(z_.w);
    const OcpConfig& c = engine_.instance().config();
    out.clamped = clamp_input(out.u, c.u_lb, c.u_ub);
    return out;
  }

  const PrimalDualPoint& state() const { return z_; }
  const std::vector<int>& active_set() const { return warm_; }
  SqpEngine& engine() { return engine_; }

 private:
  SqpEngine engine_;
  PrimalDualPoint z_;
  std::vector<int> warm_;
};

/// κ(x): the input of the fully converged OCP solution, warm-started.
struct OptimalOutput {
  Eigen::VectorXd u;
  SolveResult solution;
};

inline OptimalOutput optimal_mpc_control(SqpEngine& engine, const Eigen::VectorXd& x,
                                         const PrimalDualPoint& z_warm,
                                         const std::vector<int>& warm_set = {}) {
  OptimalOutput out;
  out.solution = engine.solve_to_tolerance(z_warm, x, warm_set);
  out.u = engine.instance().first_input(out.solution.z.w);
  return out;
}

/// Fully converged MPC as a controller, warm-started from its last solution.
class OptimalController {
 public:
  OptimalController(std::shared_ptr<const OcpInstance> inst, SqpConfig cfg)
      : engine_(inst, cfg), z_(inst->zero_point()) {}

  void reset(const PrimalDualPoint& z, std::vector<int> active_set = {}) {
    z_ = z;
    warm_ = std::move(active_set);
  }

  ControlOutput control(const Eigen::VectorXd& x) {
    ControlOutput out;
    OptimalOutput opt = optimal_mpc_control(engine_, x, z_, warm_);
    if (opt.solution.converged()) {
      z_ = opt.solution.z;
      warm_ = opt.solution.active_set;
    } else {
      out.failed = true;
    }
    out.u = engine_.instance().first_input(z_.w);
    const OcpConfig& c = engine_.instance().config();
    out.clamped = clamp_input(out.u, c.u_lb, c.u_ub);
    StepReport rep;
    rep.pi_before = std::numeric_limits<double>::quiet_NaN();
    rep.pi_after = opt.solution.residual;
    rep.active_set = warm_;
    rep.qp_iterations = opt.solution.iterations;
    rep.qp_status = out.failed ? QpStatus::max_iter : QpStatus::solved;
    out.reports.push_back(rep);
    return out;
  }

  const PrimalDualPoint& state() const { return z_; }
  SqpEngine& engine() { return engine_; }

 private:
  SqpEngine engine_;
  PrimalDualPoint z_;
  std::vector<int> warm_;
};

/// u = −K x, clamped to the input bounds.
class LqrController {
 public:
  LqrController(Eigen::MatrixXd k_gain, Eigen::VectorXd u_lb, Eigen::VectorXd u_ub)
      : k_(std::move(k_gain)), lb_(std::move(u_lb)), ub_(std::move(u_ub)) {}

  static LqrController from_dare(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                                 const Eigen::MatrixXd& q, const Eigen::MatrixXd& r,
                                 const Eigen::VectorXd& u_lb, const Eigen::VectorXd& u_ub) {
    return LqrController(dare_solve(a, b, q, r).k, u_lb, u_ub);
  }

  ControlOutput control(const Eigen::VectorXd& x) const {
    ControlOutput out;
    out.u = lqr_control(x);
    out.clamped = clamp_input(out.u, lb_, ub_);
    return out;
  }

  /// Unclamped −K x.
  Eigen::VectorXd lqr_control(const Eigen::VectorXd& x) const { return -k_ * x; }

  const Eigen::MatrixXd& gain() const { return k_; }

 private:
  Eigen::MatrixXd k_;
  Eigen::VectorXd lb_, ub_;
};

}  // namespace tdo
