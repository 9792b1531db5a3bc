#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "tdo/ocp.hpp"
#include "tdo/qp.hpp"

namespace tdo {

enum class HessianKind { gauss_newton, josephy_newton, jn_augmented };

inline const char* to_string(HessianKind k) {
  switch (k) {
    case HessianKind::gauss_newton: return "gn";
    case HessianKind::josephy_newton: return "jn";
    case HessianKind::jn_augmented: return "jn_aug";
  }
  return "unknown";
}

inline HessianKind parse_hessian_kind(const std::string& s) {
  if (s == "gn" || s == "gauss_newton") return HessianKind::gauss_newton;
  if (s == "jn" || s == "josephy_newton") return HessianKind::josephy_newton;
  if (s == "jn_aug" || s == "jn_augmented") return HessianKind::jn_augmented;
  throw std::invalid_argument("unknown Hessian mode '" + s + "'");
}

struct HessianMode {
  HessianKind kind = HessianKind::gauss_newton;
  double rho_aug = 0.0;
  double fd_step = 1e-5;

  void validate() const {
    if (!(fd_step > 0.0)) throw std::invalid_argument("HessianMode: fd_step must be positive");
    if (rho_aug < 0.0) throw std::invalid_argument("HessianMode: rho_aug must be >= 0");
    if (kind == HessianKind::jn_augmented && !(rho_aug > 0.0)) {
      throw std::invalid_argument("HessianMode: jn_augmented requires rho_aug > 0");
    }
  }
};

struct SqpConfig {
  HessianMode mode;
  int ell = 1;
  double reg_delta_floor = 0.0;
  double kkt_tol = 1e-8;
  int max_solve_iter = 200;
  /// Stop an ℓ-step sweep early once π ≤ this (0 keeps all ℓ steps).
  double stop_tol = 0.0;

  void validate() const {
    mode.validate();
    if (ell < 1) throw std::invalid_argument("SqpConfig: ell must be >= 1");
    if (!(kkt_tol > 0.0)) throw std::invalid_argument("SqpConfig: kkt_tol must be positive");
    if (reg_delta_floor < 0.0) throw std::invalid_argument("SqpConfig: reg_delta_floor must be >= 0");
    if (max_solve_iter < 1) throw std::invalid_argument("SqpConfig: max_solve_iter must be >= 1");
    if (stop_tol < 0.0) throw std::invalid_argument("SqpConfig: stop_tol must be >= 0");
  }
};

/// Least-squares Hessian of the objective. Constant in w.
inline SparseMat gn_hessian(const OcpInstance& inst) { return inst.objective_hessian(); }

/// ∇²_w L by central differences of the exact gradient, done stage by stage:
/// only λ_kᵀ f(ξ_k, µ_k) is nonlinear, so each stage contributes one dense
/// block on (ξ_k, µ_k). The objective part is exact and h is affine.
inline SparseMat jn_hessian(const OcpInstance& inst, const PrimalDualPoint& z,
                            const Eigen::VectorXd& x, const HessianMode& mode) {
  mode.validate();
  inst.check_point(z);
  const int nx = inst.nx();
  const int nu = inst.nu();
  const double hstep = mode.fd_step;
  Triplets t;
  const SparseMat& hobj = inst.objective_hessian();
  for (int k = 0; k < hobj.outerSize(); ++k) {
    for (SparseMat::InnerIterator it(hobj, k); it; ++it) {
      t.emplace_back(it.row(), it.col(), it.value());
    }
  }
  Eigen::VectorXd f;
  Eigen::MatrixXd a, b;
  for (int k = 0; k < inst.horizon(); ++k) {
    const Eigen::VectorXd lam = z.lam.segment(k * nx, nx);
    if (lam.cwiseAbs().maxCoeff() == 0.0) continue;
    const bool has_state = k > 0;
    const int nloc = (has_state ? nx : 0) + nu;
    Eigen::VectorXd xi = inst.state(z.w, k, x);
    Eigen::VectorXd mu = z.w.segment(inst.input_index(k), nu);
    auto local_grad = [&](const Eigen::VectorXd& xs, const Eigen::VectorXd& us) {
      inst.dynamics().linearize(xs, us, f, a, b);
      Eigen::VectorXd g(nloc);
      if (has_state) g.head(nx) = a.transpose() * lam;
      g.tail(nu) = b.transpose() * lam;
      return g;
    };
    Eigen::MatrixXd blk(nloc, nloc);
    for (int j = 0; j < nloc; ++j) {
      Eigen::VectorXd xp = xi, xm = xi, up = mu, um = mu;
      if (has_state && j < nx) {
        xp[j] += hstep;
        xm[j] -= hstep;
      } else {
        const int ju = j - (has_state ? nx : 0);
        up[ju] += hstep;
        um[ju] -= hstep;
      }
      blk.col(j) = (local_grad(xp, up) - local_grad(xm, um)) / (2.0 * hstep);
    }
    blk = 0.5 * (blk + blk.transpose()).eval();
    auto index = [&](int j) {
      return (has_state && j < nx) ? inst.state_index(k, j)
                                   : inst.input_index(k, j - (has_state ? nx : 0));
    };
    for (int c = 0; c < nloc; ++c) {
      for (int r = 0; r < nloc; ++r) {
        if (blk(r, c) != 0.0) t.emplace_back(index(r), index(c), blk(r, c));
      }
    }
  }
  SparseMat hess(inst.n_w(), inst.n_w());
  hess.setFromTriplets(t.begin(), t.end());
  if (mode.kind == HessianKind::jn_augmented) {
    const EqLinearization lin = inst.linearize_eq(z.w, x);
    const SparseMat jtj = SparseMat(lin.jac.transpose()) * lin.jac;
    hess = hess + mode.rho_aug * jtj;
  }
  // Exact symmetry after floating-point assembly.
  const SparseMat sym = 0.5 * (hess + SparseMat(hess.transpose()));
  return sym;
}

inline SparseMat hessian_for(const OcpInstance& inst, const PrimalDualPoint& z,
                             const Eigen::VectorXd& x, const HessianMode& mode) {
  return mode.kind == HessianKind::gauss_newton ? gn_hessian(inst)
                                                : jn_hessian(inst, z, x, mode);
}

/// Diagnostics of one step of T.
struct StepReport {
  double pi_before = 0.0;
  double pi_after = 0.0;
  double reg_delta = 0.0;
  QpStatus qp_status = QpStatus::solved;
  int qp_iterations = 0;
  std::vector<int> active_set;

  bool ok() const { return qp_status == QpStatus::solved; }
};

struct IterateResult {
  PrimalDualPoint z;
  std::vector<double> trace;  // π before the first step, then after each step
  std::vector<StepReport> reports;
  bool ok = true;
};

enum class SolveStatus { converged, no_convergence, qp_failure };

inline const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::converged: return "converged";
    case SolveStatus::no_convergence: return "no_convergence";
    case SolveStatus::qp_failure: return "qp_failure";
  }
  return "unknown";
}

struct SolveResult {
  PrimalDualPoint z;
  int iterations = 0;
  double residual = 0.0;
  SolveStatus status = SolveStatus::no_convergence;
  std::vector<int> active_set;

  bool converged() const { return status == SolveStatus::converged; }
};

/// The TD-SQP operator T(z, x) and its iterates for one OCP instance.
/// Holds QP workspace, so one engine per thread.
class SqpEngine {
 public:
  SqpEngine(std::shared_ptr<const OcpInstance> inst, SqpConfig cfg)
      : inst_(std::move(inst)), cfg_(cfg) {
    if (!inst_) throw std::invalid_argument("SqpEngine: null instance");
    cfg_.validate();
  }

  const OcpInstance& instance() const { return *inst_; }
  std::shared_ptr<const OcpInstance> instance_ptr() const { return inst_; }
  const SqpConfig& config() const { return cfg_; }

  /// Builds the QP at z with the configured Hessian.
  QpSubproblem build_subproblem(const PrimalDualPoint& z, const Eigen::VectorXd& x,
                                const EqLinearization& lin) const {
    QpSubproblem sub;
    sub.hess = hessian_for(*inst_, z, x, cfg_.mode);
    sub.eq_jac = lin.jac;
    sub.eq_rhs = lin.g;
    sub.ineq_jac = inst_->ineq_jacobian();
    sub.ineq_rhs = inst_->ineq_values(z.w);
    sub.grad = inst_->objective_gradient(z.w);
    sub.reg_delta = cfg_.reg_delta_floor;
    return sub;
  }

  /// z ← T(z, x). `lin` is the linearization at z on entry and at the new z
  /// on exit. On QP failure z is left unchanged.
  StepReport td_step(PrimalDualPoint& z, const Eigen::VectorXd& x, EqLinearization& lin,
                     std::vector<int>& warm) {
    StepReport rep;
    rep.pi_before = inst_->natural_residual(z, lin);
    QpSubproblem sub = build_subproblem(z, x, lin);
    QpSolution sol = qp_.solve(sub, warm);
    // Convexify on demand: escalate δ while the reduced Hessian is not PD.
    double delta = sub.reg_delta;
    for (int tries = 0; sol.status == QpStatus::indefinite && tries < 14; ++tries) {
      delta = std::max(1e-6, 10.0 * delta);
      sub.reg_delta = delta;
      sol = qp_.solve(sub, warm);
    }
    rep.reg_delta = sub.reg_delta;
    rep.qp_status = sol.status;
    rep.qp_iterations = sol.iterations;
    if (sol.status != QpStatus::solved) {
      rep.pi_after = rep.pi_before;
      return rep;
    }
    z.w += sol.dw;
    z.lam = sol.pi;
    z.v = sol.eta;
    warm = sol.active_set;
    rep.active_set = sol.active_set;
    lin = inst_->linearize_eq(z.w, x);
    rep.pi_after = inst_->natural_residual(z, lin);
    return rep;
  }

  StepReport td_step(PrimalDualPoint& z, const Eigen::VectorXd& x, std::vector<int>& warm) {
    EqLinearization lin = inst_->linearize_eq(z.w, x);
    return td_step(z, x, lin, warm);
  }

  /// T_ℓ(z, x) with ℓ = cfg.ell, threading the active set through.
  IterateResult iterate(const PrimalDualPoint& z0, const Eigen::VectorXd& x,
                        std::vector<int>& warm, int ell = 0) {
    if (ell == 0) ell = cfg_.ell;
    if (ell < 1) throw std::invalid_argument("iterate: ell must be >= 1");
    inst_->check_point(z0);
    IterateResult res;
    res.z = z0;
    EqLinearization lin = inst_->linearize_eq(res.z.w, x);
    for (int i = 0; i < ell; ++i) {
      StepReport rep = td_step(res.z, x, lin, warm);
      if (i == 0) res.trace.push_back(rep.pi_before);
      res.trace.push_back(rep.pi_after);
      const bool ok = rep.ok();
      res.reports.push_back(std::move(rep));
      if (!ok) {
        res.ok = false;
        break;
      }
      if (res.trace.back() <= cfg_.stop_tol) break;
    }
    return res;
  }

  /// Iterates until π ≤ kkt_tol, the cap, or a stall.
  SolveResult solve_to_tolerance(const PrimalDualPoint& z0, const Eigen::VectorXd& x,
                                 std::vector<int> warm = {}) {
    inst_->check_point(z0);
    SolveResult res;
    res.z = z0;
    EqLinearization lin = inst_->linearize_eq(res.z.w, x);
    res.residual = inst_->natural_residual(res.z, lin);
    double best = res.residual;
    int since_best = 0;
    while (res.residual > cfg_.kkt_tol) {
      if (res.iterations >= cfg_.max_solve_iter) {
        res.status = SolveStatus::no_convergence;
        res.active_set = warm;
        return res;
      }
      const StepReport rep = td_step(res.z, x, lin, warm);
      ++res.iterations;
      if (!rep.ok()) {
        res.status = SolveStatus::qp_failure;
        res.active_set = warm;
        return res;
      }
      res.residual = rep.pi_after;
      if (!std::isfinite(res.residual)) {
        res.status = SolveStatus::no_convergence;
        return res;
      }
      if (res.residual < 0.5 * best) {
        best = res.residual;
        since_best = 0;
      } else if (++since_best > 25) {
        res.status = SolveStatus::no_convergence;
        res.active_set = warm;
        return res;
      }
    }
    res.status = SolveStatus::converged;
    res.active_set = warm;
    return res;
  }

 private:
  std::shared_ptr<const OcpInstance> inst_;
  SqpConfig cfg_;
  ActiveSetQpSolver qp_;
};

}  // namespace tdo
