#pragma once

#include <algorithm>
#include <cmath>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "tdo/dynamics.hpp"
#include "tdo/polytope.hpp"

namespace tdo {

using SparseMat = Eigen::SparseMatrix<double>;
using Triplets = std::vector<Eigen::Triplet<double>>;

/// Everything that defines the parametric optimal control problem except
/// the dynamics themselves.
struct OcpConfig {
  int horizon = 30;
  Eigen::MatrixXd q_weight;
  Eigen::MatrixXd r_weight;
  Eigen::MatrixXd qf_weight;
  Eigen::VectorXd x_lb, x_ub;
  Eigen::VectorXd u_lb, u_ub;
  /// State components whose bounds are softened with L1-penalized slacks.
  std::vector<int> soft_indices;
  double penalty_rho = 1e3;
  /// Terminal constraint A_f ξ_N ≤ b_f. Zero rows means no constraint.
  Polytope terminal_set;
};

/// z = (w, λ, v): primal variables, dynamics multipliers, inequality
/// multipliers.
struct PrimalDualPoint {
  Eigen::VectorXd w;
  Eigen::VectorXd lam;
  Eigen::VectorXd v;

  Eigen::Index size() const { return w.size() + lam.size() + v.size(); }

  Eigen::VectorXd stacked() const {
    Eigen::VectorXd z(size());
    z << w, lam, v;
    return z;
  }

  static PrimalDualPoint unstack(const Eigen::VectorXd& z, Eigen::Index nw,
                                 Eigen::Index nl, Eigen::Index nv) {
    if (z.size() != nw + nl + nv) {
      throw std::invalid_argument("PrimalDualPoint::unstack: size mismatch");
    }
    return {z.head(nw), z.segment(nw, nl), z.tail(nv)};
  }

  double distance(const PrimalDualPoint& o) const {
    return std::sqrt((w - o.w).squaredNorm() + (lam - o.lam).squaredNorm() +
                     (v - o.v).squaredNorm());
  }
};

/// K = R^{n_free} × R^{n_nonneg}_{≥0}.
struct ConeSpec {
  int n_free = 0;
  int n_nonneg = 0;
};

/// Euclidean projection onto K.
inline Eigen::VectorXd project_cone(const Eigen::VectorXd& z,
                                    const ConeSpec& cone) {
  if (z.size() != cone.n_free + cone.n_nonneg) {
    throw std::invalid_argument("project_cone: dimension mismatch");
  }
  Eigen::VectorXd p = z;
  p.tail(cone.n_nonneg) = p.tail(cone.n_nonneg).cwiseMax(0.0);
  return p;
}

/// Dynamics defects g(w, x) with their Jacobian and the per-stage model
/// Jacobians it was assembled from.
struct EqLinearization {
  Eigen::VectorXd g;
  SparseMat jac;
  std::vector<Eigen::MatrixXd> a;  // ∂f/∂ξ_k, k = 0..N-1
  std::vector<Eigen::MatrixXd> b;  // ∂f/∂µ_k
};

/// The OCP in nonlinear-program form
///
///   min φ(w)  s.t.  g(w, x) = 0,  h(w) ≤ 0
///
/// with w = (ξ_1..ξ_N, µ_0..µ_{N-1}, s), ξ_0 = x substituted, and
///
///   φ(w) = ½ Σ_{k=1}^{N-1} ξ_kᵀQξ_k + ½ ξ_NᵀQ_fξ_N + ½ Σ µ_kᵀRµ_k + ρ Σ s,
///   g_k  = f(ξ_k, µ_k) − ξ_{k+1},
///
/// Inequality rows are ordered: state bounds per stage (upper, lower per
/// component), input bounds per stage, slack nonnegativity, terminal set.
/// Every row of h is affine in w, so ∇h is a constant matrix.
class OcpInstance {
 public:
  OcpInstance(DynamicsPtr dynamics, OcpConfig cfg)
      : dyn_(std::move(dynamics)), cfg_(std::move(cfg)) {
    validate();
    nx_ = dyn_->nx();
    nu_ = dyn_->nu();
    n_ = cfg_.horizon;
    is_soft_.assign(nx_, -1);
    for (std::size_t i = 0; i < cfg_.soft_indices.size(); ++i) {
      is_soft_[cfg_.soft_indices[i]] = static_cast<int>(i);
    }
    n_soft_ = static_cast<int>(cfg_.soft_indices.size());
    n_slack_ = 2 * n_soft_ * n_;
    n_w_ = n_ * (nx_ + nu_) + n_slack_;
    n_eq_ = n_ * nx_;
    n_term_ = cfg_.terminal_set.rows();
    n_ineq_ = n_ * 2 * nx_ + n_ * 2 * nu_ + n_slack_ + n_term_;
    assemble_constant_parts();
  }

  // Dimensions.
  int nx() const { return nx_; }
  int nu() const { return nu_; }
  int horizon() const { return n_; }
  int n_slack() const { return n_slack_; }
  int n_w() const { return n_w_; }
  int n_eq() const { return n_eq_; }
  int n_ineq() const { return n_ineq_; }
  int n_terminal() const { return n_term_; }
  int nz() const { return n_w_ + n_eq_ + n_ineq_; }
  ConeSpec cone() const { return {n_w_ + n_eq_, n_ineq_}; }

  const OcpConfig& config() const { return cfg_; }
  const DiscreteDynamics& dynamics() const { return *dyn_; }
  DynamicsPtr dynamics_ptr() const { return dyn_; }

  // Layout of w. Stages k for states run 1..N, for inputs 0..N-1.
  int state_index(int k, int j = 0) const { return (k - 1) * nx_ + j; }
  int input_index(int k, int j = 0) const { return n_ * nx_ + k * nu_ + j; }
  int slack_index(int k, int soft_pos, bool upper) const {
    return n_ * (nx_ + nu_) + 2 * (n_soft_ * (k - 1) + soft_pos) + (upper ? 1 : 0);
  }

  // Layout of h.
  int state_row(int k, int j, bool upper) const {
    return (k - 1) * 2 * nx_ + 2 * j + (upper ? 0 : 1);
  }
  int input_row(int k, int j, bool upper) const {
    return n_ * 2 * nx_ + k * 2 * nu_ + 2 * j + (upper ? 0 : 1);
  }
  int slack_row(int i) const { return n_ * 2 * (nx_ + nu_) + i; }
  int terminal_row(int r) const { return n_ * 2 * (nx_ + nu_) + n_slack_ + r; }

  bool is_soft(int j) const { return is_soft_[j] >= 0; }

  PrimalDualPoint zero_point() const {
    return {Eigen::VectorXd::Zero(n_w_), Eigen::VectorXd::Zero(n_eq_),
            Eigen::VectorXd::Zero(n_ineq_)};
  }

  /// The KKT point at x = 0: all primal variables and dynamics multipliers
  /// zero, slack nonnegativity rows carrying the penalty weight.
  PrimalDualPoint origin_kkt_point() const {
    PrimalDualPoint z = zero_point();
    for (int i = 0; i < n_slack_; ++i) z.v[slack_row(i)] = cfg_.penalty_rho;
    return z;
  }

  /// Ξ: the first input µ_0.
  Eigen::VectorXd first_input(const Eigen::VectorXd& w) const {
    return w.segment(input_index(0), nu_);
  }

  Eigen::VectorXd state(const Eigen::VectorXd& w, int k,
                        const Eigen::VectorXd& x) const {
    return k == 0 ? x : Eigen::VectorXd(w.segment(state_index(k), nx_));
  }

  double objective(const Eigen::VectorXd& w) const {
    return 0.5 * w.dot(hess_ * w) + cfg_.penalty_rho * w.tail(n_slack_).sum();
  }

  Eigen::VectorXd objective_gradient(const Eigen::VectorXd& w) const {
    Eigen::VectorXd grad = hess_ * w;
    grad.tail(n_slack_).array() += cfg_.penalty_rho;
    return grad;
  }

  /// ∇²φ = blkdiag(Q, …, Q_f, R, …, 0). Constant in w.
  const SparseMat& objective_hessian() const { return hess_; }

  EqLinearization linearize_eq(const Eigen::VectorXd& w,
                               const Eigen::VectorXd& x) const {
    check_size(w, n_w_, "w");
    check_size(x, nx_, "x");
    EqLinearization lin;
    lin.g.resize(n_eq_);
    lin.a.resize(n_);
    lin.b.resize(n_);
    Triplets trip;
    trip.reserve(static_cast<std::size_t>(n_) * nx_ * (nx_ + nu_ + 1));
    Eigen::VectorXd f;
    for (int k = 0; k < n_; ++k) {
      const Eigen::VectorXd xi = state(w, k, x);
      const Eigen::VectorXd mu = w.segment(input_index(k), nu_);
      dyn_->linearize(xi, mu, f, lin.a[k], lin.b[k]);
      lin.g.segment(k * nx_, nx_) = f - w.segment(state_index(k + 1), nx_);
      for (int r = 0; r < nx_; ++r) {
        const int row = k * nx_ + r;
        if (k > 0) {
          for (int c = 0; c < nx_; ++c) {
            trip.emplace_back(row, state_index(k, c), lin.a[k](r, c));
          }
        }
        for (int c = 0; c < nu_; ++c) {
          trip.emplace_back(row, input_index(k, c), lin.b[k](r, c));
        }
        trip.emplace_back(row, state_index(k + 1, r), -1.0);
      }
    }
    lin.jac.resize(n_eq_, n_w_);
    lin.jac.setFromTriplets(trip.begin(), trip.end());
    return lin;
  }

  Eigen::VectorXd eq_residual(const Eigen::VectorXd& w,
                              const Eigen::VectorXd& x) const {
    check_size(w, n_w_, "w");
    Eigen::VectorXd g(n_eq_);
    for (int k = 0; k < n_; ++k) {
      g.segment(k * nx_, nx_) =
          dyn_->eval(state(w, k, x), w.segment(input_index(k), nu_)) -
          w.segment(state_index(k + 1), nx_);
    }
    return g;
  }

  Eigen::VectorXd ineq_values(const Eigen::VectorXd& w) const {
    check_size(w, n_w_, "w");
    return ineq_jac_ * w + ineq_const_;
  }

  /// ∇h, constant.
  const SparseMat& ineq_jacobian() const { return ineq_jac_; }

  /// ∇_w L(w, λ, v, x) given a precomputed dynamics linearization.
  Eigen::VectorXd lagrangian_gradient(const PrimalDualPoint& z,
                                      const EqLinearization& lin) const {
    return objective_gradient(z.w) + lin.jac.transpose() * z.lam +
           ineq_jac_.transpose() * z.v;
  }

  /// F(z, x) = [∇_w L; −g; −h].
  Eigen::VectorXd kkt_residual(const PrimalDualPoint& z,
                               const Eigen::VectorXd& x) const {
    check_point(z);
    const EqLinearization lin = linearize_eq(z.w, x);
    return kkt_residual(z, lin);
  }

  Eigen::VectorXd kkt_residual(const PrimalDualPoint& z,
                               const EqLinearization& lin) const {
    Eigen::VectorXd f(nz());
    f << lagrangian_gradient(z, lin), -lin.g, -ineq_values(z.w);
    return f;
  }

  /// ‖z − Π_K[z − F(z, x)]‖₂.
  double natural_residual(const PrimalDualPoint& z,
                          const Eigen::VectorXd& x) const {
    check_point(z);
    return natural_residual(z, linearize_eq(z.w, x));
  }

  double natural_residual(const PrimalDualPoint& z,
                          const EqLinearization& lin) const {
    const Eigen::VectorXd zs = z.stacked();
    return (zs - project_cone(zs - kkt_residual(z, lin), cone())).norm();
  }

  /// Raw inequality values with slacks left out: state and input bound rows
  /// report the unsoftened bound, slack rows report −s, terminal rows
  /// A_f ξ_N − b_f. Negative means satisfied. Ordered like h.
  Eigen::VectorXd constraint_margins(const PrimalDualPoint& z) const {
    check_size(z.w, n_w_, "w");
    return margin_jac_ * z.w + ineq_const_;
  }

  /// Bound margins of a single state vector (upper, lower per component).
  Eigen::VectorXd state_bound_margins(const Eigen::VectorXd& x) const {
    Eigen::VectorXd m(2 * nx_);
    for (int j = 0; j < nx_; ++j) {
      m[2 * j] = x[j] - cfg_.x_ub[j];
      m[2 * j + 1] = cfg_.x_lb[j] - x[j];
    }
    return m;
  }

  void check_point(const PrimalDualPoint& z) const {
    check_size(z.w, n_w_, "w");
    check_size(z.lam, n_eq_, "lam");
    check_size(z.v, n_ineq_, "v");
  }

 private:
  static void check_size(const Eigen::VectorXd& v, int n, const char* what) {
    if (v.size() != n) {
      throw std::invalid_argument(std::string("OcpInstance: wrong size for ") +
                                  what);
    }
  }

  void validate() const {
    if (!dyn_) throw std::invalid_argument("OcpInstance: null dynamics");
    const int nx = dyn_->nx();
    const int nu = dyn_->nu();
    if (cfg_.horizon < 1) throw std::invalid_argument("OcpInstance: horizon must be >= 1");
    auto square = [](const Eigen::MatrixXd& m, int n, const char* name) {
      if (m.rows() != n || m.cols() != n) {
        throw std::invalid_argument(std::string("OcpInstance: ") + name +
                                    " has wrong dimensions");
      }
      if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-10) {
        throw std::invalid_argument(std::string("OcpInstance: ") + name +
                                    " is not symmetric");
      }
    };
    square(cfg_.q_weight, nx, "q_weight");
    square(cfg_.r_weight, nu, "r_weight");
    square(cfg_.qf_weight, nx, "qf_weight");
    if (Eigen::LLT<Eigen::MatrixXd>(cfg_.r_weight).info() != Eigen::Success) {
      throw std::invalid_argument("OcpInstance: r_weight must be positive definite");
    }
    if (Eigen::LLT<Eigen::MatrixXd>(cfg_.qf_weight).info() != Eigen::Success) {
      throw std::invalid_argument("OcpInstance: qf_weight must be positive definite");
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> qeig(cfg_.q_weight);
    if (qeig.eigenvalues().minCoeff() < -1e-12) {
      throw std::invalid_argument("OcpInstance: q_weight must be positive semidefinite");
    }
    if (cfg_.x_lb.size() != nx || cfg_.x_ub.size() != nx ||
        cfg_.u_lb.size() != nu || cfg_.u_ub.size() != nu) {
      throw std::invalid_argument("OcpInstance: bound dimensions");
    }
    if (!(cfg_.x_lb.array() < cfg_.x_ub.array()).all() ||
        !(cfg_.u_lb.array() < cfg_.u_ub.array()).all()) {
      throw std::invalid_argument("OcpInstance: bounds must satisfy lb < ub");
    }
    if (!(cfg_.penalty_rho > 0.0)) {
      throw std::invalid_argument("OcpInstance: penalty_rho must be positive");
    }
    std::vector<int> soft = cfg_.soft_indices;
    std::sort(soft.begin(), soft.end());
    if (std::adjacent_find(soft.begin(), soft.end()) != soft.end()) {
      throw std::invalid_argument("OcpInstance: duplicate soft index");
    }
    for (int j : soft) {
      if (j < 0 || j >= nx) throw std::invalid_argument("OcpInstance: soft index out of range");
    }
    const Polytope& t = cfg_.terminal_set;
    if (t.rows() > 0) {
      if (t.dim() != nx) throw std::invalid_argument("OcpInstance: terminal set dimension");
      if (!(t.b_vec.array() > 0.0).all()) {
        throw std::invalid_argument(
            "OcpInstance: terminal set must contain the origin in its interior");
      }
    }
  }

  void assemble_constant_parts() {
    // Objective Hessian.
    Triplets h;
    auto add_block = [&h](int off, const Eigen::MatrixXd& m) {
      for (int r = 0; r < m.rows(); ++r) {
        for (int c = 0; c < m.cols(); ++c) {
          if (m(r, c) != 0.0) h.emplace_back(off + r, off + c, m(r, c));
        }
      }
    };
    for (int k = 1; k < n_; ++k) add_block(state_index(k), cfg_.q_weight);
    add_block(state_index(n_), cfg_.qf_weight);
    for (int k = 0; k < n_; ++k) add_block(input_index(k), cfg_.r_weight);
    hess_.resize(n_w_, n_w_);
    hess_.setFromTriplets(h.begin(), h.end());

    // Inequalities.
    Triplets jh, jm;
    ineq_const_.resize(n_ineq_);
    for (int k = 1; k <= n_; ++k) {
      for (int j = 0; j < nx_; ++j) {
        const int up = state_row(k, j, true);
        const int lo = state_row(k, j, false);
        jh.emplace_back(up, state_index(k, j), 1.0);
        jh.emplace_back(lo, state_index(k, j), -1.0);
        ineq_const_[up] = -cfg_.x_ub[j];
        ineq_const_[lo] = cfg_.x_lb[j];
        if (is_soft(j)) {
          jh.emplace_back(up, slack_index(k, is_soft_[j], true), -1.0);
          jh.emplace_back(lo, slack_index(k, is_soft_[j], false), -1.0);
        }
      }
    }
    for (int k = 0; k < n_; ++k) {
      for (int j = 0; j < nu_; ++j) {
        const int up = input_row(k, j, true);
        const int lo = input_row(k, j, false);
        jh.emplace_back(up, input_index(k, j), 1.0);
        jh.emplace_back(lo, input_index(k, j), -1.0);
        ineq_const_[up] = -cfg_.u_ub[j];
        ineq_const_[lo] = cfg_.u_lb[j];
      }
    }
    for (int i = 0; i < n_slack_; ++i) {
      jh.emplace_back(slack_row(i), n_ * (nx_ + nu_) + i, -1.0);
      ineq_const_[slack_row(i)] = 0.0;
    }
    const Polytope& t = cfg_.terminal_set;
    for (int r = 0; r < n_term_; ++r) {
      for (int c = 0; c < nx_; ++c) {
        if (t.a_mat(r, c) != 0.0) {
          jh.emplace_back(terminal_row(r), state_index(n_, c), t.a_mat(r, c));
        }
      }
      ineq_const_[terminal_row(r)] = -t.b_vec[r];
    }
    ineq_jac_.resize(n_ineq_, n_w_);
    ineq_jac_.setFromTriplets(jh.begin(), jh.end());

    // Same rows without the slack columns, except on the slack rows.
    for (const auto& t3 : jh) {
      const bool slack_col = t3.col() >= n_ * (nx_ + nu_);
      const bool slack_row_ = t3.row() >= slack_row(0) && t3.row() < slack_row(0) + n_slack_;
      if (!slack_col || slack_row_) jm.push_back(t3);
    }
    margin_jac_.resize(n_ineq_, n_w_);
    margin_jac_.setFromTriplets(jm.begin(), jm.end());
  }

  DynamicsPtr dyn_;
  OcpConfig cfg_;
  int nx_ = 0, nu_ = 0, n_ = 0;
  int n_soft_ = 0, n_slack_ = 0, n_w_ = 0, n_eq_ = 0, n_ineq_ = 0, n_term_ = 0;
  std::vector<int> is_soft_;
  SparseMat hess_;
  SparseMat ineq_jac_;
  SparseMat margin_jac_;
  Eigen::VectorXd ineq_const_;
};

/// Validates the configuration and assembles the instance.
inline OcpInstance build_instance(DynamicsPtr dynamics, OcpConfig cfg) {
  return OcpInstance(std::move(dynamics), std::move(cfg));
}

}  // namespace tdo
