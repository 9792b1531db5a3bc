#pragma once

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>

#include "tdo/matrix_io.hpp"

namespace tdo {

using SparseMat = Eigen::SparseMatrix<double>;
using Triplets = std::vector<Eigen::Triplet<double>>;

/// One Newton-type step:
///
///   min  ½ dwᵀ(hess + reg_delta·I)dw + gradᵀdw
///   s.t. eq_jac·dw + eq_rhs = 0,  ineq_jac·dw + ineq_rhs ≤ 0.
struct QpSubproblem {
  SparseMat hess;
  SparseMat eq_jac;
  Eigen::VectorXd eq_rhs;
  SparseMat ineq_jac;
  Eigen::VectorXd ineq_rhs;
  Eigen::VectorXd grad;
  double reg_delta = 0.0;

  int n() const { return static_cast<int>(grad.size()); }
  int n_eq() const { return static_cast<int>(eq_rhs.size()); }
  int n_ineq() const { return static_cast<int>(ineq_rhs.size()); }

  void validate() const {
    const int nv = n();
    if (hess.rows() != nv || hess.cols() != nv) {
      throw std::invalid_argument("QpSubproblem: hess must be n x n");
    }
    if (eq_jac.rows() != n_eq() || (n_eq() > 0 && eq_jac.cols() != nv)) {
      throw std::invalid_argument("QpSubproblem: eq_jac dimensions");
    }
    if (ineq_jac.rows() != n_ineq() || (n_ineq() > 0 && ineq_jac.cols() != nv)) {
      throw std::invalid_argument("QpSubproblem: ineq_jac dimensions");
    }
    if (reg_delta < 0.0) throw std::invalid_argument("QpSubproblem: reg_delta < 0");
    const SparseMat asym = hess - SparseMat(hess.transpose());
    double worst = 0.0;
    for (int k = 0; k < asym.outerSize(); ++k) {
      for (SparseMat::InnerIterator it(asym, k); it; ++it) {
        worst = std::max(worst, std::abs(it.value()));
      }
    }
    double scale = 1.0;
    for (int k = 0; k < hess.outerSize(); ++k) {
      for (SparseMat::InnerIterator it(hess, k); it; ++it) {
        scale = std::max(scale, std::abs(it.value()));
      }
    }
    if (worst > 1e-12 * scale) {
      throw std::invalid_argument("QpSubproblem: hess is not symmetric");
    }
  }
};

/// hess ← hess + delta·I.
inline QpSubproblem regularize(const QpSubproblem& sub, double delta) {
  if (delta < 0.0) throw std::invalid_argument("regularize: delta < 0");
  QpSubproblem out = sub;
  if (delta > 0.0) {
    SparseMat eye(sub.n(), sub.n());
    eye.setIdentity();
    out.hess = sub.hess + delta * eye;
  }
  return out;
}

enum class QpStatus { solved, max_iter, infeasible, indefinite };

inline const char* to_string(QpStatus s) {
  switch (s) {
    case QpStatus::solved: return "solved";
    case QpStatus::max_iter: return "max_iter";
    case QpStatus::infeasible: return "infeasible";
    case QpStatus::indefinite: return "indefinite";
  }
  return "unknown";
}

/// Stationarity convention: H·dw + grad + eq_jacᵀ·pi + ineq_jacᵀ·eta = 0.
struct QpSolution {
  Eigen::VectorXd dw;
  Eigen::VectorXd pi;
  Eigen::VectorXd eta;
  QpStatus status = QpStatus::max_iter;
  std::vector<int> active_set;
  int iterations = 0;
  int factorizations = 0;
};

struct QpOptions {
  int max_iter = 0;  // 0: 10·(n + m) + 100
  double feas_tol = 1e-9;
  double dual_tol = 1e-11;
  double prox_rel = 1e-9;
  double elastic_weight = 1e4;
  double elastic_max = 1e12;
  int degenerate_limit = 10;
  double step_tol = 1e-12;       // steps below this (relative) count as zero
  double blocking_tol = 1e-10;   // a_iᵀd must exceed this·‖a_i‖·‖d‖ to block
  double blocking_floor = 1e-11; // and this·‖a_i‖ (linear-solve noise)
};

/// KKT violation of a candidate solution: max of stationarity, primal
/// infeasibility, negative multipliers and complementarity.
inline double qp_kkt_error(const QpSubproblem& sub, const QpSolution& sol) {
  SparseMat h = sub.hess;
  Eigen::VectorXd stat = h * sol.dw + sub.reg_delta * sol.dw + sub.grad;
  double err = 0.0;
  if (sub.n_eq() > 0) {
    stat += sub.eq_jac.transpose() * sol.pi;
    err = std::max(err, (sub.eq_jac * sol.dw + sub.eq_rhs).cwiseAbs().maxCoeff());
  }
  if (sub.n_ineq() > 0) {
    stat += sub.ineq_jac.transpose() * sol.eta;
    const Eigen::VectorXd r = sub.ineq_jac * sol.dw + sub.ineq_rhs;
    err = std::max(err, r.maxCoeff());
    err = std::max(err, -sol.eta.minCoeff());
    err = std::max(err, r.cwiseProduct(sol.eta).cwiseAbs().maxCoeff());
  }
  if (stat.size() > 0) err = std::max(err, stat.cwiseAbs().maxCoeff());
  return err;
}

/// Primal active-set QP solver.
///
/// Feasibility is obtained with a single elastic variable τ ∈ [0, 1]: row i
/// becomes a_iᵀp − r_i τ ≤ b_i, where r_i is chosen so that p = 0, τ = 1 is
/// feasible and every warm-start row is tight there. τ carries the exact
/// penalty M·τ + ½M·τ², with M raised until τ = 0 or a cap is hit.
///
/// Semidefinite or indefinite Hessians are handled by proximal-point
/// iterations on H + εI; remaining negative curvature along a step is
/// reported as `indefinite`.
class ActiveSetQpSolver {
 public:
  explicit ActiveSetQpSolver(QpOptions opts = {}) : opts_(opts) {}

  const QpOptions& options() const { return opts_; }

  QpSolution solve(const QpSubproblem& sub, const std::vector<int>& warm = {}) {
    sub.validate();
    setup(sub, warm);
    QpSolution out;
    QpStatus st = run_outer(out);
    if (st == QpStatus::indefinite && !warm_.empty()) {
      // A stale warm set can make the first working-set system singular.
      setup(sub, {});
      st = run_outer(out);
    }
    out.status = st;
    out.iterations = iterations_;
    out.factorizations = factorizations_;
    out.dw = x_.head(n_);
    out.pi = pi_;
    out.eta = Eigen::VectorXd::Zero(m_);
    const std::size_t n_mu = std::min(work_.size(), static_cast<std::size_t>(mu_.size()));
    for (std::size_t k = 0; k < n_mu; ++k) {
      if (work_[k] < m_) out.eta[work_[k]] = std::max(0.0, mu_[static_cast<Eigen::Index>(k)]);
    }
    for (int r : work_) {
      if (r < m_) out.active_set.push_back(r);
    }
    std::sort(out.active_set.begin(), out.active_set.end());
    return out;
  }

 private:
  using RowMat = Eigen::SparseMatrix<double, Eigen::RowMajor>;

  void setup(const QpSubproblem& sub, const std::vector<int>& warm) {
    n_ = sub.n();
    ne_ = sub.n_eq();
    m_ = sub.n_ineq();
    iterations_ = 0;
    factorizations_ = 0;
    big_m_ = opts_.elastic_weight;

    std::vector<char> is_warm(m_, 0);
    warm_.clear();
    for (int r : warm) {
      if (r >= 0 && r < m_ && !is_warm[r]) {
        is_warm[r] = 1;
        warm_.push_back(r);
      }
    }

    const Eigen::VectorXd& e = sub.eq_rhs;
    const Eigen::VectorXd& h = sub.ineq_rhs;
    Eigen::VectorXd r_in(m_);
    for (int i = 0; i < m_; ++i) r_in[i] = is_warm[i] ? h[i] : std::max(0.0, h[i]);
    has_tau_ = (ne_ > 0 && e.cwiseAbs().maxCoeff() > 0.0) ||
               (m_ > 0 && r_in.cwiseAbs().maxCoeff() > 0.0);
    nv_ = n_ + (has_tau_ ? 1 : 0);
    mt_ = m_ + (has_tau_ ? 2 : 0);

    // Equalities E p − e τ = −e.
    Triplets te;
    for (int k = 0; k < sub.eq_jac.outerSize(); ++k) {
      for (SparseMat::InnerIterator it(sub.eq_jac, k); it; ++it) {
        te.emplace_back(it.row(), it.col(), it.value());
      }
    }
    if (has_tau_) {
      for (int i = 0; i < ne_; ++i) {
        if (e[i] != 0.0) te.emplace_back(i, n_, -e[i]);
      }
    }
    eq_.resize(ne_, nv_);
    eq_.setFromTriplets(te.begin(), te.end());
    eq_b_ = -e;

    // Inequalities a_iᵀp − r_i τ ≤ −h_i, then −τ ≤ 0 and τ ≤ 1.
    Triplets ti;
    for (int k = 0; k < sub.ineq_jac.outerSize(); ++k) {
      for (SparseMat::InnerIterator it(sub.ineq_jac, k); it; ++it) {
        ti.emplace_back(it.row(), it.col(), it.value());
      }
    }
    in_b_.resize(mt_);
    in_b_.head(m_) = -h;
    if (has_tau_) {
      for (int i = 0; i < m_; ++i) {
        if (r_in[i] != 0.0) ti.emplace_back(i, n_, -r_in[i]);
      }
      ti.emplace_back(m_, n_, -1.0);
      ti.emplace_back(m_ + 1, n_, 1.0);
      in_b_[m_] = 0.0;
      in_b_[m_ + 1] = 1.0;
    }
    in_.resize(mt_, nv_);
    in_.setFromTriplets(ti.begin(), ti.end());
    row_norm_.resize(mt_);
    for (int i = 0; i < mt_; ++i) row_norm_[i] = in_.row(i).cwiseAbs().sum();

    // Hessian without the elastic and proximal terms.
    h_base_ = sub.hess;
    if (sub.reg_delta > 0.0) {
      SparseMat eye(n_, n_);
      eye.setIdentity();
      h_base_ = h_base_ + sub.reg_delta * eye;
    }
    grad_ = sub.grad;
    grad_scale_ = std::max(1.0, grad_.size() ? grad_.cwiseAbs().maxCoeff() : 0.0);

    x_ = Eigen::VectorXd::Zero(nv_);
    if (has_tau_) x_[n_] = 1.0;
    pi_ = Eigen::VectorXd::Zero(ne_);

    // Working set: warm rows, then tight single-variable rows on variables
    // that no equality or already-chosen row touches.
    work_ = warm_;
    in_work_.assign(mt_, 0);
    for (int r : work_) in_work_[r] = 1;
    std::vector<char> used(n_, 0);
    for (int k = 0; k < eq_.outerSize(); ++k) {
      for (SparseMat::InnerIterator it(eq_, k); it; ++it) {
        if (it.col() < n_) used[it.col()] = 1;
      }
    }
    for (int r : work_) {
      for (RowMat::InnerIterator it(in_, r); it; ++it) {
        if (it.col() < n_) used[it.col()] = 1;
      }
    }
    for (int i = 0; i < m_; ++i) {
      if (in_work_[i] || h[i] < 0.0) continue;
      int nnz = 0, col = -1;
      for (RowMat::InnerIterator it(in_, i); it; ++it) {
        if (it.col() < n_ && it.value() != 0.0) {
          ++nnz;
          col = static_cast<int>(it.col());
        }
      }
      if (nnz == 1 && !used[col]) {
        used[col] = 1;
        work_.push_back(i);
        in_work_[i] = 1;
      }
    }
    mu_ = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(work_.size()));
  }

  bool hessian_is_pd() const {
    for (int i = 0; i < n_; ++i) {
      if (!(h_base_.coeff(i, i) > 0.0)) return false;
    }
    Eigen::SimplicialLLT<SparseMat> llt(h_base_);
    return llt.info() == Eigen::Success;
  }

  QpStatus run_outer(QpSolution& /*out*/) {
    double diag_max = 1.0;
    for (int i = 0; i < n_; ++i) diag_max = std::max(diag_max, std::abs(h_base_.coeff(i, i)));
    eps_ = hessian_is_pd() ? 0.0 : opts_.prox_rel * diag_max;
    center_ = x_;
    const int max_outer = 60;
    for (int outer = 0; outer < max_outer; ++outer) {
      const QpStatus st = run_inner();
      if (st != QpStatus::solved) return st;
      if (has_tau_ && x_[n_] > 1e-10) {
        big_m_ *= 100.0;
        if (big_m_ > opts_.elastic_max) return QpStatus::infeasible;
        center_ = x_;
        continue;
      }
      if (eps_ == 0.0) return QpStatus::solved;
      const double move = (x_ - center_).cwiseAbs().maxCoeff();
      center_ = x_;
      if (eps_ * move <= 1e-14 * grad_scale_) return QpStatus::solved;
    }
    return QpStatus::solved;
  }

  SparseMat full_hessian() const {
    Triplets t;
    t.reserve(static_cast<std::size_t>(h_base_.nonZeros() + nv_));
    for (int k = 0; k < h_base_.outerSize(); ++k) {
      for (SparseMat::InnerIterator it(h_base_, k); it; ++it) {
        t.emplace_back(it.row(), it.col(), it.value());
      }
    }
    if (eps_ > 0.0) {
      for (int i = 0; i < n_; ++i) t.emplace_back(i, i, eps_);
    }
    if (has_tau_) t.emplace_back(n_, n_, big_m_);
    SparseMat hm(nv_, nv_);
    hm.setFromTriplets(t.begin(), t.end());
    return hm;
  }

  Eigen::VectorXd linear_term() const {
    Eigen::VectorXd c(nv_);
    c.head(n_) = grad_;
    if (eps_ > 0.0) c.head(n_) -= eps_ * center_.head(n_);
    if (has_tau_) c[n_] = big_m_;
    return c;
  }

  QpStatus run_inner() {
    const int cap = opts_.max_iter > 0 ? opts_.max_iter : 10 * (n_ + mt_) + 100;
    const SparseMat hm = full_hessian();
    const Eigen::VectorXd c = linear_term();
    int degenerate = 0;
    Eigen::SparseLU<SparseMat, Eigen::COLAMDOrdering<int>> lu;
    while (iterations_ < cap) {
      ++iterations_;
      const int nw = static_cast<int>(work_.size());
      const int dim = nv_ + ne_ + nw;
      Triplets t;
      t.reserve(static_cast<std::size_t>(hm.nonZeros() + 2 * eq_.nonZeros() + 4 * nw + 8));
      for (int k = 0; k < hm.outerSize(); ++k) {
        for (SparseMat::InnerIterator it(hm, k); it; ++it) {
          t.emplace_back(it.row(), it.col(), it.value());
        }
      }
      for (int k = 0; k < eq_.outerSize(); ++k) {
        for (SparseMat::InnerIterator it(eq_, k); it; ++it) {
          t.emplace_back(nv_ + it.row(), it.col(), it.value());
          t.emplace_back(it.col(), nv_ + it.row(), it.value());
        }
      }
      Eigen::VectorXd rhs(dim);
      rhs.head(nv_) = -c;
      rhs.segment(nv_, ne_) = eq_b_;
      for (int k = 0; k < nw; ++k) {
        const int r = work_[k];
        for (RowMat::InnerIterator it(in_, r); it; ++it) {
          t.emplace_back(nv_ + ne_ + k, it.col(), it.value());
          t.emplace_back(it.col(), nv_ + ne_ + k, it.value());
        }
        rhs[nv_ + ne_ + k] = in_b_[r];
      }
      SparseMat kkt(dim, dim);
      kkt.setFromTriplets(t.begin(), t.end());
      kkt.makeCompressed();
      lu.compute(kkt);
      ++factorizations_;
      if (lu.info() != Eigen::Success) return QpStatus::indefinite;
      Eigen::VectorXd sol = lu.solve(rhs);
      for (int ref = 0; ref < 2 && sol.allFinite(); ++ref) sol += lu.solve(Eigen::VectorXd(rhs - kkt * sol));
      if (!sol.allFinite()) return QpStatus::indefinite;

      Eigen::VectorXd d = sol.head(nv_) - x_;
      double dnorm = d.cwiseAbs().maxCoeff();
      // Noise-level steps come from nearly dependent working rows.
      if (dnorm <= opts_.step_tol * std::max(1.0, x_.cwiseAbs().maxCoeff())) {
        d.setZero();
        dnorm = 0.0;
      }
      if (dnorm > 0.0) {
        const double curv = d.dot(hm * d);
        if (!(curv > 0.0)) return QpStatus::indefinite;
      }

      // Ratio test over rows outside the working set.
      double alpha = 1.0;
      int block = -1;
      if (dnorm > 0.0) {
        const Eigen::VectorXd ad = in_ * d;
        const Eigen::VectorXd ax = in_ * x_;
        for (int i = 0; i < mt_; ++i) {
          if (in_work_[i]) continue;
          if (ad[i] <= row_norm_[i] * std::max(opts_.blocking_tol * dnorm, opts_.blocking_floor)) continue;
          const double slack = std::max(0.0, in_b_[i] - ax[i]);
          const double a = slack / ad[i];
          if (a < alpha) {
            alpha = a;
            block = i;
          }
        }
      }
      if (block >= 0) {
        x_ += alpha * d;
        work_.push_back(block);
        in_work_[block] = 1;
        degenerate = alpha == 0.0 ? degenerate + 1 : 0;
        continue;
      }

      if (dnorm > 0.0) x_ = sol.head(nv_);
      pi_ = sol.segment(nv_, ne_);
      mu_ = sol.tail(nw);
      const double thresh = -opts_.dual_tol * grad_scale_;
      int leave = -1;
      if (degenerate > opts_.degenerate_limit) {
        int best_row = std::numeric_limits<int>::max();
        for (int k = 0; k < nw; ++k) {
          if (mu_[k] < thresh && work_[k] < best_row) {
            best_row = work_[k];
            leave = k;
          }
        }
      } else {
        double most = thresh;
        for (int k = 0; k < nw; ++k) {
          if (mu_[k] < most || (mu_[k] == most && leave >= 0 && work_[k] < work_[leave])) {
            most = mu_[k];
            leave = k;
          }
        }
      }
      if (leave < 0) return QpStatus::solved;
      in_work_[work_[leave]] = 0;
      work_.erase(work_.begin() + leave);
    }
    return QpStatus::max_iter;
  }

  QpOptions opts_;
  int n_ = 0, ne_ = 0, m_ = 0, nv_ = 0, mt_ = 0;
  bool has_tau_ = false;
  double big_m_ = 0.0;
  double eps_ = 0.0;
  double grad_scale_ = 1.0;
  int iterations_ = 0;
  int factorizations_ = 0;
  SparseMat eq_;
  Eigen::VectorXd eq_b_;
  RowMat in_;
  Eigen::VectorXd in_b_;
  Eigen::VectorXd row_norm_;
  SparseMat h_base_;
  Eigen::VectorXd grad_;
  Eigen::VectorXd x_, center_, pi_, mu_;
  std::vector<int> warm_;
  std::vector<int> work_;
  std::vector<char> in_work_;
};

inline QpSolution solve_qp(const QpSubproblem& sub, const std::vector<int>& warm = {}) {
  ActiveSetQpSolver solver;
  return solver.solve(sub, warm);
}

/// Text dump: a header line "qp n n_eq n_ineq reg_delta", then each matrix
/// as "name rows cols nnz" followed by one "row col value" line per entry,
/// then each vector as "name size" followed by its entries.
inline void write_qp(std::ostream& os, const QpSubproblem& sub) {
  os << "qp " << sub.n() << ' ' << sub.n_eq() << ' ' << sub.n_ineq() << ' '
     << format_double(sub.reg_delta) << '\n';
  auto mat = [&os](const char* name, const SparseMat& m) {
    os << name << ' ' << m.rows() << ' ' << m.cols() << ' ' << m.nonZeros() << '\n';
    for (int k = 0; k < m.outerSize(); ++k) {
      for (SparseMat::InnerIterator it(m, k); it; ++it) {
        os << it.row() << ' ' << it.col() << ' ' << format_double(it.value()) << '\n';
      }
    }
  };
  auto vec = [&os](const char* name, const Eigen::VectorXd& v) {
    os << name << ' ' << v.size() << '\n';
    for (Eigen::Index i = 0; i < v.size(); ++i) os << format_double(v[i]) << '\n';
  };
  mat("hess", sub.hess);
  mat("eq_jac", sub.eq_jac);
  vec("eq_rhs", sub.eq_rhs);
  mat("ineq_jac", sub.ineq_jac);
  vec("ineq_rhs", sub.ineq_rhs);
  vec("grad", sub.grad);
}

inline QpSubproblem read_qp(std::istream& is) {
  auto expect = [&is](const std::string& name) {
    std::string tok;
    if (!(is >> tok) || tok != name) {
      throw std::runtime_error("read_qp: expected section '" + name + "'");
    }
  };
  auto mat = [&](const std::string& name) {
    expect(name);
    long rows = 0, cols = 0, nnz = 0;
    if (!(is >> rows >> cols >> nnz) || rows < 0 || cols < 0 || nnz < 0) {
      throw std::runtime_error("read_qp: bad header for " + name);
    }
    Triplets t;
    for (long k = 0; k < nnz; ++k) {
      long r = 0, c = 0;
      double v = 0.0;
      if (!(is >> r >> c >> v) || r < 0 || r >= rows || c < 0 || c >= cols) {
        throw std::runtime_error("read_qp: bad entry in " + name);
      }
      t.emplace_back(static_cast<int>(r), static_cast<int>(c), v);
    }
    SparseMat m(rows, cols);
    m.setFromTriplets(t.begin(), t.end());
    return m;
  };
  auto vec = [&](const std::string& name) {
    expect(name);
    long size = 0;
    if (!(is >> size) || size < 0) throw std::runtime_error("read_qp: bad size for " + name);
    Eigen::VectorXd v(size);
    for (long i = 0; i < size; ++i) {
      if (!(is >> v[i])) throw std::runtime_error("read_qp: truncated " + name);
    }
    return v;
  };
  expect("qp");
  long n = 0, ne = 0, ni = 0;
  QpSubproblem sub;
  if (!(is >> n >> ne >> ni >> sub.reg_delta)) throw std::runtime_error("read_qp: bad header");
  sub.hess = mat("hess");
  sub.eq_jac = mat("eq_jac");
  sub.eq_rhs = vec("eq_rhs");
  sub.ineq_jac = mat("ineq_jac");
  sub.ineq_rhs = vec("ineq_rhs");
  sub.grad = vec("grad");
  sub.validate();
  return sub;
}

}  // namespace tdo
