#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

namespace tdo {

enum class LpStatus { optimal, unbounded, max_iter };

struct LpResult {
  LpStatus status = LpStatus::max_iter;
  Eigen::VectorXd x;
  double value = 0.0;
  int iterations = 0;
};

/// max cᵀx s.t. A x ≤ b from a feasible start x0, by moving along edges
/// between tight constraints. Bland's rule on both the entering and the
/// leaving choice, so degenerate vertices cannot cycle.
inline LpResult lp_maximize(const Eigen::VectorXd& c, const Eigen::MatrixXd& a,
                            const Eigen::VectorXd& b, const Eigen::VectorXd& x0,
                            int max_iter = 10000) {
  const Eigen::Index n = c.size();
  const Eigen::Index m = a.rows();
  if (a.cols() != n || b.size() != m || x0.size() != n) {
    throw std::invalid_argument("lp_maximize: dimension mismatch");
  }
  const double tol = 1e-12;
  if (m > 0 && (a * x0 - b).maxCoeff() > 1e-9) {
    throw std::invalid_argument("lp_maximize: start point is infeasible");
  }
  LpResult res;
  Eigen::VectorXd x = x0;
  std::vector<int> work;
  std::vector<char> in_work(static_cast<std::size_t>(m), 0);

  for (int it = 0; it < max_iter; ++it) {
    res.iterations = it + 1;
    const Eigen::Index k = static_cast<Eigen::Index>(work.size());
    Eigen::MatrixXd aw(k, n);
    for (Eigen::Index i = 0; i < k; ++i) aw.row(i) = a.row(work[i]);

    // Ascent direction in the null space of the working rows, if any.
    Eigen::VectorXd d = c;
    Eigen::VectorXd lam;
    if (k > 0) {
      const Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(aw.transpose());
      lam = qr.solve(c);
      d = c - aw.transpose() * lam;
    }
    int leave = -1;
    if (d.norm() <= 1e-10 * (1.0 + c.norm())) {
      // c lies in the span of the working rows: check multiplier signs.
      for (Eigen::Index i = 0; i < k; ++i) {
        if (lam[i] < -1e-10 && (leave < 0 || work[i] < work[leave])) leave = static_cast<int>(i);
      }
      if (leave < 0) {
        res.status = LpStatus::optimal;
        res.x = x;
        res.value = c.dot(x);
        return res;
      }
      // Move off row `leave` while keeping the others tight.
      Eigen::MatrixXd sys = aw;
      Eigen::VectorXd rhs = Eigen::VectorXd::Zero(k);
      rhs[leave] = -1.0;
      d = sys.colPivHouseholderQr().solve(rhs);
      in_work[static_cast<std::size_t>(work[leave])] = 0;
      work.erase(work.begin() + leave);
    }

    double alpha = std::numeric_limits<double>::infinity();
    int block = -1;
    const Eigen::VectorXd ad = a * d;
    for (Eigen::Index i = 0; i < m; ++i) {
      if (in_work[static_cast<std::size_t>(i)] || ad[i] <= tol * d.norm()) continue;
      const double step = std::max(0.0, b[i] - a.row(i).dot(x)) / ad[i];
      if (step < alpha) {
        alpha = step;
        block = static_cast<int>(i);
      }
    }
    if (block < 0) {
      res.status = LpStatus::unbounded;
      res.x = x;
      res.value = std::numeric_limits<double>::infinity();
      return res;
    }
    x += alpha * d;
    work.push_back(block);
    in_work[static_cast<std::size_t>(block)] = 1;
  }
  res.status = LpStatus::max_iter;
  res.x = x;
  res.value = c.dot(x);
  return res;
}

}  // namespace tdo
