#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace tdo {

/// The Riccati recursion diverged: (A, B) is not stabilizable.
class NonStabilizableError : public std::runtime_error {
 public:
  explicit NonStabilizableError(const std::string& what) : std::runtime_error(what) {}
};

struct DareResult {
  Eigen::MatrixXd p;  // cost-to-go
  Eigen::MatrixXd k;  // u = −K x
  double residual = 0.0;
  int iterations = 0;
};

/// ‖P − (AᵀPA − AᵀPB(R + BᵀPB)⁻¹BᵀPA + Q)‖_max.
inline double dare_residual(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                            const Eigen::MatrixXd& q, const Eigen::MatrixXd& r,
                            const Eigen::MatrixXd& p) {
  const Eigen::MatrixXd bp = b.transpose() * p;
  const Eigen::MatrixXd rhs =
      a.transpose() * p * a -
      (bp * a).transpose() * (r + bp * b).ldlt().solve(bp * a) + q;
  return (p - rhs).cwiseAbs().maxCoeff();
}

/// Solves the discrete algebraic Riccati equation by iterating the Riccati
/// recursion from P = Q until it stops moving.
inline DareResult dare_solve(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                             const Eigen::MatrixXd& q, const Eigen::MatrixXd& r,
                             int max_iter = 1000000) {
  const Eigen::Index n = a.rows();
  if (a.cols() != n || b.rows() != n || q.rows() != n || q.cols() != n ||
      r.rows() != b.cols() || r.cols() != b.cols()) {
    throw std::invalid_argument("dare_solve: inconsistent dimensions");
  }
  if (Eigen::LLT<Eigen::MatrixXd>(r).info() != Eigen::Success) {
    throw std::invalid_argument("dare_solve: R must be positive definite");
  }
  if (Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(q).eigenvalues().minCoeff() < -1e-12) {
    throw std::invalid_argument("dare_solve: Q must be positive semidefinite");
  }
  DareResult res;
  Eigen::MatrixXd p = q;
  for (int it = 1; it <= max_iter; ++it) {
    const Eigen::MatrixXd bp = b.transpose() * p;
    const Eigen::MatrixXd gain = (r + bp * b).ldlt().solve(bp * a);
    Eigen::MatrixXd next = a.transpose() * p * (a - b * gain) + q;
    next = 0.5 * (next + next.transpose()).eval();
    const double scale = std::max(1.0, next.cwiseAbs().maxCoeff());
    if (!next.allFinite() || scale > 1e14) {
      throw NonStabilizableError("dare_solve: Riccati recursion diverges");
    }
    const double change = (next - p).cwiseAbs().maxCoeff();
    p = next;
    res.iterations = it;
    if (change <= 1e-15 * scale) break;
  }
  res.p = p;
  const Eigen::MatrixXd bp = b.transpose() * p;
  res.k = (r + bp * b).ldlt().solve(bp * a);
  res.residual = dare_residual(a, b, q, r, p);
  if (res.residual > 1e-10 * std::max(1.0, p.cwiseAbs().maxCoeff())) {
    throw NonStabilizableError("dare_solve: recursion did not reach a fixed point");
  }
  return res;
}

/// Largest eigenvalue modulus.
inline double spectral_radius(const Eigen::MatrixXd& m) {
  return Eigen::EigenSolver<Eigen::MatrixXd>(m, false).eigenvalues().cwiseAbs().maxCoeff();
}

}  // namespace tdo
