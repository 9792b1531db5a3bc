#pragma once

#include <limits>
#include <stdexcept>
#include <string>

#include <Eigen/Core>

#include "tdo/matrix_io.hpp"

namespace tdo {

/// H-representation {ξ : a_mat ξ ≤ b_vec}.
struct Polytope {
  Eigen::MatrixXd a_mat;
  Eigen::VectorXd b_vec;

  Polytope() = default;
  Polytope(Eigen::MatrixXd a, Eigen::VectorXd b)
      : a_mat(std::move(a)), b_vec(std::move(b)) {
    if (a_mat.rows() != b_vec.size()) {
      throw std::invalid_argument("Polytope: row count mismatch");
    }
  }

  int rows() const { return static_cast<int>(a_mat.rows()); }
  int dim() const { return static_cast<int>(a_mat.cols()); }

  bool contains(const Eigen::VectorXd& x, double tol = 0.0) const {
    return rows() == 0 || ((a_mat * x - b_vec).array() <= tol).all();
  }

  /// Largest row violation (≤ 0 inside).
  double max_violation(const Eigen::VectorXd& x) const {
    if (rows() == 0) return -std::numeric_limits<double>::infinity();
    return (a_mat * x - b_vec).maxCoeff();
  }

  /// Axis-aligned box lb ≤ ξ ≤ ub.
  static Polytope box(const Eigen::VectorXd& lb, const Eigen::VectorXd& ub) {
    const Eigen::Index n = lb.size();
    Eigen::MatrixXd a(2 * n, n);
    Eigen::VectorXd b(2 * n);
    a.setZero();
    for (Eigen::Index i = 0; i < n; ++i) {
      a(2 * i, i) = 1.0;
      b[2 * i] = ub[i];
      a(2 * i + 1, i) = -1.0;
      b[2 * i + 1] = -lb[i];
    }
    return {a, b};
  }

  /// Scales every row to unit Euclidean norm; zero rows are left alone.
  Polytope normalized() const {
    Polytope p = *this;
    for (int r = 0; r < rows(); ++r) {
      const double n = p.a_mat.row(r).norm();
      if (n > 0.0) {
        p.a_mat.row(r) /= n;
        p.b_vec[r] /= n;
      }
    }
    return p;
  }

  /// Writes `<prefix>_A.txt` and `<prefix>_b.txt`.
  void save(const std::string& prefix) const {
    save_matrix(prefix + "_A.txt", a_mat);
    save_matrix(prefix + "_b.txt", b_vec);
  }

  static Polytope load(const std::string& prefix) {
    Eigen::MatrixXd a = load_matrix(prefix + "_A.txt");
    Eigen::MatrixXd b = load_matrix(prefix + "_b.txt");
    if (b.cols() != 1 || b.rows() != a.rows()) {
      throw std::runtime_error("Polytope::load: b must be a column matching A");
    }
    return {a, b.col(0)};
  }
};

}  // namespace tdo
