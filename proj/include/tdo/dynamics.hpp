#pragma once

#include <memory>
#include <stdexcept>

#include <Eigen/Dense>

namespace tdo {

/// A discrete-time model x⁺ = f(x, u) evaluated at nominal disturbance.
///
/// The optimizer only needs values and first derivatives; implementations
/// are immutable so one instance can be shared by many OCPs.
class DiscreteDynamics {
 public:
  virtual ~DiscreteDynamics() = default;

  virtual int nx() const = 0;
  virtual int nu() const = 0;

  virtual Eigen::VectorXd eval(const Eigen::VectorXd& x,
                               const Eigen::VectorXd& u) const = 0;

  /// Value and Jacobians A = ∂f/∂x, B = ∂f/∂u.
  virtual void linearize(const Eigen::VectorXd& x, const Eigen::VectorXd& u,
                         Eigen::VectorXd& f, Eigen::MatrixXd& A,
                         Eigen::MatrixXd& B) const = 0;
};

using DynamicsPtr = std::shared_ptr<const DiscreteDynamics>;

/// x⁺ = A x + B u. Used for linear-quadratic test instances.
class LinearDynamics final : public DiscreteDynamics {
 public:
  LinearDynamics(Eigen::MatrixXd A, Eigen::MatrixXd B)
      : A_(std::move(A)), B_(std::move(B)) {
    if (A_.rows() != A_.cols() || B_.rows() != A_.rows()) {
      throw std::invalid_argument("LinearDynamics: inconsistent A, B");
    }
  }

  int nx() const override { return static_cast<int>(A_.rows()); }
  int nu() const override { return static_cast<int>(B_.cols()); }

  Eigen::VectorXd eval(const Eigen::VectorXd& x,
                       const Eigen::VectorXd& u) const override {
    return A_ * x + B_ * u;
  }

  void linearize(const Eigen::VectorXd& x, const Eigen::VectorXd& u,
                 Eigen::VectorXd& f, Eigen::MatrixXd& A,
                 Eigen::MatrixXd& B) const override {
    f = eval(x, u);
    A = A_;
    B = B_;
  }

  const Eigen::MatrixXd& a() const { return A_; }
  const Eigen::MatrixXd& b() const { return B_; }

 private:
  Eigen::MatrixXd A_;
  Eigen::MatrixXd B_;
};

}  // namespace tdo
