#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

#include <Eigen/Core>

#include "tdo/dynamics.hpp"
#include "tdo/jet.hpp"

namespace tdo {

/// Lateral bicycle model parameters (SI units). Defaults describe a large
/// sedan travelling at 30 m/s, sampled every 40 ms.
struct VehicleParams {
  double m = 2041.0;
  double izz = 4964.0;
  double lf = 1.56;
  double lr = 1.64;
  double mu = 0.8;
  double b_tire = 12.0;
  double c_tire = 1.285;
  double area = 7.8;
  double rho = 1.225;
  double cd = 1.5;
  double s_long = 30.0;
  double ts = 0.04;

  void validate() const {
    auto positive = [](double v, const char* name) {
      if (!(v > 0.0)) {
        throw std::invalid_argument(std::string("VehicleParams: ") + name +
                                    " must be positive");
      }
    };
    positive(m, "m");
    positive(izz, "izz");
    positive(lf, "lf");
    positive(lr, "lr");
    positive(b_tire, "b_tire");
    positive(c_tire, "c_tire");
    positive(area, "area");
    positive(rho, "rho");
    positive(cd, "cd");
    positive(s_long, "s_long");
    positive(ts, "ts");
    if (!(mu > 0.0 && mu <= 1.0)) {
      throw std::invalid_argument("VehicleParams: mu must lie in (0, 1]");
    }
  }
};

inline constexpr int kStateDim = 6;
inline constexpr int kInputDim = 2;

/// Ordering of the plant state vector.
enum StateIndex : int { kY = 0, kPsi = 1, kNu = 2, kOmega = 3, kDeltaF = 4, kDeltaR = 5 };

template <typename T>
using StateVec = Eigen::Matrix<T, kStateDim, 1>;
template <typename T>
using InputVec = Eigen::Matrix<T, kInputDim, 1>;

using PlantState = StateVec<double>;
using Input = InputVec<double>;

/// Pacejka lateral tire force for slip angle `alpha`.
template <typename T>
T tire_force(const T& alpha, const VehicleParams& p) {
  using std::atan;
  using std::sin;
  return (p.mu * 9.81 * p.m) * sin(p.c_tire * atan(p.b_tire * alpha));
}

/// Lateral drag force from a wind speed `d` (signed, m/s).
inline double wind_force(double d, const VehicleParams& p) {
  return 0.5 * p.rho * p.cd * p.area * std::abs(d) * d;
}

/// ẋ of the lateral bicycle model with steering-rate inputs.
template <typename T>
StateVec<T> continuous_dynamics(const StateVec<T>& x, const InputVec<T>& u,
                                double d, const VehicleParams& p) {
  using std::atan;
  using std::cos;
  using std::sin;
  const T& psi = x[kPsi];
  const T& nu = x[kNu];
  const T& omega = x[kOmega];
  const T& df = x[kDeltaF];
  const T& dr = x[kDeltaR];

  const T alpha_f = df - atan((nu + p.lf * omega) / p.s_long);
  const T alpha_r = dr - atan((nu - p.lr * omega) / p.s_long);
  const T ff = tire_force(alpha_f, p) * cos(df);
  const T fr = tire_force(alpha_r, p) * cos(dr);
  const double fw = wind_force(d, p);

  StateVec<T> xdot;
  xdot[kY] = p.s_long * sin(psi) + nu * cos(psi);
  xdot[kPsi] = omega;
  xdot[kNu] = -p.s_long * omega + (ff + fr + fw) / p.m;
  xdot[kOmega] = (ff * p.lf - fr * p.lr) / p.izz;
  xdot[kDeltaF] = u[0];
  xdot[kDeltaR] = u[1];
  return xdot;
}

/// One forward-Euler step of length `p.ts`.
template <typename T>
StateVec<T> step(const StateVec<T>& x, const InputVec<T>& u, double d,
                 const VehicleParams& p) {
  const StateVec<T> xdot = continuous_dynamics(x, u, d, p);
  StateVec<T> next;
  for (int i = 0; i < kStateDim; ++i) next[i] = x[i] + p.ts * xdot[i];
  return next;
}

struct Linearization {
  Eigen::Matrix<double, kStateDim, kStateDim> A;
  Eigen::Matrix<double, kStateDim, kInputDim> B;
};

/// Exact Jacobians of `step` at (x, u) with zero wind, by seeding one Jet
/// direction per state and input.
inline Linearization jacobians(const PlantState& x, const Input& u,
                               const VehicleParams& p,
                               PlantState* value = nullptr) {
  using J = Jet<kStateDim + kInputDim>;
  StateVec<J> xj;
  InputVec<J> uj;
  for (int i = 0; i < kStateDim; ++i) xj[i] = J::variable(x[i], i);
  for (int i = 0; i < kInputDim; ++i) uj[i] = J::variable(u[i], kStateDim + i);
  const StateVec<J> fj = step(xj, uj, 0.0, p);

  Linearization lin;
  for (int r = 0; r < kStateDim; ++r) {
    lin.A.row(r) = fj[r].grad.template head<kStateDim>().transpose();
    lin.B.row(r) = fj[r].grad.template tail<kInputDim>().transpose();
    if (value) (*value)[r] = fj[r].val;
  }
  return lin;
}

/// The bicycle model behind the generic dynamics interface (d = 0).
class BicycleDynamics final : public DiscreteDynamics {
 public:
  explicit BicycleDynamics(VehicleParams p) : p_(p) { p_.validate(); }

  int nx() const override { return kStateDim; }
  int nu() const override { return kInputDim; }

  Eigen::VectorXd eval(const Eigen::VectorXd& x,
                       const Eigen::VectorXd& u) const override {
    return step<double>(PlantState(x), Input(u), 0.0, p_);
  }

  void linearize(const Eigen::VectorXd& x, const Eigen::VectorXd& u,
                 Eigen::VectorXd& f, Eigen::MatrixXd& A,
                 Eigen::MatrixXd& B) const override {
    PlantState value;
    const Linearization lin = jacobians(PlantState(x), Input(u), p_, &value);
    f = value;
    A = lin.A;
    B = lin.B;
  }

  const VehicleParams& params() const { return p_; }

 private:
  VehicleParams p_;
};

}  // namespace tdo
