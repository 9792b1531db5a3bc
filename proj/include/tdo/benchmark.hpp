#pragma once

#include <cmath>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "tdo/invariant_set.hpp"
#include "tdo/ocp.hpp"
#include "tdo/polytope.hpp"
#include "tdo/riccati.hpp"
#include "tdo/vehicle.hpp"

namespace tdo {

inline constexpr double kDeg = 3.14159265358979323846 / 180.0;

/// Lane-change bounds on [y, ψ, ν, ω, δf, δr] and on the steering rates.
inline Eigen::VectorXd lane_change_x_ub() {
  Eigen::VectorXd v(kStateDim);
  v << 0.4, 7.0 * kDeg, 100.0, 100.0, 35.0 * kDeg, 4.0 * kDeg;
  return v;
}
inline Eigen::VectorXd lane_change_x_lb() {
  Eigen::VectorXd v(kStateDim);
  v << -4.7, -7.0 * kDeg, -100.0, -100.0, -35.0 * kDeg, -4.0 * kDeg;
  return v;
}
inline Eigen::VectorXd lane_change_u_ub() {
  Eigen::VectorXd v(kInputDim);
  v << 1.2, 0.6;
  return v;
}
inline Eigen::VectorXd lane_change_u_lb() { return -lane_change_u_ub(); }

inline PlantState lane_change_x0() {
  PlantState x = PlantState::Zero();
  x[kY] = -3.7;
  return x;
}

struct BenchmarkOptions {
  VehicleParams vehicle;
  int horizon = 30;
  Eigen::MatrixXd q_weight = Eigen::MatrixXd::Identity(kStateDim, kStateDim);
  Eigen::MatrixXd r_weight = Eigen::MatrixXd::Identity(kInputDim, kInputDim);
  Eigen::VectorXd x_lb = lane_change_x_lb();
  Eigen::VectorXd x_ub = lane_change_x_ub();
  Eigen::VectorXd u_lb = lane_change_u_lb();
  Eigen::VectorXd u_ub = lane_change_u_ub();
  std::vector<int> soft_indices = {kY, kPsi, kNu, kOmega};
  double penalty_rho = 1e3;
  bool use_terminal_set = true;
  /// Load A_f, b_f from `<prefix>_A.txt`/`<prefix>_b.txt` instead of computing.
  std::string terminal_set_prefix;
  int mas_cap = 500;
};

struct TerminalIngredients {
  Eigen::MatrixXd a, b;  // linearization at the origin
  DareResult dare;       // P is the terminal weight, K the LQR gain
  Polytope set;
  bool certified = false;
  int iterations = 0;
  Polytope state_constraints;
  Polytope input_constraints;

  Eigen::MatrixXd a_cl() const { return a - b * dare.k; }
};

/// Terminal weight from the DARE at the origin linearization and the
/// maximal admissible set of the LQR closed loop under the hard bounds.
inline TerminalIngredients compute_terminal_ingredients(const BenchmarkOptions& opt,
                                                        bool compute_set = true) {
  TerminalIngredients ti;
  const Linearization lin = jacobians(PlantState::Zero(), Input::Zero(), opt.vehicle);
  ti.a = lin.A;
  ti.b = lin.B;
  ti.dare = dare_solve(ti.a, ti.b, opt.q_weight, opt.r_weight);
  ti.state_constraints = Polytope::box(opt.x_lb, opt.x_ub);
  ti.input_constraints = gain_mapped_input_constraints(ti.dare.k, opt.u_lb, opt.u_ub);
  if (compute_set) {
    const MasResult mas =
        max_admissible_set(ti.a_cl(), ti.state_constraints, ti.input_constraints, opt.mas_cap);
    ti.set = mas.set;
    ti.certified = mas.certified;
    ti.iterations = mas.iterations;
  }
  return ti;
}

struct Benchmark {
  BenchmarkOptions options;
  std::shared_ptr<const BicycleDynamics> dynamics;
  TerminalIngredients terminal;
  OcpConfig ocp;
  std::shared_ptr<const OcpInstance> instance;
};

inline Benchmark make_benchmark(const BenchmarkOptions& opt = {}) {
  Benchmark bm;
  bm.options = opt;
  bm.dynamics = std::make_shared<const BicycleDynamics>(opt.vehicle);
  const bool load = !opt.terminal_set_prefix.empty();
  bm.terminal = compute_terminal_ingredients(opt, opt.use_terminal_set && !load);
  if (opt.use_terminal_set && load) {
    bm.terminal.set = Polytope::load(opt.terminal_set_prefix);
    bm.terminal.certified = true;
  }
  bm.ocp.horizon = opt.horizon;
  bm.ocp.q_weight = opt.q_weight;
  bm.ocp.r_weight = opt.r_weight;
  bm.ocp.qf_weight = bm.terminal.dare.p;
  bm.ocp.x_lb = opt.x_lb;
  bm.ocp.x_ub = opt.x_ub;
  bm.ocp.u_lb = opt.u_lb;
  bm.ocp.u_ub = opt.u_ub;
  bm.ocp.soft_indices = opt.soft_indices;
  bm.ocp.penalty_rho = opt.penalty_rho;
  if (opt.use_terminal_set) bm.ocp.terminal_set = bm.terminal.set;
  bm.instance = std::make_shared<const OcpInstance>(bm.dynamics, bm.ocp);
  return bm;
}

}  // namespace tdo
