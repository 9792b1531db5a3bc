#include <gtest/gtest.h>

#include "tdo/benchmark.hpp"
#include "tdo/sqp.hpp"

namespace tdo {
namespace {

std::shared_ptr<const OcpInstance> toy_instance() {
  Eigen::MatrixXd a(2, 2), b(2, 1);
  a << 1.0, 0.1, 0.0, 1.0;
  b << 0.0, 0.1;
  OcpConfig c;
  c.horizon = 8;
  c.q_weight = Eigen::MatrixXd::Identity(2, 2);
  c.r_weight = Eigen::MatrixXd::Identity(1, 1);
  c.qf_weight = 5.0 * Eigen::MatrixXd::Identity(2, 2);
  c.x_lb = Eigen::Vector2d(-5, -0.5);
  c.x_ub = Eigen::Vector2d(5, 0.5);
  c.u_lb = Eigen::VectorXd::Constant(1, -1.0);
  c.u_ub = Eigen::VectorXd::Constant(1, 1.0);
  c.soft_indices = {1};
  return std::make_shared<const OcpInstance>(std::make_shared<LinearDynamics>(a, b), c);
}

const Benchmark& bench() {
  static const Benchmark bm = [] {
    BenchmarkOptions o;
    o.use_terminal_set = false;
    return make_benchmark(o);
  }();
  return bm;
}

TEST(Sqp, ParseHessianKind) {
  EXPECT_EQ(parse_hessian_kind("gn"), HessianKind::gauss_newton);
  EXPECT_EQ(parse_hessian_kind("jn"), HessianKind::josephy_newton);
  EXPECT_EQ(parse_hessian_kind("jn_aug"), HessianKind::jn_augmented);
  EXPECT_THROW(parse_hessian_kind("newton"), std::invalid_argument);
}

TEST(Sqp, ConfigValidation) {
  SqpConfig c;
  EXPECT_NO_THROW(c.validate());
  c.ell = 0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = SqpConfig{};
  c.stop_tol = -1.0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = SqpConfig{};
  c.mode.kind = HessianKind::jn_augmented;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c.mode.rho_aug = 1.0;
  EXPECT_NO_THROW(c.validate());
  c = SqpConfig{};
  c.ell = -2;
  EXPECT_THROW(SqpEngine(toy_instance(), c), std::invalid_argument);
}

TEST(Sqp, LinearQuadraticSolvedInOneStep) {
  const auto inst = toy_instance();
  for (HessianKind kind : {HessianKind::gauss_newton, HessianKind::josephy_newton}) {
    SqpConfig cfg;
    cfg.mode.kind = kind;
    SqpEngine eng(inst, cfg);
    const Eigen::Vector2d x(3.0, 0.4);
    PrimalDualPoint z = inst->zero_point();
    std::vector<int> warm;
    const StepReport rep = eng.td_step(z, x, warm);
    ASSERT_TRUE(rep.ok());
    EXPECT_GT(rep.pi_before, 1.0);
    EXPECT_LT(rep.pi_after, 1e-9) << to_string(kind);
    EXPECT_NEAR(inst->natural_residual(z, x), rep.pi_after, 1e-12);
  }
}

TEST(Sqp, JnHessianOfLinearModelIsObjectiveHessian) {
  const auto inst = toy_instance();
  PrimalDualPoint z = inst->zero_point();
  z.lam.setConstant(3.0);
  const SparseMat h = jn_hessian(*inst, z, Eigen::Vector2d(1, 0), HessianMode{});
  EXPECT_LT(Eigen::MatrixXd(h - inst->objective_hessian()).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(Sqp, JnHessianIsSymmetric) {
  const OcpInstance& inst = *bench().instance;
  PrimalDualPoint z = inst.zero_point();
  for (int i = 0; i < z.lam.size(); ++i) z.lam[i] = 0.01 * ((i % 7) - 3);
  for (int i = 0; i < z.w.size(); ++i) z.w[i] = 0.001 * ((i % 5) - 2);
  const Eigen::MatrixXd h = jn_hessian(inst, z, Eigen::VectorXd(lane_change_x0()), HessianMode{});
  EXPECT_LT((h - h.transpose()).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_GT((h - Eigen::MatrixXd(inst.objective_hessian())).norm(), 0.0);
}

TEST(Sqp, SolutionIsFixedPointOfEveryMode) {
  const auto inst = bench().instance;
  const Eigen::VectorXd x = lane_change_x0();
  SqpConfig tight;
  tight.kkt_tol = 1e-11;
  SqpEngine base(inst, tight);
  const SolveResult sol = base.solve_to_tolerance(inst->zero_point(), x);
  ASSERT_TRUE(sol.converged()) << to_string(sol.status);
  EXPECT_LE(sol.residual, 1e-11);

  for (HessianKind kind : {HessianKind::gauss_newton, HessianKind::josephy_newton, HessianKind::jn_augmented}) {
    SqpConfig cfg;
    cfg.mode.kind = kind;
    if (kind == HessianKind::jn_augmented) cfg.mode.rho_aug = 10.0;
    SqpEngine eng(inst, cfg);
    PrimalDualPoint z = sol.z;
    std::vector<int> warm = sol.active_set;
    const StepReport rep = eng.td_step(z, x, warm);
    ASSERT_TRUE(rep.ok());
    EXPECT_LE(z.distance(sol.z), 1e-7) << to_string(kind);
  }
}

TEST(Sqp, IterateTraceAndStopTolerance) {
  const auto inst = bench().instance;
  const Eigen::VectorXd x = lane_change_x0();
  SqpConfig cfg;
  cfg.mode.kind = HessianKind::josephy_newton;
  cfg.ell = 12;
  SqpEngine eng(inst, cfg);
  std::vector<int> warm;
  const IterateResult full = eng.iterate(inst->zero_point(), x, warm);
  ASSERT_TRUE(full.ok);
  EXPECT_EQ(full.trace.size(), 13u);
  EXPECT_EQ(full.reports.size(), 12u);
  EXPECT_LT(full.trace.back(), 1e-8);
  for (std::size_t i = 0; i < full.reports.size(); ++i) {
    EXPECT_NEAR(full.reports[i].pi_before, full.trace[i], 1e-12);
  }

  cfg.stop_tol = 1e-6;
  SqpEngine early(inst, cfg);
  warm.clear();
  const IterateResult cut = early.iterate(inst->zero_point(), x, warm);
  EXPECT_LE(cut.trace.back(), 1e-6);
  EXPECT_LT(cut.reports.size(), full.reports.size());
}

TEST(Sqp, SolveToToleranceFromColdStart) {
  const auto inst = bench().instance;
  Eigen::VectorXd x = lane_change_x0();
  x[kPsi] = 0.05;
  SqpConfig cfg;
  cfg.mode.kind = HessianKind::josephy_newton;
  SqpEngine eng(inst, cfg);
  const SolveResult r = eng.solve_to_tolerance(inst->zero_point(), x);
  ASSERT_TRUE(r.converged());
  EXPECT_LE(inst->natural_residual(r.z, x), cfg.kkt_tol);
  EXPECT_GT(r.iterations, 0);
  // Already converged: zero iterations.
  const SolveResult again = eng.solve_to_tolerance(r.z, x, r.active_set);
  EXPECT_EQ(again.iterations, 0);
}

}  // namespace
}  // namespace tdo
