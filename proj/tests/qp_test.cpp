#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "tdo/qp.hpp"

namespace tdo {
namespace {

SparseMat sparse(const Eigen::MatrixXd& m) { return m.sparseView(0.0, 0.0); }

QpSubproblem make_qp(const Eigen::MatrixXd& h, const Eigen::VectorXd& g,
                     const Eigen::MatrixXd& e, const Eigen::VectorXd& e_rhs,
                     const Eigen::MatrixXd& c, const Eigen::VectorXd& c_rhs) {
  QpSubproblem sub;
  sub.hess = sparse(h);
  sub.grad = g;
  sub.eq_jac = sparse(e);
  sub.eq_rhs = e_rhs;
  sub.ineq_jac = sparse(c);
  sub.ineq_rhs = c_rhs;
  return sub;
}

struct Enumerated {
  bool found = false;
  Eigen::VectorXd x, pi, eta;
};

// Tries every subset of inequalities as the active set and keeps the one
// whose KKT point is primal and dual feasible.
Enumerated enumerate(const Eigen::MatrixXd& h, const Eigen::VectorXd& g,
                     const Eigen::MatrixXd& e, const Eigen::VectorXd& e_rhs,
                     const Eigen::MatrixXd& c, const Eigen::VectorXd& c_rhs) {
  const int n = static_cast<int>(g.size());
  const int ne = static_cast<int>(e.rows());
  const int m = static_cast<int>(c.rows());
  Enumerated best;
  for (int mask = 0; mask < (1 << m); ++mask) {
    std::vector<int> s;
    for (int i = 0; i < m; ++i) {
      if (mask & (1 << i)) s.push_back(i);
    }
    const int k = ne + static_cast<int>(s.size());
    if (k > n) continue;
    Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(n + k, n + k);
    Eigen::VectorXd rhs(n + k);
    kkt.topLeftCorner(n, n) = h;
    rhs.head(n) = -g;
    for (int r = 0; r < ne; ++r) {
      kkt.block(n + r, 0, 1, n) = e.row(r);
      kkt.block(0, n + r, n, 1) = e.row(r).transpose();
      rhs[n + r] = -e_rhs[r];
    }
    for (std::size_t j = 0; j < s.size(); ++j) {
      const int r = n + ne + static_cast<int>(j);
      kkt.block(r, 0, 1, n) = c.row(s[j]);
      kkt.block(0, r, n, 1) = c.row(s[j]).transpose();
      rhs[r] = -c_rhs[s[j]];
    }
    Eigen::FullPivLU<Eigen::MatrixXd> lu(kkt);
    if (!lu.isInvertible()) continue;
    const Eigen::VectorXd sol = lu.solve(rhs);
    const Eigen::VectorXd x = sol.head(n);
    if (m > 0 && (c * x + c_rhs).maxCoeff() > 1e-9) continue;
    Eigen::VectorXd eta = Eigen::VectorXd::Zero(m);
    bool dual_ok = true;
    for (std::size_t j = 0; j < s.size(); ++j) {
      eta[s[j]] = sol[n + ne + static_cast<int>(j)];
      if (eta[s[j]] < -1e-9) dual_ok = false;
    }
    if (!dual_ok) continue;
    best.found = true;
    best.x = x;
    best.pi = sol.segment(n, ne);
    best.eta = eta;
    return best;
  }
  return best;
}

GTEST_TEST(QpTest, UnconstrainedIsNewtonStep) {
  Eigen::MatrixXd h(2, 2);
  h << 4, 1, 1, 3;
  Eigen::VectorXd g(2);
  g << 1, -2;
  const QpSolution sol =
      solve_qp(make_qp(h, g, Eigen::MatrixXd(0, 2), Eigen::VectorXd(0),
                       Eigen::MatrixXd(0, 2), Eigen::VectorXd(0)));
  ASSERT_EQ(sol.status, QpStatus::solved);
  const Eigen::VectorXd expect = -h.ldlt().solve(g);
  EXPECT_LT((sol.dw - expect).norm(), 1e-12);
}

GTEST_TEST(QpTest, HalfspaceProjection) {
  // min ½‖w‖² s.t. w₁ ≥ 1.
  Eigen::MatrixXd c(1, 2);
  c << -1, 0;
  Eigen::VectorXd c_rhs(1);
  c_rhs << 1;
  const QpSolution sol =
      solve_qp(make_qp(Eigen::MatrixXd::Identity(2, 2), Eigen::VectorXd::Zero(2),
                       Eigen::MatrixXd(0, 2), Eigen::VectorXd(0), c, c_rhs));
  ASSERT_EQ(sol.status, QpStatus::solved);
  EXPECT_NEAR(sol.dw[0], 1.0, 1e-12);
  EXPECT_NEAR(sol.dw[1], 0.0, 1e-12);
  EXPECT_NEAR(sol.eta[0], 1.0, 1e-12);
  ASSERT_EQ(sol.active_set.size(), 1u);
  EXPECT_EQ(sol.active_set[0], 0);
}

GTEST_TEST(QpTest, MatchesActiveSetEnumeration) {
  std::mt19937_64 gen(12345);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  std::uniform_int_distribution<int> dim(1, 6);
  int compared = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const int n = dim(gen);
    const int ne = std::uniform_int_distribution<int>(0, std::min(2, n - 1))(gen);
    const int m = std::uniform_int_distribution<int>(0, 4)(gen);
    Eigen::MatrixXd l(n, n);
    for (int i = 0; i < n * n; ++i) l.data()[i] = uni(gen);
    const Eigen::MatrixXd h = l * l.transpose() + 0.1 * Eigen::MatrixXd::Identity(n, n);
    Eigen::VectorXd g(n), xf(n);
    for (int i = 0; i < n; ++i) {
      g[i] = 3.0 * uni(gen);
      xf[i] = uni(gen);
    }
    Eigen::MatrixXd e(ne, n), c(m, n);
    for (int i = 0; i < ne * n; ++i) e.data()[i] = uni(gen);
    for (int i = 0; i < m * n; ++i) c.data()[i] = uni(gen);
    const Eigen::VectorXd e_rhs = -e * xf;
    Eigen::VectorXd c_rhs(m);
    for (int i = 0; i < m; ++i) c_rhs[i] = -c.row(i).dot(xf) - 0.5 * (uni(gen) + 1.0);

    const Enumerated oracle = enumerate(h, g, e, e_rhs, c, c_rhs);
    ASSERT_TRUE(oracle.found) << "trial " << trial;
    const QpSolution sol = solve_qp(make_qp(h, g, e, e_rhs, c, c_rhs));
    ASSERT_EQ(sol.status, QpStatus::solved) << "trial " << trial;
    EXPECT_LT((sol.dw - oracle.x).cwiseAbs().maxCoeff(), 1e-7) << "trial " << trial;
    if (ne > 0) {
      EXPECT_LT((sol.pi - oracle.pi).cwiseAbs().maxCoeff(), 1e-7) << "trial " << trial;
    }
    if (m > 0) {
      EXPECT_LT((sol.eta - oracle.eta).cwiseAbs().maxCoeff(), 1e-7) << "trial " << trial;
    }
    const Eigen::VectorXd r = c * sol.dw + c_rhs;
    for (int i = 0; i < m; ++i) EXPECT_LT(std::abs(sol.eta[i] * r[i]), 1e-8);
    ++compared;
  }
  EXPECT_EQ(compared, 200);
}

GTEST_TEST(QpTest, WarmStartGivesSameAnswer) {
  std::mt19937_64 gen(7);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  const int n = 5, m = 4;
  Eigen::MatrixXd l(n, n), c(m, n);
  for (int i = 0; i < n * n; ++i) l.data()[i] = uni(gen);
  for (int i = 0; i < m * n; ++i) c.data()[i] = uni(gen);
  const Eigen::MatrixXd h = l * l.transpose() + Eigen::MatrixXd::Identity(n, n);
  Eigen::VectorXd g(n);
  for (int i = 0; i < n; ++i) g[i] = 4.0 * uni(gen);
  const Eigen::VectorXd c_rhs = -0.2 * Eigen::VectorXd::Ones(m);
  const QpSubproblem sub = make_qp(h, g, Eigen::MatrixXd(0, n), Eigen::VectorXd(0), c, c_rhs);
  const QpSolution cold = solve_qp(sub);
  ASSERT_EQ(cold.status, QpStatus::solved);
  const QpSolution warm = solve_qp(sub, cold.active_set);
  ASSERT_EQ(warm.status, QpStatus::solved);
  EXPECT_LT((warm.dw - cold.dw).norm(), 1e-10);
  EXPECT_EQ(warm.active_set, cold.active_set);
  // Any stale warm set still converges.
  const QpSolution stale = solve_qp(sub, {0, 1, 2, 3});
  ASSERT_EQ(stale.status, QpStatus::solved);
  EXPECT_LT((stale.dw - cold.dw).norm(), 1e-9);
}

GTEST_TEST(QpTest, Deterministic) {
  Eigen::MatrixXd c(2, 2);
  c << -1, 0, 0, -1;
  Eigen::VectorXd c_rhs(2);
  c_rhs << 1, 0.5;
  const QpSubproblem sub = make_qp(Eigen::MatrixXd::Identity(2, 2), Eigen::VectorXd::Ones(2),
                                   Eigen::MatrixXd(0, 2), Eigen::VectorXd(0), c, c_rhs);
  const QpSolution a = solve_qp(sub);
  const QpSolution b = solve_qp(sub);
  EXPECT_EQ(a.active_set, b.active_set);
  EXPECT_TRUE(a.dw == b.dw);
  EXPECT_TRUE(a.eta == b.eta);
}

GTEST_TEST(QpTest, InfeasibleDetected) {
  // w ≥ 1 and w ≤ −1.
  Eigen::MatrixXd c(2, 1);
  c << -1, 1;
  Eigen::VectorXd c_rhs(2);
  c_rhs << 1, 1;
  const QpSolution sol = solve_qp(make_qp(Eigen::MatrixXd::Identity(1, 1), Eigen::VectorXd::Zero(1),
                                          Eigen::MatrixXd(0, 1), Eigen::VectorXd(0), c, c_rhs));
  EXPECT_EQ(sol.status, QpStatus::infeasible);
}

GTEST_TEST(QpTest, SemidefiniteWithLinearCost) {
  // min w₁² + s s.t. w₁ − s ≤ −1, s ≥ 0. On the active row w₁ = s − 1, so
  // (s − 1)² + s is minimal at s = ½.
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(2, 2);
  h(0, 0) = 2.0;
  Eigen::VectorXd g(2);
  g << 0.0, 1.0;
  Eigen::MatrixXd c(2, 2);
  c << 1, -1, 0, -1;
  Eigen::VectorXd c_rhs(2);
  c_rhs << 1, 0;
  const QpSubproblem sub = make_qp(h, g, Eigen::MatrixXd(0, 2), Eigen::VectorXd(0), c, c_rhs);
  const QpSolution sol = solve_qp(sub);
  ASSERT_EQ(sol.status, QpStatus::solved);
  EXPECT_NEAR(sol.dw[0], -0.5, 1e-9);
  EXPECT_NEAR(sol.dw[1], 0.5, 1e-9);
  EXPECT_NEAR(sol.eta[0], 1.0, 1e-9);
  EXPECT_NEAR(sol.eta[1], 0.0, 1e-9);
  EXPECT_LT(qp_kkt_error(sub, sol), 1e-8);
}

GTEST_TEST(QpTest, IndefiniteReported) {
  Eigen::MatrixXd h(2, 2);
  h << 1, 0, 0, -1;
  const QpSolution sol = solve_qp(make_qp(h, Eigen::VectorXd::Ones(2), Eigen::MatrixXd(0, 2),
                                          Eigen::VectorXd(0), Eigen::MatrixXd(0, 2),
                                          Eigen::VectorXd(0)));
  EXPECT_EQ(sol.status, QpStatus::indefinite);
}

GTEST_TEST(QpTest, RegularizeAddsDiagonal) {
  Eigen::MatrixXd h(2, 2);
  h << 1, 2, 2, 1;  // eigenvalues 3, −1
  QpSubproblem sub = make_qp(h, Eigen::VectorXd::Ones(2), Eigen::MatrixXd(0, 2), Eigen::VectorXd(0),
                             Eigen::MatrixXd(0, 2), Eigen::VectorXd(0));
  const QpSubproblem same = regularize(sub, 0.0);
  EXPECT_TRUE(Eigen::MatrixXd(same.hess) == h);
  const double a = -Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(h).eigenvalues().minCoeff();
  const QpSubproblem reg = regularize(sub, a + 1e-6);
  const double lo =
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(Eigen::MatrixXd(reg.hess)).eigenvalues().minCoeff();
  EXPECT_GT(lo, 0.0);
  EXPECT_EQ(solve_qp(reg).status, QpStatus::solved);
}

GTEST_TEST(QpTest, RegularizedSolutionConverges) {
  Eigen::MatrixXd h(2, 2);
  h << 2, 0.5, 0.5, 1;
  Eigen::VectorXd g(2);
  g << -1, 1;
  Eigen::MatrixXd c(1, 2);
  c << 1, 1;
  Eigen::VectorXd c_rhs(1);
  c_rhs << 0.2;
  const QpSubproblem sub = make_qp(h, g, Eigen::MatrixXd(0, 2), Eigen::VectorXd(0), c, c_rhs);
  const Eigen::VectorXd exact = solve_qp(sub).dw;
  double prev = std::numeric_limits<double>::infinity();
  for (double delta : {1e-2, 1e-4, 1e-6}) {
    const double err = (solve_qp(regularize(sub, delta)).dw - exact).norm();
    EXPECT_LT(err, prev);
    prev = err;
  }
  EXPECT_LT(prev, 1e-5);
}

GTEST_TEST(QpTest, DumpRoundTrip) {
  Eigen::MatrixXd c(1, 2);
  c << 1, -1;
  const QpSubproblem sub = make_qp(Eigen::MatrixXd::Identity(2, 2), Eigen::VectorXd::Ones(2),
                                   Eigen::MatrixXd::Ones(1, 2), Eigen::VectorXd::Constant(1, 0.3), c,
                                   Eigen::VectorXd::Constant(1, -0.1));
  std::stringstream ss;
  write_qp(ss, sub);
  const QpSubproblem back = read_qp(ss);
  EXPECT_TRUE(Eigen::MatrixXd(back.hess) == Eigen::MatrixXd(sub.hess));
  EXPECT_TRUE(Eigen::MatrixXd(back.ineq_jac) == Eigen::MatrixXd(sub.ineq_jac));
  EXPECT_TRUE(back.eq_rhs == sub.eq_rhs);
  EXPECT_TRUE(back.grad == sub.grad);
}

GTEST_TEST(QpTest, RejectsAsymmetricHessian) {
  Eigen::MatrixXd h(2, 2);
  h << 1, 1, 0, 1;
  EXPECT_THROW(solve_qp(make_qp(h, Eigen::VectorXd::Ones(2), Eigen::MatrixXd(0, 2), Eigen::VectorXd(0),
                                Eigen::MatrixXd(0, 2), Eigen::VectorXd(0))),
               std::invalid_argument);
}

}  // namespace
}  // namespace tdo
