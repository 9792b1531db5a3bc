#pragma once

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "tdo/lp.hpp"
#include "tdo/polytope.hpp"
#include "tdo/riccati.hpp"

namespace tdo {

/// max rowᵀξ over the polytope ≤ offset? The origin must be feasible.
inline bool lp_redundancy_check(const Polytope& poly, const Eigen::VectorXd& row, double offset,
                                double tol = 1e-12) {
  if (poly.rows() == 0) return false;
  if (row.size() != poly.dim()) throw std::invalid_argument("lp_redundancy_check: dimension");
  const LpResult lp = lp_maximize(row, poly.a_mat, poly.b_vec, Eigen::VectorXd::Zero(poly.dim()));
  if (lp.status != LpStatus::optimal) return false;
  return lp.value <= offset + tol * std::max(1.0, std::abs(offset));
}

struct MasResult {
  Polytope set;
  bool certified = false;
  int iterations = 0;  // t*: largest power of A_cl whose rows were examined
  std::vector<Polytope> history;  // set after each iteration
};

/// O_∞ = {ξ : C A_cl^t ξ ≤ c, t ≥ 0} for the stacked constraints, built by
/// appending rows of C A_cl^t that are not already implied, until a whole
/// iteration adds nothing (certified) or the cap is hit.
inline MasResult max_admissible_set(const Eigen::MatrixXd& a_cl, const Polytope& state_constraints,
                                    const Polytope& input_constraints, int cap = 500,
                                    bool keep_history = false) {
  const int n = static_cast<int>(a_cl.rows());
  if (a_cl.cols() != n) throw std::invalid_argument("max_admissible_set: A_cl must be square");
  if ((state_constraints.rows() > 0 && state_constraints.dim() != n) ||
      (input_constraints.rows() > 0 && input_constraints.dim() != n)) {
    throw std::invalid_argument("max_admissible_set: constraint dimension");
  }
  if (spectral_radius(a_cl) >= 1.0) {
    throw std::invalid_argument("max_admissible_set: A_cl is not Schur stable");
  }
  const int m0 = state_constraints.rows() + input_constraints.rows();
  if (m0 == 0) throw std::invalid_argument("max_admissible_set: no constraints");
  Polytope y;
  y.a_mat.resize(m0, n);
  y.b_vec.resize(m0);
  if (state_constraints.rows() > 0) {
    y.a_mat.topRows(state_constraints.rows()) = state_constraints.a_mat;
    y.b_vec.head(state_constraints.rows()) = state_constraints.b_vec;
  }
  if (input_constraints.rows() > 0) {
    y.a_mat.bottomRows(input_constraints.rows()) = input_constraints.a_mat;
    y.b_vec.tail(input_constraints.rows()) = input_constraints.b_vec;
  }
  if (!(y.b_vec.array() > 0.0).all()) {
    throw std::invalid_argument("max_admissible_set: origin must be interior to the constraints");
  }
  y = y.normalized();

  // Start from the non-redundant subset of the constraint rows themselves.
  MasResult res;
  std::vector<Eigen::VectorXd> rows;
  std::vector<double> offs;
  auto current = [&]() {
    Polytope p;
    p.a_mat.resize(static_cast<Eigen::Index>(rows.size()), n);
    p.b_vec.resize(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
      p.a_mat.row(static_cast<Eigen::Index>(i)) = rows[i].transpose();
      p.b_vec[static_cast<Eigen::Index>(i)] = offs[i];
    }
    return p;
  };
  auto try_add = [&](Eigen::VectorXd r, double off) {
    const double nr = r.norm();
    if (nr == 0.0) {
      if (off < 0.0) throw std::runtime_error("max_admissible_set: empty set");
      return false;
    }
    r /= nr;
    off /= nr;
    if (!rows.empty() && lp_redundancy_check(current(), r, off)) return false;
    rows.push_back(r);
    offs.push_back(off);
    return true;
  };
  for (int i = 0; i < y.rows(); ++i) try_add(y.a_mat.row(i).transpose(), y.b_vec[i]);
  if (keep_history) res.history.push_back(current());

  Eigen::MatrixXd power = a_cl;
  for (int t = 1; t <= cap; ++t) {
    res.iterations = t;
    bool added = false;
    for (int i = 0; i < y.rows(); ++i) {
      const Eigen::VectorXd r = (y.a_mat.row(i) * power).transpose();
      added = try_add(r, y.b_vec[i]) || added;
    }
    if (keep_history) res.history.push_back(current());
    if (!added) {
      res.certified = true;
      break;
    }
    power = (power * a_cl).eval();
  }

  // Final clean-up: drop rows implied by all the others.
  for (std::size_t i = rows.size(); i-- > 0;) {
    std::vector<Eigen::VectorXd> r2 = rows;
    std::vector<double> o2 = offs;
    r2.erase(r2.begin() + static_cast<long>(i));
    o2.erase(o2.begin() + static_cast<long>(i));
    Polytope rest;
    rest.a_mat.resize(static_cast<Eigen::Index>(r2.size()), n);
    rest.b_vec.resize(static_cast<Eigen::Index>(r2.size()));
    for (std::size_t j = 0; j < r2.size(); ++j) {
      rest.a_mat.row(static_cast<Eigen::Index>(j)) = r2[j].transpose();
      rest.b_vec[static_cast<Eigen::Index>(j)] = o2[j];
    }
    if (lp_redundancy_check(rest, rows[i], offs[i])) {
      rows = std::move(r2);
      offs = std::move(o2);
    }
  }
  res.set = current();
  return res;
}

/// Constraints |(−K ξ)_j| bounds rewritten as rows in ξ: u_lb ≤ −K ξ ≤ u_ub.
inline Polytope gain_mapped_input_constraints(const Eigen::MatrixXd& k, const Eigen::VectorXd& u_lb,
                                              const Eigen::VectorXd& u_ub) {
  const Eigen::Index nu = k.rows();
  Polytope p;
  p.a_mat.resize(2 * nu, k.cols());
  p.b_vec.resize(2 * nu);
  for (Eigen::Index j = 0; j < nu; ++j) {
    p.a_mat.row(2 * j) = -k.row(j);
    p.b_vec[2 * j] = u_ub[j];
    p.a_mat.row(2 * j + 1) = k.row(j);
    p.b_vec[2 * j + 1] = -u_lb[j];
  }
  return p;
}

/// Points on the boundary of a bounded polytope that contains the origin,
/// found along random rays from the origin.
inline std::vector<Eigen::VectorXd> sample_boundary(const Polytope& poly, int count,
                                                    std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  std::vector<Eigen::VectorXd> pts;
  pts.reserve(static_cast<std::size_t>(count));
  const int n = poly.dim();
  while (static_cast<int>(pts.size()) < count) {
    Eigen::VectorXd d(n);
    for (int i = 0; i < n; ++i) d[i] = uni(gen);
    if (d.norm() < 1e-3) continue;
    const Eigen::VectorXd ad = poly.a_mat * d;
    double t = std::numeric_limits<double>::infinity();
    for (int r = 0; r < poly.rows(); ++r) {
      if (ad[r] > 0.0) t = std::min(t, poly.b_vec[r] / ad[r]);
    }
    if (!std::isfinite(t)) throw std::runtime_error("sample_boundary: polytope is unbounded");
    pts.push_back(t * d);
  }
  return pts;
}

struct InvarianceReport {
  int samples = 0;
  int invariance_violations = 0;
  int admissibility_violations = 0;
  double worst_margin = -std::numeric_limits<double>::infinity();

  bool ok() const { return invariance_violations == 0 && admissibility_violations == 0; }
};

/// Samples boundary points and interior points on the same rays, and checks
/// A_f(A_cl ξ) ≤ b_f and the original constraints at each.
inline InvarianceReport check_invariance(const Polytope& set, const Eigen::MatrixXd& a_cl,
                                         const Polytope& state_constraints,
                                         const Polytope& input_constraints, int count,
                                         std::uint64_t seed, double tol = 1e-9) {
  InvarianceReport rep;
  std::mt19937_64 gen(seed ^ 0x9e3779b97f4a7c15ULL);
  std::uniform_real_distribution<double> frac(0.0, 1.0);
  const std::vector<Eigen::VectorXd> pts = sample_boundary(set, count, seed);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    // Alternate boundary points with interior points on the same ray.
    const Eigen::VectorXd p = (i % 2 == 0) ? pts[i] : Eigen::VectorXd(frac(gen) * pts[i]);
    ++rep.samples;
    const double inv = set.max_violation(a_cl * p);
    rep.worst_margin = std::max(rep.worst_margin, inv);
    if (inv > tol) ++rep.invariance_violations;
    const double adm = std::max(state_constraints.max_violation(p), input_constraints.max_violation(p));
    if (adm > tol) ++rep.admissibility_violations;
  }
  return rep;
}

}  // namespace tdo
