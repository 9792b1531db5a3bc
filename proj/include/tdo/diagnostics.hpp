#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "tdo/ocp.hpp"
#include "tdo/simulation.hpp"
#include "tdo/sqp.hpp"

namespace tdo {

// ---------------------------------------------------------------------------
// Rate fits

struct RateFit {
  double q_hat = 1.0;      // fitted order, clamped to ≥ 1
  double slope = 1.0;      // raw regression slope
  double eta_hat = 0.0;
  double eps_hat = 0.0;    // largest radius at which every trial contracted
  double r_squared = 0.0;
  int sample_count = 0;
  int trials = 0;
};

struct RatePair {
  double e0 = 0.0;
  double e1 = 0.0;
};

/// Least squares log e1 = log η + q log e0. When the slope falls below 1 the
/// order is clamped to 1 and η refitted with that slope.
inline RateFit fit_rate_pairs(const std::vector<RatePair>& pairs, double floor = 1e-10) {
  std::vector<double> lx, ly;
  for (const RatePair& p : pairs) {
    if (p.e0 > 0.0 && p.e1 > floor && std::isfinite(p.e1)) {
      lx.push_back(std::log(p.e0));
      ly.push_back(std::log(p.e1));
    }
  }
  RateFit fit;
  fit.sample_count = static_cast<int>(lx.size());
  fit.trials = static_cast<int>(pairs.size());
  if (fit.sample_count < 10) throw std::runtime_error("fit_rate: fewer than 10 valid samples");
  const double n = static_cast<double>(lx.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    mx += lx[i];
    my += ly[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
    syy += (ly[i] - my) * (ly[i] - my);
  }
  if (sxx <= 0.0) throw std::runtime_error("fit_rate: perturbation radii are all equal");
  fit.slope = sxy / sxx;
  double intercept = my - fit.slope * mx;
  fit.q_hat = fit.slope;
  if (fit.q_hat < 1.0) {
    fit.q_hat = 1.0;
    intercept = my - mx;
  }
  fit.eta_hat = std::exp(intercept);
  double ss_res = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    const double r = ly[i] - (intercept + fit.q_hat * lx[i]);
    ss_res += r * r;
  }
  fit.r_squared = syy > 0.0 ? 1.0 - ss_res / syy : 1.0;
  return fit;
}

inline std::vector<double> default_fit_radii() { return {1e-6, 3e-6, 1e-5, 3e-5, 1e-4, 3e-4, 1e-3, 3e-3, 1e-2, 3e-2}; }

/// Gauss-Newton to tolerance (exact Hessian if that stalls), then a few
/// exact-Hessian polishing steps so the point can serve as z* for error
/// measurements well below kkt_tol.
inline SolveResult solve_oracle(std::shared_ptr<const OcpInstance> inst, const Eigen::VectorXd& x,
                                const PrimalDualPoint& z0, const std::vector<int>& warm = {}) {
  SqpConfig gn;
  SqpEngine eng(inst, gn);
  SqpConfig jn;
  jn.mode.kind = HessianKind::josephy_newton;
  SqpEngine polish(inst, jn);
  SolveResult res = eng.solve_to_tolerance(z0, x, warm);
  if (!res.converged()) res = polish.solve_to_tolerance(z0, x, warm);
  if (!res.converged()) return res;
  EqLinearization lin = inst->linearize_eq(res.z.w, x);
  for (int i = 0; i < 4; ++i) {
    PrimalDualPoint z = res.z;
    std::vector<int> set = res.active_set;
    const StepReport rep = polish.td_step(z, x, lin, set);
    if (!rep.ok() || !(rep.pi_after < res.residual)) break;
    res.z = z;
    res.active_set = set;
    res.residual = rep.pi_after;
  }
  return res;
}

struct RateExperiment {
  RateFit fit;
  std::vector<RatePair> pairs;
  std::vector<double> radii;  // radius used for each pair
};

/// Number of unrecorded steps before the measured one. A Gauss-Newton step
/// ignores the incoming λ, v and rebuilds them from w, so its contraction is
/// only visible from points whose multipliers came out of such a step; the
/// second step lets the error settle onto the slow linear mode.
inline int default_burn_in(HessianKind kind) { return kind == HessianKind::gauss_newton ? 2 : 0; }

/// Perturbs z* at each radius in turn (round robin over `trials` draws),
/// runs `burn_in` unrecorded steps, then one measured step of T, and
/// regresses the error pairs. burn_in < 0 picks default_burn_in(mode).
inline RateExperiment fit_rate(std::shared_ptr<const OcpInstance> inst, const Eigen::VectorXd& x,
                               const HessianMode& mode, const std::vector<double>& radii,
                               int trials, std::uint64_t seed, const SolveResult* oracle = nullptr,
                               int burn_in = -1) {
  if (radii.empty() || trials < 1) throw std::invalid_argument("fit_rate: need radii and trials");
  if (burn_in < 0) burn_in = default_burn_in(mode.kind);
  SolveResult star = oracle ? *oracle : solve_oracle(inst, x, inst->zero_point());
  if (!star.converged()) throw std::runtime_error("fit_rate: oracle solve failed");
  SqpConfig cfg;
  cfg.mode = mode;
  SqpEngine eng(inst, cfg);
  GaussianRng rng(seed);
  RateExperiment ex;
  std::vector<int> bad(radii.size(), 0);
  const Eigen::VectorXd zs = star.z.stacked();
  const Eigen::Index nw = star.z.w.size(), nl = star.z.lam.size(), nv = star.z.v.size();
  for (int t = 0; t < trials; ++t) {
    const std::size_t ri = static_cast<std::size_t>(t) % radii.size();
    Eigen::VectorXd dir(zs.size());
    for (Eigen::Index i = 0; i < dir.size(); ++i) dir[i] = rng.normal();
    dir *= radii[ri] / dir.norm();
    PrimalDualPoint z = PrimalDualPoint::unstack(zs + dir, nw, nl, nv);
    z.v = z.v.cwiseMax(0.0);
    std::vector<int> warm = star.active_set;
    bool ok = true;
    for (int b = 0; b < burn_in && ok; ++b) ok = eng.td_step(z, x, warm).ok();
    const double e0 = z.distance(star.z);
    ok = ok && eng.td_step(z, x, warm).ok();
    const double e1 = ok ? z.distance(star.z) : std::numeric_limits<double>::infinity();
    if (!(e1 < e0)) ++bad[ri];
    ex.pairs.push_back({e0, e1});
    ex.radii.push_back(radii[ri]);
  }
  ex.fit = fit_rate_pairs(ex.pairs);
  double eps = 0.0;
  for (std::size_t i = 0; i < radii.size(); ++i) {
    if (bad[i] == 0) eps = std::max(eps, radii[i]);
  }
  ex.fit.eps_hat = eps;
  return ex;
}

// ---------------------------------------------------------------------------
// Gains

struct IssGains {
  std::vector<int> ells;
  std::vector<double> a_of_ell, theta_of_ell, sigma_of_ell, tau_of_ell;
  double b_hat = 0.0;
  bool valid = true;  // a strictly decreasing and inside (0, 1)
};

class HypothesisViolated : public std::runtime_error {
 public:
  explicit HypothesisViolated(const std::string& what) : std::runtime_error(what) {}
};

/// a(ℓ) = η^ℓ (q = 1) or (η ε^{q−1})^{(q^ℓ − 1)/(q − 1)} (q > 1);
/// θ = b·a, σ = θ/(1 − a), τ = ½(σ + b)^{−1}.
inline double gain_a(double q, double eta, double eps, int ell) {
  if (q == 1.0) return std::pow(eta, ell);
  return std::pow(eta * std::pow(eps, q - 1.0), (std::pow(q, ell) - 1.0) / (q - 1.0));
}

inline IssGains compute_gains(double q, double eta, double eps, double b_hat, const std::vector<int>& ells) {
  if (q < 1.0) throw std::invalid_argument("compute_gains: q must be >= 1");
  if (!(eta > 0.0) || eps < 0.0 || b_hat < 0.0) throw std::invalid_argument("compute_gains: bad constants");
  const double base = q == 1.0 ? eta : eta * std::pow(eps, q - 1.0);
  if (!(base < 1.0)) throw HypothesisViolated("compute_gains: eta*eps^(q-1) >= 1");
  IssGains g;
  g.b_hat = b_hat;
  for (int ell : ells) {
    if (ell < 1) throw std::invalid_argument("compute_gains: ell must be >= 1");
    const double a = gain_a(q, eta, eps, ell);
    const double theta = b_hat * a;
    const double sigma = theta / (1.0 - a);
    g.ells.push_back(ell);
    g.a_of_ell.push_back(a);
    g.theta_of_ell.push_back(theta);
    g.sigma_of_ell.push_back(sigma);
    g.tau_of_ell.push_back(0.5 / (sigma + b_hat));
  }
  for (std::size_t i = 0; i < g.a_of_ell.size(); ++i) {
    if (!(g.a_of_ell[i] > 0.0 && g.a_of_ell[i] < 1.0)) g.valid = false;
    if (i > 0 && !(g.a_of_ell[i] < g.a_of_ell[i - 1])) g.valid = false;
  }
  return g;
}

inline IssGains compute_gains(const RateFit& fit, double b_hat, const std::vector<int>& ells) {
  return compute_gains(fit.q_hat, fit.eta_hat, fit.eps_hat, b_hat, ells);
}

// ---------------------------------------------------------------------------
// Solution-map Lipschitz constant

struct LipschitzEstimate {
  double b_hat = 0.0;
  std::vector<double> ratios;
  bool refused = false;
  std::string reason;
};

/// Max over consecutive pairs of ‖z*(x_{j+1}) − z*(x_j)‖ / ‖x_{j+1} − x_j‖,
/// following one branch by warm-starting each solve from the previous one.
inline LipschitzEstimate estimate_solution_lipschitz(std::shared_ptr<const OcpInstance> inst,
                                                     const std::vector<Eigen::VectorXd>& xs,
                                                     double jump_factor = 20.0) {
  LipschitzEstimate est;
  if (xs.size() < 2) {
    est.refused = true;
    est.reason = "need at least two parameter samples";
    return est;
  }
  bool any_length = false;
  for (std::size_t j = 1; j < xs.size(); ++j) {
    if ((xs[j] - xs[j - 1]).norm() > 0.0) any_length = true;
  }
  if (!any_length) {
    est.refused = true;
    est.reason = "zero-length segment";
    est.ratios.assign(xs.size() - 1, 0.0);
    return est;
  }
  SolveResult prev = solve_oracle(inst, xs[0], inst->zero_point());
  if (!prev.converged()) {
    est.refused = true;
    est.reason = "oracle failed at the first sample";
    return est;
  }
  for (std::size_t j = 1; j < xs.size(); ++j) {
    const SolveResult cur = solve_oracle(inst, xs[j], prev.z, prev.active_set);
    if (!cur.converged()) {
      est.refused = true;
      est.reason = "oracle failed at sample " + std::to_string(j);
      return est;
    }
    const double dx = (xs[j] - xs[j - 1]).norm();
    const double ratio = dx > 0.0 ? cur.z.distance(prev.z) / dx : 0.0;
    if (est.ratios.size() >= 2 && est.b_hat > 0.0 && ratio > jump_factor * est.b_hat) {
      est.refused = true;
      est.reason = "branch jump at sample " + std::to_string(j);
      return est;
    }
    est.ratios.push_back(ratio);
    est.b_hat = std::max(est.b_hat, ratio);
    prev = cur;
  }
  return est;
}

// ---------------------------------------------------------------------------
// Small-gain surrogate

struct SmallGainResult {
  bool satisfied = false;
  int ell_star = 0;  // first tabulated ℓ passing, 0 if none
  std::vector<double> products;
  std::string note = "gamma3 approximated by a linear slope fitted from simulation";
};

/// ‖Ξ‖·σ(ℓ)·γ₃ ≤ 1 per tabulated ℓ.
inline SmallGainResult small_gain_check(const IssGains& g, double xi_norm, double gamma3_slope) {
  SmallGainResult r;
  for (std::size_t i = 0; i < g.ells.size(); ++i) {
    const double p = xi_norm * g.sigma_of_ell[i] * gamma3_slope;
    r.products.push_back(p);
    if (!r.satisfied && p <= 1.0) {
      r.satisfied = true;
      r.ell_star = g.ells[i];
    }
  }
  return r;
}

struct Gamma3Estimate {
  double slope = 0.0;
  std::vector<double> du;
  std::vector<double> dx;
};

/// Injects a constant input offset of each magnitude into the RTI loop at the
/// origin (no wind) and regresses the peak state deviation through zero.
inline Gamma3Estimate estimate_gamma3_slope(const Benchmark& bm, const std::vector<double>& magnitudes,
                                            int steps = 100) {
  Gamma3Estimate est;
  SqpConfig cfg;
  double sxy = 0.0, sxx = 0.0;
  for (double mag : magnitudes) {
    TdoController ctrl(bm.instance, cfg);
    ctrl.reset(bm.instance->origin_kkt_point());
    PlantState x = PlantState::Zero();
    Input offset = Input::Constant(mag / std::sqrt(2.0));
    double peak = 0.0;
    for (int k = 0; k < steps; ++k) {
      const ControlOutput out = ctrl.control(Eigen::VectorXd(x));
      Input u = Input(out.u) + offset;
      x = step<double>(x, u, 0.0, bm.dynamics->params());
      peak = std::max(peak, x.norm());
    }
    est.du.push_back(mag);
    est.dx.push_back(peak);
    sxy += mag * peak;
    sxx += mag * mag;
  }
  est.slope = sxx > 0.0 ? sxy / sxx : 0.0;
  return est;
}

// ---------------------------------------------------------------------------
// Regularity monitors

struct LicqReport {
  int deficiency = 0;
  int rank = 0;
  int rows = 0;
  std::vector<int> active_set;
};

inline Eigen::MatrixXd normalized_rows(Eigen::MatrixXd m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    const double n = m.row(r).norm();
    if (n > 0.0) m.row(r) /= n;
  }
  return m;
}

/// Rank of [∇g; active rows of ∇h] with A(w) = {i : h_i(w) ≥ −tol}.
inline LicqReport licq_monitor(const OcpInstance& inst, const PrimalDualPoint& z, const Eigen::VectorXd& x,
                               double tol = 1e-6) {
  inst.check_point(z);
  LicqReport rep;
  const Eigen::VectorXd h = inst.ineq_values(z.w);
  for (int i = 0; i < inst.n_ineq(); ++i) {
    if (h[i] >= -tol) rep.active_set.push_back(i);
  }
  const EqLinearization lin = inst.linearize_eq(z.w, x);
  const Eigen::MatrixXd jh = Eigen::MatrixXd(inst.ineq_jacobian());
  Eigen::MatrixXd m(inst.n_eq() + static_cast<Eigen::Index>(rep.active_set.size()), inst.n_w());
  m.topRows(inst.n_eq()) = Eigen::MatrixXd(lin.jac);
  for (std::size_t k = 0; k < rep.active_set.size(); ++k) {
    m.row(inst.n_eq() + static_cast<Eigen::Index>(k)) = jh.row(rep.active_set[k]);
  }
  m = normalized_rows(m);
  rep.rows = static_cast<int>(m.rows());
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(m.transpose());
  qr.setThreshold(1e-10);
  rep.rank = static_cast<int>(qr.rank());
  rep.deficiency = rep.rows - rep.rank;
  return rep;
}

/// Same check on an explicit row stack (used for constructed cases).
inline int rank_deficiency(const Eigen::MatrixXd& rows, double threshold = 1e-10) {
  const Eigen::MatrixXd m = normalized_rows(rows);
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(m.transpose());
  qr.setThreshold(threshold);
  return static_cast<int>(m.rows() - qr.rank());
}

struct SsoscReport {
  double min_eigenvalue = 0.0;
  int null_dim = 0;
  int strongly_active = 0;
};

/// Smallest eigenvalue of ZᵀHZ, Z a basis of the null space of ∇g and the
/// strongly active rows (h_i ≥ −tol and v_i > tol).
inline SsoscReport reduced_hessian_min_eig(const Eigen::MatrixXd& hess, const Eigen::MatrixXd& constraint_rows) {
  SsoscReport rep;
  const Eigen::Index n = hess.rows();
  Eigen::MatrixXd z;
  if (constraint_rows.rows() == 0) {
    z = Eigen::MatrixXd::Identity(n, n);
  } else {
    const Eigen::MatrixXd at = normalized_rows(constraint_rows).transpose();
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(at);
    qr.setThreshold(1e-10);
    const Eigen::Index r = qr.rank();
    const Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(n, n);
    z = q.rightCols(n - r);
  }
  rep.null_dim = static_cast<int>(z.cols());
  if (z.cols() == 0) {
    rep.min_eigenvalue = std::numeric_limits<double>::infinity();
    return rep;
  }
  const Eigen::MatrixXd red = z.transpose() * hess * z;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (red + red.transpose()), Eigen::EigenvaluesOnly);
  rep.min_eigenvalue = es.eigenvalues().minCoeff();
  return rep;
}

inline SsoscReport ssosc_monitor(const OcpInstance& inst, const PrimalDualPoint& z, const Eigen::VectorXd& x,
                                 const SparseMat& hess, double tol = 1e-6) {
  inst.check_point(z);
  const Eigen::VectorXd h = inst.ineq_values(z.w);
  std::vector<int> strong;
  for (int i = 0; i < inst.n_ineq(); ++i) {
    if (h[i] >= -tol && z.v[i] > tol) strong.push_back(i);
  }
  const EqLinearization lin = inst.linearize_eq(z.w, x);
  const Eigen::MatrixXd jh = Eigen::MatrixXd(inst.ineq_jacobian());
  Eigen::MatrixXd m(inst.n_eq() + static_cast<Eigen::Index>(strong.size()), inst.n_w());
  m.topRows(inst.n_eq()) = Eigen::MatrixXd(lin.jac);
  for (std::size_t k = 0; k < strong.size(); ++k) {
    m.row(inst.n_eq() + static_cast<Eigen::Index>(k)) = jh.row(strong[k]);
  }
  SsoscReport rep = reduced_hessian_min_eig(Eigen::MatrixXd(hess), m);
  rep.strongly_active = static_cast<int>(strong.size());
  return rep;
}

}  // namespace tdo
