#pragma once

#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"
#include "tdo/benchmark.hpp"
#include "tdo/simulation.hpp"

namespace tdo {

class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// Everything a run needs. JSON layout, all keys optional:
///   {"vehicle": {m, izz, lf, lr, mu, b_tire, c_tire, area, rho, cd, s_long, ts},
///    "ocp": {horizon, q_diag, r_diag, x_lb, x_ub, u_lb, u_ub, soft_indices,
///            penalty_rho, use_terminal_set, terminal_set_prefix, mas_cap},
///    "sqp": {mode, ell, rho_aug, fd_step, reg_delta_floor, kkt_tol,
///            max_solve_iter, stop_tol},
///    "scenario": {x0, steps, seed, gust_mean, gust_std, disturbance_on,
///                 controller, init, compute_error, abort_on_failure}}
/// Angles are in radians. Unknown keys are rejected. controller "rti" is
/// "tdo" with the Gauss-Newton Hessian and ℓ = 1.
struct RunConfig {
  BenchmarkOptions bench;
  ScenarioConfig scenario;
};

inline void validate_config(const RunConfig& rc);

namespace detail {

using json = nlohmann::json;

inline void reject_unknown(const json& obj, const std::string& section, const std::set<std::string>& keys) {
  if (!obj.is_object()) throw ConfigError("config: section '" + section + "' must be an object");
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (!keys.count(it.key())) throw ConfigError("config: unknown key '" + section + "." + it.key() + "'");
  }
}

template <class T>
void read(const json& obj, const char* key, T& out) {
  if (!obj.contains(key)) return;
  try {
    out = obj.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: bad value for '") + key + "': " + e.what());
  }
}

inline void read_vec(const json& obj, const char* key, Eigen::VectorXd& out, Eigen::Index size) {
  if (!obj.contains(key)) return;
  std::vector<double> v;
  read(obj, key, v);
  if (static_cast<Eigen::Index>(v.size()) != size) {
    throw ConfigError(std::string("config: '") + key + "' needs " + std::to_string(size) + " entries");
  }
  out = Eigen::Map<const Eigen::VectorXd>(v.data(), size);
}

inline void read_diag(const json& obj, const char* key, Eigen::MatrixXd& out, Eigen::Index size) {
  if (!obj.contains(key)) return;
  Eigen::VectorXd d;
  read_vec(obj, key, d, size);
  out = d.asDiagonal();
}

}  // namespace detail

inline ControllerKind parse_controller(const std::string& s) {
  if (s == "rti" || s == "tdo") return ControllerKind::tdo;
  if (s == "optimal") return ControllerKind::optimal;
  if (s == "lqr") return ControllerKind::lqr;
  throw ConfigError("unknown controller '" + s + "' (rti, tdo, optimal, lqr)");
}

inline RunConfig parse_config(const std::string& text) {
  using detail::json;
  json root;
  try {
    root = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: invalid JSON: ") + e.what());
  }
  RunConfig rc;
  detail::reject_unknown(root, "<root>", {"vehicle", "ocp", "sqp", "scenario"});

  if (root.contains("vehicle")) {
    const json& v = root["vehicle"];
    detail::reject_unknown(v, "vehicle",
                           {"m", "izz", "lf", "lr", "mu", "b_tire", "c_tire", "area", "rho", "cd", "s_long", "ts"});
    VehicleParams& p = rc.bench.vehicle;
    detail::read(v, "m", p.m);
    detail::read(v, "izz", p.izz);
    detail::read(v, "lf", p.lf);
    detail::read(v, "lr", p.lr);
    detail::read(v, "mu", p.mu);
    detail::read(v, "b_tire", p.b_tire);
    detail::read(v, "c_tire", p.c_tire);
    detail::read(v, "area", p.area);
    detail::read(v, "rho", p.rho);
    detail::read(v, "cd", p.cd);
    detail::read(v, "s_long", p.s_long);
    detail::read(v, "ts", p.ts);
  }
  if (root.contains("ocp")) {
    const json& o = root["ocp"];
    detail::reject_unknown(o, "ocp",
                           {"horizon", "q_diag", "r_diag", "x_lb", "x_ub", "u_lb", "u_ub", "soft_indices",
                            "penalty_rho", "use_terminal_set", "terminal_set_prefix", "mas_cap"});
    BenchmarkOptions& b = rc.bench;
    detail::read(o, "horizon", b.horizon);
    detail::read_diag(o, "q_diag", b.q_weight, kStateDim);
    detail::read_diag(o, "r_diag", b.r_weight, kInputDim);
    detail::read_vec(o, "x_lb", b.x_lb, kStateDim);
    detail::read_vec(o, "x_ub", b.x_ub, kStateDim);
    detail::read_vec(o, "u_lb", b.u_lb, kInputDim);
    detail::read_vec(o, "u_ub", b.u_ub, kInputDim);
    detail::read(o, "soft_indices", b.soft_indices);
    detail::read(o, "penalty_rho", b.penalty_rho);
    detail::read(o, "use_terminal_set", b.use_terminal_set);
    detail::read(o, "terminal_set_prefix", b.terminal_set_prefix);
    detail::read(o, "mas_cap", b.mas_cap);
  }
  if (root.contains("sqp")) {
    const json& s = root["sqp"];
    detail::reject_unknown(s, "sqp",
                           {"mode", "ell", "rho_aug", "fd_step", "reg_delta_floor", "kkt_tol", "max_solve_iter",
                            "stop_tol"});
    SqpConfig& q = rc.scenario.sqp;
    std::string mode;
    detail::read(s, "mode", mode);
    if (!mode.empty()) {
      try {
        q.mode.kind = parse_hessian_kind(mode);
      } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
      }
    }
    detail::read(s, "ell", q.ell);
    detail::read(s, "rho_aug", q.mode.rho_aug);
    detail::read(s, "fd_step", q.mode.fd_step);
    detail::read(s, "reg_delta_floor", q.reg_delta_floor);
    detail::read(s, "kkt_tol", q.kkt_tol);
    detail::read(s, "max_solve_iter", q.max_solve_iter);
    detail::read(s, "stop_tol", q.stop_tol);
  }
  if (root.contains("scenario")) {
    const json& s = root["scenario"];
    detail::reject_unknown(s, "scenario",
                           {"x0", "steps", "seed", "gust_mean", "gust_std", "disturbance_on", "controller", "init",
                            "compute_error", "abort_on_failure"});
    ScenarioConfig& c = rc.scenario;
    Eigen::VectorXd x0 = c.x0;
    detail::read_vec(s, "x0", x0, kStateDim);
    c.x0 = x0;
    detail::read(s, "steps", c.steps);
    detail::read(s, "seed", c.seed);
    detail::read(s, "gust_mean", c.gust_mean);
    detail::read(s, "gust_std", c.gust_std);
    detail::read(s, "disturbance_on", c.disturbance_on);
    std::string ctrl, init;
    detail::read(s, "controller", ctrl);
    if (!ctrl.empty()) c.controller = parse_controller(ctrl);
    if (ctrl == "rti") {
      c.sqp.mode.kind = HessianKind::gauss_newton;
      c.sqp.ell = 1;
    }
    detail::read(s, "init", init);
    if (!init.empty()) {
      try {
        c.init = parse_init_strategy(init);
      } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
      }
    }
    detail::read(s, "compute_error", c.compute_error);
    detail::read(s, "abort_on_failure", c.abort_on_failure);
  }
  validate_config(rc);
  return rc;
}

/// Range checks that can be made without building the OCP.
inline void validate_config(const RunConfig& rc) {
  try {
    rc.bench.vehicle.validate();
    rc.scenario.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (rc.bench.horizon < 1) throw ConfigError("config: ocp.horizon must be >= 1");
  if (!(rc.bench.penalty_rho > 0.0)) throw ConfigError("config: ocp.penalty_rho must be positive");
  if (rc.bench.mas_cap < 1) throw ConfigError("config: ocp.mas_cap must be >= 1");
  for (int j : rc.bench.soft_indices) {
    if (j < 0 || j >= kStateDim) throw ConfigError("config: ocp.soft_indices out of range");
  }
  if (!(rc.bench.x_lb.array() < rc.bench.x_ub.array()).all() ||
      !(rc.bench.u_lb.array() < rc.bench.u_ub.array()).all()) {
    throw ConfigError("config: lower bounds must be below upper bounds");
  }
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

/// The effective configuration in the same layout parse_config accepts.
inline nlohmann::json config_to_json(const RunConfig& rc) {
  using json = nlohmann::json;
  auto vec = [](const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); };
  const VehicleParams& p = rc.bench.vehicle;
  const BenchmarkOptions& b = rc.bench;
  const ScenarioConfig& c = rc.scenario;
  json j;
  j["vehicle"] = {{"m", p.m},         {"izz", p.izz},   {"lf", p.lf},   {"lr", p.lr},
                  {"mu", p.mu},       {"b_tire", p.b_tire}, {"c_tire", p.c_tire}, {"area", p.area},
                  {"rho", p.rho},     {"cd", p.cd},     {"s_long", p.s_long}, {"ts", p.ts}};
  j["ocp"] = {{"horizon", b.horizon},
              {"q_diag", vec(b.q_weight.diagonal())},
              {"r_diag", vec(b.r_weight.diagonal())},
              {"x_lb", vec(b.x_lb)},
              {"x_ub", vec(b.x_ub)},
              {"u_lb", vec(b.u_lb)},
              {"u_ub", vec(b.u_ub)},
              {"soft_indices", b.soft_indices},
              {"penalty_rho", b.penalty_rho},
              {"use_terminal_set", b.use_terminal_set},
              {"terminal_set_prefix", b.terminal_set_prefix},
              {"mas_cap", b.mas_cap}};
  j["sqp"] = {{"mode", to_string(c.sqp.mode.kind)},
              {"ell", c.sqp.ell},
              {"rho_aug", c.sqp.mode.rho_aug},
              {"fd_step", c.sqp.mode.fd_step},
              {"reg_delta_floor", c.sqp.reg_delta_floor},
              {"kkt_tol", c.sqp.kkt_tol},
              {"max_solve_iter", c.sqp.max_solve_iter},
              {"stop_tol", c.sqp.stop_tol}};
  j["scenario"] = {{"x0", vec(Eigen::VectorXd(c.x0))},
                   {"steps", c.steps},
                   {"seed", c.seed},
                   {"gust_mean", c.gust_mean},
                   {"gust_std", c.gust_std},
                   {"disturbance_on", c.disturbance_on},
                   {"controller", to_string(c.controller)},
                   {"init", c.init == InitStrategy::presolve ? "presolve" : "cold"},
                   {"compute_error", c.compute_error},
                   {"abort_on_failure", c.abort_on_failure}};
  return j;
}

}  // namespace tdo
