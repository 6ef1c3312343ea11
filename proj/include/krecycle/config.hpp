#pragma once

/// \file krecycle/config.hpp
/// \brief JSON configuration for runs, sweeps and cost tables. Unknown keys
///        are rejected so typos do not silently fall back to defaults.

#include <cstdint>
#include <fstream>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "krecycle/costmodel.hpp"
#include "krecycle/sequence.hpp"

namespace krecycle {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

using json = nlohmann::json;

inline void require_object(const json &j, const std::string &where) {
  if (!j.is_object()) throw ConfigError(where + ": expected an object");
}

inline void check_keys(const json &j, const std::set<std::string> &allowed,
                       const std::string &where) {
  require_object(j, where);
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!allowed.count(it.key())) throw ConfigError(where + ": unknown key '" + it.key() + "'");
}

template <class T>
void read(const json &j, const char *key, T &out, const std::string &where) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const nlohmann::json::exception &e) {
    throw ConfigError(where + "." + key + ": " + e.what());
  }
}

/// non-negative integer
inline void read_count(const json &j, const char *key, std::size_t &out, const std::string &where) {
  if (!j.contains(key)) return;
  const auto &v = j.at(key);
  if (!v.is_number_integer() || v.get<long long>() < 0)
    throw ConfigError(where + "." + key + ": expected a non-negative integer");
  out = v.get<std::size_t>();
}

}  // namespace detail

struct RunConfig {
  ProblemParams problem;
  SolverSettings solver;
  RecyclingSettings recycling;
  std::string output = "out";
  std::vector<std::size_t> export_steps;  ///< steps whose A, b are written as Matrix Market

  void validate() const {
    problem.validate();
    solver.gmres.validate();
    if (solver.precond == PrecondKind::Ssor && !(solver.omega > 0.0 && solver.omega < 2.0))
      throw ConfigError("preconditioner.omega must lie in (0, 2)");
    const auto &w = recycling.window;
    if (w.ell < 1) throw ConfigError("window.ell must be >= 1");
    if (w.s < 1 || w.s > w.m) throw ConfigError("window: need 1 <= s <= m");
  }
};

inline ProblemParams parse_problem(const nlohmann::json &j, ProblemParams p = {}) {
  const std::string w = "problem";
  detail::check_keys(j, {"N", "nu", "dt", "n_steps", "forcing_amplitude", "seed", "quad_points"}, w);
  detail::read_count(j, "N", p.N, w);
  detail::read(j, "nu", p.nu, w);
  detail::read(j, "dt", p.dt, w);
  detail::read_count(j, "n_steps", p.n_steps, w);
  detail::read(j, "forcing_amplitude", p.forcing_amplitude, w);
  if (j.contains("seed")) {
    if (!j.at("seed").is_number_unsigned()) throw ConfigError("problem.seed: expected an unsigned integer");
    p.seed = j.at("seed").get<std::uint64_t>();
  }
  detail::read_count(j, "quad_points", p.quad_points, w);
  try {
    p.validate();
  } catch (const std::invalid_argument &e) {
    throw ConfigError(e.what());
  }
  return p;
}

inline GmresConfig parse_solver(const nlohmann::json &j, GmresConfig g = {}) {
  const std::string w = "solver";
  detail::check_keys(j, {"restart", "rel_tol", "max_restarts", "happy_breakdown_tol", "monitor",
                         "stagnation_factor"},
                     w);
  detail::read_count(j, "restart", g.restart, w);
  detail::read(j, "rel_tol", g.rel_tol, w);
  detail::read_count(j, "max_restarts", g.max_restarts, w);
  detail::read(j, "happy_breakdown_tol", g.happy_breakdown_tol, w);
  detail::read(j, "stagnation_factor", g.stagnation_factor, w);
  if (j.contains("monitor")) {
    const auto m = j.at("monitor").get<std::string>();
    if (m == "every_iteration") g.monitor = ResidualMonitor::EveryIteration;
    else if (m == "cycle_end") g.monitor = ResidualMonitor::CycleEnd;
    else throw ConfigError("solver.monitor: expected 'every_iteration' or 'cycle_end'");
  }
  try {
    g.validate();
  } catch (const std::invalid_argument &e) {
    throw ConfigError(e.what());
  }
  return g;
}

/// "zero", "project", {"kind": "extrapolate", "order": 2}, ...
inline InitialGuess parse_guess(const nlohmann::json &j) {
  std::string kind;
  int order = 1;
  if (j.is_string()) {
    kind = j.get<std::string>();
  } else {
    detail::check_keys(j, {"kind", "order"}, "guess");
    detail::read(j, "kind", kind, "guess");
    detail::read(j, "order", order, "guess");
  }
  if (kind == "zero") return InitialGuess::zero();
  if (kind == "project") return InitialGuess::project();
  if (kind == "extrapolate") {
    if (order < 1 || order > 3) throw ConfigError("guess.order must be 1, 2 or 3");
    return InitialGuess::extrapolate(order);
  }
  throw ConfigError("guess: unknown kind '" + kind + "'");
}

inline std::string guess_name(const InitialGuess &g) {
  switch (g.kind) {
    case InitialGuess::Kind::Zero: return "zero";
    case InitialGuess::Kind::Project: return "project";
    case InitialGuess::Kind::Extrapolate: return "extrapolate" + std::to_string(g.order);
  }
  return "?";
}

inline RunConfig parse_run_config(const nlohmann::json &j) {
  detail::check_keys(j, {"problem", "solver", "method", "guess", "window", "preconditioner",
                         "composition", "output", "export_steps"},
                     "run");
  RunConfig c;
  if (j.contains("problem")) c.problem = parse_problem(j.at("problem"));
  if (j.contains("solver")) c.solver.gmres = parse_solver(j.at("solver"));
  if (j.contains("method")) {
    try {
      c.recycling.method = recycle_method_from_string(j.at("method").get<std::string>());
    } catch (const std::exception &e) {
      throw ConfigError(std::string("method: ") + e.what());
    }
  }
  // augmented methods start from the projection guess unless told otherwise
  c.recycling.guess = projector_of(c.recycling.method) && !is_deflated(c.recycling.method)
                          ? InitialGuess::project()
                          : InitialGuess::zero();
  if (j.contains("guess")) c.recycling.guess = parse_guess(j.at("guess"));
  if (j.contains("window")) {
    const auto &w = j.at("window");
    detail::check_keys(w, {"m", "s", "ell", "mode"}, "window");
    detail::read_count(w, "m", c.recycling.window.m, "window");
    detail::read_count(w, "s", c.recycling.window.s, "window");
    detail::read_count(w, "ell", c.recycling.window.ell, "window");
    if (w.contains("mode")) {
      try {
        c.recycling.window.mode = svd_mode_from_string(w.at("mode").get<std::string>());
      } catch (const std::exception &e) {
        throw ConfigError(std::string("window.mode: ") + e.what());
      }
    }
  }
  if (j.contains("preconditioner")) {
    const auto &p = j.at("preconditioner");
    detail::check_keys(p, {"kind", "omega"}, "preconditioner");
    std::string kind = "ssor";
    detail::read(p, "kind", kind, "preconditioner");
    if (kind == "ssor") c.solver.precond = PrecondKind::Ssor;
    else if (kind == "identity") c.solver.precond = PrecondKind::Identity;
    else throw ConfigError("preconditioner.kind: expected 'ssor' or 'identity'");
    detail::read(p, "omega", c.solver.omega, "preconditioner");
  }
  if (j.contains("composition")) {
    const auto s = j.at("composition").get<std::string>();
    if (s == "projector_before_preconditioner")
      c.recycling.order = CompositionOrder::ProjectorBeforePreconditioner;
    else if (s == "projector_after_preconditioner")
      c.recycling.order = CompositionOrder::ProjectorAfterPreconditioner;
    else
      throw ConfigError("composition: expected 'projector_before_preconditioner' or "
                        "'projector_after_preconditioner'");
  }
  detail::read(j, "output", c.output, "run");
  if (j.contains("export_steps")) {
    const auto &e = j.at("export_steps");
    if (!e.is_array()) throw ConfigError("export_steps: expected an array");
    for (const auto &v : e) {
      if (!v.is_number_unsigned()) throw ConfigError("export_steps: expected step numbers");
      c.export_steps.push_back(v.get<std::size_t>());
    }
  }
  c.validate();
  return c;
}

/// inclusive integer range from..to by step
struct IntRange {
  std::size_t from = 0, to = 0, step = 1;

  std::vector<std::size_t> values() const {
    std::vector<std::size_t> v;
    for (std::size_t x = from; x <= to; x += step) v.push_back(x);
    return v;
  }
};

inline IntRange parse_range(const nlohmann::json &j, const std::string &where) {
  IntRange r;
  if (j.is_number_integer()) {
    if (j.get<long long>() < 0) throw ConfigError(where + " must be >= 0");
    r.from = r.to = j.get<std::size_t>();
    return r;
  }
  detail::check_keys(j, {"from", "to", "step"}, where);
  if (!j.contains("from") || !j.contains("to")) throw ConfigError(where + ": needs from and to");
  detail::read_count(j, "from", r.from, where);
  detail::read_count(j, "to", r.to, where);
  detail::read_count(j, "step", r.step, where);
  if (r.step == 0) throw ConfigError(where + ".step must be >= 1");
  if (r.to < r.from) throw ConfigError(where + ": to < from");
  return r;
}

/// How the recycle_dim axis maps onto the window.
enum class AxisMode {
  RecycleDim,      ///< s = recycle_dim, m = recycle_dim
  SavedSolutions,  ///< m = recycle_dim, s = min(restart, m)
};

struct SweepConfig {
  RunConfig base;
  IntRange restart, recycle_dim, svd_interval;
  AxisMode axis = AxisMode::RecycleDim;
  std::size_t workers = 0;  ///< 0: hardware concurrency
  bool seed_per_cell = false;  ///< seed xor cell index instead of the shared base seed
};

inline SweepConfig parse_sweep_config(const nlohmann::json &j) {
  detail::check_keys(j, {"base", "restart", "recycle_dim", "svd_interval", "axis", "workers",
                         "seed_per_cell"},
                     "sweep");
  SweepConfig c;
  if (j.contains("base")) c.base = parse_run_config(j.at("base"));
  const auto &b = c.base;
  c.restart = {b.solver.gmres.restart, b.solver.gmres.restart, 1};
  c.recycle_dim = {b.recycling.window.s, b.recycling.window.s, 1};
  c.svd_interval = {b.recycling.window.ell, b.recycling.window.ell, 1};
  if (j.contains("restart")) c.restart = parse_range(j.at("restart"), "restart");
  if (j.contains("recycle_dim")) c.recycle_dim = parse_range(j.at("recycle_dim"), "recycle_dim");
  if (j.contains("svd_interval"))
    c.svd_interval = parse_range(j.at("svd_interval"), "svd_interval");
  if (c.restart.from < 1) throw ConfigError("restart must be >= 1");
  if (c.recycle_dim.from < 1) throw ConfigError("recycle_dim must be >= 1");
  if (c.svd_interval.from < 1) throw ConfigError("svd_interval must be >= 1");
  if (j.contains("axis")) {
    const auto a = j.at("axis").get<std::string>();
    if (a == "recycle_dim") c.axis = AxisMode::RecycleDim;
    else if (a == "saved_solutions") c.axis = AxisMode::SavedSolutions;
    else throw ConfigError("axis: expected 'recycle_dim' or 'saved_solutions'");
  }
  detail::read_count(j, "workers", c.workers, "sweep");
  detail::read(j, "seed_per_cell", c.seed_per_cell, "sweep");
  return c;
}

struct CostConfig {
  CostParams params;  ///< k, r_tilde and ell are overridden per grid point
  IntRange k{2, 52, 2};
  IntRange ratio_percent{0, 100, 4};
  struct Point {
    double k = 20, ratio_percent = 50, ell = 20;
  };
  std::optional<Point> point;
  std::string output = "out";
};

inline CostConfig parse_cost_config(const nlohmann::json &j) {
  const std::string w = "cost";
  detail::check_keys(j, {"m", "n", "b", "s", "r", "k", "ratio_percent", "point", "output"}, w);
  CostConfig c;
  detail::read(j, "output", c.output, w);
  detail::read(j, "m", c.params.m, w);
  detail::read(j, "n", c.params.n, w);
  detail::read(j, "b", c.params.b, w);
  detail::read(j, "s", c.params.s, w);
  detail::read(j, "r", c.params.r, w);
  if (j.contains("k")) c.k = parse_range(j.at("k"), "k");
  if (j.contains("ratio_percent")) c.ratio_percent = parse_range(j.at("ratio_percent"), "ratio_percent");
  if (c.ratio_percent.to > 100) throw ConfigError("ratio_percent must not exceed 100");
  if (j.contains("point")) {
    const auto &p = j.at("point");
    detail::check_keys(p, {"k", "ratio_percent", "ell"}, "point");
    CostConfig::Point pt;
    detail::read(p, "k", pt.k, "point");
    detail::read(p, "ratio_percent", pt.ratio_percent, "point");
    detail::read(p, "ell", pt.ell, "point");
    if (!(pt.ratio_percent >= 0 && pt.ratio_percent <= 100))
      throw ConfigError("point.ratio_percent must lie in [0, 100]");
    if (!(pt.ell > 0)) throw ConfigError("point.ell must be > 0");
    if (pt.k < 0) throw ConfigError("point.k must be >= 0");
    c.point = pt;
  }
  c.params.r_tilde = c.params.r;
  try {
    c.params.validate();
  } catch (const std::invalid_argument &e) {
    throw ConfigError(e.what());
  }
  return c;
}

inline nlohmann::json load_json_file(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error &e) {
    throw ConfigError("malformed JSON in '" + path + "': " + e.what());
  }
}

}  // namespace krecycle
