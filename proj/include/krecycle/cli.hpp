#pragma once

/// \file krecycle/cli.hpp
/// \brief The run / sweep / cost commands behind tools/krecycle.cpp, callable
///        from tests.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "krecycle/config.hpp"
#include "krecycle/costmodel.hpp"
#include "krecycle/io.hpp"
#include "krecycle/sequence.hpp"

namespace krecycle {

struct IterationStats {
  std::size_t steps = 0;
  double mean = 0.0;
  double stddev = 0.0;  ///< sample standard deviation
  std::size_t warmup = 0;
  double mean_after_warmup = 0.0;
  double stddev_after_warmup = 0.0;
  std::size_t nonconverged = 0;
};

/// mean and sample standard deviation (0 for fewer than two values)
inline std::pair<double, double> mean_stddev(std::span<const double> v) {
  if (v.empty()) return {std::nan(""), std::nan("")};
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  if (v.size() < 2) return {mean, 0.0};
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return {mean, std::sqrt(ss / static_cast<double>(v.size() - 1))};
}

inline IterationStats iteration_stats(const std::vector<StepRecord> &steps, std::size_t warmup) {
  IterationStats s;
  s.steps = steps.size();
  s.warmup = warmup;
  std::vector<double> all, late;
  for (const auto &st : steps) {
    all.push_back(static_cast<double>(st.report.iterations));
    if (st.step > warmup) late.push_back(static_cast<double>(st.report.iterations));
    if (!st.report.converged) ++s.nonconverged;
  }
  std::tie(s.mean, s.stddev) = mean_stddev(all);
  std::tie(s.mean_after_warmup, s.stddev_after_warmup) = mean_stddev(late);
  return s;
}

/// warm-up length: the window size for recycling runs, none otherwise
inline std::size_t warmup_steps(const RunConfig &c) {
  const bool recycles = projector_of(c.recycling.method).has_value() ||
                        c.recycling.guess.kind == InitialGuess::Kind::Project;
  return recycles ? c.recycling.window.m : 0;
}

inline constexpr const char *steps_csv_header =
    "step,iterations,restarts,true_residual,converged,recycled,space_dim";

inline void write_steps_csv(std::ostream &os, const std::vector<StepRecord> &steps,
                            const IterationStats &s) {
  os << steps_csv_header << '\n';
  for (const auto &st : steps)
    os << st.step << ',' << st.report.iterations << ',' << st.report.restarts << ','
       << format_double(st.report.true_relative_residual) << ',' << (st.report.converged ? 1 : 0)
       << ',' << (st.recycled ? 1 : 0) << ',' << st.space_dim << '\n';
  os << "# summary: avg_iterations=" << format_double(s.mean)
     << " stddev=" << format_double(s.stddev)
     << " avg_after_warmup=" << format_double(s.mean_after_warmup)
     << " stddev_after_warmup=" << format_double(s.stddev_after_warmup)
     << " warmup_steps=" << s.warmup << " nonconverged=" << s.nonconverged << '\n';
}

inline nlohmann::json stats_json(const IterationStats &s) {
  auto num = [](double x) { return std::isfinite(x) ? nlohmann::json(x) : nlohmann::json(nullptr); };
  return {{"steps", s.steps},
          {"avg_iterations", num(s.mean)},
          {"stddev", num(s.stddev)},
          {"warmup_steps", s.warmup},
          {"avg_after_warmup", num(s.mean_after_warmup)},
          {"stddev_after_warmup", num(s.stddev_after_warmup)},
          {"nonconverged", s.nonconverged}};
}

namespace detail {

inline std::filesystem::path resolve_out(const std::string &configured, const std::string &override_dir) {
  std::filesystem::path out = override_dir.empty() ? configured : override_dir;
  std::filesystem::create_directories(out);
  return out;
}

inline std::ofstream open_out(const std::filesystem::path &p) {
  std::ofstream f(p);
  if (!f) throw std::runtime_error("cannot write '" + p.string() + "'");
  return f;
}

}  // namespace detail

/// Runs one sequence and writes steps.csv, timing.csv, summary.json and any
/// requested Matrix Market exports into \a out_dir.
inline IterationStats run_to_directory(const RunConfig &cfg, const std::filesystem::path &out_dir) {
  std::filesystem::create_directories(out_dir);
  SequenceOptions opts;
  if (!cfg.export_steps.empty()) {
    opts.on_system = [&](const StepSystem &sys) {
      if (std::find(cfg.export_steps.begin(), cfg.export_steps.end(), sys.step_index) ==
          cfg.export_steps.end())
        return;
      const auto tag = std::to_string(sys.step_index);
      auto fa = detail::open_out(out_dir / ("A_" + tag + ".mtx"));
      write_matrix_market(fa, sys.A);
      auto fb = detail::open_out(out_dir / ("b_" + tag + ".txt"));
      write_vector(fb, sys.b);
    };
  }
  const auto res = run_sequence(cfg.problem, cfg.solver, cfg.recycling, opts);
  const auto stats = iteration_stats(res.steps, warmup_steps(cfg));
  {
    auto f = detail::open_out(out_dir / "steps.csv");
    write_steps_csv(f, res.steps, stats);
  }
  {
    auto f = detail::open_out(out_dir / "timing.csv");
    f << "step,wall_time\n";
    for (const auto &st : res.steps) f << st.step << ',' << format_double(st.report.wall_time) << '\n';
  }
  {
    auto f = detail::open_out(out_dir / "summary.json");
    nlohmann::json j = stats_json(stats);
    j["method"] = std::string(to_string(cfg.recycling.method));
    j["guess"] = guess_name(cfg.recycling.guess);
    f << j.dump(2) << '\n';
  }
  return stats;
}

inline int cmd_run(const std::string &config_path, const std::string &out_override,
                   std::ostream &log, std::ostream &err) {
  RunConfig cfg;
  try {
    cfg = parse_run_config(load_json_file(config_path));
  } catch (const std::exception &e) {
    err << "config error: " << e.what() << '\n';
    return 2;
  }
  try {
    const auto out = detail::resolve_out(cfg.output, out_override);
    const auto s = run_to_directory(cfg, out);
    log << "method " << to_string(cfg.recycling.method) << ", guess " << guess_name(cfg.recycling.guess)
        << ": " << s.steps << " steps, avg iterations " << format_double(s.mean) << ", stddev "
        << format_double(s.stddev);
    if (s.nonconverged) log << ", " << s.nonconverged << " step(s) did not converge";
    log << "\nwrote " << (out / "steps.csv").string() << '\n';
  } catch (const std::exception &e) {
    err << "run failed: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

struct SweepCell {
  std::size_t restart = 0, recycle_dim = 0, svd_interval = 0;
  IterationStats stats;
  std::string status = "ok";
};

/// the run configuration of one sweep cell
inline RunConfig sweep_cell_config(const SweepConfig &sc, std::size_t restart,
                                   std::size_t recycle_dim, std::size_t svd_interval,
                                   std::size_t index) {
  RunConfig c = sc.base;
  c.solver.gmres.restart = restart;
  c.recycling.window.ell = svd_interval;
  if (sc.axis == AxisMode::RecycleDim) {
    c.recycling.window.s = recycle_dim;
    c.recycling.window.m = recycle_dim;
  } else {
    c.recycling.window.m = recycle_dim;
    c.recycling.window.s = std::min(restart, recycle_dim);
  }
  if (sc.seed_per_cell) c.problem.seed ^= static_cast<std::uint64_t>(index);
  return c;
}

/// worker count: KRECYCLE_WORKERS, then the config, then the hardware
inline std::size_t sweep_workers(const SweepConfig &sc) {
  if (const char *env = std::getenv("KRECYCLE_WORKERS")) {
    char *end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<std::size_t>(v);
  }
  if (sc.workers > 0) return sc.workers;
  return std::max(1u, std::thread::hardware_concurrency());
}

/// Runs every cell of the sweep; the result is ordered by (restart,
/// recycle_dim, svd_interval) whatever the worker count.
inline std::vector<SweepCell> run_sweep(const SweepConfig &sc, std::size_t workers) {
  std::vector<SweepCell> cells;
  for (auto r : sc.restart.values())
    for (auto d : sc.recycle_dim.values())
      for (auto l : sc.svd_interval.values()) cells.push_back({r, d, l, {}, "ok"});

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < cells.size(); i = next++) {
      auto &cell = cells[i];
      try {
        const auto cfg = sweep_cell_config(sc, cell.restart, cell.recycle_dim, cell.svd_interval, i);
        cfg.validate();
        const auto res = run_sequence(cfg.problem, cfg.solver, cfg.recycling);
        cell.stats = iteration_stats(res.steps, warmup_steps(cfg));
        if (cell.stats.nonconverged) cell.status = "nonconverged";
      } catch (const std::exception &e) {
        std::string msg = e.what();
        std::replace(msg.begin(), msg.end(), ',', ';');
        std::replace(msg.begin(), msg.end(), '\n', ' ');
        cell.status = "error: " + msg;
        cell.stats.mean = cell.stats.stddev = std::nan("");
        cell.stats.mean_after_warmup = cell.stats.stddev_after_warmup = std::nan("");
      }
    }
  };
  workers = std::max<std::size_t>(1, std::min(workers, cells.size()));
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < workers; ++t) pool.emplace_back(worker);
  worker();
  for (auto &t : pool) t.join();
  return cells;
}

inline constexpr const char *sweep_csv_header =
    "restart,recycle_dim,svd_interval,avg_iterations,stddev,avg_after_warmup,stddev_after_warmup,"
    "nonconverged,status";

inline void write_sweep_csv(std::ostream &os, const std::vector<SweepCell> &cells) {
  os << sweep_csv_header << '\n';
  for (const auto &c : cells)
    os << c.restart << ',' << c.recycle_dim << ',' << c.svd_interval << ','
       << format_double(c.stats.mean) << ',' << format_double(c.stats.stddev) << ','
       << format_double(c.stats.mean_after_warmup) << ','
       << format_double(c.stats.stddev_after_warmup) << ',' << c.stats.nonconverged << ','
       << c.status << '\n';
}

inline int cmd_sweep(const std::string &config_path, const std::string &out_override,
                     std::ostream &log, std::ostream &err) {
  SweepConfig sc;
  try {
    sc = parse_sweep_config(load_json_file(config_path));
  } catch (const std::exception &e) {
    err << "config error: " << e.what() << '\n';
    return 2;
  }
  try {
    const auto out = detail::resolve_out(sc.base.output, out_override);
    const auto workers = sweep_workers(sc);
    const auto cells = run_sweep(sc, workers);
    auto f = detail::open_out(out / "map.csv");
    write_sweep_csv(f, cells);
    std::size_t failed = 0;
    for (const auto &c : cells) failed += c.status != "ok";
    log << cells.size() << " cells on " << workers << " worker(s)";
    if (failed) log << ", " << failed << " flagged";
    log << "\nwrote " << (out / "map.csv").string() << '\n';
  } catch (const std::exception &e) {
    err << "sweep failed: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

inline constexpr const char *cost_csv_header = "k,ratio_percent,ell_min";

inline void write_cost_csv(std::ostream &os, const CostConfig &c) {
  os << cost_csv_header << '\n';
  for (auto k : c.k.values())
    for (auto rp : c.ratio_percent.values()) {
      CostParams p = c.params;
      p.k = static_cast<double>(k);
      const auto res = min_interval(p, static_cast<double>(rp) / 100.0);
      os << k << ',' << rp << ',' << format_double(res.ell_min) << '\n';
    }
}

/// single-point comparison of the two cost formulas
inline void write_cost_point(std::ostream &os, const CostConfig &c) {
  const auto pt = c.point.value_or(CostConfig::Point{});
  CostParams p = c.params;
  p.k = pt.k;
  p.r_tilde = p.r * (1.0 - pt.ratio_percent / 100.0);
  p.ell = pt.ell;
  const auto lm = min_interval(p, pt.ratio_percent / 100.0);
  os << "quantity,value\n";
  os << "k," << format_double(p.k) << '\n';
  os << "ratio_percent," << format_double(pt.ratio_percent) << '\n';
  os << "r_tilde," << format_double(p.r_tilde) << '\n';
  os << "ell," << format_double(p.ell) << '\n';
  os << "C," << format_double(cost_baseline(p)) << '\n';
  os << "C_r (C_4)," << format_double(cost_recycled(p)) << '\n';
  os << "ell_min," << format_double(lm.ell_min) << '\n';
}

inline int cmd_cost(const std::string &config_path, const std::string &out_override,
                    std::ostream &log, std::ostream &err) {
  CostConfig c;
  try {
    c = parse_cost_config(load_json_file(config_path));
  } catch (const std::exception &e) {
    err << "config error: " << e.what() << '\n';
    return 2;
  }
  try {
    const auto out = detail::resolve_out(c.output, out_override);
    {
      auto f = detail::open_out(out / "ell_min.csv");
      write_cost_csv(f, c);
    }
    std::ostringstream point;
    write_cost_point(point, c);
    {
      auto f = detail::open_out(out / "cost_point.csv");
      f << point.str();
    }
    log << point.str() << "wrote " << (out / "ell_min.csv").string() << '\n';
  } catch (const std::exception &e) {
    err << "cost failed: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

}  // namespace krecycle
