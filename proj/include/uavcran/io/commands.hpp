#pragma once

#include <cmath>
#include <complex>
#include <cstdio>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "uavcran/io/config.hpp"
#include "uavcran/io/csv_log.hpp"
#include "uavcran/io/svg_plot.hpp"
#include "uavcran/orchestrator.hpp"

namespace uavcran::io {

enum ExitCode : int { kOk = 0, kValidation = 1, kRuntime = 2, kGradCheckFailed = 3 };

inline std::string summary_text(const SimLog& log, const RunSummary& s, std::uint64_t seed) {
  std::ostringstream o;
  o << "method: " << method_name(log.method) << "\n";
  o << "seed: " << seed << "\n";
  o << "units: positions m, speeds m/s, rates bits/channel-use, gradients bits/channel-use/m\n";
  o << "velocity_scale_mu: " << format_float(log.mu) << "\n";
  o << "initial_r_min: " << format_float(s.initial_r_min) << "\n";
  o << "final_r_min: " << format_float(s.final_r_min) << "\n";
  o << "t95: " << format_float(s.t95) << "\n";
  for (std::size_t k = 0; k < s.final_position.size(); ++k) {
    o << "uav " << (k + 1) << ": final_x " << format_float(s.final_position[k].x()) << " final_y "
      << format_float(s.final_position[k].y()) << " final_speed " << format_float(s.final_speed[k]) << " arc_length "
      << format_float(s.arc_length[k]) << "\n";
  }
  o << "solver_warnings: " << log.solver_warnings << "\n";
  o << "small_angle_exceeded: " << (log.small_angle_exceeded ? "true" : "false") << "\n";
  return o.str();
}

inline void write_plots(const std::string& csv_text, const std::filesystem::path& dir) {
  const auto rows = parse_csv(csv_text);
  write_file((dir / "trajectory.svg").string(), trajectory_svg(rows));
  write_file((dir / "rate.svg").string(), rate_svg(rows));
}

struct RunOptions {
  std::string config_path;
  std::optional<Method> method;
  std::optional<std::uint64_t> seed;
  std::string out_dir = ".";
  bool plot = false;
};

/// Writes trajectory.csv and summary.txt (plus SVG plots when requested).
inline int cmd_run(const RunOptions& opt, std::ostream& out, std::ostream& err) {
  Scenario scenario;
  bool plot = opt.plot;
  try {
    ScenarioConfig cfg = load_config(opt.config_path);
    if (opt.method) cfg.method = *opt.method;
    if (opt.seed) cfg.seed = *opt.seed;
    plot = plot || cfg.plot;
    scenario = build_scenario(cfg);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kValidation;
  }
  try {
    const SimLog log = run(scenario);
    const std::filesystem::path dir(opt.out_dir);
    std::filesystem::create_directories(dir);
    const std::string csv = to_csv(log);
    write_file((dir / "trajectory.csv").string(), csv);
    const RunSummary summary = summarize(log);
    write_file((dir / "summary.txt").string(), summary_text(log, summary, scenario.seed));
    if (plot) write_plots(csv, dir);
    out << "final_r_min " << format_float(summary.final_r_min) << " (initial " << format_float(summary.initial_r_min)
        << ")\n";
    return kOk;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kRuntime;
  }
}

struct CompareOptions {
  std::string config_path;
  int seeds = 1;
  std::string out_dir = ".";
};

/// Runs both methods for seeds base..base+N-1; writes paired CSVs and compare.csv.
inline int cmd_compare(const CompareOptions& opt, std::ostream& out, std::ostream& err) {
  if (opt.seeds < 1) {
    err << "error: --seeds must be >= 1\n";
    return kValidation;
  }
  ScenarioConfig cfg;
  try {
    cfg = load_config(opt.config_path);
    build_scenario(cfg);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kValidation;
  }
  try {
    const std::filesystem::path dir(opt.out_dir);
    std::filesystem::create_directories(dir);
    std::string table = "seed,method,final_r_min,t95,arc_length\n";
    for (int j = 0; j < opt.seeds; ++j) {
      ScenarioConfig c = cfg;
      c.seed = cfg.seed + static_cast<std::uint64_t>(j);
      const MethodComparison cmp = compare_methods(build_scenario(c));
      const std::string tag = "seed_" + std::to_string(c.seed);
      write_file((dir / (tag + "_controlled.csv")).string(), to_csv(cmp.controlled));
      write_file((dir / (tag + "_gradient.csv")).string(), to_csv(cmp.gradient));
      for (const RunSummary* s : {&cmp.controlled_summary, &cmp.gradient_summary}) {
        double arc = 0.0;
        for (double a : s->arc_length) arc += a;
        table += std::to_string(c.seed) + "," + method_name(s->method) + "," + format_float(s->final_r_min) + "," +
                 format_float(s->t95) + "," + format_float(arc) + "\n";
      }
      const double a = cmp.controlled_summary.final_r_min, b = cmp.gradient_summary.final_r_min;
      const double gap = std::abs(a - b) / std::max(std::abs(a), std::abs(b));
      out << "seed " << c.seed << ": controlled " << format_float(a) << ", gradient " << format_float(b)
          << ", relative gap " << format_float(gap) << (gap <= 0.05 ? "" : " (above 5%)") << "\n";
    }
    write_file((dir / "compare.csv").string(), table);
    return kOk;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kRuntime;
  }
}

struct GradCheckOptions {
  std::string config_path;
  int samples = 100;
  double delta = 1e-4;
  double tolerance = 1e-4;
};

struct GradCheckReport {
  int checked = 0;
  int skipped = 0;
  double worst = 0.0;
  std::string worst_geometry;
};

// |a - n| / |n| with an absolute floor of 1e-9 below which the error counts as zero.
inline double gradient_relative_error(double analytic, double numeric) {
  const double diff = std::abs(analytic - numeric);
  if (diff <= 1e-9) return 0.0;
  return diff / std::abs(numeric);
}

inline std::string describe_geometry(std::span<const Position3> uavs, std::span<const Position3> users) {
  std::ostringstream o;
  o << "uavs:";
  for (const auto& u : uavs) o << " (" << format_float(u.x) << "," << format_float(u.y) << "," << format_float(u.z) << ")";
  o << " users:";
  for (const auto& u : users) o << " (" << format_float(u.x) << "," << format_float(u.y) << ")";
  return o.str();
}

/// Analytic min-rate gradient against central differences at one geometry.
/// Components whose binding subset changes under the +-delta perturbation are skipped.
inline void gradcheck_geometry(std::span<const Position3> uavs, std::span<const Position3> users,
                               const ChannelParams& params, const PhaseField& phases, const CovarianceSet& covs,
                               double delta, LogBase base, GradCheckReport& report) {
  const ChannelSet channels = build_channels(uavs, users, params, phases);
  const MinRateGradient analytic = min_rate_gradient(uavs, users, channels, covs, params, base);
  std::vector<Position3> moved(uavs.begin(), uavs.end());
  for (std::size_t k = 0; k < uavs.size(); ++k) {
    for (int axis = 0; axis < kHorizontalAxes; ++axis) {
      moved[k][axis] = uavs[k][axis] + delta;
      const MinRateResult plus = min_rate(build_channels(moved, users, params, phases), covs, base);
      moved[k][axis] = uavs[k][axis] - delta;
      const MinRateResult minus = min_rate(build_channels(moved, users, params, phases), covs, base);
      moved[k][axis] = uavs[k][axis];
      if (plus.s_min != analytic.rate.s_min || minus.s_min != analytic.rate.s_min) {
        ++report.skipped;
        continue;
      }
      const double numeric = (plus.r_min - minus.r_min) / (2.0 * delta);
      const double e = gradient_relative_error(analytic.gradient.per_uav[k][axis], numeric);
      ++report.checked;
      if (e > report.worst) {
        report.worst = e;
        report.worst_geometry = describe_geometry(uavs, users);
      }
    }
  }
}

// Random Hermitian PSD matrix with trace p.
inline CMatrix random_covariance(Rng& rng, int n, double p) {
  CMatrix a(n, n);
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c) a(r, c) = Complex(rng.normal(), rng.normal());
  CMatrix q = a * a.adjoint();
  q *= Complex(p / q.trace().real());
  return 0.5 * (q + q.adjoint());
}

/// Sample 0 is the configured geometry; the rest are random placements of the
/// same users and UAVs on the configured field, with random feasible covariances.
inline int cmd_gradcheck(const GradCheckOptions& opt, std::ostream& out, std::ostream& err) {
  if (opt.samples < 1) {
    err << "error: --samples must be >= 1\n";
    return kValidation;
  }
  if (!(opt.delta > 0.0)) {
    err << "error: --delta must be > 0\n";
    return kValidation;
  }
  Scenario scenario;
  ScenarioConfig cfg;
  try {
    cfg = load_config(opt.config_path);
    scenario = build_scenario(cfg);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kValidation;
  }
  if (opt.delta > 1e-2)
    err << "warning: delta " << format_float(opt.delta)
        << " m is coarse; central-difference truncation error grows with delta^2\n";
  try {
    GradCheckReport report;
    Rng rng(derive_seed(scenario.seed, SeedStream::GradCheck));
    for (int m = 0; m < opt.samples; ++m) {
      std::vector<Position3> uavs = scenario.uavs;
      std::vector<Position3> users = scenario.users;
      CovarianceSet covs = CovarianceSet::isotropic(scenario.p_max, scenario.channel.n_tx);
      const std::uint64_t phase_seed = m == 0 ? derive_seed(scenario.seed, SeedStream::Phases) : rng.next();
      if (m > 0) {
        const double half = cfg.field / 2.0;
        for (auto& u : uavs) u = {rng.uniform(-half, half), rng.uniform(-half, half), scenario.altitude()};
        for (auto& u : users) u = {rng.uniform(-half, half), rng.uniform(-half, half), 0.0};
        for (int i = 0; i < covs.size(); ++i) covs.q[i] = random_covariance(rng, scenario.channel.n_tx, covs.p_max[i]);
      }
      const PhaseField phases(scenario.n_uavs(), scenario.n_users(), scenario.channel, phase_seed);
      gradcheck_geometry(uavs, users, scenario.channel, phases, covs, opt.delta, scenario.log_base, report);
    }
    out << "checked " << report.checked << " components, skipped " << report.skipped
        << " at subset switches; worst relative error " << format_float(report.worst) << "\n";
    if (report.worst >= opt.tolerance) {
      out << "gradient check failed at " << report.worst_geometry << "\n";
      return kGradCheckFailed;
    }
    return kOk;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kRuntime;
  }
}

struct DesignOptions {
  Vector3 weights{1.0, 1.0, 1.0};
  double r = 1.0;
  double gravity = kGravity;
  bool paper_gains = false;
};

/// Prints k1, k2, k3, p and the closed-loop eigenvalues; exit 0 iff Hurwitz.
inline int cmd_design(const DesignOptions& opt, std::ostream& out, std::ostream& err) {
  ControllerGains gains;
  if (opt.paper_gains) {
    gains = ControllerGains::paper();
  } else {
    if (!(opt.r > 0.0)) {
      err << "error: --r must be > 0\n";
      return kValidation;
    }
    if ((opt.weights.array() < 0.0).any()) {
      err << "error: --weights must be >= 0\n";
      return kValidation;
    }
    try {
      gains = lqr_design(opt.weights, opt.r, opt.gravity).gains;
    } catch (const Error& e) {
      err << "error: " << e.what() << "\n";
      return kValidation;
    }
  }
  char buf[160];
  std::snprintf(buf, sizeof buf, "k1 = %.4f\nk2 = %.4f\nk3 = %.4f\np = %.4f\n", gains.k1, gains.k2, gains.k3, gains.p);
  out << buf;
  const ClosedLoopSystem sys = closed_loop(gains, opt.gravity, true);
  const Eigen::EigenSolver<Matrix3> eig(sys.velocity_block());
  bool hurwitz = true;
  out << "closed-loop eigenvalues (v, o, od):\n";
  for (int j = 0; j < 3; ++j) {
    const std::complex<double> l = eig.eigenvalues()[j];
    hurwitz = hurwitz && l.real() < 0.0;
    std::snprintf(buf, sizeof buf, "  %.6f %+.6fi\n", l.real(), l.imag());
    out << buf;
  }
  out << (hurwitz ? "Hurwitz\n" : "not Hurwitz\n");
  return hurwitz ? kOk : kValidation;
}

inline int cmd_plot(const std::string& csv_path, const std::string& out_dir, std::ostream& err) {
  try {
    const std::filesystem::path dir(out_dir);
    std::filesystem::create_directories(dir);
    write_plots(read_file(csv_path), dir);
    return kOk;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kValidation;
  }
}

}  // namespace uavcran::io
