#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "uavcran/covariance_opt.hpp"
#include "uavcran/geometry_channel.hpp"
#include "uavcran/random.hpp"
#include "uavcran/rate_gradient.hpp"
#include "uavcran/rate_region.hpp"
#include "uavcran/uav_dynamics.hpp"

namespace uavcran {

struct SimulationError : Error {
  using Error::Error;
};

enum class Method { Controlled, Gradient };

inline const char* method_name(Method m) { return m == Method::Controlled ? "controlled" : "gradient"; }

/// User `user` jumps to `position` at time `t` (effective from the first sample at or after t).
struct UserMove {
  double t = 0.0;
  int user = 0;
  Position3 position;

  friend bool operator==(const UserMove&, const UserMove&) = default;
};

struct Timing {
  double dt = 0.01;      // dynamics step [s]
  double sample = 0.1;   // rate/trajectory resampling period T_s [s]
  double end = 60.0;     // horizon [s]

  friend bool operator==(const Timing&, const Timing&) = default;

  int steps_per_sample() const { return static_cast<int>(std::llround(sample / dt)); }
  int samples() const { return static_cast<int>(std::llround(end / sample)); }
};

struct Scenario {
  std::vector<Position3> users;
  std::vector<double> p_max;
  std::vector<UserMove> schedule;
  std::vector<Position3> uavs;
  ChannelParams channel;
  ControllerGains gains = ControllerGains::paper();
  double gravity = kGravity;
  bool allow_unstable = false;
  Timing timing;
  Method method = Method::Controlled;
  std::optional<double> mu;  // gradient-to-velocity scale; nullopt = v_ref / max |grad R(0)|
  double v_ref = 5.0;
  SteeringSettings steering;
  SolverSettings solver;
  bool warm_start = true;
  int max_users = kDefaultMaxUsers;
  LogBase log_base = LogBase::Bits;
  std::uint64_t seed = 1;

  int n_users() const { return static_cast<int>(users.size()); }
  int n_uavs() const { return static_cast<int>(uavs.size()); }
  double altitude() const { return uavs.empty() ? 0.0 : uavs.front().z; }

  void validate() const {
    channel.validate();
    solver.validate();
    if (users.empty()) throw ValidationError("users: at least one user is required");
    if (uavs.empty()) throw ValidationError("uavs: at least one UAV is required");
    if (n_users() > max_users)
      throw ValidationError("users: " + std::to_string(n_users()) + " users exceed solver.max_users");
    if (p_max.size() != users.size()) throw ValidationError("users.p_max: one budget per user required");
    for (double p : p_max)
      if (!(p > 0.0) || !std::isfinite(p)) throw ValidationError("users.p_max must be > 0");
    const double h = altitude();
    if (!(h > 0.0) || !std::isfinite(h)) throw ValidationError("uavs.altitude must be > 0");
    for (const auto& u : uavs) {
      if (!u.finite()) throw ValidationError("uavs.positions must be finite");
      if (u.z != h) throw ValidationError("uavs: all UAVs must fly at the common altitude");
    }
    for (const auto& u : users) {
      if (!u.finite()) throw ValidationError("users.positions must be finite");
      if (u.z >= h) throw ValidationError("users: users must be below the UAV altitude");
    }
    if (!(timing.dt > 0.0)) throw ValidationError("timing.dt must be > 0");
    if (!(timing.sample > 0.0)) throw ValidationError("timing.sample must be > 0");
    const double ratio = timing.sample / timing.dt;
    if (std::abs(ratio - std::round(ratio)) > 1e-9 * ratio || std::round(ratio) < 1)
      throw ValidationError("timing.sample must be an integer multiple of timing.dt");
    if (timing.end < timing.sample) throw ValidationError("timing.end must be >= timing.sample");
    const double n = timing.end / timing.sample;
    if (std::abs(n - std::round(n)) > 1e-9 * n)
      throw ValidationError("timing.end must be an integer multiple of timing.sample");
    if (mu && !(*mu > 0.0)) throw ValidationError("control.mu must be > 0");
    if (!(v_ref > 0.0)) throw ValidationError("control.v_ref must be > 0");
    if (!(steering.eps >= 0.0)) throw ValidationError("control.steering_eps must be >= 0");
    if (!(gravity > 0.0)) throw ValidationError("control.gravity must be > 0");
    double last = -std::numeric_limits<double>::infinity();
    for (const auto& m : schedule) {
      if (m.t < last) throw ValidationError("users.schedule must be sorted by time");
      last = m.t;
      if (m.user < 0 || m.user >= n_users()) throw ValidationError("users.schedule: unknown user index");
      if (!m.position.finite() || m.position.z >= h)
        throw ValidationError("users.schedule: invalid target position");
    }
    if (!allow_unstable && !gains.hurwitz(gravity))
      throw ValidationError("control: gains are not Hurwitz (set control.allow_unstable to override)");
  }
};

/// Piecewise-constant user positions at time t.
inline std::vector<Position3> apply_user_schedule(const Scenario& scenario, double t) {
  std::vector<Position3> users = scenario.users;
  double last = -std::numeric_limits<double>::infinity();
  for (const auto& m : scenario.schedule) {
    if (m.t < last) throw ValidationError("users.schedule must be sorted by time");
    last = m.t;
    if (m.t > t + 1e-9) break;
    users.at(m.user) = m.position;
  }
  return users;
}

struct SampleRow {
  double t = 0.0;
  std::vector<Vector2> position;
  std::vector<Vector2> velocity;
  std::vector<Vector2> gradient;
  double r_min = 0.0;
  Subset s_min;
  std::vector<double> trace_q;
};

struct SimLog {
  Method method = Method::Controlled;
  double altitude = 0.0;
  double mu = 1.0;
  int n_uavs = 0;
  bool small_angle_exceeded = false;
  int solver_warnings = 0;
  std::vector<SampleRow> rows;
};

// Sample-time positions of all UAVs at altitude h.
inline std::vector<Position3> uav_positions(const std::vector<std::array<AxisState, 2>>& axes, double h) {
  std::vector<Position3> out;
  out.reserve(axes.size());
  for (const auto& a : axes) out.push_back({a[0].x, a[1].x, h});
  return out;
}

/// Alternating rate / trajectory optimization. At every sample the covariances
/// are re-optimized at the current positions, the min-rate gradient is taken
/// with those covariances held fixed, and the UAVs are driven along it for one
/// sampling period.
inline SimLog run(const Scenario& scenario, const PhaseField* phase_override = nullptr) {
  scenario.validate();
  const PhaseField phases = phase_override != nullptr
                                ? *phase_override
                                : PhaseField(scenario.n_uavs(), scenario.n_users(), scenario.channel,
                                             derive_seed(scenario.seed, SeedStream::Phases));
  const double h = scenario.altitude();
  const int n_uavs = scenario.n_uavs();
  const int inner = scenario.timing.steps_per_sample();
  const int n_samples = scenario.timing.samples();

  ClosedLoopSystem sys =
      closed_loop(scenario.gains, scenario.gravity, scenario.timing.dt, scenario.allow_unstable);

  std::vector<std::array<AxisState, 2>> axes;
  for (const auto& u : scenario.uavs) axes.push_back({AxisState::at_rest(u.x), AxisState::at_rest(u.y)});

  SimLog log;
  log.method = scenario.method;
  log.altitude = h;
  log.n_uavs = n_uavs;
  log.rows.reserve(n_samples + 1);

  std::optional<CovarianceSet> previous;
  double mu = scenario.mu.value_or(0.0);

  for (int n = 0; n <= n_samples; ++n) {
    const double t = n * scenario.timing.sample;
    try {
      const auto users = apply_user_schedule(scenario, t);
      const auto uavs = uav_positions(axes, h);
      const ChannelSet channels = build_channels(uavs, users, scenario.channel, phases);
      const CovarianceResult cov =
          optimize_covariances(channels, scenario.p_max, scenario.solver, scenario.log_base,
                               scenario.warm_start && previous ? &*previous : nullptr, scenario.max_users);
      if (!cov.converged) ++log.solver_warnings;
      previous = cov.covariances;
      const MinRateGradient grad = steering_direction(uavs, users, channels, cov.covariances, scenario.channel,
                                                      scenario.steering, scenario.log_base, scenario.max_users);

      if (n == 0 && !scenario.mu) {
        const double g0 = grad.gradient.max_norm();
        mu = g0 > 0.0 ? scenario.v_ref / g0 : 1.0;
      }
      log.mu = mu;

      SampleRow row;
      row.t = t;
      row.r_min = grad.rate.r_min;
      row.s_min = grad.rate.s_min;
      for (int i = 0; i < cov.covariances.size(); ++i) row.trace_q.push_back(cov.covariances.q[i].trace().real());
      for (int k = 0; k < n_uavs; ++k) {
        const Vector2 g = grad.gradient.per_uav[k].head<2>();
        row.position.emplace_back(axes[k][0].x, axes[k][1].x);
        row.gradient.push_back(g);
        if (scenario.method == Method::Controlled)
          row.velocity.emplace_back(axes[k][0].v, axes[k][1].v);
        else
          row.velocity.push_back(mu * g);
      }
      log.rows.push_back(std::move(row));
      if (n == n_samples) break;

      for (int k = 0; k < n_uavs; ++k) {
        const Vector2 command = mu * grad.gradient.per_uav[k].head<2>();
        if (scenario.method == Method::Controlled) {
          for (int axis = 0; axis < 2; ++axis) {
            for (int s = 0; s < inner; ++s) {
              axes[k][axis] = step_controlled(axes[k][axis], command[axis], sys);
              if (!axes[k][axis].small_angle()) log.small_angle_exceeded = true;
            }
          }
        } else {
          const Vector2 next =
              step_gradient_method({axes[k][0].x, axes[k][1].x}, grad.gradient.per_uav[k].head<2>(), mu,
                                   scenario.timing.sample);
          axes[k][0] = AxisState::at_rest(next[0]);
          axes[k][1] = AxisState::at_rest(next[1]);
        }
      }
    } catch (const Error& e) {
      throw SimulationError("sample " + std::to_string(n) + " (t=" + std::to_string(t) + " s): " + e.what());
    }
  }
  return log;
}

struct RunSummary {
  Method method = Method::Controlled;
  double initial_r_min = 0.0;
  double final_r_min = 0.0;
  double t95 = 0.0;  // first time the rate covers 95% of its total improvement
  std::vector<double> arc_length;
  std::vector<Vector2> final_position;
  std::vector<double> final_speed;
};

inline RunSummary summarize(const SimLog& log) {
  if (log.rows.empty()) throw InvariantError("summarize: empty log");
  RunSummary s;
  s.method = log.method;
  s.initial_r_min = log.rows.front().r_min;
  s.final_r_min = log.rows.back().r_min;
  const double target = s.initial_r_min + 0.95 * (s.final_r_min - s.initial_r_min);
  s.t95 = log.rows.back().t;
  for (const auto& row : log.rows) {
    if (row.r_min >= target) {
      s.t95 = row.t;
      break;
    }
  }
  s.arc_length.assign(log.n_uavs, 0.0);
  for (std::size_t r = 1; r < log.rows.size(); ++r)
    for (int k = 0; k < log.n_uavs; ++k)
      s.arc_length[k] += (log.rows[r].position[k] - log.rows[r - 1].position[k]).norm();
  for (int k = 0; k < log.n_uavs; ++k) {
    s.final_position.push_back(log.rows.back().position[k]);
    s.final_speed.push_back(log.rows.back().velocity[k].norm());
  }
  return s;
}

struct MethodComparison {
  SimLog controlled;
  SimLog gradient;
  RunSummary controlled_summary;
  RunSummary gradient_summary;
};

/// Runs both methods from the same initial state, seed, phase field and velocity scale.
inline MethodComparison compare_methods(const Scenario& scenario) {
  scenario.validate();
  const PhaseField phases(scenario.n_uavs(), scenario.n_users(), scenario.channel,
                          derive_seed(scenario.seed, SeedStream::Phases));
  Scenario controlled = scenario;
  controlled.method = Method::Controlled;
  MethodComparison out;
  out.controlled = run(controlled, &phases);
  Scenario gradient = scenario;
  gradient.method = Method::Gradient;
  gradient.mu = out.controlled.mu;
  out.gradient = run(gradient, &phases);
  out.controlled_summary = summarize(out.controlled);
  out.gradient_summary = summarize(out.gradient);
  return out;
}

}  // namespace uavcran
