#pragma once

#include <cmath>
#include <complex>
#include <string>
#include <utility>

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include "uavcran/types.hpp"

namespace uavcran {

inline constexpr double kGravity = 9.81;
inline constexpr double kSmallAngleLimit = 0.5;  // rad

using Vector4 = Eigen::Vector4d;
using Matrix4 = Eigen::Matrix4d;
using Matrix3 = Eigen::Matrix3d;
using Vector3 = Eigen::Vector3d;
using Vector2 = Eigen::Vector2d;

/// One horizontal axis of one UAV: position, velocity, tilt angle, tilt rate.
struct AxisState {
  double x = 0.0;
  double v = 0.0;
  double o = 0.0;
  double od = 0.0;

  Vector4 vec() const { return {x, v, o, od}; }
  static AxisState from(const Vector4& s) { return {s[0], s[1], s[2], s[3]}; }
  bool small_angle() const { return std::abs(o) < kSmallAngleLimit; }
  static AxisState at_rest(double x) { return {x, 0.0, 0.0, 0.0}; }
};

/// Velocity feedback gains (k1, k2, k3) on (v, o, od) and the gradient prefilter p.
struct ControllerGains {
  double k1 = 0.0;
  double k2 = 0.0;
  double k3 = 0.0;
  double p = 0.0;

  // Gains printed for the reference LQR design, with unity-tracking prefilter.
  static ControllerGains paper() { return {0.5477, 23.9683, 6.9308, 0.5477}; }

  // Routh-Hurwitz margin of lambda^3 + k3 lambda^2 + k2 lambda + g k1.
  double routh_margin(double g = kGravity) const { return k3 * k2 - g * k1; }

  bool hurwitz(double g = kGravity) const { return k1 > 0.0 && k2 > 0.0 && k3 > 0.0 && routh_margin(g) > 0.0; }
};

struct ClosedLoopSystem {
  Matrix4 a = Matrix4::Zero();
  Vector4 b = Vector4::Zero();
  double g = kGravity;
  double dt = 0.0;
  Matrix4 ad = Matrix4::Identity();
  Vector4 bd = Vector4::Zero();

  Matrix3 velocity_block() const { return a.block<3, 3>(1, 1); }
};

// Open-loop per-axis plant: x' = v, v' = g o, o' = od, od' = u.
inline Matrix4 axis_plant(double g = kGravity) {
  Matrix4 a = Matrix4::Zero();
  a(0, 1) = 1.0;
  a(1, 2) = g;
  a(2, 3) = 1.0;
  return a;
}

inline Vector4 axis_input() { return {0.0, 0.0, 0.0, 1.0}; }

/// Exact zero-order-hold pair (exp(A dt), int_0^dt exp(A s) ds b) from the
/// exponential of the augmented matrix [[A, b], [0, 0]].
inline std::pair<Matrix4, Vector4> discretize_zoh(const Matrix4& a, const Vector4& b, double dt) {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw DomainError("discretize_zoh: dt must be > 0");
  Eigen::Matrix<double, 5, 5> aug = Eigen::Matrix<double, 5, 5>::Zero();
  aug.topLeftCorner<4, 4>() = a * dt;
  aug.topRightCorner<4, 1>() = b * dt;
  const Eigen::Matrix<double, 5, 5> e = aug.exp();
  return {e.topLeftCorner<4, 4>(), e.topRightCorner<4, 1>()};
}

inline void discretize_zoh(ClosedLoopSystem& sys, double dt) {
  auto [ad, bd] = discretize_zoh(sys.a, sys.b, dt);
  sys.dt = dt;
  sys.ad = ad;
  sys.bd = bd;
}

/// Closed loop under u = p * grad - k^T (v, o, od).
inline ClosedLoopSystem closed_loop(const ControllerGains& gains, double g = kGravity, bool allow_unstable = false) {
  if (!gains.hurwitz(g) && !allow_unstable) {
    throw UnstableGainsError("closed_loop: gains (" + std::to_string(gains.k1) + ", " + std::to_string(gains.k2) +
                             ", " + std::to_string(gains.k3) + ") do not give a Hurwitz velocity loop");
  }
  ClosedLoopSystem sys;
  sys.g = g;
  sys.a = axis_plant(g);
  sys.a(3, 1) = -gains.k1;
  sys.a(3, 2) = -gains.k2;
  sys.a(3, 3) = -gains.k3;
  sys.b = Vector4(0.0, 0.0, 0.0, gains.p);
  return sys;
}

inline ClosedLoopSystem closed_loop(const ControllerGains& gains, double g, double dt, bool allow_unstable = false) {
  ClosedLoopSystem sys = closed_loop(gains, g, allow_unstable);
  discretize_zoh(sys, dt);
  return sys;
}

// Steady state of the velocity loop gives v = (p / k1) * grad, so p = k1.
inline double prefilter_for_unity_tracking(const ControllerGains& gains) {
  if (!(gains.k1 > 0.0)) throw DomainError("prefilter_for_unity_tracking: k1 must be > 0");
  return gains.k1;
}

inline AxisState step_controlled(const AxisState& state, double grad_component, const ClosedLoopSystem& sys) {
  return AxisState::from(sys.ad * state.vec() + sys.bd * grad_component);
}

// Explicit Euler step of x' = mu * grad.
inline Vector2 step_gradient_method(const Vector2& pos, const Vector2& grad, double mu, double dt) {
  if (!(mu > 0.0)) throw DomainError("step_gradient_method: mu must be > 0");
  if (!(dt > 0.0)) throw DomainError("step_gradient_method: dt must be > 0");
  return pos + mu * dt * grad;
}

namespace detail {

// Solves A^T X + X A + C = 0 for a 3x3 system through the Kronecker form.
inline Matrix3 solve_lyapunov3(const Matrix3& a, const Matrix3& c) {
  Eigen::Matrix<double, 9, 9> big = Eigen::Matrix<double, 9, 9>::Zero();
  const Matrix3 id = Matrix3::Identity();
  for (int r = 0; r < 3; ++r)
    for (int s = 0; s < 3; ++s) {
      // vec(A^T X) = (I kron A^T) vec X, vec(X A) = (A^T kron I) vec X
      big.block<3, 3>(3 * r, 3 * s) += id(r, s) * a.transpose();
      big.block<3, 3>(3 * r, 3 * s) += a(s, r) * id;
    }
  const Eigen::Matrix<double, 9, 1> rhs = -Eigen::Map<const Eigen::Matrix<double, 9, 1>>(c.data());
  const Eigen::Matrix<double, 9, 1> x = big.fullPivLu().solve(rhs);
  Matrix3 out = Eigen::Map<const Matrix3>(x.data());
  return 0.5 * (out + out.transpose());
}

}  // namespace detail

struct LqrDesign {
  ControllerGains gains;
  Matrix3 riccati = Matrix3::Zero();
  double residual = 0.0;
  int iterations = 0;
};

inline double care_residual(const Matrix3& a, const Vector3& b, const Matrix3& q, double r, const Matrix3& p) {
  return (a.transpose() * p + p * a - p * b * b.transpose() * p / r + q).norm();
}

/// LQR gains for the per-axis plant with zero weight on position. The position
/// integrator is left out of the feedback, so the Riccati equation is solved
/// on the (v, o, od) subsystem by Newton-Kleinman iteration from a
/// pole-placement seed with all poles at -1.
inline LqrDesign lqr_design(const Matrix4& state_weight, double input_weight, double g = kGravity,
                            int max_iters = 100, double tol = 1e-8) {
  if (!(input_weight > 0.0)) throw DesignError("lqr_design: input weight must be > 0");
  if (state_weight.row(0).norm() != 0.0 || state_weight.col(0).norm() != 0.0)
    throw DesignError("lqr_design: position must carry zero weight");
  const Matrix3 q = 0.5 * (state_weight.block<3, 3>(1, 1) + state_weight.block<3, 3>(1, 1).transpose());
  Eigen::SelfAdjointEigenSolver<Matrix3> qeig(q);
  if (qeig.eigenvalues().minCoeff() < -1e-12) throw DesignError("lqr_design: state weight must be PSD");

  const Matrix3 a = axis_plant(g).block<3, 3>(1, 1);
  const Vector3 b(0.0, 0.0, 1.0);
  Eigen::RowVector3d k(1.0 / g, 3.0, 3.0);

  LqrDesign out;
  Matrix3 p = Matrix3::Zero();
  for (int it = 1; it <= max_iters; ++it) {
    out.iterations = it;
    const Matrix3 acl = a - b * k;
    p = detail::solve_lyapunov3(acl, q + k.transpose() * input_weight * k);
    const Eigen::RowVector3d next = b.transpose() * p / input_weight;
    const double change = (next - k).norm();
    k = next;
    if (change <= 1e-14 * std::max(1.0, k.norm())) break;
  }
  out.riccati = p;
  out.residual = care_residual(a, b, q, input_weight, p);
  if (!std::isfinite(out.residual) || out.residual > tol * std::max(1.0, p.norm()))
    throw DesignError("lqr_design: Riccati iteration did not converge (residual " + std::to_string(out.residual) + ")");
  out.gains = {k[0], k[1], k[2], 0.0};
  out.gains.p = prefilter_for_unity_tracking(out.gains);
  return out;
}

inline LqrDesign lqr_design(const Vector3& velocity_weights, double input_weight, double g = kGravity) {
  Matrix4 w = Matrix4::Zero();
  w.block<3, 3>(1, 1) = velocity_weights.asDiagonal();
  return lqr_design(w, input_weight, g);
}

}  // namespace uavcran
