#pragma once

#include <array>
#include <cmath>
#include <span>
#include <vector>

#include "uavcran/geometry_channel.hpp"
#include "uavcran/min_norm.hpp"
#include "uavcran/rate_region.hpp"
#include "uavcran/types.hpp"

namespace uavcran {

// Horizontal axes only; the vertical component of every gradient is zero.
inline constexpr int kHorizontalAxes = 2;

/// Gradient of the min-rate with respect to each UAV position, in rate units per meter.
struct RateGradient {
  std::vector<Eigen::Vector3d> per_uav;

  double max_norm() const {
    double n = 0.0;
    for (const auto& g : per_uav) n = std::max(n, g.norm());
    return n;
  }
};

// Geometric chain-rule factor (alpha/2) (x_i - x_U) / |x_i - x_U|^2 along one axis.
inline double channel_derivative_factor(const Position3& uav, const Position3& user, const ChannelParams& params,
                                        int axis) {
  const double d = distance(uav, user);
  return 0.5 * params.alpha * (user[axis] - uav[axis]) / (d * d);
}

/// dH_{Uk,i}/dx_{Uk,axis} with the phase term omitted (phases are frozen).
inline CMatrix channel_pos_derivative(const Position3& uav, const Position3& user, const CMatrix& block,
                                      const ChannelParams& params, int axis) {
  return block * Complex(channel_derivative_factor(uav, user, params, axis));
}

inline CMatrix channel_pos_derivative(int k, int i, std::span<const Position3> uavs, std::span<const Position3> users,
                                      const ChannelSet& channels, const ChannelParams& params, int axis) {
  return channel_pos_derivative(uavs[k], users[i], channels.block(k, i), params, axis);
}

/// d/dx_{Uk,axis} of sum_{i in S} H_i Q_i H_i^H. Only the k-th row block of H_i
/// depends on UAV k, which is the zero-padded embedding E_k H_{Uk,i}.
inline CMatrix hqh_derivative_sum(const Subset& subset, int k, int axis, std::span<const Position3> uavs,
                                  std::span<const Position3> users, const ChannelSet& channels,
                                  const CovarianceSet& covs, const ChannelParams& params) {
  const int rows = channels.rows();
  CMatrix sum = CMatrix::Zero(rows, rows);
  for (int i : subset) {
    const double c = channel_derivative_factor(uavs[k], users[i], params, axis);
    if (c == 0.0) continue;
    CMatrix embedded = CMatrix::Zero(rows, channels.n_tx);
    embedded.middleRows(k * channels.n_rx, channels.n_rx) = channels.block(k, i);
    const CMatrix cross = embedded * covs.q[i] * channels.aggregate[i].adjoint();
    sum += Complex(c) * (cross + cross.adjoint());
  }
  return sum;
}

namespace detail {

inline double trace_derivative(const Eigen::LLT<CMatrix>& llt, const CMatrix& d, LogBase base) {
  const CMatrix solved = llt.solve(d);
  const Complex tr = solved.trace();
  if (std::abs(tr.imag()) > 1e-10 * (std::abs(tr.real()) + solved.norm()) + 1e-300)
    throw NumericalError("subset_rate_derivative: trace has a non-negligible imaginary part");
  return 0.5 * log_scale(base) * tr.real();
}

}  // namespace detail

/// Derivative of sum_rate_bound(S) with respect to x_{Uk,axis}:
/// (1/2) trace{(I + sum H Q H^H)^{-1} dSum}, scaled to the requested log base.
/// The inverse is applied through the Cholesky factor.
inline double subset_rate_derivative(const Subset& subset, int k, int axis, std::span<const Position3> uavs,
                                     std::span<const Position3> users, const ChannelSet& channels,
                                     const CovarianceSet& covs, const ChannelParams& params,
                                     LogBase base = LogBase::Bits) {
  const auto terms = user_gram_terms(channels, covs);
  const auto llt = factor_gram(subset_gram(subset, terms, channels.rows()), subset);
  return detail::trace_derivative(llt, hqh_derivative_sum(subset, k, axis, uavs, users, channels, covs, params), base);
}

/// Horizontal gradient of sum_rate_bound(S)/|S| for every UAV, sharing one factorization.
inline RateGradient normalized_subset_gradient(const Subset& subset, std::span<const Position3> uavs,
                                               std::span<const Position3> users, const ChannelSet& channels,
                                               const CovarianceSet& covs, const ChannelParams& params,
                                               LogBase base = LogBase::Bits) {
  const auto terms = user_gram_terms(channels, covs);
  const auto llt = factor_gram(subset_gram(subset, terms, channels.rows()), subset);
  const double card = static_cast<double>(subset.size());
  RateGradient out;
  out.per_uav.assign(uavs.size(), Eigen::Vector3d::Zero());
  for (int k = 0; k < static_cast<int>(uavs.size()); ++k) {
    for (int axis = 0; axis < kHorizontalAxes; ++axis) {
      const CMatrix d = hqh_derivative_sum(subset, k, axis, uavs, users, channels, covs, params);
      out.per_uav[k][axis] = detail::trace_derivative(llt, d, base) / card;
    }
  }
  return out;
}

struct MinRateGradient {
  MinRateResult rate;
  RateGradient gradient;
};

/// Evaluates the binding subset once, then rho_{S_min}^{k,axis} / |S_min| for every UAV and horizontal axis.
inline MinRateGradient min_rate_gradient(std::span<const Position3> uavs, std::span<const Position3> users,
                                         const ChannelSet& channels, const CovarianceSet& covs,
                                         const ChannelParams& params, LogBase base = LogBase::Bits,
                                         int max_users = kDefaultMaxUsers) {
  MinRateGradient out;
  out.rate = min_rate(channels, covs, base, max_users);
  out.gradient = normalized_subset_gradient(out.rate.s_min, uavs, users, channels, covs, params, base);
  return out;
}

enum class Steering {
  BindingSubset,  // gradient of the binding subset only
  MinNormActive,  // min-norm element of the hull of all eps-active subset gradients
};

struct SteeringSettings {
  Steering mode = Steering::MinNormActive;
  double eps = 0.05;  // active band above r_min, in rate units

  friend bool operator==(const SteeringSettings&, const SteeringSettings&) = default;
};

/// Direction the UAVs are steered along. With a single subset inside the
/// active band this is the min-rate gradient itself. When several subsets are
/// nearly binding, the shortest vector in the convex hull of their joint
/// (all-UAV) gradients is used; it vanishes at a max-min optimum where the
/// single-subset gradient does not.
inline MinRateGradient steering_direction(std::span<const Position3> uavs, std::span<const Position3> users,
                                          const ChannelSet& channels, const CovarianceSet& covs,
                                          const ChannelParams& params, const SteeringSettings& steering,
                                          LogBase base = LogBase::Bits, int max_users = kDefaultMaxUsers) {
  if (steering.mode == Steering::BindingSubset)
    return min_rate_gradient(uavs, users, channels, covs, params, base, max_users);
  if (!(steering.eps >= 0.0)) throw ValidationError("control.steering_eps must be >= 0");

  const SubsetValues all = subset_values(channels, covs, base, max_users);
  const double best = *std::min_element(all.values.begin(), all.values.end());
  MinRateGradient out;
  for (std::size_t s = 0; s < all.subsets.size(); ++s) {
    if (all.values[s] <= best + kSubsetTieTolerance) {
      out.rate = {all.values[s], all.subsets[s]};
      break;
    }
  }
  std::vector<std::size_t> active;
  for (std::size_t s = 0; s < all.subsets.size(); ++s)
    if (all.values[s] <= best + std::max(steering.eps, kSubsetTieTolerance)) active.push_back(s);

  const int n_uavs = static_cast<int>(uavs.size());
  RMatrix points(kHorizontalAxes * n_uavs, static_cast<Eigen::Index>(active.size()));
  for (std::size_t a = 0; a < active.size(); ++a) {
    const RateGradient g = normalized_subset_gradient(all.subsets[active[a]], uavs, users, channels, covs, params, base);
    for (int k = 0; k < n_uavs; ++k) points.block<2, 1>(2 * k, static_cast<Eigen::Index>(a)) = g.per_uav[k].head<2>();
  }
  const RVector direction = points * min_norm_point_weights(points);
  out.gradient.per_uav.assign(uavs.size(), Eigen::Vector3d::Zero());
  for (int k = 0; k < n_uavs; ++k) out.gradient.per_uav[k].head<2>() = direction.segment<2>(2 * k);
  return out;
}

}  // namespace uavcran
