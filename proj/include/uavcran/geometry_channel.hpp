#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "uavcran/random.hpp"
#include "uavcran/types.hpp"

namespace uavcran {

struct ChannelParams {
  double alpha = 2.0;            // path-loss exponent
  double d0 = 1.0;               // reference distance [m]
  double pl_d0_db = 40.0;        // path loss at d0 [dB]
  double sigma_shadow_db = 0.0;  // static shadowing std-dev [dB]
  int n_rx = 8;                  // antennas per UAV
  int n_tx = 1;                  // antennas per user

  friend bool operator==(const ChannelParams&, const ChannelParams&) = default;

  void validate() const {
    if (!(alpha > 0.0) || !std::isfinite(alpha)) throw ValidationError("channel.alpha must be > 0");
    if (!(d0 > 0.0) || !std::isfinite(d0)) throw ValidationError("channel.d0 must be > 0");
    if (!std::isfinite(pl_d0_db)) throw ValidationError("channel.pl_d0_db must be finite");
    if (!(sigma_shadow_db >= 0.0)) throw ValidationError("channel.sigma_shadow_db must be >= 0");
    if (n_rx < 1) throw ValidationError("channel.n_rx must be >= 1");
    if (n_tx < 1) throw ValidationError("channel.n_tx must be >= 1");
  }
};

inline double distance(const Position3& uav, const Position3& user) {
  if (!uav.finite() || !user.finite()) throw DomainError("distance: non-finite position");
  const double d = std::hypot(uav.x - user.x, uav.y - user.y, uav.z - user.z);
  if (!(d > 0.0)) throw DegenerateGeometryError("distance: UAV and user coincide");
  return d;
}

// 10 alpha log10(d/d0) + PL(d0) + w
inline double path_loss_db(double d, const ChannelParams& params, double shadow_db = 0.0) {
  if (!(d > 0.0)) throw DomainError("path_loss_db: distance must be > 0");
  return 10.0 * params.alpha * std::log10(d / params.d0) + params.pl_d0_db + shadow_db;
}

// Linear reference gain: |H_mn|^2 = beta * d^-alpha.
inline double beta(const ChannelParams& params) {
  return std::pow(10.0, -params.pl_d0_db / 10.0) * std::pow(params.d0, params.alpha);
}

/// Unit-modulus phase matrices for every (UAV, user) pair, plus an optional
/// static shadowing draw per pair. Drawn once from a seed and never updated
/// when positions change.
class PhaseField {
 public:
  PhaseField() = default;

  PhaseField(int n_uavs, int n_users, const ChannelParams& params, std::uint64_t seed)
      : n_uavs_(n_uavs), n_users_(n_users), seed_(seed) {
    Rng rng(seed);
    phases_.reserve(static_cast<std::size_t>(n_uavs) * n_users);
    for (int k = 0; k < n_uavs; ++k) {
      for (int i = 0; i < n_users; ++i) {
        RMatrix phi(params.n_rx, params.n_tx);
        for (int m = 0; m < params.n_rx; ++m)
          for (int n = 0; n < params.n_tx; ++n) phi(m, n) = 2.0 * std::numbers::pi * rng.uniform();
        phases_.push_back(std::move(phi));
      }
    }
    shadow_db_.assign(phases_.size(), 0.0);
    if (params.sigma_shadow_db > 0.0) {
      for (auto& w : shadow_db_) w = params.sigma_shadow_db * rng.normal();
    }
  }

  // All-zero phases and no shadowing; convenient for closed-form checks.
  static PhaseField zeros(int n_uavs, int n_users, const ChannelParams& params) {
    PhaseField f;
    f.n_uavs_ = n_uavs;
    f.n_users_ = n_users;
    f.phases_.assign(static_cast<std::size_t>(n_uavs) * n_users, RMatrix::Zero(params.n_rx, params.n_tx));
    f.shadow_db_.assign(f.phases_.size(), 0.0);
    return f;
  }

  const RMatrix& phase(int k, int i) const { return phases_.at(index(k, i)); }
  RMatrix& phase(int k, int i) { return phases_.at(index(k, i)); }
  double shadow_db(int k, int i) const { return shadow_db_.at(index(k, i)); }

  int n_uavs() const { return n_uavs_; }
  int n_users() const { return n_users_; }
  std::uint64_t seed() const { return seed_; }

 private:
  std::size_t index(int k, int i) const {
    if (k < 0 || k >= n_uavs_ || i < 0 || i >= n_users_) throw InvariantError("PhaseField: index out of range");
    return static_cast<std::size_t>(k) * n_users_ + i;
  }

  int n_uavs_ = 0;
  int n_users_ = 0;
  std::uint64_t seed_ = 0;
  std::vector<RMatrix> phases_;
  std::vector<double> shadow_db_;
};

// sqrt(beta) d^(-alpha/2) 10^(-w/20) exp(j Phi)
inline CMatrix channel_matrix(const Position3& uav, const Position3& user, const ChannelParams& params,
                              const RMatrix& phase, double shadow_db = 0.0) {
  const double d = distance(uav, user);
  const double amplitude =
      std::sqrt(beta(params)) * std::pow(d, -params.alpha / 2.0) * std::pow(10.0, -shadow_db / 20.0);
  CMatrix h(phase.rows(), phase.cols());
  for (Eigen::Index m = 0; m < phase.rows(); ++m)
    for (Eigen::Index n = 0; n < phase.cols(); ++n) h(m, n) = std::polar(amplitude, phase(m, n));
  return h;
}

inline CMatrix channel_matrix(int k, int i, std::span<const Position3> uavs, std::span<const Position3> users,
                              const ChannelParams& params, const PhaseField& phases) {
  return channel_matrix(uavs[k], users[i], params, phases.phase(k, i), phases.shadow_db(k, i));
}

/// Per-pair channel blocks H_{Uk,i} and the stacked aggregate H_i of every user.
struct ChannelSet {
  int n_uavs = 0;
  int n_users = 0;
  int n_rx = 0;
  int n_tx = 0;
  std::vector<CMatrix> blocks;     // index k * n_users + i
  std::vector<CMatrix> aggregate;  // index i, (n_uavs*n_rx) x n_tx

  const CMatrix& block(int k, int i) const { return blocks.at(static_cast<std::size_t>(k) * n_users + i); }
  int rows() const { return n_uavs * n_rx; }
};

inline CMatrix aggregate_channel(int i, const ChannelSet& set) {
  if (static_cast<int>(set.blocks.size()) != set.n_uavs * set.n_users)
    throw InvariantError("aggregate_channel: missing channel blocks");
  CMatrix stacked(set.n_uavs * set.n_rx, set.n_tx);
  for (int k = 0; k < set.n_uavs; ++k) {
    const CMatrix& b = set.block(k, i);
    if (b.rows() != set.n_rx || b.cols() != set.n_tx) throw InvariantError("aggregate_channel: block shape mismatch");
    stacked.middleRows(k * set.n_rx, set.n_rx) = b;
  }
  return stacked;
}

inline ChannelSet build_channels(std::span<const Position3> uavs, std::span<const Position3> users,
                                 const ChannelParams& params, const PhaseField& phases) {
  ChannelSet set;
  set.n_uavs = static_cast<int>(uavs.size());
  set.n_users = static_cast<int>(users.size());
  set.n_rx = params.n_rx;
  set.n_tx = params.n_tx;
  set.blocks.reserve(uavs.size() * users.size());
  for (int k = 0; k < set.n_uavs; ++k)
    for (int i = 0; i < set.n_users; ++i) set.blocks.push_back(channel_matrix(k, i, uavs, users, params, phases));
  set.aggregate.reserve(users.size());
  for (int i = 0; i < set.n_users; ++i) set.aggregate.push_back(aggregate_channel(i, set));
  return set;
}

}  // namespace uavcran
