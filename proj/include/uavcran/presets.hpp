#pragma once

#include <cstdint>

#include "uavcran/orchestrator.hpp"
#include "uavcran/random.hpp"

namespace uavcran {

// Users drawn uniformly on a square field of side `field` centred at the origin.
inline std::vector<Position3> draw_users(int count, double field, std::uint64_t seed) {
  Rng rng(derive_seed(seed, SeedStream::UserLayout));
  std::vector<Position3> users;
  users.reserve(count);
  for (int i = 0; i < count; ++i) {
    const double x = rng.uniform(-field / 2.0, field / 2.0);
    const double y = rng.uniform(-field / 2.0, field / 2.0);
    users.push_back({x, y, 0.0});
  }
  return users;
}

inline constexpr double kPaperLikePower = 1e8;

/// Two 8-antenna UAVs at (-40,-40) and (40,40), 50 m altitude, six
/// single-antenna users drawn on a 100 m x 100 m field. The user layout is a
/// seeded stand-in for an unpublished layout.
inline Scenario paper_like_scenario(std::uint64_t seed) {
  Scenario s;
  s.seed = seed;
  s.channel = ChannelParams{};
  s.channel.n_rx = 8;
  s.channel.n_tx = 1;
  s.users = draw_users(6, 100.0, seed);
  s.p_max.assign(s.users.size(), kPaperLikePower);
  s.uavs = {{-40.0, -40.0, 50.0}, {40.0, 40.0, 50.0}};
  s.gains = ControllerGains::paper();
  s.timing = Timing{};
  return s;
}

}  // namespace uavcran
