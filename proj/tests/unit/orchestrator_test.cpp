#include <cmath>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "uavcran/orchestrator.hpp"
#include "uavcran/presets.hpp"

using namespace uavcran;

namespace {

Scenario overhead() {
  Scenario s;
  s.channel.n_rx = 1;
  s.channel.n_tx = 1;
  s.users = {{0, 0, 0}};
  s.p_max = {1e8};
  s.uavs = {{0, 0, 50}};
  return s;
}

Scenario small_scenario() {
  Scenario s;
  s.channel.n_rx = 2;
  s.channel.n_tx = 1;
  s.users = {{-20, 10, 0}, {25, -5, 0}, {5, 30, 0}};
  s.p_max.assign(3, 1e8);
  s.uavs = {{-40, -40, 50}, {40, 40, 50}};
  s.timing.end = 5.0;
  s.seed = 3;
  return s;
}

bool same_log(const SimLog& a, const SimLog& b) {
  if (a.rows.size() != b.rows.size() || a.mu != b.mu) return false;
  for (std::size_t r = 0; r < a.rows.size(); ++r) {
    const auto &x = a.rows[r], &y = b.rows[r];
    if (x.t != y.t || x.r_min != y.r_min || x.s_min != y.s_min || x.trace_q != y.trace_q) return false;
    for (std::size_t k = 0; k < x.position.size(); ++k)
      if (x.position[k] != y.position[k] || x.velocity[k] != y.velocity[k] || x.gradient[k] != y.gradient[k])
        return false;
  }
  return true;
}

}  // namespace

TEST(Run, OverheadUavStaysPut) {
  Scenario s = overhead();
  s.timing.end = 60.0;
  const SimLog log = run(s);
  ASSERT_EQ(log.rows.size(), 601u);
  for (const auto& row : log.rows) {
    EXPECT_LT(row.position[0].norm(), 1e-3);
    EXPECT_EQ(row.s_min, Subset({0}));
  }
}

TEST(Run, LogShape) {
  const Scenario s = small_scenario();
  const SimLog log = run(s);
  ASSERT_EQ(log.rows.size(), static_cast<std::size_t>(s.timing.end / s.timing.sample) + 1);
  EXPECT_EQ(log.altitude, 50.0);
  EXPECT_EQ(log.n_uavs, 2);
  for (std::size_t r = 0; r < log.rows.size(); ++r) {
    const auto& row = log.rows[r];
    EXPECT_NEAR(row.t, r * s.timing.sample, 1e-12);
    if (r > 0) {
      EXPECT_GT(row.t, log.rows[r - 1].t);
    }
    EXPECT_EQ(row.position.size(), 2u);
    EXPECT_EQ(row.velocity.size(), 2u);
    EXPECT_EQ(row.gradient.size(), 2u);
    ASSERT_EQ(row.trace_q.size(), 3u);
    for (int i = 0; i < 3; ++i) EXPECT_LE(row.trace_q[i], s.p_max[i] * (1 + 1e-12));
    EXPECT_FALSE(row.s_min.empty());
  }
  EXPECT_EQ(log.rows.front().position[0], Vector2(-40, -40));
  EXPECT_EQ(log.rows.front().velocity[0], Vector2::Zero());
}

TEST(Run, Deterministic) {
  const Scenario s = small_scenario();
  EXPECT_TRUE(same_log(run(s), run(s)));
  Scenario other = s;
  other.seed = 4;
  EXPECT_FALSE(same_log(run(s), run(other)));
}

TEST(Run, RateImprovesOnShortPaperLikeRun) {
  Scenario s = paper_like_scenario(2);
  s.timing.end = 20.0;
  const SimLog log = run(s);
  EXPECT_GT(log.rows.back().r_min, log.rows.front().r_min);
  EXPECT_FALSE(log.small_angle_exceeded);
  EXPECT_NEAR(log.mu * [&] {
    double g = 0.0;
    for (const auto& v : log.rows.front().gradient) g = std::max(g, v.norm());
    return g;
  }(), s.v_ref, 1e-9);
}

TEST(Run, GradientMethodVelocityIsScaledGradient) {
  Scenario s = small_scenario();
  s.method = Method::Gradient;
  s.mu = 2000.0;
  const SimLog log = run(s);
  EXPECT_EQ(log.mu, 2000.0);
  for (std::size_t r = 0; r + 1 < log.rows.size(); ++r)
    for (int k = 0; k < 2; ++k) {
      EXPECT_EQ(log.rows[r].velocity[k], 2000.0 * log.rows[r].gradient[k]);
      const Vector2 expected = log.rows[r].position[k] + 2000.0 * s.timing.sample * log.rows[r].gradient[k];
      EXPECT_LT((log.rows[r + 1].position[k] - expected).norm(), 1e-12);
    }
}

TEST(Run, ControlledMatchesDirectZohPropagation) {
  // Re-propagate the first UAV from the logged gradients with the ZOH pair
  // and compare against the logged positions.
  Scenario s = small_scenario();
  s.mu = 1500.0;
  const SimLog log = run(s);
  const ClosedLoopSystem sys = closed_loop(s.gains, s.gravity, s.timing.dt);
  std::array<AxisState, 2> axes{AxisState::at_rest(-40), AxisState::at_rest(-40)};
  for (std::size_t r = 0; r + 1 < log.rows.size(); ++r) {
    for (int a = 0; a < 2; ++a)
      for (int j = 0; j < s.timing.steps_per_sample(); ++j)
        axes[a] = step_controlled(axes[a], 1500.0 * log.rows[r].gradient[0][a], sys);
    EXPECT_EQ(log.rows[r + 1].position[0], Vector2(axes[0].x, axes[1].x));
    EXPECT_EQ(log.rows[r + 1].velocity[0], Vector2(axes[0].v, axes[1].v));
  }
}

TEST(Run, NearEquilibriumStationarity) {
  Scenario s = overhead();
  s.timing.end = 10.0;
  s.mu = 1.0;
  const SimLog log = run(s);
  for (std::size_t r = 0; r + 1 < log.rows.size(); ++r) {
    EXPECT_LT(log.rows[r].gradient[0].norm(), 1e-6);
    EXPECT_LT((log.rows[r + 1].position[0] - log.rows[r].position[0]).norm(), 1e-4);
  }
}

TEST(Run, BindingSubsetSteeringAlsoRuns) {
  Scenario s = small_scenario();
  s.steering.mode = Steering::BindingSubset;
  const SimLog log = run(s);
  EXPECT_EQ(log.rows.size(), 51u);
}

TEST(Run, ErrorsCarryValidationKey) {
  Scenario s = small_scenario();
  s.timing.sample = 0.015;
  try {
    run(s);
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("timing.sample"), std::string::npos);
  }
}

TEST(Scenario, Validation) {
  EXPECT_NO_THROW(small_scenario().validate());
  auto expect_key = [](Scenario s, const std::string& key) {
    try {
      s.validate();
      ADD_FAILURE() << "no error for " << key;
    } catch (const ValidationError& e) {
      EXPECT_NE(std::string(e.what()).find(key), std::string::npos) << e.what();
    }
  };
  Scenario s = small_scenario();
  s.users.clear();
  s.p_max.clear();
  expect_key(s, "users");
  s = small_scenario();
  s.uavs.clear();
  expect_key(s, "uavs");
  s = small_scenario();
  s.uavs[1].z = 40;
  expect_key(s, "altitude");
  s = small_scenario();
  s.users[0].z = 50;
  expect_key(s, "users");
  s = small_scenario();
  s.timing.end = 5.05;
  expect_key(s, "timing.end");
  s = small_scenario();
  s.timing.end = 0.05;
  expect_key(s, "timing.end");
  s = small_scenario();
  s.p_max[1] = 0.0;
  expect_key(s, "p_max");
  s = small_scenario();
  s.gains = {0.0, 1.0, 1.0, 0.0};
  expect_key(s, "gains");
  s.allow_unstable = true;
  EXPECT_NO_THROW(s.validate());
  s = small_scenario();
  s.mu = -1.0;
  expect_key(s, "mu");
  s = small_scenario();
  s.schedule = {{10.0, 0, {0, 0, 0}}, {5.0, 1, {0, 0, 0}}};
  expect_key(s, "schedule");
  s = small_scenario();
  s.schedule = {{10.0, 7, {0, 0, 0}}};
  expect_key(s, "schedule");
}

TEST(Schedule, EmptyKeepsPositions) {
  const Scenario s = small_scenario();
  for (double t : {0.0, 3.0, 1e6}) EXPECT_EQ(apply_user_schedule(s, t), s.users);
}

TEST(Schedule, PiecewiseConstantLookup) {
  Scenario s = small_scenario();
  s.schedule = {{1.0, 0, {5, 5, 0}}, {2.0, 0, {-5, 0, 0}}, {2.0, 2, {9, 9, 0}}};
  EXPECT_EQ(apply_user_schedule(s, 0.99)[0], s.users[0]);
  EXPECT_EQ(apply_user_schedule(s, 1.0)[0], Position3(5, 5, 0));
  EXPECT_EQ(apply_user_schedule(s, 1.5)[0], Position3(5, 5, 0));
  const auto late = apply_user_schedule(s, 2.0);
  EXPECT_EQ(late[0], Position3(-5, 0, 0));
  EXPECT_EQ(late[2], Position3(9, 9, 0));
  EXPECT_EQ(late[1], s.users[1]);
  s.schedule = {{2.0, 0, {5, 5, 0}}, {1.0, 0, {5, 5, 0}}};
  EXPECT_THROW(apply_user_schedule(s, 3.0), ValidationError);
}

TEST(Schedule, JumpIsSeenAtNextSample) {
  Scenario s = small_scenario();
  s.timing.end = 2.0;
  s.schedule = {{1.0, 1, {-30, -30, 0}}};
  const SimLog log = run(s);
  const PhaseField phases(2, 3, s.channel, derive_seed(s.seed, SeedStream::Phases));
  // rows before the jump see the original geometry, the row at t = 1 the new one
  for (std::size_t r : {std::size_t{9}, std::size_t{10}}) {
    const auto& row = log.rows[r];
    std::vector<Position3> uavs;
    for (const auto& p : row.position) uavs.push_back({p.x(), p.y(), 50});
    const auto users = apply_user_schedule(s, row.t);
    EXPECT_EQ(users[1] == Position3(-30, -30, 0), r == 10);
    const ChannelSet ch = build_channels(uavs, users, s.channel, phases);
    const auto cov = CovarianceSet::isotropic(s.p_max, 1);
    const auto fresh = steering_direction(uavs, users, ch, cov, s.channel, s.steering);
    EXPECT_NEAR(fresh.rate.r_min, row.r_min, 1e-12);
    for (int k = 0; k < 2; ++k) EXPECT_LT((fresh.gradient.per_uav[k].head<2>() - row.gradient[k]).norm(), 1e-15);
  }
}

TEST(Schedule, JumpToSamePositionIsInvisible) {
  Scenario s = small_scenario();
  Scenario same = s;
  same.schedule = {{1.0, 1, s.users[1]}};
  EXPECT_TRUE(same_log(run(s), run(same)));
}

TEST(Summary, Fields) {
  const SimLog log = run(small_scenario());
  const RunSummary sum = summarize(log);
  EXPECT_EQ(sum.initial_r_min, log.rows.front().r_min);
  EXPECT_EQ(sum.final_r_min, log.rows.back().r_min);
  ASSERT_EQ(sum.arc_length.size(), 2u);
  for (int k = 0; k < 2; ++k) {
    EXPECT_GE(sum.arc_length[k], (log.rows.back().position[k] - log.rows.front().position[k]).norm() - 1e-12);
    EXPECT_EQ(sum.final_position[k], log.rows.back().position[k]);
    EXPECT_EQ(sum.final_speed[k], log.rows.back().velocity[k].norm());
  }
  EXPECT_GE(sum.t95, 0.0);
  EXPECT_LE(sum.t95, log.rows.back().t);
  EXPECT_THROW(summarize(SimLog{}), InvariantError);
}

TEST(Summary, T95OnSyntheticLog) {
  SimLog log;
  log.n_uavs = 1;
  for (int n = 0; n <= 10; ++n) {
    SampleRow row;
    row.t = n;
    row.r_min = 1.0 + std::min(n, 4) * 0.25;  // reaches 2.0 at t = 4
    row.position = {Vector2(n, 0)};
    row.velocity = {Vector2(1, 0)};
    row.gradient = {Vector2::Zero()};
    log.rows.push_back(row);
  }
  const RunSummary s = summarize(log);
  EXPECT_EQ(s.t95, 4.0);
  EXPECT_EQ(s.arc_length[0], 10.0);
}

TEST(Compare, SharedStartAndScale) {
  const MethodComparison c = compare_methods(small_scenario());
  EXPECT_EQ(c.controlled.rows.front().r_min, c.gradient.rows.front().r_min);
  EXPECT_EQ(c.controlled.rows.front().s_min, c.gradient.rows.front().s_min);
  EXPECT_EQ(c.controlled.mu, c.gradient.mu);
  EXPECT_EQ(c.controlled.method, Method::Controlled);
  EXPECT_EQ(c.gradient.method, Method::Gradient);
  EXPECT_EQ(c.controlled_summary.method, Method::Controlled);
}

TEST(Compare, ZeroUsersRejected) {
  Scenario s = small_scenario();
  s.users.clear();
  s.p_max.clear();
  EXPECT_THROW(compare_methods(s), ValidationError);
}

TEST(Presets, PaperLikeLayout) {
  const Scenario s = paper_like_scenario(5);
  EXPECT_EQ(s.n_users(), 6);
  EXPECT_EQ(s.n_uavs(), 2);
  EXPECT_EQ(s.uavs[0], Position3(-40, -40, 50));
  EXPECT_EQ(s.uavs[1], Position3(40, 40, 50));
  EXPECT_EQ(s.channel.n_rx, 8);
  EXPECT_EQ(s.channel.n_tx, 1);
  for (const auto& u : s.users) {
    EXPECT_LE(std::abs(u.x), 50.0);
    EXPECT_LE(std::abs(u.y), 50.0);
    EXPECT_EQ(u.z, 0.0);
  }
  EXPECT_EQ(draw_users(6, 100.0, 5), s.users);
  EXPECT_NE(draw_users(6, 100.0, 6), s.users);
}
