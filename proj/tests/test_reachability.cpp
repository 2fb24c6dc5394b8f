#include <gtest/gtest.h>

#include <cmath>

#include "safegrid/harness.hpp"
#include "safegrid/reachability.hpp"

using namespace safegrid;

namespace {

GridSpec spec6() {
    GridSpec spec;
    spec.width = 6;
    spec.height = 6;
    spec.goal = {5, 3};
    spec.obstacle_column = 3;
    spec.obstacle_init_row = 1;
    spec.obstacle_init_dir = VertDir::Down;
    spec.agent_start = {0, 3};
    spec.agent_start_heading = Heading::East;
    spec.max_steps = 48;
    return spec;
}

// Trajectory along the obstacle column whose distances are the given row
// offsets.
Trajectory column_trajectory(const GridSpec& spec, std::initializer_list<int> distances,
                             int agent_y = 5) {
    Trajectory traj;
    for (int d : distances)
        traj.states.push_back(
            {spec.obstacle_column, agent_y, agent_y - d, VertDir::Down, Heading::East});
    traj.outcome = Outcome::Collision;
    return traj;
}

std::vector<Trajectory> rollout(const GridSpec& spec, int episodes, std::uint64_t seed) {
    QTable q(spec);
    LearnerConfig cfg{0.99, 0.5, 0.6, Algo::QLearning};
    Rng rng(seed);
    std::vector<Trajectory> out;
    for (int i = 0; i < episodes; ++i) {
        Trajectory traj;
        run_episode(spec, q, cfg, nullptr, rng, &traj);
        out.push_back(std::move(traj));
    }
    return out;
}

}  // namespace

TEST(SignedDistance, CoincidentCellsAreZero) {
    auto spec = spec6();
    TabularState s{3, 4, 4, VertDir::Down, Heading::East};
    EXPECT_DOUBLE_EQ(signed_distance(s, spec), 0.0);
}

TEST(SignedDistance, ThreeFourFiveTriangle) {
    auto spec = spec6();
    spec.width = 10;
    spec.height = 10;
    spec.obstacle_column = 4;
    TabularState s{1, 1, 5, VertDir::Down, Heading::East};
    EXPECT_DOUBLE_EQ(signed_distance(s, spec), 5.0);
}

TEST(SignedDistance, SameColumn) {
    auto spec = spec6();
    spec.width = 10;
    spec.height = 10;
    spec.obstacle_column = 2;
    TabularState s{2, 7, 9, VertDir::Down, Heading::East};
    EXPECT_DOUBLE_EQ(signed_distance(s, spec), 2.0);
}

TEST(ValueTrace, WindowedMinReachesCollision) {
    auto spec = spec6();
    auto traj = column_trajectory(spec, {3, 1, 0});
    auto v = value_trace(traj, 2, spec);
    EXPECT_EQ(v, (std::vector<double>{0.0, 0.0, 0.0}));
}

TEST(ValueTrace, SlidingWindowClipsAtEnd) {
    auto spec = spec6();
    auto traj = column_trajectory(spec, {5, 4, 3, 2, 1, 0});
    auto v = value_trace(traj, 2, spec);
    EXPECT_EQ(v, (std::vector<double>{3.0, 2.0, 1.0, 0.0, 0.0, 0.0}));
}

TEST(ValueTrace, SingleStateTrajectory) {
    auto spec = spec6();
    auto traj = column_trajectory(spec, {4});
    for (int t : {0, 1, 5}) {
        auto v = value_trace(traj, t, spec);
        ASSERT_EQ(v.size(), 1u);
        EXPECT_DOUBLE_EQ(v[0], 4.0);
    }
}

TEST(ValueTrace, PointwiseBelowRawDistanceAndEqualAtZeroHorizon) {
    auto spec = spec6();
    for (const auto& traj : rollout(spec, 50, 21)) {
        auto v0 = value_trace(traj, 0, spec);
        auto v2 = value_trace(traj, 2, spec);
        for (std::size_t i = 0; i < traj.states.size(); ++i) {
            EXPECT_DOUBLE_EQ(v0[i], signed_distance(traj.states[i], spec));
            EXPECT_LE(v2[i], v0[i]);
        }
    }
}

TEST(ValueTrace, MonotoneInHorizon) {
    auto spec = spec6();
    for (const auto& traj : rollout(spec, 50, 22)) {
        auto v1 = value_trace(traj, 1, spec);
        auto v2 = value_trace(traj, 2, spec);
        auto v3 = value_trace(traj, 3, spec);
        for (std::size_t i = 0; i < traj.states.size(); ++i) {
            EXPECT_LE(v2[i], v1[i]);
            EXPECT_LE(v3[i], v2[i]);
        }
    }
}

TEST(BrsLabels, AppliesSublevelRule) {
    EXPECT_EQ(brs_labels({3, 2, 1, 0, 0, 0}),
              (std::vector<bool>{false, false, false, true, true, true}));
    EXPECT_EQ(brs_labels({2.5, 0.1, 1.0}), (std::vector<bool>{false, false, false}));
}

// On collision trajectories whose distance drops by at most 1 per step,
// exactly the last min(3, length) states carry the BRS label at t = 2.
TEST(BrsLabels, CollisionTailLabeling) {
    auto spec = spec6();
    int checked = 0;
    for (const auto& traj : rollout(spec, 2000, 23)) {
        if (traj.outcome != Outcome::Collision) continue;
        auto dist = value_trace(traj, 0, spec);
        bool slow = true;
        for (std::size_t i = 0; i + 1 < dist.size(); ++i)
            if (dist[i] - dist[i + 1] > 1.0 + 1e-9) slow = false;
        if (!slow) continue;
        ++checked;
        auto labels = brs_labels(value_trace(traj, 2, spec));
        std::size_t tail = std::min<std::size_t>(3, labels.size());
        for (std::size_t i = 0; i < labels.size(); ++i)
            EXPECT_EQ(labels[i], i >= labels.size() - tail) << "index " << i;
    }
    EXPECT_GT(checked, 0);
}

TEST(BruteForceBrs, AdjacentApproachingStateIsMember) {
    auto spec = spec6();
    auto brs = brute_force_brs(spec, 1);
    // obstacle one row above the agent and moving down: DoNothing collides
    TabularState s{3, 4, 3, VertDir::Down, Heading::North};
    EXPECT_TRUE(brs.count(s));
}

TEST(BruteForceBrs, SpeedBoundExcludesFarStates) {
    auto spec = spec6();
    for (int t : {1, 2}) {
        auto brs = brute_force_brs(spec, t);
        for (const auto& s : brs)
            EXPECT_LE(signed_distance(s, spec), 2.0 * t) << "horizon " << t;
    }
}

TEST(BruteForceBrs, ContainsAllFailureStates) {
    auto spec = spec6();
    auto brs = brute_force_brs(spec, 0);
    for (int y = 0; y < 6; ++y)
        for (int dir = 0; dir < 2; ++dir)
            for (int h = 0; h < 4; ++h) {
                TabularState s{3, y, y, static_cast<VertDir>(dir), static_cast<Heading>(h)};
                EXPECT_TRUE(brs.count(s));
            }
    // at horizon 0 membership is exactly the failure states
    for (const auto& s : brs) EXPECT_DOUBLE_EQ(signed_distance(s, spec), 0.0);
}

TEST(BruteForceBrs, MonotoneInHorizon) {
    auto spec = spec6();
    auto prev = brute_force_brs(spec, 0);
    for (int t = 1; t <= 3; ++t) {
        auto cur = brute_force_brs(spec, t);
        for (const auto& s : prev) EXPECT_TRUE(cur.count(s)) << "horizon " << t;
        prev = std::move(cur);
    }
}

TEST(BruteForceBrs, TrajectoryLabelsAreSound) {
    auto spec = spec6();
    auto oracle = brute_force_brs(spec, 2);
    for (const auto& traj : rollout(spec, 1000, 24)) {
        auto labels = brs_labels(value_trace(traj, 2, spec));
        for (std::size_t i = 0; i < labels.size(); ++i)
            if (labels[i]) EXPECT_TRUE(oracle.count(traj.states[i]));
    }
}

TEST(BruteForceBrs, RefusesIntractableSizes) {
    GridSpec spec;
    spec.width = 50;
    spec.height = 50;
    spec.goal = {49, 25};
    spec.obstacle_column = 10;
    spec.agent_start = {0, 25};
    spec.max_steps = 400;
    EXPECT_THROW(brute_force_brs(spec, 10), SpecError);
}
