#include <catch2/catch_amalgamated.hpp>

#include <queue>
#include <set>

#include "gridnav/rng.hpp"
#include "gridnav/world.hpp"

using namespace gridnav;

namespace {

WorldGrid open_world(int w, int h, double res = 1.0) {
    return WorldGrid(w, h, res);
}

}  // namespace

TEST_CASE("world_from_rows decodes cell classes and orientation") {
    const WorldGrid w = world_from_rows({"#.c", "v.s", "r.."}, 0.5, 0.35);
    CHECK(w.width() == 3);
    CHECK(w.height() == 3);
    // rows[0] is the top row (y = 2).
    CHECK(w.at({0, 2}).occupancy == Occupancy::PositiveObstacle);
    CHECK(w.at({2, 2}).item == MissionItem::CommNode);
    CHECK(w.at({0, 1}).occupancy == Occupancy::NegativeObstacle);
    CHECK(w.at({2, 1}).slope == Catch::Approx(0.35));
    CHECK(w.at({0, 0}).item == MissionItem::OtherRobot);
    CHECK(w.at({1, 1}).occupancy == Occupancy::Free);
    CHECK_THROWS_AS(world_from_rows({"..", "..."}, 1.0, 0.3), std::invalid_argument);
    CHECK_THROWS_AS(world_from_rows({"x"}, 1.0, 0.3), std::invalid_argument);
}

TEST_CASE("step to an adjacent free waypoint advances exactly one cell") {
    const WorldGrid w = open_world(10, 10);
    RobotState s;
    s.pose = {2.5, 2.5, 0.0};
    Rng rng(1);
    const RobotState next = step_robot(s, {5, 2}, w, {0.0}, rng);
    CHECK(next.pose.x == Catch::Approx(3.5));
    CHECK(next.pose.y == Catch::Approx(2.5));
    CHECK(next.tick == 1);
    CHECK_FALSE(next.failed);
}

TEST_CASE("waypoint at the current cell is a fixed point") {
    const WorldGrid w = open_world(5, 5);
    RobotState s;
    s.pose = {2.5, 2.5, 1.0};
    Rng rng(1);
    const RobotState next = step_robot(s, {2, 2}, w, {0.0}, rng);
    CHECK(next.pose.x == Catch::Approx(2.5));
    CHECK(next.pose.y == Catch::Approx(2.5));
    CHECK(next.pose.theta == Catch::Approx(1.0));
    CHECK(next.tick == 1);
}

TEST_CASE("slip trajectories replay identically under the same seed") {
    const WorldGrid w = open_world(50, 50);
    auto run = [&] {
        RobotState s;
        s.pose = {25.5, 25.5, 0.0};
        Rng rng(777);
        std::vector<Pose2> traj;
        for (int i = 0; i < 1000; ++i) {
            const Cell target{10 + int(i) % 30, 10 + int(i / 7) % 30};
            s = step_robot(s, target, w, {0.05}, rng);
            traj.push_back(s.pose);
        }
        return traj;
    };
    const auto a = run();
    const auto b = run();
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].x == b[i].x);
        CHECK(a[i].y == b[i].y);
        CHECK(a[i].theta == b[i].theta);
    }
}

TEST_CASE("robot never teleports and never sits inside a wall") {
    WorldGrid w = open_world(20, 20);
    for (int y = 5; y < 15; ++y) w.at({10, y}).occupancy = Occupancy::PositiveObstacle;
    RobotState s;
    s.pose = {5.5, 10.5, 0.0};
    Rng rng(9);
    for (int i = 0; i < 500; ++i) {
        const Pose2 before = s.pose;
        s = step_robot(s, {15, 10}, w, {0.3}, rng);
        const double moved = (s.pose.position() - before.position()).norm();
        CHECK(moved <= 1.0 + 4.0 * 0.3);  // one cell plus slip allowance
        CHECK_FALSE(w.blocks_motion(w.cell_at(s.pose.position())));
    }
}

TEST_CASE("entering a negative obstacle latches the failure flag") {
    WorldGrid w = open_world(5, 5);
    w.at({3, 2}).occupancy = Occupancy::NegativeObstacle;
    RobotState s;
    s.pose = {2.5, 2.5, 0.0};
    Rng rng(1);
    s = step_robot(s, {3, 2}, w, {0.0}, rng);
    CHECK(s.failed);
    s = step_robot(s, {1, 2}, w, {0.0}, rng);
    CHECK(s.failed);  // latched
}

TEST_CASE("reachable_free_set covers a fully open grid") {
    const WorldGrid w = open_world(3, 3);
    CHECK(reachable_free_set(w, {1, 1}).size() == 9);
}

TEST_CASE("reachable_free_set stops at a full wall") {
    WorldGrid w = open_world(7, 3);
    for (int y = 0; y < 3; ++y) w.at({3, y}).occupancy = Occupancy::PositiveObstacle;
    const auto cells = reachable_free_set(w, {1, 1});
    CHECK(cells.size() == 9);
    for (const Cell c : cells) CHECK(c.x < 3);
}

TEST_CASE("reachable_free_set rejects a non-free start") {
    WorldGrid w = open_world(3, 3);
    w.at({1, 1}).occupancy = Occupancy::PositiveObstacle;
    CHECK_THROWS_AS(reachable_free_set(w, {1, 1}), std::invalid_argument);
}

TEST_CASE("reachable_free_set matches an independent BFS on random maps") {
    Rng rng(4242);
    for (int trial = 0; trial < 5; ++trial) {
        WorldGrid w = open_world(50, 50);
        for (int y = 0; y < 50; ++y)
            for (int x = 0; x < 50; ++x)
                if (rng.uniform() < 0.3)
                    w.at({x, y}).occupancy = Occupancy::PositiveObstacle;
        w.at({25, 25}).occupancy = Occupancy::Free;

        // Second, queue-based BFS written independently of flood_fill4.
        std::set<std::pair<int, int>> oracle;
        std::queue<Cell> q;
        q.push({25, 25});
        oracle.insert({25, 25});
        while (!q.empty()) {
            const Cell c = q.front();
            q.pop();
            const Cell nbrs[4] = {{c.x + 1, c.y}, {c.x - 1, c.y},
                                  {c.x, c.y + 1}, {c.x, c.y - 1}};
            for (const Cell n : nbrs) {
                if (!w.in_bounds(n) || !w.is_free(n)) continue;
                if (oracle.insert({n.x, n.y}).second) q.push(n);
            }
        }

        const auto cells = reachable_free_set(w, {25, 25});
        CHECK(cells.size() == oracle.size());
        for (const Cell c : cells) CHECK(oracle.count({c.x, c.y}) == 1);
    }
}
