#include <catch2/catch_amalgamated.hpp>

#include <set>

#include "gridnav/sensing.hpp"

using namespace gridnav;

namespace {

SensorSpec lidar360(double max_range = 20.0) {
    SensorSpec s;
    s.kind = SensorKind::Lidar;
    s.fov = 2.0 * kPi;
    s.angular_resolution = 2.0 * kPi / 360.0;
    s.max_range = max_range;
    return s;
}

std::set<std::pair<int, int>> touched_cells(const Scan& scan, int w, int h,
                                            double res) {
    std::set<std::pair<int, int>> cells;
    for (const Beam& b : scan.beams) {
        const double a = scan.world_angle(b);
        walk_ray(scan.origin_pose.position(), {std::cos(a), std::sin(a)},
                 b.range + 1e-9, res, w, h, [&](const RayStep& s) {
                     cells.insert({s.cell.x, s.cell.y});
                     return false;
                 });
    }
    return cells;
}

BeliefMap belief_of_world(const WorldGrid& world) {
    BeliefMap belief(world.width(), world.height(), world.resolution());
    for (int y = 0; y < world.height(); ++y)
        for (int x = 0; x < world.width(); ++x) {
            const Cell c{x, y};
            if (world.blocks_motion(c))
                belief.apply(c, 0.0, 20.0, 0);
            else
                belief.apply(c, 20.0, 0.0, 0);
        }
    return belief;
}

}  // namespace

TEST_CASE("empty world with no noise returns max_range on every beam") {
    const WorldGrid w(40, 40, 1.0);
    Rng rng(1);
    const Scan scan = simulate_scan(w, {20.5, 20.5, 0.3}, lidar360(5.0), rng);
    CHECK(scan.beams.size() == 360);
    for (const Beam& b : scan.beams) {
        CHECK(b.kind == HitKind::MaxRange);
        CHECK(b.range == Catch::Approx(5.0));
    }
}

TEST_CASE("wall five cells ahead returns the analytic range") {
    WorldGrid w(20, 9, 1.0);
    for (int y = 0; y < 9; ++y) w.at({8, y}).occupancy = Occupancy::PositiveObstacle;
    Rng rng(1);
    // Robot at the center of cell (3, 4): the wall face is 4.5 m ahead,
    // i.e. 5 cells minus the half cell the robot stands in.
    const Scan scan = simulate_scan(w, {3.5, 4.5, 0.0}, lidar360(15.0), rng);
    bool checked = false;
    for (const Beam& b : scan.beams) {
        if (std::abs(b.bearing) < deg2rad(1.0)) {
            CHECK(b.kind == HitKind::Surface);
            CHECK(b.range == Catch::Approx(5.0 * 1.0 - 0.5).margin(0.51));
            checked = true;
        }
    }
    CHECK(checked);
}

TEST_CASE("noiseless scans are deterministic") {
    WorldGrid w(30, 30, 0.5);
    for (int i = 5; i < 25; ++i) w.at({i, 20}).occupancy = Occupancy::PositiveObstacle;
    Rng r1(1), r2(99);
    const Scan a = simulate_scan(w, {7.3, 5.1, 0.4}, lidar360(10.0), r1);
    const Scan b = simulate_scan(w, {7.3, 5.1, 0.4}, lidar360(10.0), r2);
    REQUIRE(a.beams.size() == b.beams.size());
    for (std::size_t i = 0; i < a.beams.size(); ++i) {
        CHECK(a.beams[i].range == b.beams[i].range);
        CHECK(a.beams[i].kind == b.beams[i].kind);
    }
}

TEST_CASE("dropout survival count sits inside the binomial 3-sigma band") {
    const WorldGrid w(10, 10, 1.0);
    SensorSpec spec = lidar360(3.0);
    spec.dropout_prob = 0.98;
    Rng rng(2025);
    long survived = 0;
    const int repeats = 30;  // 30 scans * 360 beams ~ 1e4 draws
    for (int i = 0; i < repeats; ++i) {
        const Scan s = simulate_scan(w, {5.5, 5.5, 0.0}, spec, rng);
        survived += static_cast<long>(s.beams.size());
    }
    const double n = 360.0 * repeats;
    const double p = 1.0 - spec.dropout_prob;
    const double sigma = std::sqrt(n * p * (1.0 - p));
    CHECK(std::abs(survived - n * p) <= 3.0 * sigma);
}

TEST_CASE("negative obstacles return hole edges only within half max range") {
    WorldGrid w(41, 5, 1.0);
    w.at({10, 2}).occupancy = Occupancy::NegativeObstacle;   // 7. m ahead
    w.at({30, 2}).occupancy = Occupancy::NegativeObstacle;   // 27 m ahead
    SensorSpec spec = lidar360(20.0);
    Rng rng(1);
    const Scan scan = simulate_scan(w, {3.5, 2.5, 0.0}, spec, rng);
    int hole_hits = 0;
    for (const Beam& b : scan.beams) {
        if (b.kind != HitKind::HoleEdge) continue;
        ++hole_hits;
        CHECK(b.range <= spec.max_range / 2.0 + 1e-9);
        CHECK(b.range == Catch::Approx(6.5).margin(0.6));  // rim of the near pit
    }
    CHECK(hole_hits >= 1);
}

TEST_CASE("mission items return tagged surface hits") {
    WorldGrid w(20, 5, 1.0);
    w.at({10, 2}).item = MissionItem::CommNode;
    Rng rng(1);
    const Scan scan = simulate_scan(w, {3.5, 2.5, 0.0}, lidar360(15.0), rng);
    bool seen = false;
    for (const Beam& b : scan.beams)
        if (b.semantic == MissionItem::CommNode) {
            CHECK(b.kind == HitKind::Surface);
            seen = true;
        }
    CHECK(seen);
}

TEST_CASE("depth patch senses slope grades around the robot") {
    WorldGrid w(9, 9, 1.0);
    w.at({5, 4}).slope = 0.25;
    SensorSpec spec;
    spec.kind = SensorKind::DepthPatch;
    spec.fov = 2.0 * kPi;
    spec.max_range = 4.0;
    spec.patch_half_width = 2;
    Rng rng(1);
    const Scan scan = simulate_scan(w, {4.5, 4.5, 0.0}, spec, rng);
    CHECK(scan.beams.size() == 25);
    bool found = false;
    for (const Beam& b : scan.beams) {
        if (std::abs(b.range - 1.0) < 1e-6 && std::abs(b.bearing) < 1e-6) {
            CHECK(b.grade == Catch::Approx(0.25));
            found = true;
        }
    }
    CHECK(found);
}

TEST_CASE("omnidirectional prediction covers the whole small grid") {
    const WorldGrid w(5, 5, 1.0);
    const BeliefMap belief = belief_of_world(w);
    SensorSpec spec = lidar360(20.0);
    const auto obs = predict_measurement(belief, {2.5, 2.5, 0.0}, 0.0, spec);
    CHECK(obs.cells.size() == 25);
}

TEST_CASE("quarter fov facing +x observes nothing strictly behind") {
    const WorldGrid w(11, 11, 1.0);
    const BeliefMap belief = belief_of_world(w);
    SensorSpec spec = lidar360(20.0);
    spec.fov = kPi / 2.0;
    spec.angular_resolution = deg2rad(0.5);
    const auto obs = predict_measurement(belief, {5.5, 5.5, 0.0}, 0.0, spec);
    CHECK_FALSE(obs.cells.empty());
    for (const auto& [cell, sigma] : obs.cells) CHECK(cell.x >= 5);
}

TEST_CASE("cells behind a wall are absent from the predicted mask") {
    WorldGrid w(15, 5, 1.0);
    for (int y = 0; y < 5; ++y) w.at({7, y}).occupancy = Occupancy::PositiveObstacle;
    const BeliefMap belief = belief_of_world(w);
    const auto obs = predict_measurement(belief, {2.5, 2.5, 0.0}, 0.0, lidar360(20.0));
    for (const auto& [cell, sigma] : obs.cells) CHECK(cell.x <= 7);
}

TEST_CASE("predicted mask is backed by noiseless scan coverage") {
    // Every cell the prediction claims must be touched by a real beam from
    // the same pose when belief and world agree.
    WorldGrid w(21, 21, 1.0);
    for (int i = 4; i < 16; ++i) {
        w.at({i, 14}).occupancy = Occupancy::PositiveObstacle;
        w.at({16, i}).occupancy = Occupancy::PositiveObstacle;
    }
    const BeliefMap belief = belief_of_world(w);
    const Pose2 pose{8.5, 8.5, 0.7};
    SensorSpec spec = lidar360(12.0);
    spec.angular_resolution = deg2rad(0.25);  // dense enough to touch all cells

    const auto obs = predict_measurement(belief, pose, pose.theta, spec);
    Rng rng(1);
    SensorSpec dense = spec;
    const Scan scan = simulate_scan(w, pose, dense, rng);
    const auto touched = touched_cells(scan, w.width(), w.height(), 1.0);
    for (const auto& [cell, sigma] : obs.cells) {
        INFO("cell " << cell.x << "," << cell.y);
        CHECK(touched.count({cell.x, cell.y}) == 1);
    }
}

TEST_CASE("rotating the mount offset rotates the observed mask") {
    const WorldGrid w(21, 21, 1.0);
    const BeliefMap belief = belief_of_world(w);
    SensorSpec spec = lidar360(8.0);
    spec.fov = kPi / 2.0;
    spec.angular_resolution = deg2rad(0.5);
    const Pose2 pose{10.5, 10.5, 0.0};

    const auto base = predict_measurement(belief, pose, 0.0, spec);
    SensorSpec rotated = spec;
    rotated.mount_heading_offset = kPi / 2.0;
    const auto turned = predict_measurement(belief, pose, 0.0, rotated);

    std::set<std::pair<int, int>> expect;
    for (const auto& [c, s] : base.cells)
        expect.insert({10 - (c.y - 10), 10 + (c.x - 10)});  // rotate +90 deg
    std::set<std::pair<int, int>> got;
    for (const auto& [c, s] : turned.cells) got.insert({c.x, c.y});

    // Quantization may disagree on the mask boundary by up to one cell.
    std::size_t mismatches = 0;
    for (const auto& c : expect) mismatches += got.count(c) == 0;
    for (const auto& c : got) mismatches += expect.count(c) == 0;
    CHECK(mismatches <= expect.size() / 10);
}

TEST_CASE("expected posterior sigma shrinks for every observed cell") {
    const WorldGrid w(7, 7, 1.0);
    const BeliefMap belief(7, 7, 1.0);
    const auto obs = predict_measurement(belief, {3.5, 3.5, 0.0}, 0.0, lidar360(10.0));
    const double prior_sigma = CellBelief{}.sigma();
    REQUIRE_FALSE(obs.cells.empty());
    for (const auto& [cell, sigma] : obs.cells) CHECK(sigma < prior_sigma);
}
