#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <utility>
#include <vector>

#include "gridnav/belief.hpp"
#include "gridnav/geometry.hpp"
#include "gridnav/grid.hpp"
#include "gridnav/rng.hpp"
#include "gridnav/world.hpp"

namespace gridnav {

enum class SensorKind : std::uint8_t { Lidar, DepthPatch };

enum class HitKind : std::uint8_t { Surface, HoleEdge, MaxRange };

/// Grade the depth step filter reports for wall cells; far above any
/// physical slope.
inline constexpr double kDepthWallGrade = 10.0;

/// One simulated sensor. The rig is asymmetric by construction: the lidar is
/// medium-range and sparse, the depth patch short-range and dense. Negative
/// obstacles only return hole edges to the lidar within half its max range;
/// the depth patch sees them anywhere inside the patch.
struct SensorSpec {
    SensorKind kind = SensorKind::Lidar;
    double mount_heading_offset = 0.0;  // radians, relative to robot heading
    double fov = 2.0 * kPi;             // radians, (0, 2pi]
    double max_range = 3.0;             // meters
    double angular_resolution = 2.0 * kPi / 360.0;  // lidar only
    int patch_half_width = 2;                       // depth only, cells
    double range_noise_sigma = 0.0;     // meters
    double dropout_prob = 0.0;          // per beam
    double evidence_weight = 1.0;       // belief mass contributed per scan

    void validate() const {
        if (!(fov > 0.0 && fov <= 2.0 * kPi + 1e-12)) throw std::invalid_argument("fov must be in (0, 2pi]");
        if (!(max_range > 0.0)) throw std::invalid_argument("max_range must be > 0");
        if (range_noise_sigma < 0.0) throw std::invalid_argument("range noise sigma must be >= 0");
        if (dropout_prob < 0.0 || dropout_prob >= 1.0) throw std::invalid_argument("dropout_prob must be in [0,1)");
        if (kind == SensorKind::Lidar && !(angular_resolution > 0.0))
            throw std::invalid_argument("angular_resolution must be > 0");
        if (kind == SensorKind::DepthPatch && patch_half_width < 0)
            throw std::invalid_argument("patch_half_width must be >= 0");
    }

    int beam_count() const {
        if (kind == SensorKind::DepthPatch) {
            const int w = 2 * patch_half_width + 1;
            return w * w;
        }
        return std::max(1, static_cast<int>(std::llround(fov / angular_resolution)));
    }
};

struct Beam {
    double range = 0.0;    // meters, (0, max_range]
    double bearing = 0.0;  // radians in the sensor frame, within [-fov/2, fov/2]
    HitKind kind = HitKind::MaxRange;
    double grade = 0.0;             // slope sample, depth beams only
    MissionItem semantic = MissionItem::None;
};

struct Scan {
    std::vector<Beam> beams;
    Pose2 origin_pose;            // robot pose at acquisition
    double mount_heading = 0.0;   // sensor offset baked into the scan
    double max_range = 0.0;
    long tick = 0;

    /// World-frame direction of a beam.
    double world_angle(const Beam& b) const {
        return origin_pose.theta + mount_heading + b.bearing;
    }
    Vec2 world_point(const Beam& b) const {
        const double a = world_angle(b);
        return {origin_pose.x + b.range * std::cos(a),
                origin_pose.y + b.range * std::sin(a)};
    }
};

namespace detail {

struct RayHit {
    bool hit = false;
    double range = 0.0;
    HitKind kind = HitKind::MaxRange;
    MissionItem semantic = MissionItem::None;
};

/// Single-return raycast against ground truth. Positive obstacles and
/// mission items stop the beam; negative obstacles return a rim hit only
/// within `hole_range`.
inline RayHit cast_ray(const WorldGrid& world, Vec2 origin, double angle,
                       double max_range, double hole_range) {
    RayHit out;
    const Vec2 dir{std::cos(angle), std::sin(angle)};
    walk_ray(origin, dir, max_range, world.resolution(), world.width(),
             world.height(), [&](const RayStep& s) {
                 if (s.t_entry <= 0.0) return false;  // origin cell
                 const WorldCell& c = world.at(s.cell);
                 if (c.occupancy == Occupancy::PositiveObstacle) {
                     out = {true, s.t_entry, HitKind::Surface, MissionItem::None};
                     return true;
                 }
                 if (c.item != MissionItem::None) {
                     out = {true, s.t_entry, HitKind::Surface, c.item};
                     return true;
                 }
                 if (c.occupancy == Occupancy::NegativeObstacle &&
                     s.t_entry <= hole_range) {
                     out = {true, s.t_entry, HitKind::HoleEdge, MissionItem::None};
                     return true;
                 }
                 return false;
             });
    return out;
}

inline bool within_fov(double bearing, double fov) {
    return std::abs(bearing) <= fov / 2.0 + 1e-12;
}

}  // namespace detail

/// Simulates one scan from ground truth. Beams are raycast individually,
/// range noise is Gaussian, and whole beams drop out independently.
inline Scan simulate_scan(const WorldGrid& world, const Pose2& pose,
                          const SensorSpec& spec, Rng& rng) {
    spec.validate();
    if (!world.contains_point(pose.position()))
        throw std::invalid_argument("scan pose outside grid");

    Scan scan;
    scan.origin_pose = pose;
    scan.mount_heading = spec.mount_heading_offset;
    scan.max_range = spec.max_range;

    auto emit = [&](Beam b) {
        if (spec.dropout_prob > 0.0 && rng.uniform() < spec.dropout_prob) return;
        if (b.kind != HitKind::MaxRange && spec.range_noise_sigma > 0.0) {
            b.range += rng.gaussian(0.0, spec.range_noise_sigma);
            b.range = std::clamp(b.range, 1e-6, spec.max_range);
        }
        scan.beams.push_back(b);
    };

    if (spec.kind == SensorKind::Lidar) {
        const int n = spec.beam_count();
        const double hole_range = spec.max_range / 2.0;
        for (int i = 0; i < n; ++i) {
            const double bearing = -spec.fov / 2.0 + (i + 0.5) * spec.fov / n;
            const double angle = pose.theta + spec.mount_heading_offset + bearing;
            const auto hit = detail::cast_ray(world, pose.position(), angle,
                                              spec.max_range, hole_range);
            Beam b;
            b.bearing = bearing;
            if (hit.hit) {
                b.range = hit.range;
                b.kind = hit.kind;
                b.semantic = hit.semantic;
            } else {
                b.range = spec.max_range;
                b.kind = HitKind::MaxRange;
            }
            emit(b);
        }
    } else {
        // Dense short-range patch: one beam per visible cell around the
        // robot, carrying a slope sample.
        const Cell center = world.cell_at(pose.position());
        const int h = spec.patch_half_width;
        const double sensor_heading = pose.theta + spec.mount_heading_offset;
        for (int dy = -h; dy <= h; ++dy) {
            for (int dx = -h; dx <= h; ++dx) {
                const Cell c{center.x + dx, center.y + dy};
                if (!world.in_bounds(c)) continue;
                const Vec2 target = world.cell_center(c);
                const Vec2 delta = target - pose.position();
                const double dist = delta.norm();
                if (dist > spec.max_range) continue;
                const double bearing =
                    dist < 1e-9 ? 0.0
                                : normalize_angle(std::atan2(delta.y, delta.x) -
                                                  sensor_heading);
                if (dist >= 1e-9 && !detail::within_fov(bearing, spec.fov)) continue;
                // Occlusion: solid cells strictly between robot and target.
                // The target cell itself is always visible as a surface.
                bool occluded = false;
                if (dist >= 1e-9) {
                    const Vec2 dir{delta.x / dist, delta.y / dist};
                    walk_ray(pose.position(), dir, dist, world.resolution(),
                             world.width(), world.height(), [&](const RayStep& s) {
                                 if (s.cell == c) return true;
                                 if (s.t_entry <= 0.0) return false;
                                 const WorldCell& wc2 = world.at(s.cell);
                                 if (wc2.occupancy == Occupancy::PositiveObstacle ||
                                     wc2.item != MissionItem::None) {
                                     occluded = true;
                                     return true;
                                 }
                                 return false;
                             });
                }
                if (occluded) continue;

                const WorldCell& wc = world.at(c);
                Beam b;
                b.bearing = bearing;
                b.range = std::max(dist, 1e-6);
                if (wc.occupancy == Occupancy::NegativeObstacle) {
                    b.kind = HitKind::HoleEdge;
                } else {
                    b.kind = HitKind::Surface;
                }
                b.semantic = wc.item;
                // The step filter reports walls as an off-scale grade.
                b.grade = wc.occupancy == Occupancy::PositiveObstacle ? kDepthWallGrade
                                                                      : wc.slope;
                if (spec.range_noise_sigma > 0.0 && b.grade < kDepthWallGrade) {
                    b.grade = std::max(0.0, b.grade + rng.gaussian(0.0, spec.range_noise_sigma));
                }
                emit(b);
            }
        }
    }
    return scan;
}

/// 2-D point cloud in the robot frame, for registration. Max-range returns
/// carry no surface and are excluded.
inline std::vector<Vec2> cloud_from_scan(const Scan& scan) {
    std::vector<Vec2> points;
    points.reserve(scan.beams.size());
    for (const Beam& b : scan.beams) {
        if (b.kind == HitKind::MaxRange) continue;
        const double a = scan.mount_heading + b.bearing;
        points.push_back({b.range * std::cos(a), b.range * std::sin(a)});
    }
    return points;
}

/// Cells a hypothetical scan would observe, with the expected posterior
/// sigma after folding in that sensor's evidence. Pure expectation, no
/// sampling; blind spots are simply absent from the mask.
struct PredictedObservation {
    std::vector<std::pair<Cell, double>> cells;  // sorted by (y, x)

    double total_sigma_reduction(const BeliefMap& belief) const {
        double total = 0.0;
        for (const auto& [cell, sigma_after] : cells)
            total += belief.at(cell).sigma() - sigma_after;
        return total;
    }
};

/// Prediction uses the belief itself as the map: beams traverse cells until
/// one is believed blocked (mean below `blocked_mean`); unknown cells are
/// optimistically transparent.
inline PredictedObservation predict_measurement(const BeliefMap& belief,
                                                const Pose2& pose, double heading,
                                                const SensorSpec& spec,
                                                double blocked_mean = 0.5) {
    spec.validate();
    const double res = belief.resolution();
    Grid<std::uint8_t> seen(belief.width(), belief.height(), 0);

    auto blocked = [&](Cell c) { return belief.at(c).mean() < blocked_mean; };

    if (spec.kind == SensorKind::Lidar) {
        const int n = spec.beam_count();
        for (int i = 0; i < n; ++i) {
            const double bearing = -spec.fov / 2.0 + (i + 0.5) * spec.fov / n;
            const double angle = heading + spec.mount_heading_offset + bearing;
            const Vec2 dir{std::cos(angle), std::sin(angle)};
            walk_ray(pose.position(), dir, spec.max_range, res, belief.width(),
                     belief.height(), [&](const RayStep& s) {
                         seen.at(s.cell) = 1;
                         return s.t_entry > 0.0 && blocked(s.cell);
                     });
        }
    } else {
        const Cell center = belief.cell_at(pose.position());
        const int h = spec.patch_half_width;
        const double sensor_heading = heading + spec.mount_heading_offset;
        for (int dy = -h; dy <= h; ++dy) {
            for (int dx = -h; dx <= h; ++dx) {
                const Cell c{center.x + dx, center.y + dy};
                if (!belief.in_bounds(c)) continue;
                const Vec2 delta = belief.cell_center(c) - pose.position();
                const double dist = delta.norm();
                if (dist > spec.max_range) continue;
                if (dist >= 1e-9) {
                    const double bearing = normalize_angle(
                        std::atan2(delta.y, delta.x) - sensor_heading);
                    if (!detail::within_fov(bearing, spec.fov)) continue;
                    bool occluded = false;
                    const Vec2 dir{delta.x / dist, delta.y / dist};
                    walk_ray(pose.position(), dir, dist, res,
                             belief.width(), belief.height(),
                             [&](const RayStep& s) {
                                 if (s.cell == c) return true;
                                 if (s.t_entry > 0.0 && blocked(s.cell)) {
                                     occluded = true;
                                     return true;
                                 }
                                 return false;
                             });
                    if (occluded) continue;
                }
                seen.at(c) = 1;
            }
        }
    }

    PredictedObservation out;
    for (int y = 0; y < seen.height(); ++y) {
        for (int x = 0; x < seen.width(); ++x) {
            if (!seen.at({x, y})) continue;
            const CellBelief after =
                belief_expected_update(belief.at({x, y}), spec.evidence_weight);
            out.cells.push_back({{x, y}, after.sigma()});
        }
    }
    return out;
}

}  // namespace gridnav
