#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "gridnav/geometry.hpp"
#include "gridnav/grid.hpp"
#include "gridnav/rng.hpp"

namespace gridnav {

enum class Occupancy : std::uint8_t { Free, PositiveObstacle, NegativeObstacle };

enum class MissionItem : std::uint8_t { None, CommNode, OtherRobot };

struct WorldCell {
    Occupancy occupancy = Occupancy::Free;
    double slope = 0.0;  // unitless grade, >= 0
    MissionItem item = MissionItem::None;
};

/// Ground-truth environment. Positive obstacles block motion; negative
/// obstacles and steep slopes can be entered but end the mission; mission
/// items sit on free cells and count as collision hazards.
class WorldGrid {
  public:
    WorldGrid() = default;
    WorldGrid(int width, int height, double resolution)
        : cells_(width, height), resolution_(resolution) {
        if (width < 1 || height < 1) throw std::invalid_argument("grid dimensions must be >= 1");
        if (!(resolution > 0.0)) throw std::invalid_argument("resolution must be > 0");
    }

    int width() const { return cells_.width(); }
    int height() const { return cells_.height(); }
    double resolution() const { return resolution_; }

    bool in_bounds(Cell c) const { return cells_.in_bounds(c); }
    WorldCell& at(Cell c) { return cells_.at(c); }
    const WorldCell& at(Cell c) const { return cells_.at(c); }

    Cell cell_at(Vec2 p) const {
        return {static_cast<int>(std::floor(p.x / resolution_)),
                static_cast<int>(std::floor(p.y / resolution_))};
    }
    Vec2 cell_center(Cell c) const {
        return {(c.x + 0.5) * resolution_, (c.y + 0.5) * resolution_};
    }
    bool contains_point(Vec2 p) const { return in_bounds(cell_at(p)); }

    bool is_free(Cell c) const {
        return in_bounds(c) && at(c).occupancy == Occupancy::Free;
    }
    bool blocks_motion(Cell c) const {
        return !in_bounds(c) || at(c).occupancy == Occupancy::PositiveObstacle;
    }

    /// True when physically entering the cell ends the mission.
    bool is_lethal_to_enter(Cell c, double lethal_slope) const {
        if (!in_bounds(c)) return false;
        const WorldCell& wc = at(c);
        return wc.occupancy == Occupancy::NegativeObstacle ||
               wc.slope >= lethal_slope || wc.item != MissionItem::None;
    }

  private:
    Grid<WorldCell> cells_;
    double resolution_ = 1.0;
};

/// Builds a world from per-row character codes. rows[0] is the top row of
/// the map (y = height - 1), matching the orientation of PGM snapshots.
/// Codes: '.' free, '#' positive, 'v' negative, 's' slope, 'c' comm node,
/// 'r' other robot.
inline WorldGrid world_from_rows(const std::vector<std::string>& rows,
                                 double resolution, double slope_grade) {
    if (rows.empty()) throw std::invalid_argument("grid rows must be non-empty");
    const int height = static_cast<int>(rows.size());
    const int width = static_cast<int>(rows.front().size());
    WorldGrid world(width, height, resolution);
    for (int r = 0; r < height; ++r) {
        if (static_cast<int>(rows[r].size()) != width) {
            throw std::invalid_argument("grid row " + std::to_string(r) +
                                        " length differs from row 0");
        }
        for (int x = 0; x < width; ++x) {
            WorldCell cell;
            switch (rows[r][x]) {
                case '.': break;
                case '#': cell.occupancy = Occupancy::PositiveObstacle; break;
                case 'v': cell.occupancy = Occupancy::NegativeObstacle; break;
                case 's': cell.slope = slope_grade; break;
                case 'c': cell.item = MissionItem::CommNode; break;
                case 'r': cell.item = MissionItem::OtherRobot; break;
                default:
                    throw std::invalid_argument(
                        std::string("unknown cell code '") + rows[r][x] + "' in grid rows");
            }
            world.at({x, height - 1 - r}) = cell;
        }
    }
    return world;
}

struct RobotState {
    Pose2 pose;
    long tick = 0;
    bool has_waypoint = false;
    Cell commanded_waypoint{};
    bool failed = false;  // latched on first lethal-cell entry
};

struct SlipSpec {
    double sigma_cells = 0.0;  // std-dev of per-tick displacement noise
};

struct MotionLimits {
    double max_turn_per_tick = kPi / 4.0;
    double lethal_slope = 0.3;
};

/// Advances the robot one tick toward the waypoint cell center. Moves at
/// most one cell length plus slip, turns the heading toward the motion
/// direction at a capped rate, clips against positive obstacles and grid
/// bounds, and latches `failed` when a lethal cell is entered. Failure is a
/// recorded outcome, not an error.
inline RobotState step_robot(const RobotState& state, Cell waypoint,
                             const WorldGrid& world, const SlipSpec& slip,
                             Rng& rng, const MotionLimits& limits = {}) {
    RobotState next = state;
    next.tick = state.tick + 1;
    next.has_waypoint = true;
    next.commanded_waypoint = waypoint;

    const double res = world.resolution();
    const Vec2 target = world.cell_center(waypoint);
    const Vec2 here = state.pose.position();
    const Vec2 to_target = target - here;
    const double dist = to_target.norm();

    Vec2 desired{0.0, 0.0};
    if (dist > 1e-12) {
        const double advance = std::min(dist, res);
        desired = to_target * (advance / dist);
    }
    // Slip perturbs the executed displacement even when holding position.
    if (slip.sigma_cells > 0.0) {
        desired.x += rng.gaussian(0.0, slip.sigma_cells * res);
        desired.y += rng.gaussian(0.0, slip.sigma_cells * res);
    }

    const double step_len = desired.norm();
    if (step_len > 1e-12) {
        // Walk the displacement segment and stop just before the first
        // motion-blocking cell; the robot cannot pass through walls.
        double allowed = step_len;
        const Vec2 dir{desired.x / step_len, desired.y / step_len};
        walk_ray(here, dir, step_len, res, world.width(), world.height(),
                 [&](const RayStep& s) {
                     if (world.blocks_motion(s.cell) && s.t_entry > 0.0) {
                         allowed = std::max(0.0, s.t_entry - 1e-9);
                         return true;
                     }
                     return false;
                 });
        // Grid boundary behaves like a wall.
        Vec2 p = here + dir * allowed;
        const double margin = 1e-9;
        p.x = std::clamp(p.x, margin, world.width() * res - margin);
        p.y = std::clamp(p.y, margin, world.height() * res - margin);

        next.pose.x = p.x;
        next.pose.y = p.y;

        const Vec2 moved = p - here;
        if (moved.norm() > 1e-9) {
            const double want = std::atan2(moved.y, moved.x);
            const double delta = normalize_angle(want - state.pose.theta);
            const double turn = std::clamp(delta, -limits.max_turn_per_tick,
                                           limits.max_turn_per_tick);
            next.pose.theta = normalize_angle(state.pose.theta + turn);
        }
    }

    const Cell landed = world.cell_at(next.pose.position());
    if (world.is_lethal_to_enter(landed, limits.lethal_slope)) next.failed = true;
    next.failed = next.failed || state.failed;
    return next;
}

/// Exact 4-connected flood fill of free cells from `start`.
inline std::vector<Cell> reachable_free_set(const WorldGrid& world, Cell start) {
    if (!world.is_free(start)) throw std::invalid_argument("start cell is not free");
    const auto mask = flood_fill4(world.width(), world.height(), start,
                                  [&](Cell c) { return world.is_free(c); });
    std::vector<Cell> out;
    for (int y = 0; y < world.height(); ++y)
        for (int x = 0; x < world.width(); ++x)
            if (mask.at({x, y})) out.push_back({x, y});
    return out;
}

}  // namespace gridnav
