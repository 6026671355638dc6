#pragma once

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "gridnav/geometry.hpp"

namespace gridnav {

struct Cell {
    int x = 0;
    int y = 0;
    bool operator==(const Cell& o) const { return x == o.x && y == o.y; }
    bool operator!=(const Cell& o) const { return !(*this == o); }
    bool operator<(const Cell& o) const { return y != o.y ? y < o.y : x < o.x; }
};

inline constexpr Cell kDir4[4] = {{1, 0}, {-1, 0}, {0, 1}, {0, -1}};
inline constexpr Cell kDir8[8] = {{1, 0},  {-1, 0}, {0, 1},  {0, -1},
                                  {1, 1},  {-1, 1}, {1, -1}, {-1, -1}};
inline constexpr double kDiagonal = 1.41421356237309515;

/// Dense row-major grid of T with bounds-checked accessors.
template <typename T>
class Grid {
  public:
    Grid() = default;
    Grid(int width, int height, const T& fill = T{})
        : width_(width), height_(height),
          data_(static_cast<std::size_t>(width) * height, fill) {
        assert(width >= 1 && height >= 1);
    }

    int width() const { return width_; }
    int height() const { return height_; }
    std::size_t size() const { return data_.size(); }

    bool in_bounds(Cell c) const {
        return static_cast<unsigned>(c.x) < static_cast<unsigned>(width_) &&
               static_cast<unsigned>(c.y) < static_cast<unsigned>(height_);
    }

    T& at(Cell c) {
        assert(in_bounds(c));
        return data_[index_of(c)];
    }
    const T& at(Cell c) const {
        assert(in_bounds(c));
        return data_[index_of(c)];
    }

    std::size_t index_of(Cell c) const {
        return static_cast<std::size_t>(c.y) * width_ + c.x;
    }
    Cell cell_of(std::size_t idx) const {
        return {static_cast<int>(idx % width_), static_cast<int>(idx / width_)};
    }

    void fill(const T& v) { std::fill(data_.begin(), data_.end(), v); }

    const std::vector<T>& data() const { return data_; }
    std::vector<T>& data() { return data_; }

    bool operator==(const Grid& o) const {
        return width_ == o.width_ && height_ == o.height_ && data_ == o.data_;
    }

  private:
    int width_ = 0;
    int height_ = 0;
    std::vector<T> data_;
};

inline double cell_distance(Cell a, Cell b) {
    return std::hypot(double(a.x - b.x), double(a.y - b.y));
}

/// Step length of an 8-connected move, in cells.
inline double step_length(Cell a, Cell b) {
    return (a.x != b.x && a.y != b.y) ? kDiagonal : 1.0;
}

/// One cell visited by a ray walk, with the distance at which the ray
/// enters it.
struct RayStep {
    Cell cell;
    double t_entry;
};

/// Amanatides-Woo traversal of the cells intersected by the segment from
/// `origin` along `dir` (unit length not required) up to `max_dist`, on a
/// grid of square cells of size `resolution`. The visitor returns true to
/// stop the walk. The cell containing the origin is visited first with
/// t_entry = 0.
template <typename Visitor>
void walk_ray(Vec2 origin, Vec2 dir, double max_dist, double resolution,
              int width, int height, Visitor&& visit) {
    const double len = dir.norm();
    if (len <= 0.0 || max_dist <= 0.0) return;
    const Vec2 u{dir.x / len, dir.y / len};

    int cx = static_cast<int>(std::floor(origin.x / resolution));
    int cy = static_cast<int>(std::floor(origin.y / resolution));

    const int step_x = u.x > 0.0 ? 1 : (u.x < 0.0 ? -1 : 0);
    const int step_y = u.y > 0.0 ? 1 : (u.y < 0.0 ? -1 : 0);

    const double inf = std::numeric_limits<double>::infinity();
    // Distance along the ray to the first vertical / horizontal cell border.
    double t_max_x = inf, t_max_y = inf, t_dx = inf, t_dy = inf;
    if (step_x != 0) {
        const double next = (cx + (step_x > 0 ? 1 : 0)) * resolution;
        t_max_x = (next - origin.x) / u.x;
        t_dx = resolution / std::abs(u.x);
    }
    if (step_y != 0) {
        const double next = (cy + (step_y > 0 ? 1 : 0)) * resolution;
        t_max_y = (next - origin.y) / u.y;
        t_dy = resolution / std::abs(u.y);
    }

    double t = 0.0;
    while (t <= max_dist) {
        if (cx < 0 || cy < 0 || cx >= width || cy >= height) return;
        if (visit(RayStep{{cx, cy}, t})) return;
        if (t_max_x < t_max_y) {
            t = t_max_x;
            t_max_x += t_dx;
            cx += step_x;
        } else {
            t = t_max_y;
            t_max_y += t_dy;
            cy += step_y;
        }
    }
}

/// 4-connected flood fill from `start` over cells accepted by `passable`.
/// Returns the visited mask; visit order does not affect the result.
template <typename Passable>
Grid<std::uint8_t> flood_fill4(int width, int height, Cell start,
                               Passable&& passable) {
    Grid<std::uint8_t> mask(width, height, 0);
    if (!mask.in_bounds(start) || !passable(start)) return mask;
    std::vector<Cell> stack{start};
    mask.at(start) = 1;
    while (!stack.empty()) {
        const Cell c = stack.back();
        stack.pop_back();
        for (const Cell d : kDir4) {
            const Cell n{c.x + d.x, c.y + d.y};
            if (mask.in_bounds(n) && !mask.at(n) && passable(n)) {
                mask.at(n) = 1;
                stack.push_back(n);
            }
        }
    }
    return mask;
}

}  // namespace gridnav
