#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "gridnav/grid.hpp"
#include "gridnav/sensing.hpp"

namespace gridnav {

/// Hazard sources, one map layer each.
enum class LayerKind : std::uint8_t {
    PositiveObstacle = 0,
    NegativeObstacle = 1,
    Slope = 2,
    MissionItems = 3,
};
inline constexpr int kLayerCount = 4;

inline const char* to_string(LayerKind k) {
    switch (k) {
        case LayerKind::PositiveObstacle: return "positive_obstacle";
        case LayerKind::NegativeObstacle: return "negative_obstacle";
        case LayerKind::Slope: return "slope";
        case LayerKind::MissionItems: return "mission_items";
    }
    return "?";
}

struct TraversabilityParams {
    double p_floor = 1e-3;     // probability floor/ceiling, keeps logs finite
    double prior_safe = 0.5;   // never-sensed cells
    double slope_warn = 0.15;  // grade where lethality starts ramping
    double slope_lethal = 0.3; // grade treated as fully lethal
    double wall_grade = 5.0;   // depth step-filter: grades above this are walls
    int sample_stride = 1;     // sparse evaluation stride, 1 = dense

    double clamp(double p) const {
        return std::clamp(p, p_floor, 1.0 - p_floor);
    }
};

/// One Bernoulli safety layer. Cells hold p(safe); only cells in the
/// evaluated mask carry direct measurements, everything else is prior or
/// interpolation output.
struct TraversabilityLayer {
    LayerKind kind = LayerKind::PositiveObstacle;
    Grid<double> p_safe;
    Grid<std::uint8_t> evaluated;

    TraversabilityLayer() = default;
    TraversabilityLayer(LayerKind k, int width, int height, double prior)
        : kind(k), p_safe(width, height, prior), evaluated(width, height, 0) {}

    int width() const { return p_safe.width(); }
    int height() const { return p_safe.height(); }
};

struct MultiLayerTraversability {
    std::vector<TraversabilityLayer> layers;

    MultiLayerTraversability() = default;
    MultiLayerTraversability(int width, int height, double prior) {
        layers.reserve(kLayerCount);
        for (int i = 0; i < kLayerCount; ++i)
            layers.emplace_back(static_cast<LayerKind>(i), width, height, prior);
    }

    TraversabilityLayer& layer(LayerKind k) { return layers[static_cast<int>(k)]; }
    const TraversabilityLayer& layer(LayerKind k) const {
        return layers[static_cast<int>(k)];
    }
};

/// Sparse evaluation support Q.
struct SampledCellSet {
    std::vector<Cell> cells;
    Grid<std::uint8_t> member;  // fast lookup

    static SampledCellSet stride_set(int width, int height, int stride) {
        SampledCellSet q;
        q.member = Grid<std::uint8_t>(width, height, 0);
        stride = std::max(1, stride);
        for (int y = 0; y < height; y += stride)
            for (int x = 0; x < width; x += stride) {
                q.cells.push_back({x, y});
                q.member.at({x, y}) = 1;
            }
        return q;
    }

    bool contains(Cell c) const { return member.in_bounds(c) && member.at(c); }
};

struct Detection {
    Cell cell;
    double p_lethal = 0.0;
};

namespace detail {

/// Cell containing the point half a cell past the beam endpoint, i.e. the
/// cell the beam was about to enter when it returned.
inline Cell cell_past_hit(const Scan& scan, const Beam& b, double resolution) {
    const double a = scan.world_angle(b);
    const Vec2 p{scan.origin_pose.x + (b.range + 0.5 * resolution) * std::cos(a),
                 scan.origin_pose.y + (b.range + 0.5 * resolution) * std::sin(a)};
    return {static_cast<int>(std::floor(p.x / resolution)),
            static_cast<int>(std::floor(p.y / resolution))};
}

template <typename Fn>
void for_each_traversed(const Scan& scan, const Beam& b, double resolution,
                        int width, int height, double max_len, Fn&& fn) {
    const double a = scan.world_angle(b);
    const double len = std::min(b.range - 1e-9, max_len);
    if (len <= 0.0) return;
    walk_ray(scan.origin_pose.position(), {std::cos(a), std::sin(a)}, len,
             resolution, width, height, [&](const RayStep& s) {
                 fn(s.cell);
                 return false;
             });
}

}  // namespace detail

/// Extracts per-cell lethality evidence for one layer from the lidar scan
/// and the depth patch. Works purely on scan geometry; beams that traverse a
/// cell without returning provide free-space evidence for the layers whose
/// detector could have fired there.
inline std::vector<Detection> detect_hazards(const Scan& lidar, const Scan& depth,
                                             const Pose2& pose, LayerKind layer,
                                             double resolution, int width,
                                             int height,
                                             const TraversabilityParams& params = {}) {
    (void)pose;  // scans carry their own origin
    std::vector<Detection> out;
    const double lethal = 1.0 - params.p_floor;

    auto add = [&](Cell c, double p) {
        if (c.x >= 0 && c.y >= 0 && c.x < width && c.y < height)
            out.push_back({c, p});
    };

    switch (layer) {
        case LayerKind::PositiveObstacle: {
            for (const Beam& b : lidar.beams) {
                detail::for_each_traversed(lidar, b, resolution, width, height,
                                           lidar.max_range,
                                           [&](Cell c) { add(c, 0.0); });
                if (b.kind == HitKind::Surface && b.semantic == MissionItem::None)
                    add(detail::cell_past_hit(lidar, b, resolution), lethal);
            }
            for (const Beam& b : depth.beams) {
                if (b.kind != HitKind::Surface) continue;
                const Vec2 p = depth.world_point(b);
                const Cell c{static_cast<int>(std::floor(p.x / resolution)),
                             static_cast<int>(std::floor(p.y / resolution))};
                add(c, b.grade >= params.wall_grade ? lethal : 0.0);
            }
            break;
        }
        case LayerKind::NegativeObstacle: {
            // Holes are only detectable up to half the lidar range, so
            // free-space evidence is limited to the same band.
            const double band = lidar.max_range / 2.0;
            for (const Beam& b : lidar.beams) {
                detail::for_each_traversed(lidar, b, resolution, width, height,
                                           band, [&](Cell c) { add(c, 0.0); });
                if (b.kind == HitKind::HoleEdge)
                    add(detail::cell_past_hit(lidar, b, resolution), lethal);
            }
            for (const Beam& b : depth.beams) {
                const Vec2 p = depth.world_point(b);
                const Cell c{static_cast<int>(std::floor(p.x / resolution)),
                             static_cast<int>(std::floor(p.y / resolution))};
                add(c, b.kind == HitKind::HoleEdge ? lethal : 0.0);
            }
            break;
        }
        case LayerKind::Slope: {
            // Settling analog: only the dense short-range patch measures
            // grade. Walls are claimed by the positive layer instead.
            for (const Beam& b : depth.beams) {
                if (b.kind != HitKind::Surface || b.grade >= params.wall_grade)
                    continue;
                const Vec2 p = depth.world_point(b);
                const Cell c{static_cast<int>(std::floor(p.x / resolution)),
                             static_cast<int>(std::floor(p.y / resolution))};
                double p_lethal = 0.0;
                if (b.grade >= params.slope_lethal) {
                    p_lethal = lethal;
                } else if (b.grade > params.slope_warn) {
                    p_lethal = (b.grade - params.slope_warn) /
                               (params.slope_lethal - params.slope_warn);
                }
                add(c, p_lethal);
            }
            break;
        }
        case LayerKind::MissionItems: {
            for (const Beam& b : lidar.beams) {
                detail::for_each_traversed(lidar, b, resolution, width, height,
                                           lidar.max_range,
                                           [&](Cell c) { add(c, 0.0); });
                if (b.semantic != MissionItem::None)
                    add(detail::cell_past_hit(lidar, b, resolution), lethal);
            }
            for (const Beam& b : depth.beams) {
                const Vec2 p = depth.world_point(b);
                const Cell c{static_cast<int>(std::floor(p.x / resolution)),
                             static_cast<int>(std::floor(p.y / resolution))};
                add(c, b.semantic != MissionItem::None ? lethal : 0.0);
            }
            break;
        }
    }
    return out;
}

/// Writes lethality evidence into the layer on the sampled support only.
/// Multiple detections of one cell combine by noisy-or; revisited cells are
/// overwritten (last write wins).
inline void evaluate_sparse(const std::vector<Detection>& detections,
                            const SampledCellSet& q, TraversabilityLayer& layer,
                            const TraversabilityParams& params = {}) {
    if (q.cells.empty()) throw std::invalid_argument("sampled cell set is empty");
    // Noisy-or accumulation of this batch, restricted to Q.
    std::vector<std::pair<Cell, double>> batch;
    Grid<int> slot(layer.width(), layer.height(), -1);
    for (const Detection& d : detections) {
        if (!q.contains(d.cell)) continue;
        int& s = slot.at(d.cell);
        if (s < 0) {
            s = static_cast<int>(batch.size());
            batch.push_back({d.cell, 1.0});
        }
        batch[s].second *= (1.0 - d.p_lethal);
    }
    for (const auto& [cell, survive] : batch) {
        const double p_lethal = 1.0 - survive;
        layer.p_safe.at(cell) = params.clamp(1.0 - p_lethal);
        layer.evaluated.at(cell) = 1;
    }
}

struct KernelSpec {
    enum class Type { Gaussian, RadialDecay } type = Type::Gaussian;
    double sigma_cells = 1.0;  // gaussian
    double radius = 3.0;       // radial decay cutoff, cells
    double decay = 0.3;        // lethality lost per cell of distance

    int cutoff_cells() const {
        return type == Type::Gaussian
                   ? static_cast<int>(std::ceil(3.0 * sigma_cells))
                   : static_cast<int>(std::ceil(radius));
    }
    double weight(double dist) const {
        if (type == Type::Gaussian)
            return std::exp(-0.5 * dist * dist / (sigma_cells * sigma_cells));
        return std::max(0.0, 1.0 - decay * dist);
    }
};

/// Spreads evaluated lethality over nearby cells with a normalized kernel
/// stencil: every in-range unevaluated cell receives the stencil-weighted
/// sum of evaluated lethality, divided by the full stencil mass. Evaluated
/// cells keep their exact values; out-of-range cells keep the prior.
inline TraversabilityLayer interpolate(const TraversabilityLayer& layer,
                                       const KernelSpec& kernel,
                                       const TraversabilityParams& params = {}) {
    bool any = false;
    for (const auto v : layer.evaluated.data()) any = any || v;
    if (!any) throw std::invalid_argument("layer has no evaluated cells");

    const int cutoff = kernel.cutoff_cells();
    double stencil_mass = 0.0;
    for (int dy = -cutoff; dy <= cutoff; ++dy)
        for (int dx = -cutoff; dx <= cutoff; ++dx) {
            const double d = std::hypot(double(dx), double(dy));
            if (d <= cutoff + 1e-12) stencil_mass += kernel.weight(d);
        }

    TraversabilityLayer out = layer;
    for (int y = 0; y < layer.height(); ++y) {
        for (int x = 0; x < layer.width(); ++x) {
            const Cell c{x, y};
            if (layer.evaluated.at(c)) continue;
            double acc = 0.0;
            bool in_range = false;
            for (int dy = -cutoff; dy <= cutoff; ++dy) {
                for (int dx = -cutoff; dx <= cutoff; ++dx) {
                    const Cell n{x + dx, y + dy};
                    if (!layer.p_safe.in_bounds(n) || !layer.evaluated.at(n)) continue;
                    const double d = std::hypot(double(dx), double(dy));
                    if (d > cutoff + 1e-12) continue;
                    const double w = kernel.weight(d);
                    if (w <= 0.0) continue;
                    acc += w * (1.0 - layer.p_safe.at(n));
                    in_range = true;
                }
            }
            if (in_range) {
                const double p_lethal = std::clamp(acc / stencil_mass, 0.0, 1.0);
                out.p_safe.at(c) = params.clamp(1.0 - p_lethal);
            }
        }
    }
    return out;
}

/// Element-wise product of per-layer safety probabilities.
inline Grid<double> superpose(const std::vector<TraversabilityLayer>& layers) {
    if (layers.empty()) throw std::invalid_argument("no layers to superpose");
    const int w = layers.front().width(), h = layers.front().height();
    for (const auto& l : layers)
        if (l.width() != w || l.height() != h)
            throw std::invalid_argument("layer dimensions differ");
    Grid<double> fused(w, h, 1.0);
    for (const auto& l : layers)
        for (std::size_t i = 0; i < fused.size(); ++i)
            fused.data()[i] *= l.p_safe.data()[i];
    return fused;
}

}  // namespace gridnav
