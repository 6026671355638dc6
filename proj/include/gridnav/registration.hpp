#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include "gridnav/geometry.hpp"
#include "gridnav/sensing.hpp"

namespace gridnav {

using PointCloud = std::vector<Vec2>;

/// Uniform-bin index for nearest-neighbor queries on small 2-D clouds.
/// Ties resolve to the lowest point index, so queries are deterministic.
class SpatialHash {
  public:
    SpatialHash() = default;
    SpatialHash(const PointCloud& points, double bin_size)
        : points_(&points), bin_(bin_size) {
        bins_.reserve(points.size());
        for (std::size_t i = 0; i < points.size(); ++i)
            bins_[key(points[i])].push_back(static_cast<int>(i));
    }

    int nearest(Vec2 q, double max_dist) const {
        int best = -1;
        double best_d2 = max_dist * max_dist;
        const int qx = coord(q.x), qy = coord(q.y);
        const int max_ring = static_cast<int>(std::ceil(max_dist / bin_)) + 1;
        for (int ring = 0; ring <= max_ring; ++ring) {
            // Once a hit exists, one extra ring guarantees no closer point
            // hides behind a bin border.
            if (best >= 0 && (ring - 1) * bin_ > std::sqrt(best_d2)) break;
            scan_ring(qx, qy, ring, [&](int idx) {
                const double d2 = ((*points_)[idx] - q).squared_norm();
                if (d2 < best_d2 || (d2 == best_d2 && idx < best)) {
                    best_d2 = d2;
                    best = idx;
                }
            });
        }
        return best;
    }

    /// Indices of the k closest points to `q` (including an exact self match),
    /// ordered by distance then index.
    std::vector<int> k_nearest(Vec2 q, int k) const {
        std::vector<std::pair<double, int>> found;
        const int qx = coord(q.x), qy = coord(q.y);
        int ring = 0;
        const int hard_cap = 64;
        while (ring <= hard_cap) {
            scan_ring(qx, qy, ring, [&](int idx) {
                found.push_back({((*points_)[idx] - q).squared_norm(), idx});
            });
            if (static_cast<int>(found.size()) >= k) {
                std::sort(found.begin(), found.end());
                const double kth = std::sqrt(found[k - 1].first);
                if ((ring - 0) * bin_ >= kth) break;  // ring fully covers radius
            }
            ++ring;
        }
        std::sort(found.begin(), found.end());
        if (static_cast<int>(found.size()) > k) found.resize(k);
        std::vector<int> out;
        out.reserve(found.size());
        for (const auto& [d2, idx] : found) out.push_back(idx);
        return out;
    }

  private:
    int coord(double v) const { return static_cast<int>(std::floor(v / bin_)); }
    std::uint64_t key(Vec2 p) const {
        const std::uint64_t x = static_cast<std::uint32_t>(coord(p.x));
        const std::uint64_t y = static_cast<std::uint32_t>(coord(p.y));
        return (x << 32) | y;
    }
    std::uint64_t key_of(int x, int y) const {
        return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(x)) << 32) |
               static_cast<std::uint32_t>(y);
    }

    template <typename Fn>
    void scan_ring(int qx, int qy, int ring, Fn&& fn) const {
        auto visit_bin = [&](int bx, int by) {
            const auto it = bins_.find(key_of(bx, by));
            if (it == bins_.end()) return;
            for (const int idx : it->second) fn(idx);
        };
        if (ring == 0) {
            visit_bin(qx, qy);
            return;
        }
        for (int dx = -ring; dx <= ring; ++dx) {
            visit_bin(qx + dx, qy - ring);
            visit_bin(qx + dx, qy + ring);
        }
        for (int dy = -ring + 1; dy <= ring - 1; ++dy) {
            visit_bin(qx - ring, qy + dy);
            visit_bin(qx + ring, qy + dy);
        }
    }

    const PointCloud* points_ = nullptr;
    double bin_ = 1.0;
    std::unordered_map<std::uint64_t, std::vector<int>> bins_;
};

struct GicpParams {
    int max_iterations = 50;
    double param_tolerance = 1e-6;   // termination on parameter change
    double max_corr_dist = 1.0;      // correspondence gate, meters
    int neighborhood_k = 5;          // points per local covariance
    double degenerate_ratio = 1e3;   // eigenvalue ratio above which the
                                     // neighborhood is treated as degenerate
    double plane_floor = 1e-3;       // regularized minor-axis variance
    int min_points = 10;
};

namespace detail {

/// 2x2 symmetric eigen-decomposition; returns {lambda_major, lambda_minor,
/// major_axis_angle}.
struct Eig2 {
    double major = 0.0;
    double minor = 0.0;
    double angle = 0.0;
};

inline Eig2 eigen_sym2(double cxx, double cxy, double cyy) {
    const double tr = cxx + cyy;
    const double det = cxx * cyy - cxy * cxy;
    const double disc = std::sqrt(std::max(0.0, tr * tr / 4.0 - det));
    Eig2 e;
    e.major = tr / 2.0 + disc;
    e.minor = tr / 2.0 - disc;
    e.angle = 0.5 * std::atan2(2.0 * cxy, cxx - cyy);
    return e;
}

/// Per-target-point inverse covariance used to weight residuals. Identity
/// marks a point-to-point fallback.
struct PointWeight {
    double wxx = 1.0, wxy = 0.0, wyy = 1.0;
    bool planar = false;
};

inline std::vector<PointWeight> target_weights(const PointCloud& target,
                                               const SpatialHash& hash,
                                               const GicpParams& params) {
    std::vector<PointWeight> weights(target.size());
    for (std::size_t i = 0; i < target.size(); ++i) {
        const auto nbrs = hash.k_nearest(target[i], params.neighborhood_k);
        if (static_cast<int>(nbrs.size()) < params.neighborhood_k) continue;
        Vec2 mean{0, 0};
        for (const int j : nbrs) mean = mean + target[j];
        mean = mean * (1.0 / nbrs.size());
        double cxx = 0, cxy = 0, cyy = 0;
        for (const int j : nbrs) {
            const Vec2 d = target[j] - mean;
            cxx += d.x * d.x;
            cxy += d.x * d.y;
            cyy += d.y * d.y;
        }
        cxx /= nbrs.size();
        cxy /= nbrs.size();
        cyy /= nbrs.size();
        const Eig2 e = eigen_sym2(cxx, cxy, cyy);
        if (e.major < 1e-12 || e.major / std::max(e.minor, 1e-300) > params.degenerate_ratio) {
            continue;  // collinear spread too thin: point-to-point
        }
        // Normalized plane-to-plane weighting: unit variance along the
        // surface, inflated confidence across it.
        const double var_minor = std::max(e.minor / e.major, params.plane_floor);
        const double c = std::cos(e.angle), s = std::sin(e.angle);
        const double inv_major = 1.0, inv_minor = 1.0 / var_minor;
        weights[i].wxx = c * c * inv_major + s * s * inv_minor;
        weights[i].wyy = s * s * inv_major + c * c * inv_minor;
        weights[i].wxy = c * s * (inv_major - inv_minor);
        weights[i].planar = true;
    }
    return weights;
}

struct Correspondences {
    std::vector<int> source_idx;
    std::vector<int> target_idx;
};

inline Correspondences match(const PointCloud& source, const Pose2& T,
                             const SpatialHash& target_hash,
                             const GicpParams& params) {
    Correspondences corr;
    corr.source_idx.reserve(source.size());
    corr.target_idx.reserve(source.size());
    for (std::size_t i = 0; i < source.size(); ++i) {
        const Vec2 p = transform_point(T, source[i]);
        const int j = target_hash.nearest(p, params.max_corr_dist);
        if (j >= 0) {
            corr.source_idx.push_back(static_cast<int>(i));
            corr.target_idx.push_back(j);
        }
    }
    return corr;
}

inline double weighted_mse(const PointCloud& source, const PointCloud& target,
                           const std::vector<PointWeight>& weights,
                           const Correspondences& corr, const Pose2& T) {
    if (corr.source_idx.empty()) return std::numeric_limits<double>::infinity();
    double total = 0.0;
    for (std::size_t n = 0; n < corr.source_idx.size(); ++n) {
        const Vec2 r = transform_point(T, source[corr.source_idx[n]]) -
                       target[corr.target_idx[n]];
        const PointWeight& w = weights[corr.target_idx[n]];
        total += w.wxx * r.x * r.x + 2.0 * w.wxy * r.x * r.y + w.wyy * r.y * r.y;
    }
    return total / corr.source_idx.size();
}

/// Closed-form rigid alignment minimizing unweighted correspondence error.
inline Pose2 closed_form_rigid(const PointCloud& source, const PointCloud& target,
                               const Correspondences& corr) {
    Vec2 ps{0, 0}, qt{0, 0};
    const double n = double(corr.source_idx.size());
    for (std::size_t k = 0; k < corr.source_idx.size(); ++k) {
        ps = ps + source[corr.source_idx[k]];
        qt = qt + target[corr.target_idx[k]];
    }
    ps = ps * (1.0 / n);
    qt = qt * (1.0 / n);
    double sin_sum = 0.0, cos_sum = 0.0;
    for (std::size_t k = 0; k < corr.source_idx.size(); ++k) {
        const Vec2 a = source[corr.source_idx[k]] - ps;
        const Vec2 b = target[corr.target_idx[k]] - qt;
        sin_sum += a.cross(b);
        cos_sum += a.dot(b);
    }
    const double theta = std::atan2(sin_sum, cos_sum);
    const Vec2 t = qt - rotate(ps, theta);
    return {t.x, t.y, theta};
}

/// One damped Gauss-Newton step for the weighted objective. Returns false
/// when the normal equations are unsolvable.
inline bool weighted_step(const PointCloud& source, const PointCloud& target,
                          const std::vector<PointWeight>& weights,
                          const Correspondences& corr, const Pose2& T,
                          double damping, Pose2& out) {
    double H[3][3] = {{0}};
    double g[3] = {0, 0, 0};
    const double c = std::cos(T.theta), s = std::sin(T.theta);
    for (std::size_t n = 0; n < corr.source_idx.size(); ++n) {
        const Vec2 p = source[corr.source_idx[n]];
        const Vec2 r = transform_point(T, p) - target[corr.target_idx[n]];
        const PointWeight& w = weights[corr.target_idx[n]];
        // d(Rp + t)/dtheta
        const Vec2 dth{-s * p.x - c * p.y, c * p.x - s * p.y};
        const double J[3][2] = {{dth.x, dth.y}, {1.0, 0.0}, {0.0, 1.0}};
        for (int a = 0; a < 3; ++a) {
            const double WJa_x = w.wxx * J[a][0] + w.wxy * J[a][1];
            const double WJa_y = w.wxy * J[a][0] + w.wyy * J[a][1];
            g[a] += WJa_x * r.x + WJa_y * r.y;
            for (int b = 0; b < 3; ++b) H[a][b] += WJa_x * J[b][0] + WJa_y * J[b][1];
        }
    }
    for (int a = 0; a < 3; ++a) H[a][a] *= (1.0 + damping);

    // Solve the 3x3 system by Gaussian elimination with partial pivoting.
    double A[3][4];
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) A[i][j] = H[i][j];
        A[i][3] = -g[i];
    }
    for (int col = 0; col < 3; ++col) {
        int pivot = col;
        for (int r2 = col + 1; r2 < 3; ++r2)
            if (std::abs(A[r2][col]) > std::abs(A[pivot][col])) pivot = r2;
        if (std::abs(A[pivot][col]) < 1e-15) return false;
        std::swap(A[col], A[pivot]);
        for (int r2 = 0; r2 < 3; ++r2) {
            if (r2 == col) continue;
            const double f = A[r2][col] / A[col][col];
            for (int j = col; j < 4; ++j) A[r2][j] -= f * A[col][j];
        }
    }
    const double dtheta = A[0][3] / A[0][0];
    const double dx = A[1][3] / A[1][1];
    const double dy = A[2][3] / A[2][2];
    out = {T.x + dx, T.y + dy, normalize_angle(T.theta + dtheta)};
    return std::isfinite(dtheta) && std::isfinite(dx) && std::isfinite(dy);
}

}  // namespace detail

/// Covariance-weighted iterative registration of `source` onto `target`,
/// initialized at `prior`. Accepted iterations never increase the matched
/// residual; the update direction degrades to point-to-point wherever local
/// neighborhoods are too thin to orient.
inline Transform2 register_clouds(const PointCloud& source,
                                  const PointCloud& target, const Pose2& prior,
                                  const GicpParams& params = {}) {
    if (static_cast<int>(source.size()) < params.min_points ||
        static_cast<int>(target.size()) < params.min_points) {
        throw std::invalid_argument("registration needs at least " +
                                    std::to_string(params.min_points) +
                                    " points per cloud");
    }
    if (!prior.finite()) throw std::invalid_argument("registration prior must be finite");

    const SpatialHash hash(target, params.max_corr_dist);
    const auto weights = detail::target_weights(target, hash, params);

    Pose2 T = prior;
    auto corr = detail::match(source, T, hash, params);
    double residual = detail::weighted_mse(source, target, weights, corr, T);

    Transform2 result;
    result.converged = false;
    double last_change = std::numeric_limits<double>::infinity();
    int iter = 0;
    double damping = 1e-6;

    for (; iter < params.max_iterations; ++iter) {
        if (corr.source_idx.empty()) break;

        bool any_planar = false;
        for (std::size_t n = 0; n < corr.target_idx.size() && !any_planar; ++n)
            any_planar = weights[corr.target_idx[n]].planar;

        Pose2 proposal;
        bool accepted = false;
        if (!any_planar) {
            proposal = detail::closed_form_rigid(source, target, corr);
            // The closed form is the exact optimum for these matches, so a
            // re-match can only lower the unweighted residual further.
            accepted = true;
        } else {
            for (int attempt = 0; attempt < 8 && !accepted; ++attempt) {
                if (!detail::weighted_step(source, target, weights, corr, T,
                                           damping, proposal))
                    break;
                const auto corr_new = detail::match(source, proposal, hash, params);
                const double res_new =
                    detail::weighted_mse(source, target, weights, corr_new, proposal);
                if (res_new <= residual + 1e-15) {
                    accepted = true;
                    damping = std::max(damping * 0.25, 1e-9);
                } else {
                    damping *= 8.0;
                }
            }
            if (!accepted) break;  // no improving step at any damping
        }

        last_change = std::abs(normalize_angle(proposal.theta - T.theta)) +
                      std::abs(proposal.x - T.x) + std::abs(proposal.y - T.y);
        T = proposal;
        corr = detail::match(source, T, hash, params);
        residual = detail::weighted_mse(source, target, weights, corr, T);
        if (last_change < params.param_tolerance) {
            result.converged = true;
            ++iter;
            break;
        }
    }

    result.rotation = T.theta;
    result.translation = {T.x, T.y};
    result.iterations = iter;
    result.residual = corr.source_idx.empty() ? std::numeric_limits<double>::infinity()
                                              : residual;
    if (last_change < params.param_tolerance) result.converged = true;
    return result;
}

/// Scan-to-scan stage: estimates the motion between consecutive robot
/// frames, seeded by the selected odometry prior.
inline Transform2 gicp_scan_to_scan(const Scan& prev, const Scan& curr,
                                    const Transform2& prior,
                                    const GicpParams& params = {}) {
    if (!prior.finite()) throw std::invalid_argument("scan matching prior must be finite");
    return register_clouds(cloud_from_scan(curr), cloud_from_scan(prev),
                           prior.to_pose(), params);
}

/// Robot-centered accumulated point map. Points live in the world frame;
/// `center` is the pose the map was last re-centered on.
struct Submap {
    PointCloud points;
    Pose2 center;
    double radius = 3.0;       // meters
    int max_points = 10000;
    double voxel_size = 0.1;   // meters
};

/// Scan-to-submap refinement. The prior is the scan-to-scan estimate; the
/// submap must be centered on the previous pose estimate, which defines the
/// frame the motion is solved in.
inline Transform2 scan_to_submap(const Scan& curr, const Submap& submap,
                                 const Transform2& prior,
                                 const GicpParams& params = {}) {
    if (submap.points.empty()) throw std::invalid_argument("submap is empty");
    if (!prior.finite()) throw std::invalid_argument("submap matching prior must be finite");
    PointCloud local;
    local.reserve(submap.points.size());
    const Pose2 inv_center = inverse(submap.center);
    for (const Vec2 p : submap.points) local.push_back(transform_point(inv_center, p));
    return register_clouds(cloud_from_scan(curr), local, prior.to_pose(), params);
}

/// Appends a scan taken at `pose`, re-centers, crops to the submap radius,
/// and voxel-downsamples whenever the budget is exceeded. Binning keeps one
/// centroid per occupied voxel and grows the voxel until the budget holds.
inline Submap update_submap(Submap submap, const Scan& scan, const Pose2& pose) {
    if (!pose.finite()) throw std::invalid_argument("submap pose must be finite");
    for (const Vec2 p : cloud_from_scan(scan))
        submap.points.push_back(transform_point(pose, p));
    submap.center = pose;

    PointCloud kept;
    kept.reserve(submap.points.size());
    const double r2 = submap.radius * submap.radius;
    for (const Vec2 p : submap.points)
        if ((p - pose.position()).squared_norm() <= r2) kept.push_back(p);
    submap.points = std::move(kept);

    double voxel = submap.voxel_size;
    while (static_cast<int>(submap.points.size()) > submap.max_points) {
        std::map<std::pair<long, long>, std::pair<Vec2, int>> voxels;
        for (const Vec2 p : submap.points) {
            const std::pair<long, long> key{
                static_cast<long>(std::floor(p.x / voxel)),
                static_cast<long>(std::floor(p.y / voxel))};
            auto& [sum, count] = voxels[key];
            sum = sum + p;
            ++count;
        }
        PointCloud binned;
        binned.reserve(voxels.size());
        for (const auto& [key, acc] : voxels)
            binned.push_back(acc.first * (1.0 / acc.second));
        submap.points = std::move(binned);
        if (static_cast<int>(submap.points.size()) <= submap.max_points) break;
        voxel *= 1.5;
    }
    return submap;
}

/// Right-composes an estimated motion onto a world pose.
inline Pose2 integrate_pose(const Pose2& pose, const Transform2& motion) {
    if (!pose.finite() || !motion.finite())
        throw std::invalid_argument("integrate_pose inputs must be finite");
    return compose(pose, motion.to_pose());
}

}  // namespace gridnav
