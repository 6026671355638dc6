#pragma once

#include <cmath>
#include <limits>
#include <queue>
#include <stdexcept>
#include <vector>

#include "gridnav/belief.hpp"
#include "gridnav/sensing.hpp"

namespace gridnav {

struct NoPathError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct PolicyStep {
    Cell cell;
    double heading = 0.0;
};

/// K-step local policy: cells to visit with the orientation to hold at each.
struct PlannedPolicy {
    std::vector<PolicyStep> steps;   // steps[0] is the start cell
    double expected_risk = 0.0;
    double length_m = 0.0;

    bool empty() const { return steps.empty(); }
};

struct LocalPlannerParams {
    int max_steps = 20;            // K
    double lambda_risk = 0.5;      // meters-to-risk exchange rate in the edge cost
    double lethal_cutoff = 0.05;   // cells with mean below this are untraversable
    int heading_count = 8;         // discrete headings for the orientation stage
    double max_turn_per_step = kPi / 2.0;
    double blocked_mean = 0.5;     // visibility threshold for prediction
};

/// Risk of traversing the policy: one minus the product of expected safety
/// along the steps, evaluated on the supplied (usually predicted) map.
inline double path_risk(const PlannedPolicy& policy, const BeliefMap& predicted) {
    double survive = 1.0;
    for (const PolicyStep& s : policy.steps) {
        if (!predicted.in_bounds(s.cell))
            throw std::invalid_argument("policy step outside grid");
        survive *= predicted.at(s.cell).mean();
    }
    return 1.0 - survive;
}

/// Expected evolution of the belief along a policy: each step applies the
/// generative measurement prediction of every sensor at that cell and
/// heading. The input map is never mutated.
inline BeliefMap predict_along_policy(const BeliefMap& belief,
                                      const PlannedPolicy& policy,
                                      const std::vector<SensorSpec>& rig,
                                      double blocked_mean = 0.5) {
    BeliefMap predicted = belief;
    for (const PolicyStep& s : policy.steps) {
        const Vec2 center = predicted.cell_center(s.cell);
        const Pose2 pose{center.x, center.y, s.heading};
        for (const SensorSpec& spec : rig) {
            const auto obs =
                predict_measurement(predicted, pose, s.heading, spec, blocked_mean);
            for (const auto& [cell, sigma_after] : obs.cells)
                predicted.apply_expected(cell, spec.evidence_weight);
        }
    }
    return predicted;
}

/// Deterministic Dijkstra over 8-connected believed-traversable cells.
/// Entering cell v costs -ln(mean(v)) + lambda * step_length; minimizing the
/// sum maximizes the safety product when lambda = 0.
inline std::vector<Cell> min_risk_cells(const BeliefMap& belief, Cell start,
                                        Cell goal, const LocalPlannerParams& params) {
    const int w = belief.width(), h = belief.height();
    const double res = belief.resolution();
    const std::size_t n = static_cast<std::size_t>(w) * h;
    std::vector<double> dist(n, std::numeric_limits<double>::infinity());
    std::vector<int> parent(n, -1);

    auto idx = [w](Cell c) { return static_cast<std::size_t>(c.y) * w + c.x; };
    auto passable = [&](Cell c) {
        return belief.at(c).mean() > params.lethal_cutoff;
    };

    using Entry = std::pair<double, std::size_t>;  // (cost, index): index breaks ties
    std::priority_queue<Entry, std::vector<Entry>, std::greater<>> open;
    dist[idx(start)] = 0.0;
    open.push({0.0, idx(start)});

    while (!open.empty()) {
        const auto [d, ui] = open.top();
        open.pop();
        if (d > dist[ui]) continue;
        if (ui == idx(goal)) break;
        const Cell u{static_cast<int>(ui % w), static_cast<int>(ui / w)};
        for (const Cell dir : kDir8) {
            const Cell v{u.x + dir.x, u.y + dir.y};
            if (!belief.in_bounds(v) || !passable(v)) continue;
            if (dir.x != 0 && dir.y != 0) {
                // No corner cutting through blocked cardinal neighbors.
                if (!passable({u.x + dir.x, u.y}) || !passable({u.x, u.y + dir.y}))
                    continue;
            }
            const double step_m = step_length(u, v) * res;
            const double cost =
                -std::log(belief.at(v).mean()) + params.lambda_risk * step_m;
            const std::size_t vi = idx(v);
            if (dist[ui] + cost < dist[vi]) {
                dist[vi] = dist[ui] + cost;
                parent[vi] = static_cast<int>(ui);
                open.push({dist[vi], vi});
            }
        }
    }

    if (!std::isfinite(dist[idx(goal)]))
        throw NoPathError("no believed-traversable path from start to goal");
    std::vector<Cell> path;
    for (int at = static_cast<int>(idx(goal)); at >= 0; at = parent[at]) {
        path.push_back({at % w, at / w});
        if (static_cast<std::size_t>(at) == idx(start)) break;
    }
    std::reverse(path.begin(), path.end());
    return path;
}

namespace detail {

inline bool heading_dependent(const SensorSpec& spec) {
    return spec.fov < 2.0 * kPi - 1e-9;
}

/// Total predicted sigma reduction of a full heading assignment, applying
/// the expected updates sequentially so later steps see earlier evidence.
inline double assignment_gain(const BeliefMap& belief,
                              const std::vector<Cell>& cells,
                              const std::vector<double>& headings,
                              const std::vector<SensorSpec>& rig,
                              const LocalPlannerParams& params) {
    BeliefMap sim = belief;
    double total = 0.0;
    for (std::size_t k = 0; k < cells.size(); ++k) {
        const Vec2 center = sim.cell_center(cells[k]);
        const Pose2 pose{center.x, center.y, headings[k]};
        for (const SensorSpec& spec : rig) {
            if (!heading_dependent(spec)) continue;
            const auto obs =
                predict_measurement(sim, pose, headings[k], spec, params.blocked_mean);
            total += obs.total_sigma_reduction(sim);
            for (const auto& [cell, sigma_after] : obs.cells)
                sim.apply_expected(cell, spec.evidence_weight);
        }
    }
    return total;
}

}  // namespace detail

/// Cascaded policy optimization: a deterministic min-cost search fixes the
/// cell sequence, then the orientation stage picks per-step headings that
/// maximize the predicted uncertainty reduction, subject to the turn cap.
/// The winning heading assignment is never worse than any constant heading
/// at the configured angular resolution, since all of those are evaluated.
inline PlannedPolicy plan_policy(const BeliefMap& belief, Cell start, Cell goal,
                                 const LocalPlannerParams& params,
                                 const std::vector<SensorSpec>& rig = {},
                                 double start_heading = 0.0) {
    if (start == goal) throw std::invalid_argument("start equals goal");
    if (!belief.in_bounds(start) || !belief.in_bounds(goal))
        throw std::invalid_argument("start or goal outside grid");
    if (belief.at(start).mean() <= params.lethal_cutoff ||
        belief.at(goal).mean() <= params.lethal_cutoff)
        throw std::invalid_argument("start or goal believed lethal");

    std::vector<Cell> cells = detail::min_risk_path(belief, start, goal, params);
    if (static_cast<int>(cells.size()) > params.max_steps + 1)
        cells.resize(params.max_steps + 1);

    // Orientation stage.
    std::vector<double> headings(cells.size(), start_heading);
    bool any_directional = false;
    for (const SensorSpec& s : rig) any_directional |= detail::heading_dependent(s);

    if (!any_directional || cells.size() < 2) {
        // Orientation cannot change what the rig sees; hold path tangents.
        for (std::size_t k = 0; k + 1 < cells.size(); ++k) {
            const Vec2 a = belief.cell_center(cells[k]);
            const Vec2 b = belief.cell_center(cells[k + 1]);
            headings[k] = std::atan2(b.y - a.y, b.x - a.x);
        }
        if (cells.size() >= 2) headings.back() = headings[cells.size() - 2];
    } else {
        std::vector<double> candidates(params.heading_count);
        for (int i = 0; i < params.heading_count; ++i)
            candidates[i] = normalize_angle(2.0 * kPi * i / params.heading_count);

        // Greedy sequential choice under the turn cap.
        std::vector<double> greedy(cells.size(), start_heading);
        {
            BeliefMap sim = belief;
            double prev = start_heading;
            bool first = true;
            for (std::size_t k = 0; k < cells.size(); ++k) {
                const Vec2 center = sim.cell_center(cells[k]);
                double best_gain = -1.0;
                double best_heading = prev;
                for (const double h : candidates) {
                    if (!first &&
                        std::abs(normalize_angle(h - prev)) >
                            params.max_turn_per_step + 1e-12)
                        continue;
                    double gain = 0.0;
                    for (const SensorSpec& spec : rig) {
                        if (!detail::heading_dependent(spec)) continue;
                        const auto obs = predict_measurement(
                            sim, {center.x, center.y, h}, h, spec, params.blocked_mean);
                        gain += obs.total_sigma_reduction(sim);
                    }
                    if (gain > best_gain + 1e-15) {
                        best_gain = gain;
                        best_heading = h;
                    }
                }
                greedy[k] = best_heading;
                prev = best_heading;
                first = false;
                for (const SensorSpec& spec : rig) {
                    if (!detail::heading_dependent(spec)) continue;
                    const auto obs = predict_measurement(
                        sim, {center.x, center.y, best_heading}, best_heading, spec,
                        params.blocked_mean);
                    for (const auto& [cell, sigma_after] : obs.cells)
                        sim.apply_expected(cell, spec.evidence_weight);
                }
            }
        }

        double best_total =
            detail::assignment_gain(belief, cells, greedy, rig, params);
        headings = greedy;
        for (const double h : candidates) {
            const std::vector<double> constant(cells.size(), h);
            const double total =
                detail::assignment_gain(belief, cells, constant, rig, params);
            if (total > best_total + 1e-12) {
                best_total = total;
                headings = constant;
            }
        }
    }

    PlannedPolicy policy;
    policy.steps.reserve(cells.size());
    for (std::size_t k = 0; k < cells.size(); ++k)
        policy.steps.push_back({cells[k], headings[k]});
    for (std::size_t k = 1; k < cells.size(); ++k)
        policy.length_m += step_length(cells[k - 1], cells[k]) * belief.resolution();

    const BeliefMap predicted =
        predict_along_policy(belief, policy, rig, params.blocked_mean);
    policy.expected_risk = path_risk(policy, predicted);
    return policy;
}

/// Receding-horizon waypoint: the first policy cell whose cumulative path
/// length reaches d, or the final cell on shorter policies.
inline Cell rhc_step(const PlannedPolicy& policy, double d_meters,
                     double resolution) {
    if (policy.empty()) throw std::invalid_argument("policy is empty");
    double cum = 0.0;
    for (std::size_t k = 1; k < policy.steps.size(); ++k) {
        cum += step_length(policy.steps[k - 1].cell, policy.steps[k].cell) * resolution;
        if (cum >= d_meters - 1e-12) return policy.steps[k].cell;
    }
    return policy.steps.back().cell;
}

}  // namespace gridnav
