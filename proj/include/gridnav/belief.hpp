#pragma once

#include <cmath>
#include <cstring>
#include <stdexcept>

#include "gridnav/grid.hpp"

namespace gridnav {

/// Beta-distributed belief over a cell's safety probability. alpha counts
/// safe evidence, beta counts lethal evidence; both stay > 0.
struct CellBelief {
    double alpha = 1.0;
    double beta = 1.0;

    double mean() const { return alpha / (alpha + beta); }
    double variance() const {
        const double s = alpha + beta;
        return alpha * beta / (s * s * (s + 1.0));
    }
    double sigma() const { return std::sqrt(variance()); }
    double weight() const { return alpha + beta; }
};

/// Conjugate update: adds observed evidence mass to the pseudo-counts.
inline CellBelief belief_update(CellBelief b, double safe_weight,
                                double lethal_weight) {
    if (safe_weight < 0.0 || lethal_weight < 0.0) {
        throw std::invalid_argument("observation weights must be >= 0");
    }
    return {b.alpha + safe_weight, b.beta + lethal_weight};
}

/// Expected update for planning: evidence of total weight w split by the
/// current mean, which leaves the mean untouched and shrinks sigma.
inline CellBelief belief_expected_update(CellBelief b, double w) {
    const double mu = b.mean();
    return {b.alpha + w * mu, b.beta + w * (1.0 - mu)};
}

/// Per-cell safety beliefs over the planning grid. Cells start at the
/// maximal-uncertainty prior and are only touched by observations.
class BeliefMap {
  public:
    BeliefMap() = default;
    BeliefMap(int width, int height, double resolution,
              CellBelief prior = CellBelief{})
        : cells_(width, height, prior), last_update_(width, height, -1),
          resolution_(resolution), prior_(prior) {}

    int width() const { return cells_.width(); }
    int height() const { return cells_.height(); }
    double resolution() const { return resolution_; }
    CellBelief prior() const { return prior_; }

    bool in_bounds(Cell c) const { return cells_.in_bounds(c); }
    const CellBelief& at(Cell c) const { return cells_.at(c); }

    void apply(Cell c, double safe_weight, double lethal_weight, long tick) {
        cells_.at(c) = belief_update(cells_.at(c), safe_weight, lethal_weight);
        last_update_.at(c) = tick;
    }
    void apply_expected(Cell c, double w) {
        cells_.at(c) = belief_expected_update(cells_.at(c), w);
    }

    long last_update(Cell c) const { return last_update_.at(c); }

    /// A cell counts as known once evidence has pushed sigma below the cutoff.
    bool is_known(Cell c, double sigma_known) const {
        return cells_.at(c).sigma() < sigma_known;
    }

    Cell cell_at(Vec2 p) const {
        return {static_cast<int>(std::floor(p.x / resolution_)),
                static_cast<int>(std::floor(p.y / resolution_))};
    }
    Vec2 cell_center(Cell c) const {
        return {(c.x + 0.5) * resolution_, (c.y + 0.5) * resolution_};
    }

    bool operator==(const BeliefMap& o) const {
        if (width() != o.width() || height() != o.height()) return false;
        for (std::size_t i = 0; i < cells_.size(); ++i) {
            if (cells_.data()[i].alpha != o.cells_.data()[i].alpha ||
                cells_.data()[i].beta != o.cells_.data()[i].beta)
                return false;
        }
        return true;
    }

    /// Order-independent content hash, used to assert prediction purity.
    std::uint64_t content_hash() const {
        std::uint64_t h = 0xCBF29CE484222325ULL;
        auto mix = [&h](double v) {
            std::uint64_t bits;
            static_assert(sizeof(bits) == sizeof(v));
            std::memcpy(&bits, &v, sizeof(bits));
            h ^= bits;
            h *= 0x100000001B3ULL;
        };
        for (const CellBelief& b : cells_.data()) {
            mix(b.alpha);
            mix(b.beta);
        }
        return h;
    }

  private:
    Grid<CellBelief> cells_;
    Grid<long> last_update_;
    double resolution_ = 1.0;
    CellBelief prior_;
};

}  // namespace gridnav
