#pragma once

#include <algorithm>
#include <cstdint>
#include <deque>
#include <optional>
#include <string>
#include <vector>

#include "gridnav/geometry.hpp"
#include "gridnav/rng.hpp"

namespace gridnav {

enum class FaultKind : std::uint8_t { Gap, Jump, Divergence };

/// Scripted stream fault: active on ticks in [from_tick, to_tick].
struct FaultWindow {
    long from_tick = 0;
    long to_tick = 0;
    FaultKind kind = FaultKind::Gap;
    double magnitude = 0.0;  // jump: meters added to one sample
    double rate = 0.0;       // divergence: meters per tick of runaway drift
};

struct OdometryStreamSpec {
    std::string id = "ko";
    int rate = 1;                     // ticks per sample
    double noise_trans_sigma = 0.0;   // meters, per axis
    double noise_rot_sigma = 0.0;     // radians
    std::vector<FaultWindow> faults;

    // Confidence-test thresholds.
    double max_speed = 0.2;           // meters per tick; jump gate is max_speed * rate
    int divergence_window = 20;       // samples
    double divergence_var_bound = 1e-4;  // variance of windowed displacements
};

enum class HealthStatus : std::uint8_t { Healthy, Gap, Jump, Divergence };

inline const char* to_string(HealthStatus s) {
    switch (s) {
        case HealthStatus::Healthy: return "healthy";
        case HealthStatus::Gap: return "gap";
        case HealthStatus::Jump: return "jump";
        case HealthStatus::Divergence: return "divergence";
    }
    return "?";
}

struct HealthReport {
    std::string stream_id;
    long tick = 0;
    HealthStatus status = HealthStatus::Healthy;
    double evidence = 0.0;  // statistic that crossed its threshold
};

/// One synthetic odometry source: relative pose increments derived from true
/// motion plus stream noise, with faults injected per script. Gap faults
/// produce absent samples, never poses.
class OdometryStream {
  public:
    explicit OdometryStream(OdometryStreamSpec spec) : spec_(std::move(spec)) {}

    const OdometryStreamSpec& spec() const { return spec_; }
    const std::string& id() const { return spec_.id; }

    /// Generates and records this tick's sample from the true increment.
    std::optional<Pose2> advance(long tick, const Pose2& true_increment, Rng& rng) {
        std::optional<Pose2> sample;
        if (tick % std::max(1, spec_.rate) == 0 && !fault_active(tick, FaultKind::Gap)) {
            Pose2 inc = true_increment;
            if (spec_.noise_trans_sigma > 0.0) {
                inc.x += rng.gaussian(0.0, spec_.noise_trans_sigma);
                inc.y += rng.gaussian(0.0, spec_.noise_trans_sigma);
            }
            if (spec_.noise_rot_sigma > 0.0)
                inc.theta = normalize_angle(inc.theta + rng.gaussian(0.0, spec_.noise_rot_sigma));
            if (const FaultWindow* f = active_fault(tick, FaultKind::Jump))
                inc.x += f->magnitude;
            if (const FaultWindow* f = active_fault(tick, FaultKind::Divergence))
                inc.x += f->rate * double(tick - f->from_tick + 1);
            sample = inc;
        }
        record(tick, sample);
        return sample;
    }

    /// Records an externally produced sample (test entry point).
    void record(long tick, std::optional<Pose2> sample) {
        last_tick_ = tick;
        last_sample_ = sample;
        if (sample) {
            window_.push_back(sample->position().norm());
            const std::size_t cap = static_cast<std::size_t>(
                std::max(2, spec_.divergence_window));
            while (window_.size() > cap) window_.pop_front();
            ++sample_count_;
        }
    }

    bool has_sample(long tick) const { return last_tick_ == tick && last_sample_.has_value(); }
    std::optional<Pose2> sample(long tick) const {
        return last_tick_ == tick ? last_sample_ : std::nullopt;
    }
    long sample_count() const { return sample_count_; }
    const std::deque<double>& displacement_window() const { return window_; }

  private:
    bool fault_active(long tick, FaultKind kind) const {
        return active_fault(tick, kind) != nullptr;
    }
    const FaultWindow* active_fault(long tick, FaultKind kind) const {
        for (const FaultWindow& f : spec_.faults)
            if (f.kind == kind && tick >= f.from_tick && tick <= f.to_tick) return &f;
        return nullptr;
    }

    OdometryStreamSpec spec_;
    long last_tick_ = -1;
    std::optional<Pose2> last_sample_;
    std::deque<double> window_;
    long sample_count_ = 0;
};

/// Confidence test on one stream for this tick. Checks, in order: missing
/// sample (gap), single-sample displacement above the speed gate (jump),
/// then windowed displacement variance above its bound (divergence).
inline HealthReport hero_confidence_test(const OdometryStream& stream, long tick) {
    HealthReport report;
    report.stream_id = stream.id();
    report.tick = tick;

    const auto sample = stream.sample(tick);
    if (!sample) {
        report.status = HealthStatus::Gap;
        report.evidence = 1.0;
        return report;
    }

    const double displacement = sample->position().norm();
    const double jump_gate = stream.spec().max_speed * std::max(1, stream.spec().rate);
    if (displacement > jump_gate) {
        report.status = HealthStatus::Jump;
        report.evidence = displacement;
        return report;
    }

    const auto& window = stream.displacement_window();
    if (window.size() >= 2) {
        double mean = 0.0;
        for (const double d : window) mean += d;
        mean /= double(window.size());
        double var = 0.0;
        for (const double d : window) var += (d - mean) * (d - mean);
        var /= double(window.size());
        if (var > stream.spec().divergence_var_bound) {
            report.status = HealthStatus::Divergence;
            report.evidence = var;
            return report;
        }
        report.evidence = var;
    }
    return report;
}

/// Picks the highest-priority healthy stream; nullopt when none is healthy,
/// in which case the caller falls back to the identity prior.
inline std::optional<std::string> hero_select(
    const std::vector<HealthReport>& reports,
    const std::vector<std::string>& priority) {
    for (const std::string& id : priority) {
        for (const HealthReport& r : reports) {
            if (r.stream_id == id && r.status == HealthStatus::Healthy) return id;
        }
    }
    return std::nullopt;
}

}  // namespace gridnav
