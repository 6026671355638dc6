#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>

namespace gridnav {

/// Deterministic 64-bit generator (splitmix64). Self-contained so that runs
/// are bit-reproducible regardless of the standard library build.
class Rng {
  public:
    explicit Rng(std::uint64_t seed = 0x9E3779B97F4A7C15ULL) : state_(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    /// Uniform in [0, 1).
    double uniform() { return double(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [0, n).
    std::uint64_t uniform_index(std::uint64_t n) { return n ? next_u64() % n : 0; }

    /// Standard normal via Marsaglia polar method; the spare draw is
    /// discarded to keep every call's consumption independent of history.
    double gaussian() {
        for (;;) {
            const double u = 2.0 * uniform() - 1.0;
            const double v = 2.0 * uniform() - 1.0;
            const double s = u * u + v * v;
            if (s > 0.0 && s < 1.0) {
                return u * std::sqrt(-2.0 * std::log(s) / s);
            }
        }
    }

    double gaussian(double mean, double sigma) { return mean + sigma * gaussian(); }

  private:
    std::uint64_t state_;
};

inline std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (const char c : s) {
        h ^= static_cast<std::uint64_t>(static_cast<unsigned char>(c));
        h *= 0x100000001B3ULL;
    }
    return h;
}

/// Derives independent named sub-streams from one master seed, so that adding
/// a noise source never perturbs the draws of another.
class RngPool {
  public:
    explicit RngPool(std::uint64_t master_seed) : master_(master_seed) {}

    Rng stream(std::string_view name) const {
        // Mix the name hash through one splitmix round to decorrelate seeds.
        Rng mixer(master_ ^ fnv1a64(name));
        return Rng(mixer.next_u64());
    }

    std::uint64_t master_seed() const { return master_; }

  private:
    std::uint64_t master_;
};

}  // namespace gridnav
