#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace ldfv {

/// Bad user-facing configuration (invalid grid, boundary spec, CLI input).
struct config_error : std::runtime_error {
    explicit config_error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Array shapes do not match the operation's contract.
struct shape_error : std::runtime_error {
    explicit shape_error(const std::string& msg) : std::runtime_error(msg) {}
};

/// A state left the admissible set (rho <= 0 or internal energy <= 0).
/// Carries the cell / step context of the offending state when known.
struct admissibility_error : std::runtime_error {
    int cell_i = -1;
    int cell_j = -1;
    long step = -1;
    explicit admissibility_error(const std::string& msg, int i = -1, int j = -1, long s = -1)
        : std::runtime_error(msg), cell_i(i), cell_j(j), step(s) {}
};

/// Fixed-order compensated (Kahan) summation, used wherever a sum is part of
/// a conservation check and must not depend on accumulation noise.
class KahanSum {
  public:
    void add(double x) {
        const double y = x - c_;
        const double t = s_ + y;
        c_ = (t - s_) - y;
        s_ = t;
    }
    double value() const { return s_; }

  private:
    double s_ = 0.0;
    double c_ = 0.0;
};

inline double kahan_total(const std::vector<double>& v) {
    KahanSum k;
    for (double x : v) k.add(x);
    return k.value();
}

namespace detail {

inline uint64_t splitmix64(uint64_t z) {
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

}  // namespace detail

/// Counter-based PRNG: every draw is a stateless mix of (seed, stream, counter),
/// so per-IC streams derived from one master seed are reproducible independent
/// of generation order or parallelism.
class CounterRng {
  public:
    CounterRng(uint64_t seed, uint64_t stream) {
        key_ = detail::splitmix64(detail::splitmix64(seed) ^ (stream * 0xD2B74407B1CE6E93ULL + 1));
    }

    uint64_t next_u64() {
        uint64_t z = detail::splitmix64(key_ ^ (counter_ * 0x9E3779B97F4A7C15ULL));
        ++counter_;
        return detail::splitmix64(z + key_);
    }

    /// Uniform [0, 1) with 53 random bits.
    double u01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double a, double b) { return a + (b - a) * u01(); }

    /// Uniform integer in [lo, hi] inclusive.
    int uniform_int(int lo, int hi) {
        return lo + static_cast<int>(next_u64() % static_cast<uint64_t>(hi - lo + 1));
    }

    /// Standard normal via Box-Muller (no std::normal_distribution: its output
    /// is not pinned across library versions).
    double normal() {
        double u1 = u01();
        while (u1 <= 0.0) u1 = u01();
        const double u2 = u01();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
    }

    /// Normal truncated to |z| <= 2 by redraw.
    double truncated_normal() {
        double z = normal();
        while (std::abs(z) > 2.0) z = normal();
        return z;
    }

  private:
    uint64_t key_ = 0;
    uint64_t counter_ = 0;
};

}  // namespace ldfv
