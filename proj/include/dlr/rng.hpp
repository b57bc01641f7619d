#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace dlr {

// Seedable generator with byte-reproducible draws across platforms.
// mt19937_64 output is fixed by the standard; the uniform and Gaussian
// transforms below are spelled out here instead of using the (unspecified)
// std distributions.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    // Uniform on (0, 1]: top 53 bits, shifted away from zero so log() is safe.
    double uniform01() {
        return static_cast<double>((engine_() >> 11) + 1) * 0x1.0p-53;
    }

    // Uniform on [0, n) by rejection-free scaling (n is tiny here; modulo
    // bias at n << 2^64 is < 2^-50 and irrelevant for sampling states).
    std::uint32_t below(std::uint32_t n) {
        return static_cast<std::uint32_t>(engine_() % n);
    }

    // Standard normal via Box-Muller on consecutive uniforms; the sine
    // partner is cached, so draws come in a fixed documented order.
    double gaussian() {
        if (has_cached_) {
            has_cached_ = false;
            return cached_;
        }
        double u1 = uniform01();
        double u2 = uniform01();
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 6.283185307179586476925286766559 * u2;
        cached_ = r * std::sin(a);
        has_cached_ = true;
        return r * std::cos(a);
    }

private:
    std::mt19937_64 engine_;
    double cached_ = 0.0;
    bool has_cached_ = false;
};

// Stream splitter (splitmix64 finalizer). Used to derive independent chain
// and instance seeds from one master seed.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (stream + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

}  // namespace dlr
