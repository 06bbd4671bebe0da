#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <string_view>

namespace isl {

// SplitMix64 finalizer; used to derive well-separated seeds.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

constexpr std::uint64_t fnv1a(std::string_view s) noexcept {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (char c : s) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

// A deterministic random stream.
//
// Backed by std::mt19937_64, whose output sequence is fixed by the C++
// standard, and converted to doubles with our own transforms (not the
// implementation-defined std:: distributions), so a (seed, name) pair
// produces the same numbers on every conforming platform.
//
// Streams are named and splittable: `Stream(seed, "data")` and
// `Stream(seed, "model")` are independent, and `split(i)` yields the i-th
// substream (used for per-trajectory sampling).
class Stream {
public:
    explicit Stream(std::uint64_t seed, std::string_view name = "default")
        : key_(splitmix64(seed ^ splitmix64(fnv1a(name)))), engine_(key_) {}

    Stream split(std::uint64_t index) const { return Stream(key_, index, 0); }

    std::uint64_t next_u64() { return engine_(); }

    // Uniform on [0, 1) with 53 bits of resolution.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    // Uniform on the open interval (0, 1).
    double uniform_open() {
        double u;
        do {
            u = uniform();
        } while (u == 0.0);
        return u;
    }

    double uniform(double a, double b) { return a + (b - a) * uniform(); }

    // Standard normal via Box-Muller; two uniforms per draw, no caching, so
    // the consumption pattern is fixed.
    double normal() {
        const double u1 = uniform_open();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

    // Index uniform on {0, ..., n-1} (n >= 1), by rejection.
    std::uint64_t below(std::uint64_t n) {
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t x;
        do {
            x = engine_();
        } while (x >= limit);
        return x % n;
    }

private:
    Stream(std::uint64_t parent_key, std::uint64_t index, int)
        : key_(splitmix64(parent_key ^ splitmix64(index + 0x51ed270b27a3f4a5ULL))),
          engine_(key_) {}

    std::uint64_t key_;
    std::mt19937_64 engine_;
};

}  // namespace isl
