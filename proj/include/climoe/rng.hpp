#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>
#include <utility>

namespace climoe {

// SplitMix64 finalizer. Also serves as the counter-based generator: hashing
// a (seed, stream, counter) tuple gives a value that does not depend on the
// order of evaluation.
constexpr std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

constexpr std::uint64_t hash_key(std::uint64_t a, std::uint64_t b, std::uint64_t c = 0,
                                 std::uint64_t d = 0) {
    std::uint64_t h = mix64(a);
    h = mix64(h ^ b);
    h = mix64(h ^ c);
    return mix64(h ^ d);
}

// Uniform in [0, 1) with 53 bits of mantissa.
constexpr double to_unit(std::uint64_t bits) {
    return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

// Sequential generator with portable output. std::uniform_*_distribution are
// implementation-defined, so every draw here goes through explicit formulas.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() {
        state_ += 0x9e3779b97f4a7c15ULL;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    double uniform() { return to_unit(next()); }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Unbiased integer in [0, n) by rejection.
    std::uint64_t below(std::uint64_t n) {
        const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
        std::uint64_t x;
        do {
            x = next();
        } while (x >= limit);
        return x % n;
    }

    template <class T>
    void shuffle(std::span<T> xs) {
        for (std::size_t i = xs.size(); i > 1; --i) {
            std::swap(xs[i - 1], xs[below(i)]);
        }
    }

private:
    std::uint64_t state_;
};

// Standard normal from two counter-based uniforms (Box-Muller).
inline double gaussian_at(std::uint64_t key) {
    double u1 = to_unit(mix64(key));
    double u2 = to_unit(mix64(key ^ 0xd1b54a32d192ed03ULL));
    if (u1 < 1e-300) u1 = 1e-300;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace climoe
