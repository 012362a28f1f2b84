#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <span>
#include <string_view>

namespace climoe {

// 64-bit FNV-1a. Used for spec descriptors, parameter fingerprints and
// dataset fingerprints; not a cryptographic hash.
class Fnv1a {
public:
    static constexpr std::uint64_t kOffset = 0xcbf29ce484222325ULL;
    static constexpr std::uint64_t kPrime = 0x100000001b3ULL;

    void update(const void* data, std::size_t n) {
        const auto* p = static_cast<const unsigned char*>(data);
        for (std::size_t i = 0; i < n; ++i) {
            state_ ^= p[i];
            state_ *= kPrime;
        }
    }
    void update(std::string_view s) { update(s.data(), s.size()); }
    void update(std::uint64_t v) {
        unsigned char b[8];
        for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
        update(b, 8);
    }
    // Doubles are hashed by their little-endian bit pattern.
    void update(std::span<const double> xs) {
        for (double x : xs) update(std::bit_cast<std::uint64_t>(x));
    }

    std::uint64_t digest() const { return state_; }

private:
    std::uint64_t state_ = kOffset;
};

inline std::uint64_t fnv1a(std::string_view s) {
    Fnv1a h;
    h.update(s);
    return h.digest();
}

inline std::uint64_t fnv1a(std::span<const double> xs) {
    Fnv1a h;
    h.update(xs);
    return h.digest();
}

}  // namespace climoe
