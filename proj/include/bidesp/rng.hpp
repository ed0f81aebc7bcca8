#pragma once

#include <cstdint>
#include <cmath>
#include <string_view>

namespace bidesp {

// Deterministic, platform-independent PRNG utilities. std::random
// distributions are implementation-defined, so everything that must be
// reproducible across builds goes through these.

inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// FNV-1a over bytes, finalized with one splitmix round.
inline std::uint64_t stable_hash(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    std::uint64_t st = h;
    return splitmix64(st);
}

inline std::uint64_t hash_combine(std::uint64_t a, std::uint64_t b) {
    std::uint64_t st = a ^ (b + 0x9e3779b97f4a7c15ULL + (a << 6) + (a >> 2));
    return splitmix64(st);
}

// xoshiro256** seeded via splitmix64.
class Rng {
public:
    explicit Rng(std::uint64_t seed) {
        std::uint64_t st = seed;
        for (auto& w : s_) w = splitmix64(st);
    }

    std::uint64_t next() {
        const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
        const std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    // Uniform in [0, bound), bias-free via rejection.
    std::uint64_t below(std::uint64_t bound) {
        const std::uint64_t threshold = -bound % bound;
        for (;;) {
            std::uint64_t r = next();
            if (r >= threshold) return r % bound;
        }
    }

    // Uniform in [0, 1).
    double unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    double normal(double sigma) {
        // Box-Muller; draws two uniforms per call, no cached spare.
        double u1 = unit();
        double u2 = unit();
        if (u1 <= 0.0) u1 = 0x1.0p-53;
        return sigma * std::sqrt(-2.0 * std::log(u1)) *
               std::cos(6.283185307179586476925287 * u2);
    }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) {
        return (x << k) | (x >> (64 - k));
    }
    std::uint64_t s_[4];
};

// Stateless uniform in [0,1) keyed by (seed, key string). Used wherever a
// value must be stable per entity across calls (e.g. hidden reactions).
inline double keyed_unit(std::uint64_t seed, std::string_view key) {
    std::uint64_t st = hash_combine(seed, stable_hash(key));
    return static_cast<double>(splitmix64(st) >> 11) * 0x1.0p-53;
}

// Stateless zero-mean gaussian keyed by (seed, key string).
inline double keyed_normal(std::uint64_t seed, std::string_view key, double sigma) {
    if (sigma <= 0.0) return 0.0;
    std::uint64_t st = hash_combine(seed, stable_hash(key));
    double u1 = static_cast<double>(splitmix64(st) >> 11) * 0x1.0p-53;
    double u2 = static_cast<double>(splitmix64(st) >> 11) * 0x1.0p-53;
    if (u1 <= 0.0) u1 = 0x1.0p-53;
    return sigma * std::sqrt(-2.0 * std::log(u1)) *
           std::cos(6.283185307179586476925287 * u2);
}

} // namespace bidesp
