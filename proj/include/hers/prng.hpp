// Copyright 2026 The HERS Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#ifndef HERS_PRNG_HPP
#define HERS_PRNG_HPP

#include <cmath>
#include <cstdint>
#include <string_view>

namespace hers {

// Deterministic 64-bit generator (splitmix64). Every random choice in the
// library flows through this type so that a fixed seed reproduces keys,
// ciphertexts and populations bit for bit across runs.
class Prng {
public:
    explicit Prng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // Uniform in [0, bound) without modulo bias.
    std::uint64_t next_below(std::uint64_t bound) {
        const std::uint64_t threshold = (0 - bound) % bound;
        for (;;) {
            const std::uint64_t r = next_u64();
            if (r >= threshold) return r % bound;
        }
    }

    // Uniform real in [0, 1).
    double next_double() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    // Uniform real in [lo, hi).
    double next_real(double lo, double hi) { return lo + (hi - lo) * next_double(); }

    // Standard normal via Box-Muller on the deterministic stream.
    double next_gaussian() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = 0.0;
        do {
            u1 = next_double();
        } while (u1 <= 0.0);
        const double u2 = next_double();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(theta);
        have_spare_ = true;
        return r * std::cos(theta);
    }

    // Ternary secret coefficient in {-1, 0, 1}, uniform.
    int ternary() { return static_cast<int>(next_below(3)) - 1; }

    // Rounded Gaussian error coefficient with the given sigma, tails cut at
    // 6 sigma so a single sample can never dominate the noise budget.
    std::int64_t gaussian_int(double sigma) {
        for (;;) {
            const double x = next_gaussian() * sigma;
            if (std::fabs(x) <= 6.0 * sigma) return static_cast<std::int64_t>(std::llround(x));
        }
    }

    // Derives an independent child stream; used to give ids/records their own
    // deterministic randomness independent of processing order.
    Prng fork(std::uint64_t salt) {
        Prng child(state_ ^ (0xa0761d6478bd642fULL * (salt + 1)));
        child.next_u64();
        return child;
    }

private:
    std::uint64_t state_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

// FNV-1a over a string; stable across platforms, used to derive per-id seeds.
inline std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace hers

#endif  // HERS_PRNG_HPP
