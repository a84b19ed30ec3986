// Copyright 2026 The HERS Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#ifndef HERS_MODMATH_HPP
#define HERS_MODMATH_HPP

#include <cstdint>
#include <vector>

namespace hers {

using u64 = std::uint64_t;
using u128 = unsigned __int128;

// Word-sized prime modulus with a precomputed Barrett constant.
// All scheme primes satisfy q < 2^61 so lazy NTT arithmetic stays in 64 bits.
struct Modulus {
    u64 q = 0;
    u64 mu_hi = 0;  // floor(2^128 / q), high word
    u64 mu_lo = 0;  // floor(2^128 / q), low word

    Modulus() = default;
    explicit Modulus(u64 modulus);

    // Reduces a 128-bit product to [0, q).
    u64 reduce(u128 x) const {
        const u64 x_lo = static_cast<u64>(x);
        const u64 x_hi = static_cast<u64>(x >> 64);
        // Approximate quotient s = floor(x * mu / 2^128); off by at most 2.
        const u64 t1 = static_cast<u64>((u128{x_lo} * mu_lo) >> 64);
        const u128 t2 = u128{x_lo} * mu_hi;
        const u128 t3 = u128{x_hi} * mu_lo;
        const u128 mid = t2 + t3 + t1;
        const u64 s = x_hi * mu_hi + static_cast<u64>(mid >> 64);
        u64 r = x_lo - s * q;
        while (r >= q) r -= q;
        return r;
    }

    u64 mul(u64 a, u64 b) const { return reduce(u128{a} * b); }

    u64 add(u64 a, u64 b) const {
        u64 r = a + b;
        if (r >= q) r -= q;
        return r;
    }

    u64 sub(u64 a, u64 b) const { return a >= b ? a - b : a + q - b; }

    u64 neg(u64 a) const { return a == 0 ? 0 : q - a; }

    u64 pow(u64 base, u64 exp) const;

    // q is prime, so the inverse is a^(q-2).
    u64 inv(u64 a) const { return pow(a, q - 2); }

    // Reduces a signed 64-bit value into [0, q).
    u64 from_signed(std::int64_t v) const {
        const std::int64_t m = static_cast<std::int64_t>(q);
        std::int64_t r = v % m;
        if (r < 0) r += m;
        return static_cast<u64>(r);
    }
};

// Shoup companion for multiplying by a constant w mod q: w_shoup = floor(w*2^64/q).
inline u64 shoup_precompute(u64 w, u64 q) {
    return static_cast<u64>((u128{w} << 64) / q);
}

// Returns a*w mod q in [0, 2q); caller reduces when a canonical value is needed.
inline u64 mul_shoup_lazy(u64 a, u64 w, u64 w_shoup, u64 q) {
    const u64 hi = static_cast<u64>((u128{a} * w_shoup) >> 64);
    return a * w - hi * q;
}

inline u64 mul_shoup(u64 a, u64 w, u64 w_shoup, u64 q) {
    u64 r = mul_shoup_lazy(a, w, w_shoup, q);
    if (r >= q) r -= q;
    return r;
}

// Deterministic Miller-Rabin, exact for all 64-bit inputs.
bool is_prime(u64 n);

// The first `count` primes p >= floor_value with p ≡ 1 (mod congruence),
// ascending and excluding anything in `exclude`. Throws ParameterError when
// the search space is exhausted (cannot happen for realistic inputs).
std::vector<u64> find_ntt_primes(u64 floor_value, std::size_t count, u64 congruence,
                                 const std::vector<u64>& exclude = {});

// A generator of the order-2n cyclotomic group mod q: a primitive 2n-th root
// of unity psi with psi^n ≡ -1 (mod q). Deterministic for fixed (q, two_n).
u64 find_primitive_root(u64 q, u64 two_n);

}  // namespace hers

#endif  // HERS_MODMATH_HPP
