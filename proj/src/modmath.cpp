// Copyright 2026 The HERS Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#include "hers/modmath.hpp"

#include "hers/errors.hpp"

namespace hers {

Modulus::Modulus(u64 modulus) : q(modulus) {
    if (q < 2 || q >= (u64{1} << 61)) {
        throw ParameterError("modulus out of range [2, 2^61): " + std::to_string(q));
    }
    // floor(2^128 / q) via two long divisions.
    const u128 numerator_hi = ~u128{0} / q;  // floor((2^128 - 1)/q)
    // (2^128 - 1)/q equals floor(2^128/q) unless q divides 2^128, impossible
    // for odd q > 1; q is always an odd prime here.
    mu_hi = static_cast<u64>(numerator_hi >> 64);
    mu_lo = static_cast<u64>(numerator_hi);
}

u64 Modulus::pow(u64 base, u64 exp) const {
    u64 result = 1;
    u64 b = base % q;
    while (exp > 0) {
        if (exp & 1) result = mul(result, b);
        b = mul(b, b);
        exp >>= 1;
    }
    return result;
}

namespace {
u64 mulmod_m(u64 a, u64 b, u64 m) { return static_cast<u64>(u128{a} * b % m); }

u64 powmod_m(u64 base, u64 exp, u64 m) {
    u64 result = 1 % m;
    u64 b = base % m;
    while (exp > 0) {
        if (exp & 1) result = mulmod_m(result, b, m);
        b = mulmod_m(b, b, m);
        exp >>= 1;
    }
    return result;
}
}  // namespace

bool is_prime(u64 n) {
    if (n < 2) return false;
    for (u64 p : {2ULL, 3ULL, 5ULL, 7ULL, 11ULL, 13ULL, 17ULL, 19ULL, 23ULL, 29ULL, 31ULL, 37ULL}) {
        if (n % p == 0) return n == p;
    }
    u64 d = n - 1;
    int r = 0;
    while ((d & 1) == 0) {
        d >>= 1;
        ++r;
    }
    // This witness set is deterministic for all n < 2^64.
    for (u64 a : {2ULL, 3ULL, 5ULL, 7ULL, 11ULL, 13ULL, 17ULL, 19ULL, 23ULL, 29ULL, 31ULL, 37ULL}) {
        u64 x = powmod_m(a, d, n);
        if (x == 1 || x == n - 1) continue;
        bool composite = true;
        for (int i = 1; i < r; ++i) {
            x = mulmod_m(x, x, n);
            if (x == n - 1) {
                composite = false;
                break;
            }
        }
        if (composite) return false;
    }
    return true;
}

std::vector<u64> find_ntt_primes(u64 floor_value, std::size_t count, u64 congruence,
                                 const std::vector<u64>& exclude) {
    std::vector<u64> primes;
    // First candidate >= floor_value with candidate ≡ 1 (mod congruence).
    u64 candidate = ((floor_value + congruence - 2) / congruence) * congruence + 1;
    if (candidate < floor_value) candidate += congruence;
    const u64 limit = u64{1} << 61;
    while (primes.size() < count) {
        if (candidate >= limit) {
            throw ParameterError("NTT prime search exhausted below 2^61");
        }
        bool excluded = false;
        for (u64 e : exclude) {
            if (e == candidate) {
                excluded = true;
                break;
            }
        }
        if (!excluded && is_prime(candidate)) primes.push_back(candidate);
        candidate += congruence;
    }
    return primes;
}

u64 find_primitive_root(u64 q, u64 two_n) {
    if ((q - 1) % two_n != 0) {
        throw ParameterError("prime does not support an order-" + std::to_string(two_n) + " NTT");
    }
    const Modulus mod(q);
    const u64 cofactor = (q - 1) / two_n;
    for (u64 base = 2;; ++base) {
        const u64 psi = mod.pow(base, cofactor);
        // psi has order dividing 2n; it is a primitive 2n-th root exactly
        // when psi^n = -1.
        if (mod.pow(psi, two_n / 2) == q - 1) return psi;
        if (base > 1000) throw ParameterError("no primitive root found (non-prime modulus?)");
    }
}

}  // namespace hers
