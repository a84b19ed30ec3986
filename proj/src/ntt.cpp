// Copyright 2026 The HERS Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#include "hers/ntt.hpp"

#include "hers/errors.hpp"

namespace hers {

namespace {

std::uint32_t bit_reverse(std::uint32_t x, int bits) {
    std::uint32_t r = 0;
    for (int i = 0; i < bits; ++i) {
        r = (r << 1) | (x & 1);
        x >>= 1;
    }
    return r;
}

}  // namespace

NttTables::NttTables(u64 q, std::uint32_t n) : mod_(q), n_(n) {
    if (n < 2 || (n & (n - 1)) != 0) throw ParameterError("NTT size must be a power of two");
    if ((q - 1) % (2 * static_cast<u64>(n)) != 0) {
        throw ParameterError("prime " + std::to_string(q) + " does not support a negacyclic NTT of size " +
                             std::to_string(n));
    }
    log_n_ = 0;
    while ((1u << log_n_) < n) ++log_n_;

    const u64 psi = find_primitive_root(q, 2 * static_cast<u64>(n));
    const u64 psi_inv = mod_.inv(psi);

    root_pow_.resize(n);
    root_pow_shoup_.resize(n);
    inv_root_pow_.resize(n);
    inv_root_pow_shoup_.resize(n);

    // Tables indexed so that butterfly stage m uses entries [m, 2m).
    u64 power = 1;
    std::vector<u64> psi_powers(n), psi_inv_powers(n);
    u64 ipower = 1;
    for (std::uint32_t i = 0; i < n; ++i) {
        psi_powers[i] = power;
        psi_inv_powers[i] = ipower;
        power = mod_.mul(power, psi);
        ipower = mod_.mul(ipower, psi_inv);
    }
    for (std::uint32_t i = 0; i < n; ++i) {
        const std::uint32_t r = bit_reverse(i, log_n_);
        root_pow_[i] = psi_powers[r];
        root_pow_shoup_[i] = shoup_precompute(root_pow_[i], q);
        inv_root_pow_[i] = psi_inv_powers[r];
        inv_root_pow_shoup_[i] = shoup_precompute(inv_root_pow_[i], q);
    }
    n_inv_ = mod_.inv(n);
    n_inv_shoup_ = shoup_precompute(n_inv_, q);
}

// Harvey-style lazy butterflies: values stay in [0, 4q) through the forward
// passes and are fully reduced at the end. Requires q < 2^61.
void NttTables::forward(u64* a) const {
    const u64 q = mod_.q;
    const u64 two_q = 2 * q;
    std::uint32_t t = n_;
    for (std::uint32_t m = 1; m < n_; m <<= 1) {
        t >>= 1;
        for (std::uint32_t i = 0; i < m; ++i) {
            const u64 w = root_pow_[m + i];
            const u64 ws = root_pow_shoup_[m + i];
            u64* x = a + 2 * i * t;
            u64* y = x + t;
            for (std::uint32_t j = 0; j < t; ++j) {
                u64 u = x[j];
                if (u >= two_q) u -= two_q;
                const u64 v = mul_shoup_lazy(y[j], w, ws, q);  // in [0, 2q)
                x[j] = u + v;
                y[j] = u + two_q - v;
            }
        }
    }
    for (std::uint32_t i = 0; i < n_; ++i) {
        u64 v = a[i];
        if (v >= two_q) v -= two_q;
        if (v >= q) v -= q;
        a[i] = v;
    }
}

void NttTables::inverse(u64* a) const {
    const u64 q = mod_.q;
    const u64 two_q = 2 * q;
    std::uint32_t t = 1;
    for (std::uint32_t m = n_ >> 1; m >= 1; m >>= 1) {
        for (std::uint32_t i = 0; i < m; ++i) {
            const u64 w = inv_root_pow_[m + i];
            const u64 ws = inv_root_pow_shoup_[m + i];
            u64* x = a + 2 * i * t;
            u64* y = x + t;
            for (std::uint32_t j = 0; j < t; ++j) {
                const u64 u = x[j];
                const u64 v = y[j];
                u64 sum = u + v;
                if (sum >= two_q) sum -= two_q;
                x[j] = sum;
                y[j] = mul_shoup_lazy(u + two_q - v, w, ws, q);
            }
        }
        t <<= 1;
    }
    for (std::uint32_t i = 0; i < n_; ++i) {
        u64 v = mul_shoup(a[i], n_inv_, n_inv_shoup_, q);
        if (v >= q) v -= q;
        a[i] = v;
    }
}

}  // namespace hers
