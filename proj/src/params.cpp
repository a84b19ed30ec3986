// Copyright 2026 The HERS Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#include "hers/params.hpp"

#include <openssl/evp.h>

#include <cmath>
#include <cstring>
#include <set>

#include "hers/errors.hpp"

namespace hers::he {

namespace {

void append_u32(std::vector<std::uint8_t>& buf, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) buf.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void append_u64(std::vector<std::uint8_t>& buf, u64 v) {
    for (int i = 0; i < 8; ++i) buf.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

bool is_power_of_two(double x) {
    int exp = 0;
    const double mantissa = std::frexp(x, &exp);
    return mantissa == 0.5;
}

}  // namespace

void HeParams::validate() const {
    if (ring_degree < 4096 || (ring_degree & (ring_degree - 1)) != 0) {
        throw ParameterError("ring_degree must be a power of two >= 4096, got " +
                             std::to_string(ring_degree));
    }
    if (modulus_chain.size() < 2) {
        throw ParameterError("modulus chain needs a base prime and at least one level");
    }
    if (!(scale > 0.0) || !is_power_of_two(scale)) {
        throw ParameterError("scale must be a positive power of two");
    }
    const u64 two_n = 2 * static_cast<u64>(ring_degree);
    std::set<u64> seen;
    u64 max_prime = 0;
    for (u64 q : modulus_chain) {
        if (!seen.insert(q).second) throw ParameterError("duplicate prime in modulus chain");
        if (!is_prime(q)) throw ParameterError(std::to_string(q) + " is not prime");
        if ((q - 1) % two_n != 0) {
            throw ParameterError("prime " + std::to_string(q) +
                                 " is not 1 mod 2*ring_degree; no negacyclic NTT");
        }
        if (scale > static_cast<double>(q)) {
            throw ParameterError("scale exceeds chain prime " + std::to_string(q));
        }
        max_prime = std::max(max_prime, q);
    }
    if (ks_prime == 0 || seen.count(ks_prime) || !is_prime(ks_prime) || (ks_prime - 1) % two_n != 0) {
        throw ParameterError("ks_prime must be a distinct NTT-friendly prime");
    }
    if (ks_prime < max_prime) {
        throw ParameterError("ks_prime must be >= every chain prime to bound switching noise");
    }
}

std::array<std::uint8_t, 32> HeParams::digest() const {
    std::vector<std::uint8_t> buf;
    const char* tag = "HERS-params-v1";
    buf.insert(buf.end(), tag, tag + std::strlen(tag));
    append_u32(buf, ring_degree);
    u64 scale_bits = 0;
    static_assert(sizeof(double) == sizeof(u64));
    std::memcpy(&scale_bits, &scale, sizeof(double));
    append_u64(buf, scale_bits);
    append_u32(buf, static_cast<std::uint32_t>(modulus_chain.size()));
    for (u64 q : modulus_chain) append_u64(buf, q);
    append_u64(buf, ks_prime);

    std::array<std::uint8_t, 32> out{};
    unsigned int out_len = 0;
    if (EVP_Digest(buf.data(), buf.size(), out.data(), &out_len, EVP_sha256(), nullptr) != 1 ||
        out_len != 32) {
        throw Error("SHA-256 digest failed");
    }
    return out;
}

std::string HeParams::digest_hex() const {
    const auto d = digest();
    return hex_encode(d.data(), d.size());
}

HeParams HeParams::make(std::uint32_t ring_degree, int level_count, int scale_bits) {
    if (level_count < 1 || level_count > 30) {
        throw ParameterError("level_count must be in [1, 30]");
    }
    HeParams p;
    p.ring_degree = ring_degree;
    p.scale = std::ldexp(1.0, scale_bits);
    const u64 two_n = 2 * static_cast<u64>(ring_degree);
    const u64 base = find_ntt_primes(u64{1} << 59, 1, two_n)[0];
    const auto level_primes =
        find_ntt_primes(u64{1} << scale_bits, static_cast<std::size_t>(level_count), two_n, {base});
    p.modulus_chain.reserve(level_count + 1);
    p.modulus_chain.push_back(base);
    p.modulus_chain.insert(p.modulus_chain.end(), level_primes.begin(), level_primes.end());
    p.ks_prime = find_ntt_primes(u64{1} << 60, 1, two_n, p.modulus_chain)[0];
    p.validate();
    return p;
}

HeParams HeParams::standard() { return make(8192, 8, 40); }

std::string hex_encode(const std::uint8_t* data, std::size_t len) {
    static const char* digits = "0123456789abcdef";
    std::string out;
    out.reserve(2 * len);
    for (std::size_t i = 0; i < len; ++i) {
        out.push_back(digits[data[i] >> 4]);
        out.push_back(digits[data[i] & 0xf]);
    }
    return out;
}

}  // namespace hers::he
