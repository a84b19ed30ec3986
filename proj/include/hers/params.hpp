// Copyright 2026 The HERS Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#ifndef HERS_PARAMS_HPP
#define HERS_PARAMS_HPP

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "hers/modmath.hpp"

namespace hers::he {

// Parameters of the leveled approximate scheme.
//
// modulus_chain[0] is the base prime that survives to level 0; each
// multiplication consumes the current top prime via rescaling. ks_prime is an
// extra prime used only inside key-switching (the hybrid technique): raising
// the key material by ks_prime and dividing the switched product back down
// keeps the switching noise at a few bits instead of a few dozen.
struct HeParams {
    std::uint32_t ring_degree = 0;
    std::vector<u64> modulus_chain;
    double scale = 0.0;
    u64 ks_prime = 0;

    int levels() const { return static_cast<int>(modulus_chain.size()) - 1; }
    std::uint32_t slot_capacity() const { return ring_degree / 2; }

    // Throws ParameterError unless every invariant holds: power-of-two degree
    // >= 2^12, distinct NTT-friendly primes, power-of-two scale <= every
    // prime, ks_prime at least as large as the chain primes.
    void validate() const;

    std::array<std::uint8_t, 32> digest() const;
    std::string digest_hex() const;

    // ring 2^13, scale 2^40, one ~2^60 base prime plus `level_count` primes
    // just above 2^40.
    static HeParams standard();  // level_count = 8

    // Generic builder used by tests and the CLI.
    static HeParams make(std::uint32_t ring_degree, int level_count, int scale_bits = 40);
};

std::string hex_encode(const std::uint8_t* data, std::size_t len);

}  // namespace hers::he

#endif  // HERS_PARAMS_HPP
