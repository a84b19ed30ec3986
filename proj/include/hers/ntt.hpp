// Copyright 2026 The HERS Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#ifndef HERS_NTT_HPP
#define HERS_NTT_HPP

#include <cstdint>
#include <vector>

#include "hers/modmath.hpp"

namespace hers {

// Negacyclic number-theoretic transform over Z_q[X]/(X^n + 1) for one prime.
// Forward output is in bit-reversed order; the inverse consumes bit-reversed
// input, so pointwise products between transformed polynomials line up
// without any explicit reordering.
class NttTables {
public:
    NttTables(u64 q, std::uint32_t n);

    // In-place forward transform; input coefficients in [0, q), output values
    // in [0, q) in bit-reversed order.
    void forward(u64* a) const;

    // In-place inverse transform, including the n^{-1} scaling.
    void inverse(u64* a) const;

    const Modulus& modulus() const { return mod_; }
    std::uint32_t degree() const { return n_; }

private:
    Modulus mod_;
    std::uint32_t n_;
    int log_n_;
    // psi powers in the butterfly access order (bit-reversed indexing),
    // with Shoup companions for the lazy multiply.
    std::vector<u64> root_pow_;
    std::vector<u64> root_pow_shoup_;
    std::vector<u64> inv_root_pow_;
    std::vector<u64> inv_root_pow_shoup_;
    u64 n_inv_;
    u64 n_inv_shoup_;
};

}  // namespace hers

#endif  // HERS_NTT_HPP
