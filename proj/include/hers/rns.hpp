// Copyright 2026 The HERS Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#ifndef HERS_RNS_HPP
#define HERS_RNS_HPP

#include <cstdint>
#include <vector>

#include "hers/modmath.hpp"

namespace hers::he {

// Polynomial in RNS form: limb i holds the n coefficients (or NTT values)
// modulo the i-th prime of whatever basis the owner tracks. Storage is
// limb-major and flat.
struct RnsPoly {
    std::uint32_t n = 0;
    std::size_t limb_count = 0;
    std::vector<u64> data;

    RnsPoly() = default;
    RnsPoly(std::uint32_t degree, std::size_t limbs)
        : n(degree), limb_count(limbs), data(static_cast<std::size_t>(degree) * limbs, 0) {}

    u64* limb(std::size_t i) { return data.data() + i * n; }
    const u64* limb(std::size_t i) const { return data.data() + i * n; }

    void drop_limbs_above(std::size_t keep) {
        if (keep < limb_count) {
            limb_count = keep;
            data.resize(static_cast<std::size_t>(n) * keep);
        }
    }
};

}  // namespace hers::he

#endif  // HERS_RNS_HPP
