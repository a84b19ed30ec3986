// Copyright 2026 The HERS Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#include "hers/text_embed.hpp"

#include <cmath>

#include "hers/errors.hpp"
#include "hers/prng.hpp"

namespace hers::fusion {

std::vector<double> hashed_ngram_embedding(std::string_view text, std::size_t dim) {
    if (dim == 0) throw ArgumentError("embedding dimension must be positive");
    std::vector<double> v(dim, 0.0);
    for (std::size_t n = 2; n <= 3; ++n) {
        if (text.size() < n) continue;
        for (std::size_t i = 0; i + n <= text.size(); ++i) {
            const std::uint64_t h = fnv1a64(text.substr(i, n));
            const std::size_t bucket = (h >> 1) % dim;
            v[bucket] += (h & 1) ? 1.0 : -1.0;
        }
    }
    double norm = 0.0;
    for (double x : v) norm += x * x;
    if (norm == 0.0) {
        v[0] = 1.0;
        return v;
    }
    norm = std::sqrt(norm);
    for (double& x : v) x /= norm;
    return v;
}

}  // namespace hers::fusion
