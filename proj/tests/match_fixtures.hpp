// Copyright 2026 The HERS Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0
//
// Shared glue for matcher-level tests: turns a synthetic population into
// policy training material and plaintext gallery records.

#ifndef HERS_TESTS_MATCH_FIXTURES_HPP
#define HERS_TESTS_MATCH_FIXTURES_HPP

#include <vector>

#include "hers/fusion.hpp"
#include "hers/matcher.hpp"
#include "hers/policy.hpp"
#include "hers/population.hpp"

namespace fixtures {

inline std::vector<double> normalize_with(const std::vector<double>& raw,
                                          const hers::fusion::NormStats& stats) {
    std::vector<double> out(raw.size());
    for (std::size_t i = 0; i < raw.size(); ++i) {
        out[i] = hers::fusion::minmax_apply(raw[i], stats);
    }
    return out;
}

inline hers::match::PolicyTraining make_training(const hers::eval::Population& pop) {
    return hers::match::training_from_population(pop);
}

inline std::vector<hers::match::PlainRecord> plain_gallery(const hers::eval::Population& pop) {
    std::vector<hers::match::PlainRecord> out;
    for (const auto* g : pop.gallery()) {
        out.push_back({g->identity_id, g->bm, g->bg});
    }
    return out;
}

}  // namespace fixtures

#endif  // HERS_TESTS_MATCH_FIXTURES_HPP
