// Copyright 2026 The HERS Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <algorithm>
#include <cmath>
#include <vector>

#include "doctest.h"
#include "hers/errors.hpp"
#include "hers/fusion.hpp"
#include "hers/text_embed.hpp"
#include "oracles.hpp"

using namespace hers;
using namespace hers::fusion;

TEST_CASE("tokenize_record formats attribute-value pairs in order") {
    BiographicRecord rec;
    rec.attributes = {{"name", "Anne Pham"},
                      {"address", "254 Savage River Suite 120, Miguelfort, GA 92091"}};
    CHECK(tokenize_record(rec) ==
          "[ATT]name[VAL]Anne Pham[ATT]address[VAL]254 Savage River Suite 120, Miguelfort, GA "
          "92091");

    BiographicRecord tiny;
    tiny.attributes = {{"a", "x"}};
    CHECK(tokenize_record(tiny) == "[ATT]a[VAL]x");

    BiographicRecord permuted;
    permuted.attributes = {{"address", "254 Savage River Suite 120, Miguelfort, GA 92091"},
                           {"name", "Anne Pham"}};
    CHECK(tokenize_record(permuted) != tokenize_record(rec));

    CHECK_THROWS_AS(tokenize_record(BiographicRecord{}), ArgumentError);
    BiographicRecord dup;
    dup.attributes = {{"a", "x"}, {"a", "y"}};
    CHECK_THROWS_AS(tokenize_record(dup), ArgumentError);
    BiographicRecord unnamed;
    unnamed.attributes = {{"", "x"}};
    CHECK_THROWS_AS(tokenize_record(unnamed), ArgumentError);
}

TEST_CASE("minmax fit and apply") {
    const auto s1 = minmax_fit(std::vector<double>{2, 4, 6}, Modality::biometric);
    CHECK(s1.min == 2.0);
    CHECK(s1.max == 6.0);
    const auto s2 = minmax_fit(std::vector<double>{0, 1}, Modality::biographic);
    CHECK(s2.min == 0.0);
    CHECK(s2.max == 1.0);

    // Extrema against a sort-based oracle.
    Prng prng(9);
    std::vector<double> sample(10000);
    for (auto& x : sample) x = prng.next_real(-50.0, 50.0);
    const auto fitted = minmax_fit(sample, Modality::biometric);
    auto sorted = sample;
    std::sort(sorted.begin(), sorted.end());
    CHECK(fitted.min == sorted.front());
    CHECK(fitted.max == sorted.back());

    CHECK_THROWS_AS(minmax_fit(std::vector<double>{3, 3, 3}, Modality::biometric),
                    DegenerateRangeError);
    CHECK_THROWS_AS(minmax_fit(std::vector<double>{3}, Modality::biometric), ArgumentError);

    CHECK(minmax_apply(4.0, s1) == 0.5);
    CHECK(minmax_apply(2.0, s1) == 0.0);
    CHECK(minmax_apply(6.0, s1) == 1.0);
    CHECK(minmax_apply(7.0, s1) == 1.0);   // clamp above
    CHECK(minmax_apply(-1.0, s1) == 0.0);  // clamp below

    // Idempotence with unit stats on in-range values.
    const NormStats unit{Modality::biometric, 0.0, 1.0};
    for (double x : {0.0, 0.25, 0.7, 1.0}) {
        CHECK(minmax_apply(minmax_apply(x, unit), unit) == minmax_apply(x, unit));
    }
}

TEST_CASE("plaintext squared distance") {
    ScoreVector a{Modality::biometric, {1.0, 0.0}, true};
    ScoreVector b{Modality::biometric, {0.0, 1.0}, true};
    CHECK(squared_distance_plain(a, a) == 0.0);
    CHECK(squared_distance_plain(a, b) == 2.0);

    // Random 128-dim pair against an independent long double accumulation.
    Prng prng(12);
    std::vector<double> q(128), g(128);
    for (auto& x : q) x = prng.next_real(0.0, 1.0);
    for (auto& x : g) x = prng.next_real(0.0, 1.0);
    long double expect = 0.0L;
    for (int i = 0; i < 128; ++i) {
        const long double d = static_cast<long double>(q[i]) - g[i];
        expect += d * d;
    }
    CHECK(squared_distance(q, g) == doctest::Approx(static_cast<double>(expect)).epsilon(1e-14));

    ScoreVector short_vec{Modality::biometric, {0.5}, true};
    CHECK_THROWS_AS(squared_distance_plain(a, short_vec), ArgumentError);
    ScoreVector raw{Modality::biometric, {1.0, 0.0}, false};
    CHECK_THROWS_AS(squared_distance_plain(raw, b), ArgumentError);

    // Symmetry and nonnegativity on random vectors.
    for (int t = 0; t < 50; ++t) {
        std::vector<double> x(16), y(16);
        for (auto& v : x) v = prng.next_real(0.0, 1.0);
        for (auto& v : y) v = prng.next_real(0.0, 1.0);
        CHECK(squared_distance(x, y) == squared_distance(y, x));
        CHECK(squared_distance(x, y) >= 0.0);
    }
}

TEST_CASE("score fusion") {
    CHECK(score_fuse(0.2, 0.4) == doctest::Approx(0.3));
    Prng prng(13);
    for (int i = 0; i < 200; ++i) {
        const double x = prng.next_real(0.0, 1.0);
        CHECK(score_fuse(x, x) == x);
        const double y = prng.next_real(0.0, 1.0);
        const double fused = score_fuse(x, y);
        CHECK(fused >= std::min(x, y));
        CHECK(fused <= std::max(x, y));
    }
    CHECK_THROWS_AS(score_fuse(-0.1, 0.5), DomainError);
    CHECK_THROWS_AS(score_fuse(0.5, 1.1), DomainError);
}

TEST_CASE("feature fusion and the exact concatenation identity") {
    ScoreVector a{Modality::biometric, {0.1, 0.2}, true};
    ScoreVector b{Modality::biographic, {0.3, 0.4}, true};
    const auto fused = feature_fuse(a, b);
    CHECK(fused.modality == Modality::fused);
    CHECK(fused.values == std::vector<double>{0.1, 0.2, 0.3, 0.4});

    ScoreVector raw{Modality::biometric, {0.1}, false};
    CHECK_THROWS_AS(feature_fuse(raw, b), ArgumentError);

    Prng prng(14);
    for (int t = 0; t < 200; ++t) {
        std::vector<double> qa(128), qb(128), ga(128), gb(128);
        for (auto& v : qa) v = prng.next_real(0.0, 1.0);
        for (auto& v : qb) v = prng.next_real(0.0, 1.0);
        for (auto& v : ga) v = prng.next_real(0.0, 1.0);
        for (auto& v : gb) v = prng.next_real(0.0, 1.0);
        std::vector<double> qf = qa, gf = ga;
        qf.insert(qf.end(), qb.begin(), qb.end());
        gf.insert(gf.end(), gb.begin(), gb.end());
        // Bit-exact by the pairwise accumulation layout.
        CHECK(squared_distance(qf, gf) == squared_distance(qa, ga) + squared_distance(qb, gb));
    }
}

TEST_CASE("hashed n-gram embedding is deterministic and variant-sensitive") {
    const auto v1 = hashed_ngram_embedding("[ATT]name[VAL]Ann Pham", 128);
    const auto v2 = hashed_ngram_embedding("[ATT]name[VAL]Ann Pham", 128);
    CHECK(v1 == v2);
    double norm = 0.0;
    for (double x : v1) norm += x * x;
    CHECK(norm == doctest::Approx(1.0));

    const auto variant = hashed_ngram_embedding("[ATT]name[VAL]Anne Pham", 128);
    const auto stranger = hashed_ngram_embedding("[ATT]name[VAL]Wolfgang Amadeus", 128);
    const double d_variant = oracles::max_abs_diff(v1, variant);
    CHECK(d_variant > 0.0);  // distinct
    CHECK(hers::fusion::squared_distance(v1, variant) <
          hers::fusion::squared_distance(v1, stranger));
}

namespace {

struct EncFixture {
    he::HeParams params = he::HeParams::make(4096, 8);
    he::Context ctx{params};
    he::KeySet keys = ctx.keygen(77);
};

EncFixture& enc() {
    static EncFixture f;
    return f;
}

}  // namespace

TEST_CASE("encrypted squared distance matches the plain oracle") {
    auto& f = enc();
    Prng prng(21);
    SUBCASE("identical vectors give zero") {
        std::vector<double> v(128);
        for (auto& x : v) x = prng.next_real(0.0, 1.0);
        const auto ct = f.ctx.encrypt(v, f.keys, prng);
        const auto d = f.ctx.decrypt(squared_distance_encrypted(ct, ct, 128, f.keys, f.ctx), f.keys);
        CHECK(std::fabs(d[0]) < 0x1p-12);
    }
    SUBCASE("unit basis example") {
        std::vector<double> q(8, 0.0), g(8, 0.0);
        q[0] = 1.0;
        g[1] = 1.0;
        const auto ct_q = f.ctx.encrypt(q, f.keys, prng);
        const auto ct_g = f.ctx.encrypt(g, f.keys, prng);
        const auto d =
            f.ctx.decrypt(squared_distance_encrypted(ct_q, ct_g, 8, f.keys, f.ctx), f.keys);
        CHECK(std::fabs(d[0] - 2.0) < 0x1p-12);
    }
    SUBCASE("random pairs, distance axioms, concat identity") {
        double worst = 0.0, worst_sym = 0.0, worst_concat = 0.0;
        for (int t = 0; t < 25; ++t) {
            std::vector<double> q(128), g(128);
            for (auto& x : q) x = prng.next_real(0.0, 1.0);
            for (auto& x : g) x = prng.next_real(0.0, 1.0);
            const auto ct_q = f.ctx.encrypt(q, f.keys, prng);
            const auto ct_g = f.ctx.encrypt(g, f.keys, prng);
            const double expect = squared_distance(q, g);
            const auto d =
                f.ctx.decrypt(squared_distance_encrypted(ct_q, ct_g, 128, f.keys, f.ctx), f.keys);
            worst = std::max(worst, std::fabs(d[0] - expect));
            const auto d_rev =
                f.ctx.decrypt(squared_distance_encrypted(ct_g, ct_q, 128, f.keys, f.ctx), f.keys);
            worst_sym = std::max(worst_sym, std::fabs(d_rev[0] - d[0]));

            // Fused = concatenation of two 64-wide halves of the operands.
            std::vector<double> q2(q.begin(), q.begin() + 64), g2(g.begin(), g.begin() + 64);
            std::vector<double> q3(q.begin() + 64, q.end()), g3(g.begin() + 64, g.end());
            const double sum2 = squared_distance(q2, g2) + squared_distance(q3, g3);
            worst_concat = std::max(worst_concat, std::fabs(d[0] - sum2));
        }
        CHECK(worst < 0x1p-12);
        CHECK(worst_sym < 0x1p-12);
        CHECK(worst_concat < 0x1p-11);
    }
}

TEST_CASE("encrypted score fusion averages slotwise") {
    auto& f = enc();
    Prng prng(22);
    std::vector<double> a(100), b(100);
    for (auto& x : a) x = prng.next_real(0.0, 1.0);
    for (auto& x : b) x = prng.next_real(0.0, 1.0);
    const auto ct_a = f.ctx.encrypt(a, f.keys, prng);
    const auto ct_b = f.ctx.encrypt(b, f.keys, prng);
    const auto avg = f.ctx.decrypt(score_fuse_encrypted(ct_a, ct_b, f.keys, f.ctx), f.keys);
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        worst = std::max(worst, std::fabs(avg[i] - score_fuse(a[i], b[i])));
    }
    CHECK(worst < 0x1p-12);
}
