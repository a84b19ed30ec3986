// Copyright 2026 The HERS Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <vector>

#include "doctest.h"
#include "hers/errors.hpp"
#include "hers/sign_compare.hpp"
#include "oracles.hpp"

using namespace hers;
using namespace hers::sign;

namespace {

// Values frozen from exact/high-precision iteration of f(x) = (3x - x^3)/2
// ahead of the implementation (rationals where short, long double otherwise).
constexpr double kHalfChain[4] = {0.6875, 0.8687744140625, 0.97529963081888127,
                                  0.99909237259283024};
constexpr double kPoint8After4 = 0.999999998472198;
constexpr int kMinimalIters = 11;           // margin 2^-5, target 2^-7
constexpr double kAchieved3 = 0.8948160109480388;  // 1 - f^3(2^-5)
constexpr double kAchieved4 = 0.8428058769758046;  // 1 - f^4(2^-5)

}  // namespace

TEST_CASE("sign iteration reproduces the frozen high-precision chain") {
    for (int k = 1; k <= 4; ++k) {
        const auto config = CompareConfig::with_iterations(0x1p-5, k);
        CHECK(sign_iterate_plain(0.5, config) == doctest::Approx(kHalfChain[k - 1]).epsilon(1e-13));
    }
    const auto config4 = CompareConfig::with_iterations(0x1p-5, 4);
    CHECK(sign_iterate_plain(0.8, config4) == doctest::Approx(kPoint8After4).epsilon(1e-12));
}

TEST_CASE("fixed points and domain") {
    const auto config = CompareConfig::with_iterations(0x1p-5, 7);
    CHECK(sign_iterate_plain(0.0, config) == 0.0);
    CHECK(sign_iterate_plain(1.0, config) == 1.0);
    CHECK(sign_iterate_plain(-1.0, config) == -1.0);
    CHECK_THROWS_AS(sign_iterate_plain(1.0000001, config), DomainError);
    CHECK_THROWS_AS(sign_iterate_plain(-1.5, config), DomainError);
}

TEST_CASE("oddness holds exactly in IEEE arithmetic") {
    const auto config = CompareConfig::with_iterations(0x1p-5, 9);
    Prng prng(3);
    for (int i = 0; i < 5000; ++i) {
        const double x = prng.next_real(0.0, 1.0);
        CHECK(sign_iterate_plain(-x, config) == -sign_iterate_plain(x, config));
    }
}

TEST_CASE("composite map is nondecreasing on a dense grid") {
    const auto config = CompareConfig::with_iterations(0x1p-5, 6);
    double prev = sign_iterate_plain(-1.0, config);
    for (int i = 1; i <= 10000; ++i) {
        const double x = -1.0 + 2.0 * static_cast<double>(i) / 10000.0;
        const double y = sign_iterate_plain(x, config);
        CHECK(y >= prev);
        prev = y;
    }
}

TEST_CASE("convergence oracle pins the minimal iteration count") {
    const auto minimal = CompareConfig::minimal_for(0x1p-5, 0x1p-7);
    CHECK(minimal.iterations() == kMinimalIters);
    // The configured count satisfies its own invariant over the grid.
    double worst = 0.0;
    for (int i = 0; i <= 10000; ++i) {
        const double x = 0x1p-5 + (1.0 - 0x1p-5) * static_cast<double>(i) / 10000.0;
        worst = std::max(worst, std::fabs(sign_iterate_plain(x, minimal) - 1.0));
    }
    CHECK(worst <= 0x1p-7);
    // Counts below the minimum are rejected; at or above pass.
    CHECK_THROWS_AS(CompareConfig::make(0x1p-5, 0x1p-7, kMinimalIters - 1), ArgumentError);
    CHECK(CompareConfig::make(0x1p-5, 0x1p-7, kMinimalIters).iterations() == kMinimalIters);
    CHECK(CompareConfig::make(0x1p-5, 0x1p-7, kMinimalIters + 2).iterations() == kMinimalIters + 2);
}

TEST_CASE("with_iterations records the achieved error") {
    CHECK(CompareConfig::with_iterations(0x1p-5, 3).target_error() ==
          doctest::Approx(kAchieved3).epsilon(1e-12));
    CHECK(CompareConfig::with_iterations(0x1p-5, 4).target_error() ==
          doctest::Approx(kAchieved4).epsilon(1e-12));
}

TEST_CASE("comp_plain: equality point, frozen example, mirror, domain") {
    const auto config = CompareConfig::with_iterations(0x1p-5, 4);
    Prng prng(17);
    for (int i = 0; i < 100; ++i) {
        const double x = prng.next_real(0.0, 1.0);
        CHECK(comp_plain(x, x, config) == 0.5);
    }
    const double hi = comp_plain(0.9, 0.1, config);
    CHECK(std::fabs(hi - 1.0) <= config.target_error() / 2.0);
    CHECK(hi == doctest::Approx((kPoint8After4 + 1.0) / 2.0).epsilon(1e-12));
    const double lo = comp_plain(0.1, 0.9, config);
    CHECK(lo <= config.target_error() / 2.0);
    CHECK(lo == doctest::Approx(1.0 - hi).epsilon(1e-12));
    CHECK_THROWS_AS(comp_plain(-0.1, 0.5, config), DomainError);
    CHECK_THROWS_AS(comp_plain(0.5, 1.2, config), DomainError);
}

namespace {

struct EncFixture {
    he::HeParams params = he::HeParams::make(4096, 8);
    he::Context ctx{params};
    he::KeySet keys = ctx.keygen(99);
};

EncFixture& enc() {
    static EncFixture f;
    return f;
}

}  // namespace

TEST_CASE("comp_encrypted agrees with comp_plain slotwise") {
    auto& f = enc();
    const auto config = CompareConfig::with_iterations(0x1p-5, 3);
    Prng prng(2025);

    SUBCASE("equal inputs land on one half") {
        std::vector<double> x(64);
        for (auto& v : x) v = prng.next_real(0.0, 1.0);
        const auto ct = f.ctx.encrypt(x, f.keys, prng);
        const auto out = f.ctx.decrypt(comp_encrypted(ct, ct, config, f.keys, f.ctx), f.keys);
        for (double v : out) CHECK(std::fabs(v - 0.5) < 0x1p-10);
    }

    SUBCASE("spec difference slots match the plain oracle") {
        const std::vector<double> a = {0.9, 0.1, 0.75, 0.25, 0.53125, 0.46875};
        const std::vector<double> b = {0.1, 0.9, 0.25, 0.75, 0.46875, 0.53125};
        Prng eprng(55);
        const auto ct_a = f.ctx.encrypt(a, f.keys, eprng);
        const auto ct_b = f.ctx.encrypt(b, f.keys, eprng);
        const auto out = f.ctx.decrypt(comp_encrypted(ct_a, ct_b, config, f.keys, f.ctx), f.keys);
        for (std::size_t i = 0; i < a.size(); ++i) {
            CHECK(std::fabs(out[i] - comp_plain(a[i], b[i], config)) < 0x1p-10);
        }
    }

    SUBCASE("level-starved input raises a depth error naming the budget") {
        Prng eprng(56);
        const auto ct = f.ctx.encrypt(std::vector<double>{0.5}, f.keys, eprng);
        const auto low = f.ctx.mod_drop_to(ct, 4);
        CHECK_THROWS_AS(comp_encrypted(low, low, config, f.keys, f.ctx), DepthError);
        try {
            comp_encrypted(low, low, config, f.keys, f.ctx);
        } catch (const DepthError& e) {
            CHECK(e.required_levels == 6);
            CHECK(e.available_levels == 4);
        }
    }

    SUBCASE("a thousand random pairs: values within 2^-10, accept bits exact") {
        const std::size_t n_pairs = 1200;
        std::vector<double> a(n_pairs), b(n_pairs);
        for (std::size_t i = 0; i < n_pairs; ++i) {
            // |a-b| >= margin by construction
            double diff = 0.0;
            while (std::fabs(diff) < config.margin()) {
                a[i] = prng.next_real(0.0, 1.0);
                b[i] = prng.next_real(0.0, 1.0);
                diff = a[i] - b[i];
            }
        }
        Prng eprng(57);
        const auto ct_a = f.ctx.encrypt(a, f.keys, eprng);
        const auto ct_b = f.ctx.encrypt(b, f.keys, eprng);
        const auto out = f.ctx.decrypt(comp_encrypted(ct_a, ct_b, config, f.keys, f.ctx), f.keys);
        double worst = 0.0;
        for (std::size_t i = 0; i < n_pairs; ++i) {
            const double plain = comp_plain(a[i], b[i], config);
            worst = std::max(worst, std::fabs(out[i] - plain));
            CHECK((out[i] > 0.5) == (plain > 0.5));
        }
        CHECK(worst < 0x1p-10);
    }
}

TEST_CASE("full-accuracy comparator under a deep chain") {
    // The 11-iteration schedule needs 22 levels; run it on a deep test chain.
    he::HeParams params = he::HeParams::make(4096, 22);
    he::Context ctx(params);
    const auto keys = ctx.keygen(123);
    const auto config = CompareConfig::minimal_for(0x1p-5, 0x1p-7);
    REQUIRE(config.depth_required() <= ctx.max_level());

    Prng prng(31337);
    const std::size_t n_points = 1000;
    std::vector<double> x(n_points);
    for (auto& v : x) {
        v = prng.next_real(0x1p-5, 1.0);
        if (prng.next_below(2)) v = -v;
    }
    Prng eprng(58);
    const auto ct = ctx.encrypt(x, keys, eprng);
    const auto out = ctx.decrypt(sign_iterate_encrypted(ct, config, keys, ctx), keys);
    double worst_vs_plain = 0.0;
    double worst_vs_sign = 0.0;
    for (std::size_t i = 0; i < n_points; ++i) {
        worst_vs_plain = std::max(worst_vs_plain, std::fabs(out[i] - sign_iterate_plain(x[i], config)));
        worst_vs_sign = std::max(worst_vs_sign, std::fabs(out[i] - (x[i] > 0 ? 1.0 : -1.0)));
    }
    CHECK(worst_vs_plain < 0x1p-10);
    CHECK(worst_vs_sign < 0x1p-7 + 0x1p-10);
}
