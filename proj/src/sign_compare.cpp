// Copyright 2026 The HERS Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#include "hers/sign_compare.hpp"

#include <cmath>

#include "hers/errors.hpp"

namespace hers::sign {

namespace {

constexpr int kMaxIterations = 64;

long double iterate_ld(long double x, const std::vector<OddCubic>& schedule) {
    for (const auto& p : schedule) {
        x = static_cast<long double>(p.linear) * x + static_cast<long double>(p.cubic) * x * x * x;
    }
    return x;
}

void check_shape(double margin, const std::vector<OddCubic>& schedule) {
    if (!(margin > 0.0 && margin < 1.0)) {
        throw ArgumentError("compare margin must lie in (0, 1)");
    }
    for (const auto& p : schedule) {
        if (!(p.linear > 0.0) || !(p.cubic < 0.0) ||
            std::fabs(p.linear + p.cubic - 1.0) > 1e-12) {
            throw ArgumentError("schedule entries must be odd cubics fixing 1");
        }
        // Nondecreasing on [-1,1] requires f'(1) = a1 + 3*a3 >= -? f' >= 0 on
        // [-1,1] iff a1 + 3*a3 >= 0.
        if (p.linear + 3.0 * p.cubic < -1e-12) {
            throw ArgumentError("schedule entry is not monotone on [-1, 1]");
        }
    }
}

}  // namespace

CompareConfig::CompareConfig(double margin, double target_error, std::vector<OddCubic> schedule)
    : margin_(margin), target_error_(target_error), schedule_(std::move(schedule)) {}

CompareConfig CompareConfig::make(double margin, double target_error, int iterations) {
    if (!(target_error > 0.0 && target_error < 1.0)) {
        throw ArgumentError("target_error must lie in (0, 1)");
    }
    if (iterations < 1 || iterations > kMaxIterations) {
        throw ArgumentError("iterations must lie in [1, " + std::to_string(kMaxIterations) + "]");
    }
    std::vector<OddCubic> schedule(static_cast<std::size_t>(iterations));
    check_shape(margin, schedule);
    // The composed map is nondecreasing, so the worst point of [margin, 1]
    // is the margin itself.
    const double achieved = static_cast<double>(1.0L - iterate_ld(margin, schedule));
    if (achieved > target_error) {
        throw ArgumentError("insufficient iterations: " + std::to_string(iterations) +
                            " steps reach error " + std::to_string(achieved) +
                            " at the margin, above the target " + std::to_string(target_error));
    }
    return CompareConfig(margin, target_error, std::move(schedule));
}

CompareConfig CompareConfig::minimal_for(double margin, double target_error) {
    if (!(target_error > 0.0 && target_error < 1.0)) {
        throw ArgumentError("target_error must lie in (0, 1)");
    }
    std::vector<OddCubic> schedule;
    check_shape(margin, {OddCubic{}});
    long double x = margin;
    while (1.0L - x > static_cast<long double>(target_error)) {
        if (static_cast<int>(schedule.size()) >= kMaxIterations) {
            throw ArgumentError("margin/target pair unreachable within " +
                                std::to_string(kMaxIterations) + " iterations");
        }
        schedule.push_back(OddCubic{});
        x = 1.5L * x - 0.5L * x * x * x;
    }
    if (schedule.empty()) schedule.push_back(OddCubic{});
    return CompareConfig(margin, target_error, std::move(schedule));
}

CompareConfig CompareConfig::with_iterations(double margin, int iterations) {
    if (iterations < 1 || iterations > kMaxIterations) {
        throw ArgumentError("iterations must lie in [1, " + std::to_string(kMaxIterations) + "]");
    }
    std::vector<OddCubic> schedule(static_cast<std::size_t>(iterations));
    check_shape(margin, schedule);
    const double achieved = static_cast<double>(1.0L - iterate_ld(margin, schedule));
    return CompareConfig(margin, achieved, std::move(schedule));
}

double sign_iterate_plain(double x, const CompareConfig& config) {
    if (std::fabs(x) > 1.0) {
        throw DomainError("sign_iterate_plain input " + std::to_string(x) + " outside [-1, 1]");
    }
    for (const auto& p : config.schedule()) {
        x = p.linear * x + p.cubic * (x * x * x);
    }
    return x;
}

double comp_plain(double a, double b, const CompareConfig& config) {
    if (a < 0.0 || a > 1.0 || b < 0.0 || b > 1.0) {
        throw DomainError("comp_plain operands must lie in [0, 1]");
    }
    return (sign_iterate_plain(a - b, config) + 1.0) / 2.0;
}

double comp_mirror(double a, double b, const CompareConfig& config) {
    double x = a - b;
    for (const auto& p : config.schedule()) {
        x = p.linear * x + p.cubic * (x * x * x);
    }
    return (x + 1.0) / 2.0;
}

namespace {

// Shared core: runs the schedule; when `affine_wrap` is set the final step
// computes (f(x)+1)/2 instead of f(x), at no extra depth (the halving folds
// into the last step's plaintext factor and the +1/2 is a plain add).
he::CipherVector iterate_encrypted(he::CipherVector x, const CompareConfig& config,
                                   bool affine_wrap, const he::KeySet& keys,
                                   const he::Context& ctx) {
    const int need = config.depth_required();
    if (x.level < need) {
        throw DepthError("comparison circuit needs two levels per iteration", need, x.level);
    }
    const auto& schedule = config.schedule();
    for (std::size_t i = 0; i < schedule.size(); ++i) {
        const auto& p = schedule[i];
        const bool last = (i + 1 == schedule.size());
        // f(x) = (c*x) * (a1/c - x^2) with c = -a3; halved on the last step
        // when wrapping to comp's [0, 1] output.
        const double c = -p.cubic;
        const double factor = (affine_wrap && last) ? c / 2.0 : c;
        he::CipherVector x_sq = ctx.mul_relin_rescale(x, x, keys);
        he::CipherVector h = ctx.mul_plain_rescale(x, factor, x.scale);
        he::CipherVector u = ctx.sub_from_plain(p.linear / c, x_sq);
        x = ctx.mul_relin_rescale(h, u, keys);
    }
    if (affine_wrap) x = ctx.add_plain(x, 0.5);
    return x;
}

}  // namespace

he::CipherVector sign_iterate_encrypted(const he::CipherVector& x, const CompareConfig& config,
                                        const he::KeySet& keys, const he::Context& ctx) {
    return iterate_encrypted(x, config, /*affine_wrap=*/false, keys, ctx);
}

he::CipherVector comp_encrypted(const he::CipherVector& a, const he::CipherVector& b,
                                const CompareConfig& config, const he::KeySet& keys,
                                const he::Context& ctx) {
    return iterate_encrypted(ctx.sub(a, b), config, /*affine_wrap=*/true, keys, ctx);
}

}  // namespace hers::sign
