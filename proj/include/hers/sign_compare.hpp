// Copyright 2026 The HERS Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#ifndef HERS_SIGN_COMPARE_HPP
#define HERS_SIGN_COMPARE_HPP

#include <cstddef>
#include <vector>

#include "hers/context.hpp"

namespace hers::sign {

// One composition step: an odd cubic a1*x + a3*x^3 with a1 > 0 > a3 and
// fixed point f(1) = 1. The default (3x - x^3)/2 is the lowest-degree member
// that is nondecreasing on [-1, 1].
struct OddCubic {
    double linear = 1.5;
    double cubic = -0.5;
};

// Configuration of the iterated-polynomial sign approximation.
//
// The schedule is a list so that future variants can mix different odd
// polynomials per step; today every entry is the same basic cubic. Inputs
// with |a - b| below `margin` carry no accuracy guarantee; outside it the
// composed polynomial lands within `target_error` of the true sign.
class CompareConfig {
public:
    // Validates that `iterations` steps reach `target_error` on [margin, 1];
    // rejects iteration counts below the minimum the oracle finds.
    static CompareConfig make(double margin, double target_error, int iterations);

    // Smallest iteration count meeting target_error, found by high-precision
    // iteration of the basic cubic at the worst point x = margin.
    static CompareConfig minimal_for(double margin, double target_error);

    // Fixed iteration count; target_error becomes whatever that count
    // achieves at the margin.
    static CompareConfig with_iterations(double margin, int iterations);

    double margin() const { return margin_; }
    double target_error() const { return target_error_; }
    int iterations() const { return static_cast<int>(schedule_.size()); }
    const std::vector<OddCubic>& schedule() const { return schedule_; }

    // Multiplicative depth comp_encrypted consumes: two levels per step.
    int depth_required() const { return 2 * iterations(); }

    // Guaranteed half-distance of the comparator output from 0.5 for inputs
    // at least `margin` apart: sign_iterate(margin) / 2.
    double decision_band() const { return (1.0 - target_error_) / 2.0; }

private:
    CompareConfig(double margin, double target_error, std::vector<OddCubic> schedule);
    double margin_;
    double target_error_;
    std::vector<OddCubic> schedule_;
};

// f^(iterations)(x) for the configured schedule; |x| <= 1 or DomainError.
// Odd by construction: sign_iterate_plain(-x) == -sign_iterate_plain(x)
// exactly in IEEE arithmetic.
double sign_iterate_plain(double x, const CompareConfig& config);

// comp(a, b) = (sign_iterate(a - b) + 1) / 2 on the normalized score domain
// [0, 1]; equals 0.5 exactly when a == b.
double comp_plain(double a, double b, const CompareConfig& config);

// Mirror of the encrypted comparator for plaintext equivalence paths: the
// same polynomial, evaluated without domain checks. Normalized scores can
// overshoot [0, 1] slightly on test data, and the mirror must track what the
// encrypted circuit actually computes there.
double comp_mirror(double a, double b, const CompareConfig& config);

// Slot-wise sign iteration under encryption; consumes depth_required() levels.
he::CipherVector sign_iterate_encrypted(const he::CipherVector& x,
                                        const CompareConfig& config,
                                        const he::KeySet& keys, const he::Context& ctx);

// Slot-wise encrypted comp(a, b). Decryptions agree with comp_plain within
// 2^-10 for in-domain slots.
he::CipherVector comp_encrypted(const he::CipherVector& a, const he::CipherVector& b,
                                const CompareConfig& config, const he::KeySet& keys,
                                const he::Context& ctx);

}  // namespace hers::sign

#endif  // HERS_SIGN_COMPARE_HPP
