// Copyright 2026 The HERS Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#include "hers/fusion.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "hers/errors.hpp"

namespace hers::fusion {

const char* modality_name(Modality m) {
    switch (m) {
        case Modality::biometric: return "biometric";
        case Modality::biographic: return "biographic";
        case Modality::fused: return "fused";
    }
    return "?";
}

Modality modality_from_name(const std::string& name) {
    if (name == "biometric") return Modality::biometric;
    if (name == "biographic") return Modality::biographic;
    if (name == "fused") return Modality::fused;
    throw ArgumentError("unknown modality: " + name);
}

std::string tokenize_record(const BiographicRecord& rec) {
    if (rec.attributes.empty()) throw ArgumentError("cannot tokenize an empty record");
    std::set<std::string> seen;
    std::string out;
    for (const auto& [att, val] : rec.attributes) {
        if (att.empty()) throw ArgumentError("attribute names must be nonempty");
        if (!seen.insert(att).second) throw ArgumentError("repeated attribute: " + att);
        out += "[ATT]";
        out += att;
        out += "[VAL]";
        out += val;
    }
    return out;
}

NormStats minmax_fit(std::span<const double> training_scores, Modality modality) {
    if (training_scores.size() < 2) {
        throw ArgumentError("min-max fit needs at least two samples");
    }
    const auto [lo, hi] = std::minmax_element(training_scores.begin(), training_scores.end());
    if (!(*hi > *lo)) {
        throw DegenerateRangeError("min-max fit over a constant sample (value " +
                                   std::to_string(*lo) + ")");
    }
    return NormStats{modality, *lo, *hi};
}

double minmax_apply(double x, const NormStats& stats) {
    if (!(stats.max > stats.min)) throw DegenerateRangeError("invalid NormStats range");
    const double y = (x - stats.min) / (stats.max - stats.min);
    return std::clamp(y, 0.0, 1.0);
}

namespace {

// Pairwise (recursive-halving) accumulation. With equal-length halves the
// top split lands exactly on a concatenation boundary, which makes
// D(concat(a,b), concat(c,d)) == D(a,c) + D(b,d) bit-exact, not just close.
double pairwise_sq_sum(const double* q, const double* g, std::size_t n) {
    if (n == 1) {
        const double d = q[0] - g[0];
        return d * d;
    }
    const std::size_t half = n / 2;
    return pairwise_sq_sum(q, g, half) + pairwise_sq_sum(q + half, g + half, n - half);
}

}  // namespace

double squared_distance(std::span<const double> q, std::span<const double> g) {
    if (q.size() != g.size()) {
        throw ArgumentError("distance operands differ in length: " + std::to_string(q.size()) +
                            " vs " + std::to_string(g.size()));
    }
    if (q.empty()) return 0.0;
    return pairwise_sq_sum(q.data(), g.data(), q.size());
}

double squared_distance_plain(const ScoreVector& q, const ScoreVector& g) {
    if (!q.normalized || !g.normalized) {
        throw ArgumentError("squared_distance_plain expects normalized score vectors");
    }
    return squared_distance(q.values, g.values);
}

he::CipherVector squared_distance_encrypted(const he::CipherVector& q, const he::CipherVector& g,
                                            std::uint32_t dim, const he::KeySet& keys,
                                            const he::Context& ctx) {
    const he::CipherVector diff = ctx.sub(q, g);
    const he::CipherVector sq = ctx.mul_relin_rescale(diff, diff, keys);
    return ctx.inner_sum(sq, dim, keys);
}

double score_fuse(double s_bm, double s_bg) {
    if (s_bm < 0.0 || s_bm > 1.0 || s_bg < 0.0 || s_bg > 1.0) {
        throw DomainError("score_fuse expects normalized scores in [0, 1]");
    }
    return (s_bm + s_bg) / 2.0;
}

he::CipherVector score_fuse_encrypted(const he::CipherVector& s_bm, const he::CipherVector& s_bg,
                                      const he::KeySet& keys, const he::Context& ctx) {
    (void)keys;
    const he::CipherVector sum = ctx.add(s_bm, s_bg);
    if (sum.level < 1) throw DepthError("encrypted score fusion needs a rescale level", 1, sum.level);
    const double q_top = static_cast<double>(ctx.params().modulus_chain[sum.level]);
    return ctx.mul_plain_rescale(sum, 0.5, q_top);
}

ScoreVector feature_fuse(const ScoreVector& s_bm, const ScoreVector& s_bg) {
    if (!s_bm.normalized || !s_bg.normalized) {
        throw ArgumentError("feature_fuse expects normalized inputs");
    }
    ScoreVector out;
    out.modality = Modality::fused;
    out.normalized = true;
    out.values.reserve(s_bm.values.size() + s_bg.values.size());
    out.values.insert(out.values.end(), s_bm.values.begin(), s_bm.values.end());
    out.values.insert(out.values.end(), s_bg.values.begin(), s_bg.values.end());
    return out;
}

}  // namespace hers::fusion
