// Copyright 2026 The HERS Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#ifndef HERS_FUSION_HPP
#define HERS_FUSION_HPP

#include <span>
#include <string>
#include <utility>
#include <vector>

#include "hers/context.hpp"

namespace hers::fusion {

enum class Modality { biometric, biographic, fused };

const char* modality_name(Modality m);
Modality modality_from_name(const std::string& name);

// Fixed-length real template; `normalized` asserts every component is in
// [0, 1] (checked where the contract requires it).
struct ScoreVector {
    Modality modality = Modality::biometric;
    std::vector<double> values;
    bool normalized = false;
};

// Per-modality extrema fitted on training data for min-max normalization.
struct NormStats {
    Modality modality = Modality::biometric;
    double min = 0.0;
    double max = 1.0;
};

// Ordered attribute-value pairs describing one entity.
struct BiographicRecord {
    std::vector<std::pair<std::string, std::string>> attributes;
};

// "[ATT]att_1[VAL]val_1...[ATT]att_k[VAL]val_k", order preserving.
// Empty records, empty attribute names and repeated attributes are rejected.
std::string tokenize_record(const BiographicRecord& rec);

// Extrema of the training sample; needs at least two distinct values.
NormStats minmax_fit(std::span<const double> training_scores, Modality modality);

// (x - min) / (max - min), clamped into [0, 1]; out-of-range inputs are a
// legitimate consequence of applying training extrema to test data.
double minmax_apply(double x, const NormStats& stats);

// Sum of squared component differences over two equal-length normalized
// vectors.
double squared_distance_plain(const ScoreVector& q, const ScoreVector& g);
double squared_distance(std::span<const double> q, std::span<const double> g);

// Encrypted ||q - g||^2: subtract, one square, then a rotate-and-add fold.
// Slot 0 (and the base slot of every dim-wide block) carries the distance.
he::CipherVector squared_distance_encrypted(const he::CipherVector& q, const he::CipherVector& g,
                                            std::uint32_t dim, const he::KeySet& keys,
                                            const he::Context& ctx);

// Average of two normalized scalar scores.
double score_fuse(double s_bm, double s_bg);

// Encrypted average: add then multiply by a broadcast 0.5 (one level).
he::CipherVector score_fuse_encrypted(const he::CipherVector& s_bm, const he::CipherVector& s_bg,
                                      const he::KeySet& keys, const he::Context& ctx);

// Concatenation of two normalized per-modality vectors.
ScoreVector feature_fuse(const ScoreVector& s_bm, const ScoreVector& s_bg);

}  // namespace hers::fusion

#endif  // HERS_FUSION_HPP
