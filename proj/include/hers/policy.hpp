// Copyright 2026 The HERS Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#ifndef HERS_POLICY_HPP
#define HERS_POLICY_HPP

#include <array>
#include <filesystem>
#include <string>
#include <vector>

#include "hers/context.hpp"
#include "hers/fusion.hpp"
#include "hers/population.hpp"
#include "hers/sign_compare.hpp"

namespace hers::match {

enum class FusionMode { score_level, feature_level };

// Which quantities get min-max normalized on the plaintext score path. The
// encrypted path always runs the default; the alternative exists to make the
// ambiguity between normalizing distances and normalizing raw score vectors
// inspectable in plaintext.
enum class ScoreVariant { normalize_distances, normalize_components_only };

const char* fusion_mode_name(FusionMode m);
FusionMode fusion_mode_from_name(const std::string& s);

// Everything the matcher needs to turn distances into accept bits: fitted
// normalization ranges, the decision threshold (plain and encrypted), and
// the comparator schedule.
struct MatchPolicy {
    FusionMode fusion_mode = FusionMode::score_level;
    ScoreVariant score_variant = ScoreVariant::normalize_distances;
    std::uint32_t bm_dim = 128;
    std::uint32_t bg_dim = 128;

    double threshold = 0.5;
    he::CipherVector threshold_ct;

    fusion::NormStats bm_component{fusion::Modality::biometric, 0.0, 1.0};
    fusion::NormStats bg_component{fusion::Modality::biographic, 0.0, 1.0};
    fusion::NormStats bm_distance{fusion::Modality::biometric, 0.0, 1.0};
    fusion::NormStats bg_distance{fusion::Modality::biographic, 0.0, 1.0};
    fusion::NormStats fused_distance{fusion::Modality::fused, 0.0, 1.0};

    sign::CompareConfig compare = sign::CompareConfig::with_iterations(0x1p-5, 3);

    double genuine_mean = 0.0;
    double impostor_mean = 1.0;
    std::array<std::uint8_t, 32> params_digest{};

    // Normalized per-modality component vector (clamped min-max).
    std::vector<double> normalize_components(std::span<const double> raw,
                                             fusion::Modality modality) const;
    // Distance-score normalization is affine and unclamped so the encrypted
    // and plaintext paths stay slotwise identical.
    double normalize_distance(double d, fusion::Modality modality) const;
};

// Training material for policy fitting: per-modality template component
// samples plus genuine/impostor distances measured on normalized templates.
struct PolicyTraining {
    std::vector<double> bm_components, bg_components;
    std::vector<double> bm_genuine, bm_impostor;
    std::vector<double> bg_genuine, bg_impostor;
    std::vector<double> fused_genuine, fused_impostor;
};

// Fits normalization stats, places the threshold at the EER point of the
// training score distribution for `mode`, encrypts it, and verifies the
// policy invariants (threshold_ct decrypts within 2^-15; threshold at least
// one comparator margin away from both score cluster means).
MatchPolicy build_policy(const he::Context& ctx, const he::KeySet& keys, Prng& prng,
                         FusionMode mode, const PolicyTraining& training,
                         std::uint32_t bm_dim, std::uint32_t bg_dim,
                         double margin = 0x1p-5);

// Derives PolicyTraining from a labeled population: component pools, then
// genuine/impostor distances between every probe record and the per-identity
// gallery record, measured on component-normalized templates.
PolicyTraining training_from_population(const eval::Population& population);

void save_policy(const he::Context& ctx, const MatchPolicy& policy,
                 const std::filesystem::path& path);
MatchPolicy load_policy(const he::Context& ctx, const std::filesystem::path& path);

}  // namespace hers::match

#endif  // HERS_POLICY_HPP
