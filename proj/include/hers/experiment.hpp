// Copyright 2026 The HERS Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#ifndef HERS_EXPERIMENT_HPP
#define HERS_EXPERIMENT_HPP

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "hers/matcher.hpp"
#include "hers/metrics.hpp"
#include "hers/population.hpp"

namespace hers::eval {

enum class Arm { biometric_only, biographic_only, score_fusion, feature_fusion };

const char* arm_name(Arm arm);

// Which arms to run and whether to mirror them under encryption.
struct PolicyGrid {
    std::vector<Arm> arms = {Arm::biometric_only, Arm::biographic_only, Arm::score_fusion,
                             Arm::feature_fusion};
    bool run_encrypted = false;
    double margin = 0x1p-5;
    std::uint64_t encryption_seed = 0x48455253;
};

struct ArmResult {
    EvalReport plain;
    std::optional<EvalReport> encrypted;
    // Plain-vs-encrypted agreement bookkeeping (encrypted runs only).
    bool decisions_equal = true;      // accept bits equal on every pair
    bool decisions_equal_outside_margin = true;
    std::size_t margin_pairs = 0;     // pairs within one margin of the threshold
    std::size_t pairs = 0;
    double max_score_diff = 0.0;      // max |plain score - decrypted score|
    double threshold = 0.0;
    std::vector<std::vector<double>> encrypted_scores;  // probe-major, gallery id order
};

struct ExperimentResult {
    std::map<Arm, ArmResult> arms;
    std::size_t gallery_size = 0;
    std::size_t probe_count = 0;
};

// Fits normalization and thresholds on a training population drawn from the
// same spec (derived seed), evaluates every requested arm on the eval
// population, and optionally replays each arm under encryption, pairwise
// checking decisions against the plaintext mirror. ctx/keys are required
// when run_encrypted is set.
ExperimentResult run_experiment(const PopulationSpec& eval_spec, const PolicyGrid& grid,
                                const he::Context* ctx = nullptr,
                                const he::KeySet* keys = nullptr);

}  // namespace hers::eval

#endif  // HERS_EXPERIMENT_HPP
