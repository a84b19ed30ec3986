// Copyright 2026 The HERS Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#ifndef HERS_METRICS_HPP
#define HERS_METRICS_HPP

#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace hers::eval {

// Scores are distances: lower means more genuine. A probe is accepted at
// threshold t when its score is <= t.

struct EerResult {
    double rate = 0.0;
    double threshold = 0.0;
};

// Equal error rate by exhaustive sweep over the distinct score values with
// linear interpolation of FMR/FNMR at the crossing.
EerResult eer(std::span<const double> genuine, std::span<const double> impostor);

// TPR at the largest threshold whose empirical FMR stays <= fmr_target.
// Requires at least 1/fmr_target impostor samples to resolve the target.
double tpr_at_fmr(std::span<const double> genuine, std::span<const double> impostor,
                  double fmr_target);

// (fmr, fnmr) pairs over the sweep, fmr nondecreasing.
std::vector<std::pair<double, double>> det_points(std::span<const double> genuine,
                                                  std::span<const double> impostor);
// (fpr, tpr) pairs, tpr nondecreasing in fpr.
std::vector<std::pair<double, double>> roc_points(std::span<const double> genuine,
                                                  std::span<const double> impostor);

// Cumulative match characteristic: accuracy[r-1] is the fraction of queries
// whose true id appears within the top r entries of its rank list.
std::vector<double> cmc_curve(const std::vector<std::vector<std::string>>& rank_lists,
                              const std::vector<std::string>& true_ids, std::size_t max_rank);

struct EvalReport {
    double eer = 0.0;
    double eer_threshold = 0.0;
    std::map<double, double> tpr_at_fmr;  // target -> rate (NaN when unresolvable)
    std::vector<std::pair<double, double>> roc;
    std::vector<std::pair<double, double>> det;
    std::vector<double> cmc;

    // Throws Error when a rate leaves [0,1] or a curve loses monotonicity.
    void check_invariants() const;

    std::string to_json() const;
    // <prefix>_roc.csv (fpr,tpr), <prefix>_det.csv (fmr,fnmr),
    // <prefix>_cmc.csv (rank,accuracy).
    void write_csvs(const std::filesystem::path& dir, const std::string& prefix) const;
};

EvalReport evaluate_scores(std::span<const double> genuine, std::span<const double> impostor,
                           const std::vector<std::vector<std::string>>& rank_lists = {},
                           const std::vector<std::string>& true_ids = {},
                           std::size_t max_rank = 0);

}  // namespace hers::eval

#endif  // HERS_METRICS_HPP
