// Copyright 2026 The HERS Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#include "hers/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "hers/errors.hpp"
#include "nlohmann/json.hpp"

namespace hers::eval {

namespace {

struct SweepPoint {
    double threshold;
    double fmr;
    double fnmr;
};

// FMR/FNMR step functions sampled at every distinct score (plus sentinels on
// both ends so the FMR-FNMR sign change is always bracketed).
std::vector<SweepPoint> sweep(std::span<const double> genuine, std::span<const double> impostor) {
    if (genuine.empty() || impostor.empty()) {
        throw ArgumentError("metric sweep needs nonempty genuine and impostor score sets");
    }
    std::vector<double> gs(genuine.begin(), genuine.end());
    std::vector<double> is(impostor.begin(), impostor.end());
    std::sort(gs.begin(), gs.end());
    std::sort(is.begin(), is.end());

    std::set<double> thr_set(gs.begin(), gs.end());
    thr_set.insert(is.begin(), is.end());
    std::vector<double> thresholds(thr_set.begin(), thr_set.end());

    std::vector<SweepPoint> points;
    points.reserve(thresholds.size() + 2);
    points.push_back({thresholds.front() - 1.0, 0.0, 1.0});
    for (double t : thresholds) {
        const double fmr =
            static_cast<double>(std::upper_bound(is.begin(), is.end(), t) - is.begin()) /
            static_cast<double>(is.size());
        const double fnmr =
            static_cast<double>(gs.end() - std::upper_bound(gs.begin(), gs.end(), t)) /
            static_cast<double>(gs.size());
        points.push_back({t, fmr, fnmr});
    }
    return points;
}

}  // namespace

EerResult eer(std::span<const double> genuine, std::span<const double> impostor) {
    const auto points = sweep(genuine, impostor);
    for (std::size_t i = 1; i < points.size(); ++i) {
        const auto& prev = points[i - 1];
        const auto& cur = points[i];
        const double d1 = prev.fmr - prev.fnmr;
        const double d2 = cur.fmr - cur.fnmr;
        if (d2 < 0.0) continue;  // not crossed yet
        if (d2 == 0.0) return {cur.fmr, cur.threshold};
        // d1 < 0 <= d2: interpolate both rates linearly between the two
        // sweep points and read the value where they agree.
        const double alpha = d1 / (d1 - d2);
        const double rate = prev.fmr + alpha * (cur.fmr - prev.fmr);
        const double threshold = prev.threshold + alpha * (cur.threshold - prev.threshold);
        return {rate, threshold};
    }
    // FMR never reaches FNMR inside the sweep: perfect separation.
    return {0.0, points.back().threshold};
}

double tpr_at_fmr(std::span<const double> genuine, std::span<const double> impostor,
                  double fmr_target) {
    if (!(fmr_target > 0.0 && fmr_target <= 1.0)) {
        throw ArgumentError("fmr_target must lie in (0, 1]");
    }
    if (static_cast<double>(impostor.size()) < 1.0 / fmr_target) {
        throw ResolutionError("need at least " + std::to_string(static_cast<std::size_t>(
                                  std::ceil(1.0 / fmr_target))) +
                              " impostor scores to resolve FMR " + std::to_string(fmr_target));
    }
    if (genuine.empty()) throw ArgumentError("empty genuine score set");
    std::vector<double> is(impostor.begin(), impostor.end());
    std::sort(is.begin(), is.end());
    std::vector<double> gs(genuine.begin(), genuine.end());
    std::sort(gs.begin(), gs.end());

    // Largest k with k/N <= target; the admissible thresholds are those just
    // below the (k+1)-th impostor score.
    const std::size_t k = static_cast<std::size_t>(
        std::floor(fmr_target * static_cast<double>(is.size()) + 1e-12));
    if (k >= is.size()) return 1.0;  // every threshold is admissible
    const double cutoff = is[k];
    // TPR at thresholds approaching `cutoff` from below: genuine strictly
    // below the cutoff are accepted.
    const auto accepted = std::lower_bound(gs.begin(), gs.end(), cutoff) - gs.begin();
    return static_cast<double>(accepted) / static_cast<double>(gs.size());
}

std::vector<std::pair<double, double>> det_points(std::span<const double> genuine,
                                                  std::span<const double> impostor) {
    std::vector<std::pair<double, double>> out;
    for (const auto& p : sweep(genuine, impostor)) out.emplace_back(p.fmr, p.fnmr);
    return out;
}

std::vector<std::pair<double, double>> roc_points(std::span<const double> genuine,
                                                  std::span<const double> impostor) {
    std::vector<std::pair<double, double>> out;
    for (const auto& p : sweep(genuine, impostor)) out.emplace_back(p.fmr, 1.0 - p.fnmr);
    return out;
}

std::vector<double> cmc_curve(const std::vector<std::vector<std::string>>& rank_lists,
                              const std::vector<std::string>& true_ids, std::size_t max_rank) {
    if (rank_lists.size() != true_ids.size()) {
        throw ArgumentError("one true id per rank list required");
    }
    if (rank_lists.empty()) throw ArgumentError("cmc over zero queries");
    std::vector<std::size_t> hit_rank(rank_lists.size());
    for (std::size_t q = 0; q < rank_lists.size(); ++q) {
        const auto& list = rank_lists[q];
        const auto it = std::find(list.begin(), list.end(), true_ids[q]);
        if (it == list.end()) {
            throw ArgumentError("true id " + true_ids[q] + " absent from its rank list");
        }
        hit_rank[q] = static_cast<std::size_t>(it - list.begin());
    }
    if (max_rank == 0) max_rank = rank_lists.front().size();
    std::vector<double> acc(max_rank, 0.0);
    for (std::size_t r = 0; r < max_rank; ++r) {
        std::size_t hits = 0;
        for (std::size_t h : hit_rank) {
            if (h <= r) ++hits;
        }
        acc[r] = static_cast<double>(hits) / static_cast<double>(rank_lists.size());
    }
    return acc;
}

void EvalReport::check_invariants() const {
    auto in01 = [](double v) { return v >= 0.0 && v <= 1.0; };
    if (!in01(eer)) throw Error("EER outside [0,1]");
    for (const auto& [target, rate] : tpr_at_fmr) {
        if (!std::isnan(rate) && !in01(rate)) throw Error("TPR@FMR outside [0,1]");
        (void)target;
    }
    for (std::size_t i = 0; i < roc.size(); ++i) {
        if (!in01(roc[i].first) || !in01(roc[i].second)) throw Error("ROC point outside [0,1]");
        if (i > 0 && (roc[i].first < roc[i - 1].first || roc[i].second < roc[i - 1].second)) {
            throw Error("ROC curve lost monotonicity");
        }
    }
    for (std::size_t i = 0; i < det.size(); ++i) {
        if (!in01(det[i].first) || !in01(det[i].second)) throw Error("DET point outside [0,1]");
    }
    for (std::size_t i = 0; i < cmc.size(); ++i) {
        if (!in01(cmc[i])) throw Error("CMC accuracy outside [0,1]");
        if (i > 0 && cmc[i] < cmc[i - 1]) throw Error("CMC curve lost monotonicity");
    }
}

std::string EvalReport::to_json() const {
    nlohmann::json j;
    j["eer"] = eer;
    j["eer_threshold"] = eer_threshold;
    nlohmann::json tprs = nlohmann::json::object();
    for (const auto& [target, rate] : tpr_at_fmr) {
        std::ostringstream key;
        key << target;
        if (std::isnan(rate)) {
            tprs[key.str()] = nullptr;
        } else {
            tprs[key.str()] = rate;
        }
    }
    j["tpr_at_fmr"] = tprs;
    j["cmc"] = cmc;
    j["roc_points"] = roc.size();
    j["det_points"] = det.size();
    return j.dump(2);
}

void EvalReport::write_csvs(const std::filesystem::path& dir, const std::string& prefix) const {
    std::filesystem::create_directories(dir);
    {
        std::ofstream out(dir / (prefix + "_roc.csv"));
        out << "fpr,tpr\n";
        for (const auto& [fpr, tpr] : roc) out << fpr << "," << tpr << "\n";
    }
    {
        std::ofstream out(dir / (prefix + "_det.csv"));
        out << "fmr,fnmr\n";
        for (const auto& [fmr, fnmr] : det) out << fmr << "," << fnmr << "\n";
    }
    {
        std::ofstream out(dir / (prefix + "_cmc.csv"));
        out << "rank,accuracy\n";
        for (std::size_t r = 0; r < cmc.size(); ++r) out << (r + 1) << "," << cmc[r] << "\n";
    }
}

EvalReport evaluate_scores(std::span<const double> genuine, std::span<const double> impostor,
                           const std::vector<std::vector<std::string>>& rank_lists,
                           const std::vector<std::string>& true_ids, std::size_t max_rank) {
    EvalReport report;
    const auto e = eer(genuine, impostor);
    report.eer = e.rate;
    report.eer_threshold = e.threshold;
    for (double target : {1e-2, 1e-3}) {
        try {
            report.tpr_at_fmr[target] = tpr_at_fmr(genuine, impostor, target);
        } catch (const ResolutionError&) {
            report.tpr_at_fmr[target] = std::numeric_limits<double>::quiet_NaN();
        }
    }
    report.roc = roc_points(genuine, impostor);
    report.det = det_points(genuine, impostor);
    if (!rank_lists.empty()) {
        report.cmc = cmc_curve(rank_lists, true_ids, max_rank);
    }
    report.check_invariants();
    return report;
}

}  // namespace hers::eval
