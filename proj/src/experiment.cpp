// Copyright 2026 The HERS Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#include "hers/experiment.hpp"

#include <algorithm>
#include <cmath>

#include "hers/errors.hpp"
#include "hers/fusion.hpp"
#include "hers/sign_compare.hpp"

namespace hers::eval {

const char* arm_name(Arm arm) {
    switch (arm) {
        case Arm::biometric_only: return "biometric-only";
        case Arm::biographic_only: return "biographic-only";
        case Arm::score_fusion: return "score-fusion";
        case Arm::feature_fusion: return "feature-fusion";
    }
    return "?";
}

namespace {

std::uint32_t next_pow2(std::uint32_t v) {
    std::uint32_t p = 1;
    while (p < v) p <<= 1;
    return p;
}

struct PairScores {
    // probe-major: distances[probe][gallery]
    std::vector<std::vector<double>> bm, bg;
    std::vector<std::string> gallery_ids;
    std::vector<std::string> probe_true_ids;
};

std::vector<double> normalize_all(std::span<const double> raw, const fusion::NormStats& stats) {
    std::vector<double> out(raw.size());
    for (std::size_t i = 0; i < raw.size(); ++i) out[i] = fusion::minmax_apply(raw[i], stats);
    return out;
}

PairScores pairwise_distances(const Population& pop, const fusion::NormStats& bm_stats,
                              const fusion::NormStats& bg_stats) {
    PairScores out;
    const auto gallery = pop.gallery();
    const auto probes = pop.probes();
    for (const auto* g : gallery) out.gallery_ids.push_back(g->identity_id);

    std::vector<std::vector<double>> g_bm, g_bg;
    for (const auto* g : gallery) {
        g_bm.push_back(normalize_all(g->bm, bm_stats));
        g_bg.push_back(normalize_all(g->bg, bg_stats));
    }
    for (const auto* p : probes) {
        out.probe_true_ids.push_back(p->identity_id);
        const auto p_bm = normalize_all(p->bm, bm_stats);
        const auto p_bg = normalize_all(p->bg, bg_stats);
        std::vector<double> row_bm(gallery.size()), row_bg(gallery.size());
        for (std::size_t j = 0; j < gallery.size(); ++j) {
            row_bm[j] = fusion::squared_distance(p_bm, g_bm[j]);
            row_bg[j] = fusion::squared_distance(p_bg, g_bg[j]);
        }
        out.bm.push_back(std::move(row_bm));
        out.bg.push_back(std::move(row_bg));
    }
    return out;
}

double affine(double d, const fusion::NormStats& s) { return (d - s.min) / (s.max - s.min); }

double arm_score(Arm arm, double d_bm, double d_bg, const fusion::NormStats& bm_d,
                 const fusion::NormStats& bg_d, const fusion::NormStats& fused_d) {
    switch (arm) {
        case Arm::biometric_only: return affine(d_bm, bm_d);
        case Arm::biographic_only: return affine(d_bg, bg_d);
        case Arm::score_fusion: return 0.5 * (affine(d_bm, bm_d) + affine(d_bg, bg_d));
        case Arm::feature_fusion:
            // Distance over the concatenation equals the per-modality sum.
            return affine(d_bm + d_bg, fused_d);
    }
    return 0.0;
}

std::vector<std::vector<std::string>> rank_lists_from_scores(
    const std::vector<std::vector<double>>& scores, const std::vector<std::string>& gallery_ids) {
    std::vector<std::vector<std::string>> lists;
    lists.reserve(scores.size());
    for (const auto& row : scores) {
        std::vector<std::size_t> order(row.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            if (row[a] != row[b]) return row[a] < row[b];
            return gallery_ids[a] < gallery_ids[b];
        });
        std::vector<std::string> ids;
        ids.reserve(order.size());
        for (std::size_t i : order) ids.push_back(gallery_ids[i]);
        lists.push_back(std::move(ids));
    }
    return lists;
}

EvalReport report_from_scores(const std::vector<std::vector<double>>& scores,
                              const std::vector<std::string>& gallery_ids,
                              const std::vector<std::string>& true_ids) {
    std::vector<double> genuine, impostor;
    for (std::size_t p = 0; p < scores.size(); ++p) {
        for (std::size_t j = 0; j < gallery_ids.size(); ++j) {
            (true_ids[p] == gallery_ids[j] ? genuine : impostor).push_back(scores[p][j]);
        }
    }
    return evaluate_scores(genuine, impostor, rank_lists_from_scores(scores, gallery_ids), true_ids,
                           gallery_ids.size());
}

}  // namespace

ExperimentResult run_experiment(const PopulationSpec& eval_spec, const PolicyGrid& grid,
                                const he::Context* ctx, const he::KeySet* keys) {
    if (grid.run_encrypted && (ctx == nullptr || keys == nullptr)) {
        throw ArgumentError("encrypted arms need a context and key set");
    }
    PopulationSpec train_spec = eval_spec;
    train_spec.seed = eval_spec.seed ^ 0x9e3779b97f4a7c15ULL;
    const Population train_pop = generate_population(train_spec);
    const Population eval_pop = generate_population(eval_spec);

    // Component normalization fitted on the training templates.
    std::vector<double> bm_pool, bg_pool;
    for (const auto& rec : train_pop.records) {
        bm_pool.insert(bm_pool.end(), rec.bm.begin(), rec.bm.end());
        bg_pool.insert(bg_pool.end(), rec.bg.begin(), rec.bg.end());
    }
    const auto bm_comp = fusion::minmax_fit(bm_pool, fusion::Modality::biometric);
    const auto bg_comp = fusion::minmax_fit(bg_pool, fusion::Modality::biographic);

    // Training distances and per-modality score normalization ranges.
    const PairScores train = pairwise_distances(train_pop, bm_comp, bg_comp);
    std::vector<double> tr_bm, tr_bg, tr_fused;
    for (std::size_t p = 0; p < train.bm.size(); ++p) {
        for (std::size_t j = 0; j < train.gallery_ids.size(); ++j) {
            tr_bm.push_back(train.bm[p][j]);
            tr_bg.push_back(train.bg[p][j]);
            tr_fused.push_back(train.bm[p][j] + train.bg[p][j]);
        }
    }
    const auto bm_dist = fusion::minmax_fit(tr_bm, fusion::Modality::biometric);
    const auto bg_dist = fusion::minmax_fit(tr_bg, fusion::Modality::biographic);
    const auto fused_dist = fusion::minmax_fit(tr_fused, fusion::Modality::fused);

    const int iteration_budget = ctx ? std::max(1, (ctx->max_level() - 2) / 2) : 3;
    const sign::CompareConfig compare =
        sign::CompareConfig::with_iterations(grid.margin, iteration_budget);

    // Per-arm thresholds from the training score distributions.
    std::map<Arm, double> thresholds;
    for (Arm arm : grid.arms) {
        std::vector<double> genuine, impostor;
        for (std::size_t p = 0; p < train.bm.size(); ++p) {
            for (std::size_t j = 0; j < train.gallery_ids.size(); ++j) {
                const double s =
                    arm_score(arm, train.bm[p][j], train.bg[p][j], bm_dist, bg_dist, fused_dist);
                (train.probe_true_ids[p] == train.gallery_ids[j] ? genuine : impostor).push_back(s);
            }
        }
        thresholds[arm] = eer(genuine, impostor).threshold;
    }

    // Plain evaluation.
    const PairScores ev = pairwise_distances(eval_pop, bm_comp, bg_comp);
    ExperimentResult result;
    result.gallery_size = ev.gallery_ids.size();
    result.probe_count = ev.probe_true_ids.size();

    std::map<Arm, std::vector<std::vector<double>>> plain_scores;
    for (Arm arm : grid.arms) {
        auto& scores = plain_scores[arm];
        scores.resize(ev.bm.size());
        for (std::size_t p = 0; p < ev.bm.size(); ++p) {
            scores[p].resize(ev.gallery_ids.size());
            for (std::size_t j = 0; j < ev.gallery_ids.size(); ++j) {
                scores[p][j] = arm_score(arm, ev.bm[p][j], ev.bg[p][j], bm_dist, bg_dist, fused_dist);
            }
        }
        ArmResult ar;
        ar.plain = report_from_scores(scores, ev.gallery_ids, ev.probe_true_ids);
        ar.threshold = thresholds[arm];
        ar.pairs = ev.bm.size() * ev.gallery_ids.size();
        result.arms.emplace(arm, std::move(ar));
    }

    if (!grid.run_encrypted) return result;

    // --- encrypted replay -----------------------------------------------------
    const auto eval_gallery = eval_pop.gallery();
    const auto eval_probes = eval_pop.probes();

    match::MatchPolicy base_policy;
    base_policy.bm_dim = static_cast<std::uint32_t>(eval_spec.dim);
    base_policy.bg_dim = static_cast<std::uint32_t>(eval_spec.dim);
    base_policy.bm_component = bm_comp;
    base_policy.bg_component = bg_comp;
    base_policy.bm_distance = bm_dist;
    base_policy.bg_distance = bg_dist;
    base_policy.fused_distance = fused_dist;
    base_policy.compare = compare;
    base_policy.params_digest = ctx->digest();

    match::TriStores stores = match::TriStores::in_memory(ctx->digest());
    Prng enroll_prng(grid.encryption_seed ^ 0xabcdef12345ULL);
    for (const auto* g : eval_gallery) {
        match::enroll(*ctx, *keys, enroll_prng, base_policy, g->identity_id, g->bm, g->bg, stores);
    }

    const std::uint32_t dim = static_cast<std::uint32_t>(eval_spec.dim);
    const std::uint32_t mono_block = next_pow2(dim);
    const std::uint32_t fused_block = next_pow2(2 * dim);
    const auto packed_bm = match::pack_gallery(*ctx, *keys, stores.biometric, mono_block);
    const auto packed_bg = match::pack_gallery(*ctx, *keys, stores.biographic, mono_block);
    const auto packed_fused = match::pack_gallery(*ctx, *keys, stores.fused, fused_block);

    Prng thr_prng(grid.encryption_seed ^ 0x7777ULL);
    std::map<Arm, he::CipherVector> thr_cts;
    for (Arm arm : grid.arms) {
        thr_cts.emplace(arm, ctx->encrypt(ctx->encode_broadcast(thresholds[arm],
                                                                ctx->params().scale,
                                                                ctx->max_level()),
                                          *keys, thr_prng));
    }

    match::MatchPolicy score_policy = base_policy;
    if (thr_cts.count(Arm::score_fusion)) {
        score_policy.fusion_mode = match::FusionMode::score_level;
        score_policy.threshold = thresholds[Arm::score_fusion];
        score_policy.threshold_ct = thr_cts.at(Arm::score_fusion);
    }

    Prng query_prng(grid.encryption_seed);
    for (std::size_t p = 0; p < eval_probes.size(); ++p) {
        const auto* probe = eval_probes[p];
        const auto nbm = normalize_all(probe->bm, bm_comp);
        const auto nbg = normalize_all(probe->bg, bg_comp);
        std::vector<double> nfused = nbm;
        nfused.insert(nfused.end(), nbg.begin(), nbg.end());

        const auto q_bm = match::encrypt_tiled_query(*ctx, *keys, query_prng, nbm, mono_block);
        const auto q_bg = match::encrypt_tiled_query(*ctx, *keys, query_prng, nbg, mono_block);
        const auto q_fused =
            match::encrypt_tiled_query(*ctx, *keys, query_prng, nfused, fused_block);

        for (Arm arm : grid.arms) {
            ArmResult& ar = result.arms.at(arm);
            const bool fused_arm = arm == Arm::feature_fusion;
            const bool score_arm = arm == Arm::score_fusion;
            const auto& packed = fused_arm                       ? packed_fused
                                 : arm == Arm::biographic_only   ? packed_bg
                                                                 : packed_bm;
            const std::uint32_t block = fused_arm ? fused_block : mono_block;

            // Decrypted score/comp per gallery id for this probe.
            std::map<std::string, std::pair<double, double>> by_id;
            for (std::size_t g = 0; g < packed.groups.size(); ++g) {
                match::UnitOutput unit = [&]() {
                    if (score_arm) {
                        return match::score_fusion_unit(*ctx, *keys, score_policy, q_bm, q_bg,
                                                        packed_bm.groups[g], packed_bg.groups[g],
                                                        mono_block, true);
                    }
                    const fusion::NormStats& st = fused_arm ? fused_dist
                                                  : arm == Arm::biographic_only ? bg_dist
                                                                                : bm_dist;
                    const double range = st.max - st.min;
                    return match::distance_compare_unit(*ctx, *keys, fused_arm ? q_fused
                                                        : arm == Arm::biographic_only ? q_bg
                                                                                      : q_bm,
                                                        packed.groups[g], block, 1.0 / range,
                                                        -st.min / range, thr_cts.at(arm), compare,
                                                        true);
                }();
                const auto scores = ctx->decrypt(unit.score_ct, *keys);
                const auto comps = ctx->decrypt(*unit.comp_ct, *keys);
                const auto& lanes = packed.groups[g].lane_ids;
                for (std::size_t b = 0; b < lanes.size(); ++b) {
                    if (lanes[b].empty()) continue;
                    by_id[lanes[b]] = {scores[b * block], comps[b * block]};
                }
            }

            auto& enc_scores = ar.encrypted_scores;
            if (enc_scores.empty()) enc_scores.resize(eval_probes.size());
            enc_scores[p].resize(ev.gallery_ids.size());
            for (std::size_t j = 0; j < ev.gallery_ids.size(); ++j) {
                const auto& [score, comp] = by_id.at(ev.gallery_ids[j]);
                enc_scores[p][j] = score;
                const double plain_score = plain_scores[arm][p][j];
                const bool plain_accept =
                    sign::comp_mirror(thresholds[arm], plain_score, compare) > 0.5;
                const bool ct_accept = comp > 0.5;
                const bool in_margin = std::fabs(plain_score - thresholds[arm]) < grid.margin;
                ar.margin_pairs += in_margin ? 1 : 0;
                if (plain_accept != ct_accept) {
                    ar.decisions_equal = false;
                    if (!in_margin) ar.decisions_equal_outside_margin = false;
                }
                ar.max_score_diff = std::max(ar.max_score_diff, std::fabs(plain_score - score));
            }
        }
    }

    for (Arm arm : grid.arms) {
        ArmResult& ar = result.arms.at(arm);
        ar.encrypted = report_from_scores(ar.encrypted_scores, ev.gallery_ids, ev.probe_true_ids);
    }
    return result;
}

}  // namespace hers::eval
