// Copyright 2026 The HERS Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#include "hers/matcher.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <thread>

#include "hers/errors.hpp"

namespace hers::match {

namespace {

using Clock = std::chrono::steady_clock;

double wall_ms(Clock::time_point a, Clock::time_point b) {
    return std::chrono::duration<double, std::milli>(b - a).count();
}

double process_cpu_ms() {
    timespec ts{};
    clock_gettime(CLOCK_PROCESS_CPUTIME_ID, &ts);
    return static_cast<double>(ts.tv_sec) * 1e3 + static_cast<double>(ts.tv_nsec) / 1e6;
}

std::uint32_t next_pow2(std::uint32_t v) {
    std::uint32_t p = 1;
    while (p < v) p <<= 1;
    return p;
}

// Plaintext scale that re-centers a product back to the context scale after
// the upcoming rescale.
double recentering_scale(const he::Context& ctx, const he::CipherVector& ct) {
    return ctx.params().scale * static_cast<double>(ctx.params().modulus_chain[ct.level]) /
           ct.scale;
}

struct LaneBlocks {
    std::uint32_t score_block = 0;  // lane width for per-modality packing
    std::uint32_t fused_block = 0;  // lane width for concatenated packing
};

LaneBlocks lane_blocks(const MatchPolicy& policy) {
    LaneBlocks b;
    b.score_block = std::max(next_pow2(policy.bm_dim), next_pow2(policy.bg_dim));
    b.fused_block = next_pow2(policy.bm_dim + policy.bg_dim);
    return b;
}

double mirror_band(const sign::CompareConfig& compare) {
    return std::max(compare.decision_band() - 0x1p-10, 0.0);
}

}  // namespace

std::string TimingReport::csv_row() const {
    char buf[160];
    std::snprintf(buf, sizeof(buf), "%d,%.3f,%.3f,%zu,%.3f", threads, elapsed_ms, cpu_ms, pairs,
                  pairs_per_sec);
    return buf;
}

PackedGallery pack_gallery(const he::Context& ctx, const he::KeySet& keys,
                           const GalleryStore& store, std::uint32_t dim) {
    const std::uint32_t block = next_pow2(dim);
    const std::uint32_t slots = ctx.slot_count();
    if (block > slots) throw ArgumentError("template lane exceeds the slot register");
    PackedGallery packed;
    packed.block = block;
    packed.per_group = slots / block;

    const auto& ids = store.ids();
    for (std::size_t base = 0; base < ids.size(); base += packed.per_group) {
        const std::size_t count = std::min<std::size_t>(packed.per_group, ids.size() - base);
        PackedGroup group;
        group.lane_ids.assign(packed.per_group, std::string());
        he::CipherVector acc = store.load(ctx, ids[base]);
        group.lane_ids[0] = ids[base];
        for (std::size_t j = 1; j < count; ++j) {
            // Left-rotate one lane, then drop the next template into lane 0.
            acc = ctx.rotate_full(acc, static_cast<std::int64_t>(block), keys);
            std::vector<std::string> shifted(packed.per_group);
            for (std::uint32_t b = 0; b < packed.per_group; ++b) {
                shifted[b] = group.lane_ids[(b + 1) % packed.per_group];
            }
            group.lane_ids = std::move(shifted);
            acc = ctx.add(acc, store.load(ctx, ids[base + j]));
            group.lane_ids[0] = ids[base + j];
        }
        acc.slot_count = slots;
        group.ct = std::move(acc);
        packed.groups.push_back(std::move(group));
    }
    return packed;
}

he::CipherVector encrypt_tiled_query(const he::Context& ctx, const he::KeySet& keys, Prng& prng,
                                     std::span<const double> values, std::uint32_t block) {
    const std::uint32_t slots = ctx.slot_count();
    if (values.size() > block) throw ArgumentError("query longer than its lane");
    std::vector<double> tiled(slots, 0.0);
    for (std::uint32_t base = 0; base + block <= slots; base += block) {
        for (std::size_t i = 0; i < values.size(); ++i) tiled[base + i] = values[i];
    }
    return ctx.encrypt(tiled, keys, prng);
}

UnitOutput distance_compare_unit(const he::Context& ctx, const he::KeySet& keys,
                                 const he::CipherVector& query_ct, const PackedGroup& group,
                                 std::uint32_t block, double lane_scale, double lane_offset,
                                 const he::CipherVector& threshold_ct,
                                 const sign::CompareConfig& compare, bool want_comp) {
    const he::CipherVector d_ct =
        fusion::squared_distance_encrypted(query_ct, group.ct, block, keys, ctx);

    // Masked normalization: occupied lanes get the affine score, junk lanes
    // (cross-lane partial sums from the fold) are zeroed so they cannot leave
    // the comparator's domain.
    std::vector<double> mask(ctx.slot_count(), 0.0);
    std::vector<double> offsets(ctx.slot_count(), 0.0);
    for (std::size_t b = 0; b < group.lane_ids.size(); ++b) {
        if (group.lane_ids[b].empty()) continue;
        mask[b * block] = lane_scale;
        offsets[b * block] = lane_offset;
    }
    he::CipherVector score = ctx.mul_plain_rescale(d_ct, mask, recentering_scale(ctx, d_ct));
    score = ctx.add_plain(score, offsets);

    UnitOutput out{score, std::nullopt};
    if (want_comp) {
        const he::CipherVector thr = ctx.mod_drop_to(threshold_ct, score.level);
        out.comp_ct = sign::comp_encrypted(thr, score, compare, keys, ctx);
    }
    return out;
}

// Score-level unit: one packed group per modality (identical lane layout),
// per-modality normalization folded into the masks, then the encrypted
// average meets the encrypted threshold.
UnitOutput score_fusion_unit(const he::Context& ctx, const he::KeySet& keys,
                             const MatchPolicy& policy, const he::CipherVector& q_bm,
                             const he::CipherVector& q_bg, const PackedGroup& g_bm,
                             const PackedGroup& g_bg, std::uint32_t block, bool want_comp) {
    const he::CipherVector d_bm = fusion::squared_distance_encrypted(q_bm, g_bm.ct, block, keys, ctx);
    const he::CipherVector d_bg = fusion::squared_distance_encrypted(q_bg, g_bg.ct, block, keys, ctx);

    const double bm_range = policy.bm_distance.max - policy.bm_distance.min;
    const double bg_range = policy.bg_distance.max - policy.bg_distance.min;
    std::vector<double> mask_bm(ctx.slot_count(), 0.0), mask_bg(ctx.slot_count(), 0.0);
    std::vector<double> offsets(ctx.slot_count(), 0.0);
    for (std::size_t b = 0; b < g_bm.lane_ids.size(); ++b) {
        if (g_bm.lane_ids[b].empty()) continue;
        mask_bm[b * block] = 0.5 / bm_range;
        mask_bg[b * block] = 0.5 / bg_range;
        offsets[b * block] =
            -0.5 * (policy.bm_distance.min / bm_range + policy.bg_distance.min / bg_range);
    }
    const he::CipherVector y_bm =
        ctx.mul_plain_rescale(d_bm, mask_bm, recentering_scale(ctx, d_bm));
    const he::CipherVector y_bg =
        ctx.mul_plain_rescale(d_bg, mask_bg, recentering_scale(ctx, d_bg));
    he::CipherVector score = ctx.add_plain(ctx.add(y_bm, y_bg), offsets);

    UnitOutput out{score, std::nullopt};
    if (want_comp) {
        const he::CipherVector thr = ctx.mod_drop_to(policy.threshold_ct, score.level);
        out.comp_ct = sign::comp_encrypted(thr, score, policy.compare, keys, ctx);
    }
    return out;
}

namespace {

struct PreparedQuery {
    he::CipherVector bm, bg;  // score mode
    he::CipherVector fused;   // feature mode
};

PreparedQuery prepare_query(const he::Context& ctx, const he::KeySet& keys, Prng& prng,
                            const MatchPolicy& policy, std::span<const double> query_bm,
                            std::span<const double> query_bg) {
    if (query_bm.size() != policy.bm_dim || query_bg.size() != policy.bg_dim) {
        throw ArgumentError("query dimensions do not match the policy");
    }
    const LaneBlocks blocks = lane_blocks(policy);
    const auto nbm = policy.normalize_components(query_bm, fusion::Modality::biometric);
    const auto nbg = policy.normalize_components(query_bg, fusion::Modality::biographic);
    PreparedQuery q;
    if (policy.fusion_mode == FusionMode::score_level) {
        q.bm = encrypt_tiled_query(ctx, keys, prng, nbm, blocks.score_block);
        q.bg = encrypt_tiled_query(ctx, keys, prng, nbg, blocks.score_block);
    } else {
        std::vector<double> fused = nbm;
        fused.insert(fused.end(), nbg.begin(), nbg.end());
        q.fused = encrypt_tiled_query(ctx, keys, prng, fused, blocks.fused_block);
    }
    return q;
}

struct PackedSet {
    LaneBlocks blocks;
    PackedGallery bm, bg;  // score mode
    PackedGallery fused;   // feature mode
};

PackedSet pack_for_mode(const he::Context& ctx, const he::KeySet& keys, const MatchPolicy& policy,
                        const TriStores& stores) {
    PackedSet set;
    set.blocks = lane_blocks(policy);
    if (policy.fusion_mode == FusionMode::score_level) {
        set.bm = pack_gallery(ctx, keys, stores.biometric, set.blocks.score_block);
        set.bg = pack_gallery(ctx, keys, stores.biographic, set.blocks.score_block);
    } else {
        set.fused = pack_gallery(ctx, keys, stores.fused, set.blocks.fused_block);
    }
    return set;
}

UnitOutput run_group_unit(const he::Context& ctx, const he::KeySet& keys,
                          const MatchPolicy& policy, const PreparedQuery& q, const PackedSet& set,
                          std::size_t group_idx, bool want_comp) {
    if (policy.fusion_mode == FusionMode::score_level) {
        return score_fusion_unit(ctx, keys, policy, q.bm, q.bg, set.bm.groups[group_idx],
                                set.bg.groups[group_idx], set.blocks.score_block, want_comp);
    }
    const double range = policy.fused_distance.max - policy.fused_distance.min;
    return distance_compare_unit(ctx, keys, q.fused, set.fused.groups[group_idx],
                                 set.blocks.fused_block, 1.0 / range,
                                 -policy.fused_distance.min / range, policy.threshold_ct,
                                 policy.compare, want_comp);
}

const PackedGallery& primary_gallery(const MatchPolicy& policy, const PackedSet& set) {
    return policy.fusion_mode == FusionMode::score_level ? set.bm : set.fused;
}

std::uint32_t primary_block(const MatchPolicy& policy, const PackedSet& set) {
    return policy.fusion_mode == FusionMode::score_level ? set.blocks.score_block
                                                         : set.blocks.fused_block;
}

void collect_decisions(const he::Context& ctx, const he::KeySet& keys, const MatchPolicy& policy,
                       const PackedSet& set, std::size_t group_idx, const UnitOutput& unit,
                       const std::vector<std::string>& ordered_ids,
                       std::vector<MatchDecision>& out) {
    const PackedGallery& gallery = primary_gallery(policy, set);
    const std::uint32_t block = primary_block(policy, set);
    const auto scores = ctx.decrypt(unit.score_ct, keys);
    std::vector<double> comps;
    if (unit.comp_ct) comps = ctx.decrypt(*unit.comp_ct, keys);
    const double band = mirror_band(policy.compare);

    const auto& lane_ids = gallery.groups[group_idx].lane_ids;
    for (std::size_t b = 0; b < lane_ids.size(); ++b) {
        if (lane_ids[b].empty()) continue;
        const auto pos = std::lower_bound(ordered_ids.begin(), ordered_ids.end(), lane_ids[b]) -
                         ordered_ids.begin();
        MatchDecision& d = out[static_cast<std::size_t>(pos)];
        d.entity_id = lane_ids[b];
        d.distance_score = scores[b * block];
        if (!comps.empty()) {
            d.comp_output = comps[b * block];
            d.accept = d.comp_output > 0.5;
            d.margin_resolved = std::fabs(d.comp_output - 0.5) < band;
        }
    }
}

void check_store_consistency(const he::Context& ctx, const TriStores& stores) {
    if (stores.biometric.params_digest() != ctx.digest() ||
        stores.biographic.params_digest() != ctx.digest() ||
        stores.fused.params_digest() != ctx.digest()) {
        throw StoreError("stores were created under different parameters");
    }
    if (stores.biometric.ids() != stores.biographic.ids() ||
        stores.biometric.ids() != stores.fused.ids()) {
        throw StoreError("modality stores disagree on the enrolled id set");
    }
}

}  // namespace

void enroll(const he::Context& ctx, const he::KeySet& keys, Prng& prng, const MatchPolicy& policy,
            const std::string& id, std::span<const double> bm_raw, std::span<const double> bg_raw,
            TriStores& stores) {
    if (bm_raw.size() != policy.bm_dim) {
        throw ArgumentError("biometric template has dimension " + std::to_string(bm_raw.size()) +
                            ", policy expects " + std::to_string(policy.bm_dim));
    }
    if (bg_raw.size() != policy.bg_dim) {
        throw ArgumentError("biographic template has dimension " + std::to_string(bg_raw.size()) +
                            ", policy expects " + std::to_string(policy.bg_dim));
    }
    if (stores.biometric.contains(id) || stores.biographic.contains(id) ||
        stores.fused.contains(id)) {
        throw ConflictError("id already enrolled: " + id);
    }

    const auto nbm = policy.normalize_components(bm_raw, fusion::Modality::biometric);
    const auto nbg = policy.normalize_components(bg_raw, fusion::Modality::biographic);
    fusion::ScoreVector sbm{fusion::Modality::biometric, nbm, true};
    fusion::ScoreVector sbg{fusion::Modality::biographic, nbg, true};
    const fusion::ScoreVector fused = fusion::feature_fuse(sbm, sbg);

    const auto ct_bm = ctx.encrypt(nbm, keys, prng);
    const auto ct_bg = ctx.encrypt(nbg, keys, prng);
    const auto ct_fused = ctx.encrypt(fused.values, keys, prng);

    stores.biometric.insert(ctx, id, ct_bm);
    try {
        stores.biographic.insert(ctx, id, ct_bg);
        try {
            stores.fused.insert(ctx, id, ct_fused);
        } catch (...) {
            stores.biographic.remove(id);
            throw;
        }
    } catch (...) {
        stores.biometric.remove(id);
        throw;
    }
}

std::vector<MatchDecision> verify_1n(const he::Context& ctx, const he::KeySet& keys,
                                     const MatchPolicy& policy, std::span<const double> query_bm,
                                     std::span<const double> query_bg, const TriStores& stores,
                                     u64 encryption_seed) {
    check_store_consistency(ctx, stores);
    if (stores.biometric.size() == 0) return {};
    const PackedSet set = pack_for_mode(ctx, keys, policy, stores);
    Prng prng(encryption_seed);
    const PreparedQuery q = prepare_query(ctx, keys, prng, policy, query_bm, query_bg);
    const auto& ordered_ids = stores.biometric.ids();
    std::vector<MatchDecision> decisions(ordered_ids.size());
    const std::size_t group_count = primary_gallery(policy, set).groups.size();
    for (std::size_t g = 0; g < group_count; ++g) {
        const UnitOutput unit = run_group_unit(ctx, keys, policy, q, set, g, /*want_comp=*/true);
        collect_decisions(ctx, keys, policy, set, g, unit, ordered_ids, decisions);
    }
    return decisions;
}

namespace {

double plain_fused_score(const MatchPolicy& policy, std::span<const double> nq_bm,
                         std::span<const double> nq_bg, const PlainRecord& rec) {
    const auto ng_bm = policy.normalize_components(rec.bm, fusion::Modality::biometric);
    const auto ng_bg = policy.normalize_components(rec.bg, fusion::Modality::biographic);
    if (policy.fusion_mode == FusionMode::score_level) {
        const double d_bm = fusion::squared_distance(nq_bm, ng_bm);
        const double d_bg = fusion::squared_distance(nq_bg, ng_bg);
        if (policy.score_variant == ScoreVariant::normalize_components_only) {
            // Alternative plain path: raw distance average over normalized
            // score vectors, no per-distance min-max pass.
            return 0.5 * (d_bm + d_bg);
        }
        return 0.5 * (policy.normalize_distance(d_bm, fusion::Modality::biometric) +
                      policy.normalize_distance(d_bg, fusion::Modality::biographic));
    }
    std::vector<double> nq_f(nq_bm.begin(), nq_bm.end());
    nq_f.insert(nq_f.end(), nq_bg.begin(), nq_bg.end());
    std::vector<double> ng_f = ng_bm;
    ng_f.insert(ng_f.end(), ng_bg.begin(), ng_bg.end());
    return policy.normalize_distance(fusion::squared_distance(nq_f, ng_f),
                                     fusion::Modality::fused);
}

}  // namespace

std::vector<MatchDecision> verify_1n_plain(const MatchPolicy& policy,
                                           std::span<const double> query_bm,
                                           std::span<const double> query_bg,
                                           const std::vector<PlainRecord>& gallery) {
    const auto nq_bm = policy.normalize_components(query_bm, fusion::Modality::biometric);
    const auto nq_bg = policy.normalize_components(query_bg, fusion::Modality::biographic);
    const double band = mirror_band(policy.compare);

    std::vector<MatchDecision> decisions;
    decisions.reserve(gallery.size());
    for (const auto& rec : gallery) {
        const double s = plain_fused_score(policy, nq_bm, nq_bg, rec);
        MatchDecision d;
        d.entity_id = rec.id;
        d.distance_score = s;
        d.comp_output = sign::comp_mirror(policy.threshold, s, policy.compare);
        d.accept = d.comp_output > 0.5;
        d.margin_resolved = std::fabs(d.comp_output - 0.5) < band;
        decisions.push_back(std::move(d));
    }
    std::sort(decisions.begin(), decisions.end(),
              [](const MatchDecision& a, const MatchDecision& b) { return a.entity_id < b.entity_id; });
    return decisions;
}

std::vector<std::string> identify(const he::Context& ctx, const he::KeySet& keys,
                                  const MatchPolicy& policy, std::span<const double> query_bm,
                                  std::span<const double> query_bg, const TriStores& stores,
                                  std::size_t k, u64 encryption_seed) {
    check_store_consistency(ctx, stores);
    if (k > stores.biometric.size()) {
        throw ArgumentError("rank depth exceeds the gallery size");
    }
    const PackedSet set = pack_for_mode(ctx, keys, policy, stores);
    Prng prng(encryption_seed);
    const PreparedQuery q = prepare_query(ctx, keys, prng, policy, query_bm, query_bg);
    const auto& ordered_ids = stores.biometric.ids();
    std::vector<MatchDecision> decisions(ordered_ids.size());
    const std::size_t group_count = primary_gallery(policy, set).groups.size();
    for (std::size_t g = 0; g < group_count; ++g) {
        const UnitOutput unit = run_group_unit(ctx, keys, policy, q, set, g, /*want_comp=*/false);
        collect_decisions(ctx, keys, policy, set, g, unit, ordered_ids, decisions);
    }
    std::sort(decisions.begin(), decisions.end(), [](const MatchDecision& a, const MatchDecision& b) {
        if (a.distance_score != b.distance_score) return a.distance_score < b.distance_score;
        return a.entity_id < b.entity_id;
    });
    std::vector<std::string> ranked;
    ranked.reserve(k);
    for (std::size_t i = 0; i < k; ++i) ranked.push_back(decisions[i].entity_id);
    return ranked;
}

std::vector<std::string> identify_plain(const MatchPolicy& policy, std::span<const double> query_bm,
                                        std::span<const double> query_bg,
                                        const std::vector<PlainRecord>& gallery, std::size_t k) {
    if (k > gallery.size()) throw ArgumentError("rank depth exceeds the gallery size");
    auto decisions = verify_1n_plain(policy, query_bm, query_bg, gallery);
    std::sort(decisions.begin(), decisions.end(), [](const MatchDecision& a, const MatchDecision& b) {
        if (a.distance_score != b.distance_score) return a.distance_score < b.distance_score;
        return a.entity_id < b.entity_id;
    });
    std::vector<std::string> ranked;
    for (std::size_t i = 0; i < k; ++i) ranked.push_back(decisions[i].entity_id);
    return ranked;
}

BatchResult batch_match(const he::Context& ctx, const he::KeySet& keys, const MatchPolicy& policy,
                        const std::vector<QueryTemplates>& queries, const TriStores& stores,
                        int thread_count, u64 encryption_seed) {
    if (thread_count < 1) throw ArgumentError("thread_count must be >= 1");
    check_store_consistency(ctx, stores);

    BatchResult result;
    result.report.threads = thread_count;
    result.decisions.assign(queries.size(), {});
    if (stores.biometric.size() == 0 || queries.empty()) return result;

    const PackedSet set = pack_for_mode(ctx, keys, policy, stores);
    const std::size_t group_count = primary_gallery(policy, set).groups.size();
    const auto& ordered_ids = stores.biometric.ids();

    // Deterministic up-front encryption: the parallel section then touches
    // no randomness at all.
    std::vector<PreparedQuery> prepared;
    prepared.reserve(queries.size());
    Prng prng(encryption_seed);
    for (const auto& q : queries) {
        prepared.push_back(prepare_query(ctx, keys, prng, policy, q.bm, q.bg));
        result.decisions[prepared.size() - 1].assign(ordered_ids.size(), MatchDecision{});
    }

    const std::size_t unit_count = queries.size() * group_count;
    result.report.unit_ms.assign(unit_count, 0.0);
    std::atomic<std::size_t> next{0};

    const double cpu_before = process_cpu_ms();
    const auto wall_before = Clock::now();
    auto worker = [&]() {
        for (;;) {
            const std::size_t idx = next.fetch_add(1);
            if (idx >= unit_count) return;
            const std::size_t q = idx / group_count;
            const std::size_t g = idx % group_count;
            const auto t0 = Clock::now();
            const UnitOutput unit =
                run_group_unit(ctx, keys, policy, prepared[q], set, g, /*want_comp=*/true);
            collect_decisions(ctx, keys, policy, set, g, unit, ordered_ids, result.decisions[q]);
            result.report.unit_ms[idx] = wall_ms(t0, Clock::now());
        }
    };
    if (thread_count == 1) {
        worker();
    } else {
        std::vector<std::thread> threads;
        threads.reserve(static_cast<std::size_t>(thread_count));
        for (int t = 0; t < thread_count; ++t) threads.emplace_back(worker);
        for (auto& t : threads) t.join();
    }
    const auto wall_after = Clock::now();

    result.report.elapsed_ms = wall_ms(wall_before, wall_after);
    result.report.cpu_ms = process_cpu_ms() - cpu_before;
    result.report.pairs = queries.size() * ordered_ids.size();
    result.report.pairs_per_sec =
        result.report.elapsed_ms > 0.0
            ? static_cast<double>(result.report.pairs) / (result.report.elapsed_ms / 1e3)
            : 0.0;
    return result;
}

}  // namespace hers::match
