// Copyright 2026 The HERS Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#ifndef HERS_MATCHER_HPP
#define HERS_MATCHER_HPP

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hers/gallery.hpp"
#include "hers/policy.hpp"

namespace hers::match {

// Outcome of one query-vs-gallery-entry comparison. `distance_score` is the
// normalized fused score the key holder reads from the 1:N score set;
// `comp_output` is the decrypted comparator value; accept <=> comp_output >
// 0.5 (the comparator is oriented threshold-vs-score, so larger output means
// the score fell below the threshold). `margin_resolved` marks pairs whose
// comparator output landed inside the no-guarantee band and was resolved by
// the sign of the decrypted value alone.
struct MatchDecision {
    std::string entity_id;
    double distance_score = 0.0;
    double comp_output = 0.0;
    bool accept = false;
    bool margin_resolved = false;
};

struct TimingReport {
    int threads = 1;
    double elapsed_ms = 0.0;
    double cpu_ms = 0.0;
    std::size_t pairs = 0;
    double pairs_per_sec = 0.0;
    std::vector<double> unit_ms;  // wall latency of each work unit

    static const char* csv_header() { return "threads,elapsed_ms,cpu_ms,pairs,pairs_per_sec"; }
    std::string csv_row() const;
};

// Gallery templates packed lane-wise for SIMD matching: every group holds
// per_group templates, each occupying one `block`-slot lane of a single
// ciphertext.
struct PackedGroup {
    he::CipherVector ct;
    std::vector<std::string> lane_ids;  // lane index -> entity id ("" = empty)
};

struct PackedGallery {
    std::uint32_t block = 0;
    std::uint32_t per_group = 0;
    std::vector<PackedGroup> groups;
};

PackedGallery pack_gallery(const he::Context& ctx, const he::KeySet& keys,
                           const GalleryStore& store, std::uint32_t dim);

// Plaintext gallery record for the mirror path.
struct PlainRecord {
    std::string id;
    std::vector<double> bm;
    std::vector<double> bg;
};

struct QueryTemplates {
    std::vector<double> bm;
    std::vector<double> bg;
};

// Normalizes, encrypts and writes the three modality templates; either all
// three stores gain the id or none does.
void enroll(const he::Context& ctx, const he::KeySet& keys, Prng& prng, const MatchPolicy& policy,
            const std::string& id, std::span<const double> bm_raw, std::span<const double> bg_raw,
            TriStores& stores);

std::vector<MatchDecision> verify_1n(const he::Context& ctx, const he::KeySet& keys,
                                     const MatchPolicy& policy, std::span<const double> query_bm,
                                     std::span<const double> query_bg, const TriStores& stores,
                                     u64 encryption_seed = 0x48455253);

// Plaintext mirror of verify_1n: same normalization, same comparator
// polynomial, same decision rule, no ciphertexts.
std::vector<MatchDecision> verify_1n_plain(const MatchPolicy& policy,
                                           std::span<const double> query_bm,
                                           std::span<const double> query_bg,
                                           const std::vector<PlainRecord>& gallery);

// Top-k gallery ids by decrypted fused distance, ascending; ties broken by
// id. The key holder ranks the decrypted 1:N score set; no encrypted sorting.
std::vector<std::string> identify(const he::Context& ctx, const he::KeySet& keys,
                                  const MatchPolicy& policy, std::span<const double> query_bm,
                                  std::span<const double> query_bg, const TriStores& stores,
                                  std::size_t k, u64 encryption_seed = 0x48455253);

std::vector<std::string> identify_plain(const MatchPolicy& policy, std::span<const double> query_bm,
                                        std::span<const double> query_bg,
                                        const std::vector<PlainRecord>& gallery, std::size_t k);

struct BatchResult {
    std::vector<std::vector<MatchDecision>> decisions;  // per query, in gallery id order
    TimingReport report;
};

// Matches every query against the whole gallery with `thread_count` workers.
// Queries are encrypted up front from `encryption_seed`, work units are pure
// (query, group) evaluations, and results land in preallocated slots, so the
// decision set is identical for every thread count.
BatchResult batch_match(const he::Context& ctx, const he::KeySet& keys, const MatchPolicy& policy,
                        const std::vector<QueryTemplates>& queries, const TriStores& stores,
                        int thread_count, u64 encryption_seed = 0x48455253);

// --- lower-level pieces shared with the evaluation harness ------------------

// Per-lane normalized distance + comparator circuit against a single packed
// group, used by the unimodal evaluation arms and internally by the fused
// path. `lane_scale`/`lane_offset` define the affine score map s = a*d + b
// applied in every occupied lane (zero elsewhere, which keeps junk lanes out
// of the comparator's domain).
struct UnitOutput {
    he::CipherVector score_ct;
    std::optional<he::CipherVector> comp_ct;
};

UnitOutput distance_compare_unit(const he::Context& ctx, const he::KeySet& keys,
                                 const he::CipherVector& query_ct, const PackedGroup& group,
                                 std::uint32_t block, double lane_scale, double lane_offset,
                                 const he::CipherVector& threshold_ct,
                                 const sign::CompareConfig& compare, bool want_comp);

// Score-level unit: per-modality distances against two groups with identical
// lane layout, normalization folded into the lane masks, encrypted average,
// then the comparator against the policy threshold.
UnitOutput score_fusion_unit(const he::Context& ctx, const he::KeySet& keys,
                             const MatchPolicy& policy, const he::CipherVector& q_bm,
                             const he::CipherVector& q_bg, const PackedGroup& g_bm,
                             const PackedGroup& g_bg, std::uint32_t block, bool want_comp);

// Tiles a template across every lane of the register and encrypts it.
he::CipherVector encrypt_tiled_query(const he::Context& ctx, const he::KeySet& keys, Prng& prng,
                                     std::span<const double> values, std::uint32_t block);

}  // namespace hers::match

#endif  // HERS_MATCHER_HPP
