// Copyright 2026 The HERS Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <filesystem>
#include <vector>

#include "doctest.h"
#include "hers/errors.hpp"
#include "hers/matcher.hpp"
#include "hers/serialize.hpp"
#include "match_fixtures.hpp"
#include "oracles.hpp"

using namespace hers;
using namespace hers::match;

namespace {

struct Fixture {
    he::HeParams params = he::HeParams::make(4096, 8);
    he::Context ctx{params};
    he::KeySet keys = ctx.keygen(11);
    eval::PopulationSpec spec;
    eval::Population train_pop;
    eval::Population eval_pop;
    MatchPolicy policy_score;
    MatchPolicy policy_feature;

    Fixture() {
        spec.n_identities = 12;
        spec.dim = 64;
        spec.min_records = 2;
        spec.max_records = 3;
        spec.bm_noise = 0.10;
        spec.bg_noise = 0.12;
        spec.seed = 500;
        train_pop = eval::generate_population(spec);
        auto eval_spec = spec;
        eval_spec.seed = 501;
        eval_pop = eval::generate_population(eval_spec);
        const auto training = fixtures::make_training(train_pop);
        Prng prng(42);
        policy_score = build_policy(ctx, keys, prng, FusionMode::score_level, training, 64, 64);
        policy_feature = build_policy(ctx, keys, prng, FusionMode::feature_level, training, 64, 64);
    }

    TriStores enrolled_stores(const MatchPolicy& policy) const {
        TriStores stores = TriStores::in_memory(ctx.digest());
        Prng prng(77);
        for (const auto* g : eval_pop.gallery()) {
            enroll(ctx, keys, prng, policy, g->identity_id, g->bm, g->bg, stores);
        }
        return stores;
    }
};

Fixture& fixture() {
    static Fixture f;
    return f;
}

bool decisions_identical(const std::vector<std::vector<MatchDecision>>& a,
                         const std::vector<std::vector<MatchDecision>>& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t q = 0; q < a.size(); ++q) {
        if (a[q].size() != b[q].size()) return false;
        for (std::size_t j = 0; j < a[q].size(); ++j) {
            if (a[q][j].entity_id != b[q][j].entity_id) return false;
            if (a[q][j].accept != b[q][j].accept) return false;
            if (a[q][j].distance_score != b[q][j].distance_score) return false;
            if (a[q][j].comp_output != b[q][j].comp_output) return false;
        }
    }
    return true;
}

}  // namespace

TEST_CASE("policy: invariants, persistence, digest guard") {
    auto& f = fixture();
    const auto& p = f.policy_score;
    CHECK(p.threshold > 0.0);
    CHECK(p.threshold < 1.0);
    const auto decrypted = f.ctx.decrypt(p.threshold_ct, f.keys);
    CHECK(std::fabs(decrypted[0] - p.threshold) < 0x1p-15);
    CHECK(std::fabs(p.threshold - p.genuine_mean) >= p.compare.margin());
    CHECK(std::fabs(p.threshold - p.impostor_mean) >= p.compare.margin());

    const auto path = std::filesystem::temp_directory_path() / "hers_policy_test.json";
    save_policy(f.ctx, p, path);
    const auto loaded = load_policy(f.ctx, path);
    CHECK(loaded.threshold == p.threshold);
    CHECK(loaded.fusion_mode == p.fusion_mode);
    CHECK(loaded.bm_distance.min == p.bm_distance.min);
    CHECK(loaded.compare.iterations() == p.compare.iterations());
    const auto re_dec = f.ctx.decrypt(loaded.threshold_ct, f.keys);
    CHECK(std::fabs(re_dec[0] - p.threshold) < 0x1p-15);

    const he::Context other(he::HeParams::make(4096, 7));
    CHECK_THROWS_AS(load_policy(other, path), SerializationError);
    std::filesystem::remove(path);
}

TEST_CASE("enroll: roundtrip, conflicts, id-set invariants, rollback") {
    auto& f = fixture();
    TriStores stores = TriStores::in_memory(f.ctx.digest());
    const auto* g0 = f.eval_pop.gallery()[0];
    Prng prng(101);

    enroll(f.ctx, f.keys, prng, f.policy_score, g0->identity_id, g0->bm, g0->bg, stores);
    CHECK(stores.biometric.ids() == std::vector<std::string>{g0->identity_id});
    CHECK(stores.biographic.ids() == stores.biometric.ids());
    CHECK(stores.fused.ids() == stores.biometric.ids());

    SUBCASE("decrypting all three matches the plaintext normalization pipeline") {
        const auto nbm = f.policy_score.normalize_components(g0->bm, fusion::Modality::biometric);
        const auto nbg = f.policy_score.normalize_components(g0->bg, fusion::Modality::biographic);
        std::vector<double> nfused = nbm;
        nfused.insert(nfused.end(), nbg.begin(), nbg.end());

        const auto d_bm = f.ctx.decrypt(stores.biometric.load(f.ctx, g0->identity_id), f.keys);
        const auto d_bg = f.ctx.decrypt(stores.biographic.load(f.ctx, g0->identity_id), f.keys);
        const auto d_f = f.ctx.decrypt(stores.fused.load(f.ctx, g0->identity_id), f.keys);
        CHECK(oracles::max_abs_diff(d_bm, nbm) < 0x1p-19);
        CHECK(oracles::max_abs_diff(d_bg, nbg) < 0x1p-19);
        CHECK(oracles::max_abs_diff(d_f, nfused) < 0x1p-19);
        CHECK(d_f.size() == 128);
    }

    SUBCASE("duplicate enrollment leaves the stores untouched") {
        const auto before = stores.biometric.ids();
        CHECK_THROWS_AS(
            enroll(f.ctx, f.keys, prng, f.policy_score, g0->identity_id, g0->bm, g0->bg, stores),
            ConflictError);
        CHECK(stores.biometric.ids() == before);
        CHECK(stores.biographic.ids() == before);
        CHECK(stores.fused.ids() == before);
    }

    SUBCASE("dimension mismatch is rejected before any store changes") {
        std::vector<double> short_bm(10, 0.1);
        CHECK_THROWS_AS(enroll(f.ctx, f.keys, prng, f.policy_score, "newid", short_bm, g0->bg, stores),
                        ArgumentError);
        CHECK(!stores.biometric.contains("newid"));
    }

    SUBCASE("a failing third insert rolls the first two back") {
        // A fused store bound to different params makes the last insert throw.
        TriStores mixed{GalleryStore(fusion::Modality::biometric, f.ctx.digest()),
                        GalleryStore(fusion::Modality::biographic, f.ctx.digest()),
                        GalleryStore(fusion::Modality::fused, std::array<std::uint8_t, 32>{})};
        const auto* g1 = f.eval_pop.gallery()[1];
        CHECK_THROWS_AS(
            enroll(f.ctx, f.keys, prng, f.policy_score, g1->identity_id, g1->bm, g1->bg, mixed),
            StoreError);
        CHECK(mixed.biometric.size() == 0);
        CHECK(mixed.biographic.size() == 0);
        CHECK(mixed.fused.size() == 0);
    }
}

TEST_CASE("verify_1n: self-match accepts, far queries reject, empty store") {
    auto& f = fixture();
    const TriStores stores = f.enrolled_stores(f.policy_score);
    const auto* g0 = f.eval_pop.gallery()[0];

    SUBCASE("enrolled template as query is accepted for its own id") {
        const auto decisions = verify_1n(f.ctx, f.keys, f.policy_score, g0->bm, g0->bg, stores);
        REQUIRE(decisions.size() == stores.biometric.size());
        bool found = false;
        for (const auto& d : decisions) {
            if (d.entity_id == g0->identity_id) {
                found = true;
                CHECK(d.accept);
                CHECK(d.comp_output > 0.5);
            }
        }
        CHECK(found);
    }

    SUBCASE("a query far from every entry is rejected everywhere, matching the mirror") {
        // Fresh impostor identities until the mirror oracle certifies one
        // whose score clears the threshold by a full margin for every entry.
        const auto plain_records = fixtures::plain_gallery(f.eval_pop);
        std::vector<double> far_bm, far_bg;
        for (std::uint64_t attempt = 0;; ++attempt) {
            auto far_spec = f.spec;
            far_spec.n_identities = 1;
            far_spec.seed = 9000 + attempt;
            const auto outsider = eval::generate_population(far_spec);
            far_bm = outsider.records[0].bm;
            far_bg = outsider.records[0].bg;
            const auto mirror = verify_1n_plain(f.policy_score, far_bm, far_bg, plain_records);
            const bool all_far = std::all_of(mirror.begin(), mirror.end(), [&](const auto& d) {
                return !d.accept &&
                       d.distance_score > f.policy_score.threshold + f.policy_score.compare.margin();
            });
            if (all_far) break;
            REQUIRE(attempt < 50);
        }
        const auto decisions = verify_1n(f.ctx, f.keys, f.policy_score, far_bm, far_bg, stores);
        const auto mirror = verify_1n_plain(f.policy_score, far_bm, far_bg, plain_records);
        REQUIRE(decisions.size() == mirror.size());
        for (std::size_t i = 0; i < decisions.size(); ++i) {
            CHECK(decisions[i].entity_id == mirror[i].entity_id);
            CHECK(decisions[i].accept == mirror[i].accept);
            CHECK_FALSE(decisions[i].accept);
        }
    }

    SUBCASE("empty gallery returns an empty decision list") {
        TriStores empty = TriStores::in_memory(f.ctx.digest());
        CHECK(verify_1n(f.ctx, f.keys, f.policy_score, g0->bm, g0->bg, empty).empty());
    }

    SUBCASE("stores with diverged id sets are rejected") {
        TriStores broken = f.enrolled_stores(f.policy_score);
        broken.fused.remove(g0->identity_id);
        CHECK_THROWS_AS(verify_1n(f.ctx, f.keys, f.policy_score, g0->bm, g0->bg, broken),
                        StoreError);
    }
}

TEST_CASE("encrypted and mirrored decisions agree outside the margin (both modes)") {
    auto& f = fixture();
    const auto plain_records = fixtures::plain_gallery(f.eval_pop);
    std::vector<QueryTemplates> queries;
    for (const auto* p : f.eval_pop.probes()) queries.push_back({p->bm, p->bg});

    for (const MatchPolicy* policy : {&f.policy_score, &f.policy_feature}) {
        const TriStores stores = f.enrolled_stores(*policy);
        const auto batch = batch_match(f.ctx, f.keys, *policy, queries, stores, 1);
        std::size_t checked = 0, margin_pairs = 0;
        double worst_comp_gap = 0.0;
        for (std::size_t q = 0; q < queries.size(); ++q) {
            const auto mirror = verify_1n_plain(*policy, queries[q].bm, queries[q].bg, plain_records);
            REQUIRE(mirror.size() == batch.decisions[q].size());
            for (std::size_t j = 0; j < mirror.size(); ++j) {
                const auto& enc = batch.decisions[q][j];
                const auto& pln = mirror[j];
                REQUIRE(enc.entity_id == pln.entity_id);
                worst_comp_gap = std::max(worst_comp_gap, std::fabs(enc.comp_output - pln.comp_output));
                if (std::fabs(pln.distance_score - policy->threshold) >= policy->compare.margin()) {
                    CHECK(enc.accept == pln.accept);
                    ++checked;
                } else {
                    ++margin_pairs;
                }
                CHECK(std::fabs(enc.distance_score - pln.distance_score) < 0x1p-12);
            }
        }
        CHECK(checked > 0);
        CHECK(worst_comp_gap < 0x1p-10);
        INFO("margin pairs: ", margin_pairs);
    }
}

TEST_CASE("identify: ranks equal the plaintext mirror, ties and bounds behave") {
    auto& f = fixture();
    const TriStores stores = f.enrolled_stores(f.policy_feature);
    const auto plain_records = fixtures::plain_gallery(f.eval_pop);
    const auto* g0 = f.eval_pop.gallery()[0];

    SUBCASE("self template ranks first") {
        const auto ranked = identify(f.ctx, f.keys, f.policy_feature, g0->bm, g0->bg, stores, 3);
        REQUIRE(ranked.size() == 3);
        CHECK(ranked[0] == g0->identity_id);
    }

    SUBCASE("encrypted rank lists equal the plaintext mirror") {
        for (const auto* p : f.eval_pop.probes()) {
            const auto enc = identify(f.ctx, f.keys, f.policy_feature, p->bm, p->bg, stores,
                                      stores.biometric.size());
            const auto pln = identify_plain(f.policy_feature, p->bm, p->bg, plain_records,
                                            plain_records.size());
            CHECK(enc == pln);
        }
    }

    SUBCASE("singleton gallery trivially ranks its only id") {
        TriStores one = TriStores::in_memory(f.ctx.digest());
        Prng prng(5);
        enroll(f.ctx, f.keys, prng, f.policy_feature, g0->identity_id, g0->bm, g0->bg, one);
        const auto* probe = f.eval_pop.probes()[0];
        const auto ranked = identify(f.ctx, f.keys, f.policy_feature, probe->bm, probe->bg, one, 1);
        CHECK(ranked == std::vector<std::string>{g0->identity_id});
    }

    SUBCASE("rank depth beyond the gallery is rejected") {
        CHECK_THROWS_AS(identify(f.ctx, f.keys, f.policy_feature, g0->bm, g0->bg, stores,
                                 stores.biometric.size() + 1),
                        ArgumentError);
    }
}

TEST_CASE("batch_match: thread-count invariance and timing sanity") {
    auto& f = fixture();
    const TriStores stores = f.enrolled_stores(f.policy_score);
    std::vector<QueryTemplates> queries;
    for (const auto* p : f.eval_pop.probes()) {
        queries.push_back({p->bm, p->bg});
        if (queries.size() == 8) break;
    }

    const auto r1 = batch_match(f.ctx, f.keys, f.policy_score, queries, stores, 1);
    const auto r3 = batch_match(f.ctx, f.keys, f.policy_score, queries, stores, 3);
    CHECK(decisions_identical(r1.decisions, r3.decisions));

    CHECK(r1.report.pairs == queries.size() * stores.biometric.size());
    CHECK(r1.report.threads == 1);
    CHECK(r3.report.threads == 3);
    CHECK(r1.report.elapsed_ms > 0.0);
    const double speedup = r1.report.elapsed_ms / r3.report.elapsed_ms;
    CHECK(speedup <= 3.0 * 1.05);
    CHECK(r1.report.unit_ms.size() == queries.size() * 1);  // one group at this scale

    const auto row = r1.report.csv_row();
    CHECK(std::count(row.begin(), row.end(), ',') == 4);
    CHECK(std::string(TimingReport::csv_header()) == "threads,elapsed_ms,cpu_ms,pairs,pairs_per_sec");
}

TEST_CASE("directory-backed stores round-trip through disk") {
    auto& f = fixture();
    const auto root = std::filesystem::temp_directory_path() / "hers_store_test";
    std::filesystem::remove_all(root);
    TriStores disk = TriStores::create(root, f.ctx.digest());
    Prng prng(303);
    for (const auto* g : f.eval_pop.gallery()) {
        enroll(f.ctx, f.keys, prng, f.policy_score, g->identity_id, g->bm, g->bg, disk);
    }

    TriStores reopened = TriStores::open(root);
    CHECK(reopened.biometric.ids() == disk.biometric.ids());
    CHECK(reopened.fused.modality() == fusion::Modality::fused);

    const auto* probe = f.eval_pop.probes()[0];
    const auto from_disk = verify_1n(f.ctx, f.keys, f.policy_score, probe->bm, probe->bg, reopened);
    const TriStores memory = f.enrolled_stores(f.policy_score);
    const auto from_memory = verify_1n(f.ctx, f.keys, f.policy_score, probe->bm, probe->bg, memory);
    REQUIRE(from_disk.size() == from_memory.size());
    for (std::size_t i = 0; i < from_disk.size(); ++i) {
        CHECK(from_disk[i].entity_id == from_memory[i].entity_id);
        CHECK(from_disk[i].accept == from_memory[i].accept);
        CHECK(std::fabs(from_disk[i].comp_output - from_memory[i].comp_output) < 0x1p-20);
    }

    // Conflicts survive a reopen.
    const auto* g0 = f.eval_pop.gallery()[0];
    CHECK_THROWS_AS(
        enroll(f.ctx, f.keys, prng, f.policy_score, g0->identity_id, g0->bm, g0->bg, reopened),
        ConflictError);
    std::filesystem::remove_all(root);
}
