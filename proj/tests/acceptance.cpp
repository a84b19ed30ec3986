// Copyright 2026 The HERS Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0
//
// Acceptance suite: one pass/fail line per release criterion, run at the
// production parameter set (ring degree 2^13). Criteria and tolerances are
// pinned in code; the suite exits nonzero if any line fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <memory>
#include <thread>
#include <vector>

#include "hers/errors.hpp"
#include "hers/experiment.hpp"
#include "hers/matcher.hpp"
#include "hers/serialize.hpp"
#include "hers/sign_compare.hpp"
#include "match_fixtures.hpp"
#include "oracles.hpp"

using namespace hers;
using Clock = std::chrono::steady_clock;

namespace {

int g_failures = 0;

void report(int criterion, bool pass, const std::string& detail) {
    std::printf("[%s] criterion %d: %s\n", pass ? "PASS" : "FAIL", criterion, detail.c_str());
    std::fflush(stdout);
    if (!pass) ++g_failures;
}

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct ProductionSetup {
    he::Context ctx{he::HeParams::standard()};
    he::KeySet keys = ctx.keygen(20260809);
};

ProductionSetup& production() {
    static ProductionSetup s;
    return s;
}

// --- criterion 1: PT/CT decision equivalence at scale ------------------------

void criterion_1() {
    const auto t0 = Clock::now();
    auto& p = production();

    eval::PopulationSpec spec;
    spec.n_identities = 100;
    spec.dim = 128;
    spec.seed = 808;
    const auto train_pop = eval::generate_population({.n_identities = 100,
                                                      .min_records = 2,
                                                      .max_records = 7,
                                                      .dim = 128,
                                                      .bm_noise = spec.bm_noise,
                                                      .bg_noise = spec.bg_noise,
                                                      .separation = spec.separation,
                                                      .seed = 809});
    const auto eval_pop = eval::generate_population(spec);
    const auto training = match::training_from_population(train_pop);

    Prng policy_prng(1);
    const auto policy_score = match::build_policy(p.ctx, p.keys, policy_prng,
                                                  match::FusionMode::score_level, training, 128, 128);
    const auto policy_feature = match::build_policy(
        p.ctx, p.keys, policy_prng, match::FusionMode::feature_level, training, 128, 128);

    // Enroll the 100-identity gallery once; both modes share the stores.
    match::TriStores stores = match::TriStores::in_memory(p.ctx.digest());
    Prng enroll_prng(2);
    for (const auto* g : eval_pop.gallery()) {
        match::enroll(p.ctx, p.keys, enroll_prng, policy_score, g->identity_id, g->bm, g->bg,
                      stores);
    }
    const auto plain_records = fixtures::plain_gallery(eval_pop);

    std::vector<match::QueryTemplates> queries;
    for (const auto* probe : eval_pop.probes()) {
        queries.push_back({probe->bm, probe->bg});
        if (queries.size() == 200) break;
    }

    const int threads = std::max(1u, std::thread::hardware_concurrency());
    bool all_equal = true;
    std::size_t pairs_checked = 0, margin_pairs = 0, mismatches = 0;
    for (const match::MatchPolicy* policy : {&policy_score, &policy_feature}) {
        const auto batch = match::batch_match(p.ctx, p.keys, *policy, queries, stores, threads);
        for (std::size_t q = 0; q < queries.size(); ++q) {
            const auto mirror =
                match::verify_1n_plain(*policy, queries[q].bm, queries[q].bg, plain_records);
            for (std::size_t j = 0; j < mirror.size(); ++j) {
                if (std::fabs(mirror[j].distance_score - policy->threshold) < 0x1p-5) {
                    ++margin_pairs;
                    continue;
                }
                ++pairs_checked;
                if (batch.decisions[q][j].accept != mirror[j].accept) {
                    all_equal = false;
                    ++mismatches;
                }
            }
        }
    }
    const double elapsed = seconds_since(t0);
    const bool in_budget = elapsed <= 30.0 * 60.0;
    char buf[256];
    std::snprintf(buf, sizeof(buf),
                  "PT/CT equivalence: %zu/%zu non-margin pairs equal (%zu margin pairs excluded), "
                  "both fusion modes, 100x200 at ring 2^13, %.1f s (budget 1800 s)",
                  pairs_checked - mismatches, pairs_checked, margin_pairs, elapsed);
    report(1, all_equal && in_budget && pairs_checked > 0, buf);
}

// --- criterion 2: sign approximation quality ---------------------------------

void criterion_2() {
    const auto config = sign::CompareConfig::minimal_for(0x1p-5, 0x1p-7);

    double worst_plain = 0.0;
    for (int i = 0; i <= 10000; ++i) {
        const double x = 0x1p-5 + (1.0 - 0x1p-5) * static_cast<double>(i) / 10000.0;
        worst_plain = std::max(worst_plain, std::fabs(sign::sign_iterate_plain(x, config) - 1.0));
        worst_plain = std::max(worst_plain, std::fabs(sign::sign_iterate_plain(-x, config) + 1.0));
    }
    const bool plain_ok = worst_plain <= 0x1p-7;

    // Full-accuracy encrypted run needs 2 levels per iteration; use a deep
    // chain at the same ring degree.
    he::Context deep_ctx(he::HeParams::make(8192, 2 * config.iterations()));
    const auto deep_keys = deep_ctx.keygen(7);
    Prng prng(99);
    std::vector<double> points(1000);
    for (auto& v : points) {
        v = prng.next_real(0x1p-5, 1.0);
        if (prng.next_below(2)) v = -v;
    }
    Prng eprng(100);
    const auto ct = deep_ctx.encrypt(points, deep_keys, eprng);
    const auto out = deep_ctx.decrypt(sign::sign_iterate_encrypted(ct, config, deep_keys, deep_ctx),
                                      deep_keys);
    double worst_enc = 0.0;
    for (std::size_t i = 0; i < points.size(); ++i) {
        worst_enc =
            std::max(worst_enc, std::fabs(out[i] - sign::sign_iterate_plain(points[i], config)));
    }
    const bool enc_ok = worst_enc < 0x1p-10;

    char buf[256];
    std::snprintf(buf, sizeof(buf),
                  "sign approximation: %d oracle iterations, grid error %.3g <= 2^-7 (%s); "
                  "encrypted-vs-plain %.3g < 2^-10 on 1000 points (%s)",
                  config.iterations(), worst_plain, plain_ok ? "ok" : "violated", worst_enc,
                  enc_ok ? "ok" : "violated");
    report(2, plain_ok && enc_ok, buf);
}

// --- criterion 3: HE core precision -------------------------------------------

void criterion_3() {
    auto& p = production();
    Prng prng(31);

    double worst_roundtrip = 0.0;
    for (int trial = 0; trial < 1000; ++trial) {
        std::vector<double> v(p.ctx.slot_count());
        for (auto& x : v) x = prng.next_real(-1.0, 1.0);
        const auto ct = p.ctx.encrypt(v, p.keys, prng);
        const auto back = p.ctx.decrypt(ct, p.keys);
        worst_roundtrip = std::max(worst_roundtrip, oracles::max_abs_diff(back, v));
    }
    const bool roundtrip_ok = worst_roundtrip < 0x1p-20;

    double worst_mul = 0.0;
    for (int trial = 0; trial < 30; ++trial) {
        std::vector<double> a(256), b(256), expect(256);
        for (int i = 0; i < 256; ++i) {
            a[i] = prng.next_real(-1.0, 1.0);
            b[i] = prng.next_real(-1.0, 1.0);
            expect[i] = a[i] * b[i];
        }
        const auto prod = p.ctx.mul_relin_rescale(p.ctx.encrypt(a, p.keys, prng),
                                                  p.ctx.encrypt(b, p.keys, prng), p.keys);
        worst_mul = std::max(worst_mul, oracles::max_abs_diff(p.ctx.decrypt(prod, p.keys), expect));
    }
    const bool mul_ok = worst_mul < 0x1p-15;

    // Depth exhaustion must raise, not corrupt.
    bool depth_ok = false;
    {
        std::vector<double> v(64);
        for (auto& x : v) x = prng.next_real(-1.0, 1.0);
        auto ct = p.ctx.encrypt(v, p.keys, prng);
        auto expect = v;
        bool chain_ok = true;
        for (int level = p.ctx.max_level(); level >= 1; --level) {
            ct = p.ctx.mul_relin_rescale(ct, ct, p.keys);
            for (auto& x : expect) x = x * x;
            const double bound =
                std::ldexp(static_cast<double>(p.ctx.max_level() - level + 1), -15);
            chain_ok = chain_ok &&
                       oracles::max_abs_diff(p.ctx.decrypt(ct, p.keys), expect) < bound;
        }
        try {
            ct = p.ctx.mul_relin_rescale(ct, ct, p.keys);
        } catch (const DepthError&) {
            depth_ok = chain_ok;
        }
    }

    char buf[256];
    std::snprintf(buf, sizeof(buf),
                  "HE core precision: roundtrip %.3g < 2^-20 (%s), per-multiply %.3g < 2^-15 "
                  "(%s), depth exhaustion raises after a clean squaring chain (%s)",
                  worst_roundtrip, roundtrip_ok ? "ok" : "violated", worst_mul,
                  mul_ok ? "ok" : "violated", depth_ok ? "ok" : "violated");
    report(3, roundtrip_ok && mul_ok && depth_ok, buf);
}

// --- criterion 4: concatenation identity ---------------------------------------

void criterion_4() {
    auto& p = production();
    Prng prng(41);

    bool exact = true;
    for (int trial = 0; trial < 1000; ++trial) {
        std::vector<double> qa(128), ga(128), qb(128), gb(128);
        for (auto& x : qa) x = prng.next_real(0.0, 1.0);
        for (auto& x : ga) x = prng.next_real(0.0, 1.0);
        for (auto& x : qb) x = prng.next_real(0.0, 1.0);
        for (auto& x : gb) x = prng.next_real(0.0, 1.0);
        std::vector<double> qf = qa, gf = ga;
        qf.insert(qf.end(), qb.begin(), qb.end());
        gf.insert(gf.end(), gb.begin(), gb.end());
        exact = exact && fusion::squared_distance(qf, gf) ==
                             fusion::squared_distance(qa, ga) + fusion::squared_distance(qb, gb);
    }

    // Encrypted: pack 16 fused pairs per ciphertext inks 256-slot lanes.
    double worst = 0.0;
    const std::uint32_t block = 256;
    const std::uint32_t lanes = p.ctx.slot_count() / block;
    std::size_t done = 0;
    Prng data(42);
    while (done < 1000) {
        std::vector<double> q_packed(p.ctx.slot_count(), 0.0), g_packed(p.ctx.slot_count(), 0.0);
        std::vector<double> expect(lanes, 0.0);
        const std::size_t here = std::min<std::size_t>(lanes, 1000 - done);
        for (std::size_t lane = 0; lane < here; ++lane) {
            std::vector<double> q(block), g(block);
            for (auto& x : q) x = data.next_real(0.0, 1.0);
            for (auto& x : g) x = data.next_real(0.0, 1.0);
            for (std::uint32_t i = 0; i < block; ++i) {
                q_packed[lane * block + i] = q[i];
                g_packed[lane * block + i] = g[i];
            }
            expect[lane] = fusion::squared_distance(q, g);
        }
        const auto ct_q = p.ctx.encrypt(q_packed, p.keys, data);
        const auto ct_g = p.ctx.encrypt(g_packed, p.keys, data);
        const auto d =
            p.ctx.decrypt(fusion::squared_distance_encrypted(ct_q, ct_g, block, p.keys, p.ctx),
                          p.keys);
        for (std::size_t lane = 0; lane < here; ++lane) {
            worst = std::max(worst, std::fabs(d[lane * block] - expect[lane]));
        }
        done += here;
    }
    const bool enc_ok = worst < 0x1p-11;

    char buf[256];
    std::snprintf(buf, sizeof(buf),
                  "concatenation identity: exact in plaintext over 1000 pairs (%s); encrypted "
                  "fused distance error %.3g < 2^-11 over 1000 pairs (%s)",
                  exact ? "ok" : "violated", worst, enc_ok ? "ok" : "violated");
    report(4, exact && enc_ok, buf);
}

// --- criterion 5: fusion dominance ---------------------------------------------

void criterion_5() {
    eval::PolicyGrid grid;
    grid.run_encrypted = false;
    int dominated = 0;
    const int seeds = 20;
    for (int s = 0; s < seeds; ++s) {
        eval::PopulationSpec spec;  // default: 100 identities, dim 128
        spec.seed = 4200 + static_cast<std::uint64_t>(s);
        const auto result = eval::run_experiment(spec, grid);
        const double unimodal_best = std::min(result.arms.at(eval::Arm::biometric_only).plain.eer,
                                              result.arms.at(eval::Arm::biographic_only).plain.eer);
        const bool score_ok = result.arms.at(eval::Arm::score_fusion).plain.eer < unimodal_best;
        const bool feature_ok = result.arms.at(eval::Arm::feature_fusion).plain.eer < unimodal_best;
        if (score_ok && feature_ok) ++dominated;
    }
    char buf[192];
    std::snprintf(buf, sizeof(buf),
                  "fusion dominance: fusion EER below both unimodal EERs in %d/%d seeds (need 18)",
                  dominated, seeds);
    report(5, dominated >= 18, buf);
}

// --- criterion 6: parallel scaling ----------------------------------------------

void criterion_6() {
    auto& p = production();

    eval::PopulationSpec spec;
    spec.n_identities = 64;
    spec.dim = 128;
    spec.min_records = 2;
    spec.max_records = 3;
    spec.seed = 606;
    auto train_spec = spec;
    train_spec.seed = 607;
    const auto train_pop = eval::generate_population(train_spec);
    const auto eval_pop = eval::generate_population(spec);
    const auto training = match::training_from_population(train_pop);
    Prng prng(3);
    const auto policy = match::build_policy(p.ctx, p.keys, prng, match::FusionMode::score_level,
                                            training, 128, 128);
    match::TriStores stores = match::TriStores::in_memory(p.ctx.digest());
    for (const auto* g : eval_pop.gallery()) {
        match::enroll(p.ctx, p.keys, prng, policy, g->identity_id, g->bm, g->bg, stores);
    }
    std::vector<match::QueryTemplates> queries;
    for (const auto* probe : eval_pop.probes()) {
        queries.push_back({probe->bm, probe->bg});
        if (queries.size() == 64) break;
    }

    const unsigned cores = std::max(1u, std::thread::hardware_concurrency());
    std::vector<int> counts = {1, 2, 4, 8};
    std::vector<match::BatchResult> runs;
    for (int t : counts) {
        runs.push_back(match::batch_match(p.ctx, p.keys, policy, queries, stores, t));
    }

    bool identical = true;
    for (std::size_t r = 1; r < runs.size(); ++r) {
        for (std::size_t q = 0; q < queries.size(); ++q) {
            for (std::size_t j = 0; j < runs[r].decisions[q].size(); ++j) {
                identical = identical &&
                            runs[r].decisions[q][j].accept == runs[0].decisions[q][j].accept &&
                            runs[r].decisions[q][j].comp_output ==
                                runs[0].decisions[q][j].comp_output &&
                            runs[r].decisions[q][j].distance_score ==
                                runs[0].decisions[q][j].distance_score;
            }
        }
    }

    bool sublinear = true;
    for (std::size_t r = 0; r < runs.size(); ++r) {
        const double speedup = runs[0].report.elapsed_ms / runs[r].report.elapsed_ms;
        sublinear = sublinear && speedup <= static_cast<double>(counts[r]) * 1.02;
    }

    bool nonincreasing = true;
    for (std::size_t r = 1; r < runs.size(); ++r) {
        if (static_cast<unsigned>(counts[r]) > cores) break;
        nonincreasing =
            nonincreasing && runs[r].report.elapsed_ms <= runs[r - 1].report.elapsed_ms * 1.10;
    }

    const double speedup8 = runs[0].report.elapsed_ms / runs[3].report.elapsed_ms;
    bool speedup_ok = true;
    std::string hw_note;
    if (cores >= 8) {
        speedup_ok = speedup8 >= 3.0;
        hw_note = "";
    } else {
        char note[96];
        std::snprintf(note, sizeof(note),
                      "; >=3.0-at-8-threads clause requires an 8-core host (this host: %u)", cores);
        hw_note = note;
    }

    char buf[384];
    std::snprintf(buf, sizeof(buf),
                  "parallel scaling 64x64: decisions identical across {1,2,4,8} threads (%s); "
                  "speedup <= t (%s); elapsed nonincreasing to core count (%s); speedup(8)=%.2f%s",
                  identical ? "ok" : "violated", sublinear ? "ok" : "violated",
                  nonincreasing ? "ok" : "violated", speedup8, hw_note.c_str());
    report(6, identical && sublinear && nonincreasing && speedup_ok, buf);
    std::printf("        %s\n", match::TimingReport::csv_header());
    for (const auto& r : runs) std::printf("        %s\n", r.report.csv_row().c_str());
}

// --- criterion 7: metric oracle equivalence ---------------------------------------

void criterion_7() {
    Prng prng(71);
    double worst_eer = 0.0, worst_tpr = 0.0;
    bool cmc_ok = true;
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> genuine, impostor;
        const int n = 8 + static_cast<int>(prng.next_below(40));
        for (int i = 0; i < n; ++i) genuine.push_back(prng.next_real(0.0, 0.9));
        for (int i = 0; i < 2 * n + 100; ++i) impostor.push_back(prng.next_real(0.3, 1.4));

        worst_eer = std::max(worst_eer, std::fabs(eval::eer(genuine, impostor).rate -
                                                  oracles::eer_grid_oracle(genuine, impostor)));
        worst_tpr = std::max(worst_tpr, std::fabs(eval::tpr_at_fmr(genuine, impostor, 1e-2) -
                                                  oracles::tpr_oracle(genuine, impostor, 1e-2)));

        // CMC vs a brute-force recount on a random rank problem.
        const std::vector<std::string> ids = {"a", "b", "c", "d", "e", "f"};
        std::vector<std::vector<std::string>> lists;
        std::vector<std::string> truths;
        for (int q = 0; q < 25; ++q) {
            auto perm = ids;
            for (std::size_t i = perm.size(); i > 1; --i) {
                std::swap(perm[i - 1], perm[prng.next_below(i)]);
            }
            lists.push_back(perm);
            truths.push_back(ids[prng.next_below(ids.size())]);
        }
        const auto curve = eval::cmc_curve(lists, truths, ids.size());
        for (std::size_t r = 1; r <= ids.size(); ++r) {
            double hits = 0;
            for (std::size_t q = 0; q < lists.size(); ++q) {
                for (std::size_t j = 0; j < r; ++j) {
                    if (lists[q][j] == truths[q]) {
                        hits += 1.0;
                        break;
                    }
                }
            }
            cmc_ok = cmc_ok && std::fabs(curve[r - 1] - hits / 25.0) < 1e-12;
        }
    }
    char buf[224];
    std::snprintf(buf, sizeof(buf),
                  "metric oracles: EER gap %.3g, TPR@FMR gap %.3g (both < 1e-4), CMC recount "
                  "exact (%s), 50 random score sets",
                  worst_eer, worst_tpr, cmc_ok ? "ok" : "violated");
    report(7, worst_eer < 1e-4 && worst_tpr < 1e-4 && cmc_ok, buf);
}

}  // namespace

int main(int argc, char** argv) {
    int only = 0;
    if (argc == 3 && std::strcmp(argv[1], "--only") == 0) only = std::atoi(argv[2]);

    const auto t0 = Clock::now();
    using Fn = void (*)();
    const Fn criteria[] = {criterion_1, criterion_2, criterion_3, criterion_4,
                           criterion_5, criterion_6, criterion_7};
    for (int i = 0; i < 7; ++i) {
        if (only != 0 && only != i + 1) continue;
        criteria[i]();
    }
    std::printf("acceptance: %s (%d failure%s, %.1f s total)\n", g_failures == 0 ? "PASS" : "FAIL",
                g_failures, g_failures == 1 ? "" : "s", seconds_since(t0));
    return g_failures == 0 ? 0 : 1;
}
