// Copyright 2026 The HERS Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#include "hers/policy.hpp"

#include <cmath>
#include <fstream>
#include <numeric>

#include "hers/errors.hpp"
#include "hers/metrics.hpp"
#include "hers/population.hpp"
#include "hers/serialize.hpp"
#include "nlohmann/json.hpp"

namespace hers::match {

const char* fusion_mode_name(FusionMode m) {
    return m == FusionMode::score_level ? "score_level" : "feature_level";
}

FusionMode fusion_mode_from_name(const std::string& s) {
    if (s == "score_level") return FusionMode::score_level;
    if (s == "feature_level") return FusionMode::feature_level;
    throw ArgumentError("unknown fusion mode: " + s);
}

std::vector<double> MatchPolicy::normalize_components(std::span<const double> raw,
                                                      fusion::Modality modality) const {
    const fusion::NormStats& stats =
        modality == fusion::Modality::biometric ? bm_component : bg_component;
    std::vector<double> out(raw.size());
    for (std::size_t i = 0; i < raw.size(); ++i) out[i] = fusion::minmax_apply(raw[i], stats);
    return out;
}

double MatchPolicy::normalize_distance(double d, fusion::Modality modality) const {
    const fusion::NormStats& stats = modality == fusion::Modality::biometric ? bm_distance
                                     : modality == fusion::Modality::biographic ? bg_distance
                                                                                : fused_distance;
    return (d - stats.min) / (stats.max - stats.min);
}

namespace {

double mean_of(const std::vector<double>& v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

}  // namespace

MatchPolicy build_policy(const he::Context& ctx, const he::KeySet& keys, Prng& prng,
                         FusionMode mode, const PolicyTraining& training,
                         std::uint32_t bm_dim, std::uint32_t bg_dim, double margin) {
    if (training.bm_genuine.empty() || training.bm_impostor.empty() ||
        training.bg_genuine.empty() || training.bg_impostor.empty() ||
        training.fused_genuine.empty() || training.fused_impostor.empty()) {
        throw ArgumentError("policy training needs genuine and impostor scores for every modality");
    }

    MatchPolicy policy;
    policy.fusion_mode = mode;
    policy.bm_dim = bm_dim;
    policy.bg_dim = bg_dim;
    policy.params_digest = ctx.digest();

    policy.bm_component = fusion::minmax_fit(training.bm_components, fusion::Modality::biometric);
    policy.bg_component = fusion::minmax_fit(training.bg_components, fusion::Modality::biographic);

    auto fit_distances = [](const std::vector<double>& genuine, const std::vector<double>& impostor,
                            fusion::Modality m) {
        std::vector<double> pooled;
        pooled.reserve(genuine.size() + impostor.size());
        pooled.insert(pooled.end(), genuine.begin(), genuine.end());
        pooled.insert(pooled.end(), impostor.begin(), impostor.end());
        return fusion::minmax_fit(pooled, m);
    };
    policy.bm_distance =
        fit_distances(training.bm_genuine, training.bm_impostor, fusion::Modality::biometric);
    policy.bg_distance =
        fit_distances(training.bg_genuine, training.bg_impostor, fusion::Modality::biographic);
    policy.fused_distance =
        fit_distances(training.fused_genuine, training.fused_impostor, fusion::Modality::fused);

    // Comparator: two levels per iteration after the distance square and the
    // normalization multiply.
    const int budget = (ctx.max_level() - 2) / 2;
    if (budget < 1) {
        throw DepthError("parameter chain too short for the matching circuit", 4, ctx.max_level());
    }
    policy.compare = sign::CompareConfig::with_iterations(margin, budget);

    // Normalized training scores for the chosen mode.
    std::vector<double> genuine, impostor;
    if (mode == FusionMode::score_level) {
        for (std::size_t i = 0; i < training.bm_genuine.size() && i < training.bg_genuine.size();
             ++i) {
            genuine.push_back(
                0.5 * (policy.normalize_distance(training.bm_genuine[i], fusion::Modality::biometric) +
                       policy.normalize_distance(training.bg_genuine[i], fusion::Modality::biographic)));
        }
        for (std::size_t i = 0; i < training.bm_impostor.size() && i < training.bg_impostor.size();
             ++i) {
            impostor.push_back(
                0.5 *
                (policy.normalize_distance(training.bm_impostor[i], fusion::Modality::biometric) +
                 policy.normalize_distance(training.bg_impostor[i], fusion::Modality::biographic)));
        }
    } else {
        for (double d : training.fused_genuine) {
            genuine.push_back(policy.normalize_distance(d, fusion::Modality::fused));
        }
        for (double d : training.fused_impostor) {
            impostor.push_back(policy.normalize_distance(d, fusion::Modality::fused));
        }
    }

    policy.threshold = eval::eer(genuine, impostor).threshold;
    policy.genuine_mean = mean_of(genuine);
    policy.impostor_mean = mean_of(impostor);
    if (std::fabs(policy.threshold - policy.genuine_mean) < margin ||
        std::fabs(policy.threshold - policy.impostor_mean) < margin) {
        throw ArgumentError(
            "policy threshold sits closer than one comparator margin to a score cluster mean; "
            "the synthetic population is not separable enough");
    }

    policy.threshold_ct = ctx.encrypt(
        ctx.encode_broadcast(policy.threshold, ctx.params().scale, ctx.max_level()), keys, prng);
    const auto check = ctx.decrypt(policy.threshold_ct, keys);
    if (std::fabs(check[0] - policy.threshold) > 0x1p-15) {
        throw Error("encrypted threshold failed its decryption check");
    }
    return policy;
}

PolicyTraining training_from_population(const eval::Population& population) {
    PolicyTraining t;
    for (const auto& rec : population.records) {
        t.bm_components.insert(t.bm_components.end(), rec.bm.begin(), rec.bm.end());
        t.bg_components.insert(t.bg_components.end(), rec.bg.begin(), rec.bg.end());
    }
    const auto bm_stats = fusion::minmax_fit(t.bm_components, fusion::Modality::biometric);
    const auto bg_stats = fusion::minmax_fit(t.bg_components, fusion::Modality::biographic);
    auto normalize = [](const std::vector<double>& raw, const fusion::NormStats& stats) {
        std::vector<double> out(raw.size());
        for (std::size_t i = 0; i < raw.size(); ++i) out[i] = fusion::minmax_apply(raw[i], stats);
        return out;
    };

    const auto gallery = population.gallery();
    const auto probes = population.probes();
    std::vector<std::vector<double>> g_bm, g_bg;
    g_bm.reserve(gallery.size());
    g_bg.reserve(gallery.size());
    for (const auto* g : gallery) {
        g_bm.push_back(normalize(g->bm, bm_stats));
        g_bg.push_back(normalize(g->bg, bg_stats));
    }
    for (const auto* p : probes) {
        const auto p_bm = normalize(p->bm, bm_stats);
        const auto p_bg = normalize(p->bg, bg_stats);
        for (std::size_t j = 0; j < gallery.size(); ++j) {
            const double d_bm = fusion::squared_distance(p_bm, g_bm[j]);
            const double d_bg = fusion::squared_distance(p_bg, g_bg[j]);
            const bool genuine = p->identity_id == gallery[j]->identity_id;
            (genuine ? t.bm_genuine : t.bm_impostor).push_back(d_bm);
            (genuine ? t.bg_genuine : t.bg_impostor).push_back(d_bg);
            (genuine ? t.fused_genuine : t.fused_impostor).push_back(d_bm + d_bg);
        }
    }
    return t;
}

namespace {

nlohmann::json stats_json(const fusion::NormStats& s) {
    return {{"modality", fusion::modality_name(s.modality)}, {"min", s.min}, {"max", s.max}};
}

fusion::NormStats stats_from_json(const nlohmann::json& j) {
    return fusion::NormStats{fusion::modality_from_name(j.at("modality").get<std::string>()),
                             j.at("min").get<double>(), j.at("max").get<double>()};
}

}  // namespace

void save_policy(const he::Context& ctx, const MatchPolicy& policy,
                 const std::filesystem::path& path) {
    nlohmann::json j;
    j["fusion_mode"] = fusion_mode_name(policy.fusion_mode);
    j["score_variant"] = policy.score_variant == ScoreVariant::normalize_distances
                             ? "normalize_distances"
                             : "normalize_components_only";
    j["bm_dim"] = policy.bm_dim;
    j["bg_dim"] = policy.bg_dim;
    j["threshold"] = policy.threshold;
    j["norm_stats"] = {{"bm_component", stats_json(policy.bm_component)},
                       {"bg_component", stats_json(policy.bg_component)},
                       {"bm_distance", stats_json(policy.bm_distance)},
                       {"bg_distance", stats_json(policy.bg_distance)},
                       {"fused_distance", stats_json(policy.fused_distance)}};
    j["compare"] = {{"margin", policy.compare.margin()},
                    {"target_error", policy.compare.target_error()},
                    {"iterations", policy.compare.iterations()}};
    j["genuine_mean"] = policy.genuine_mean;
    j["impostor_mean"] = policy.impostor_mean;
    j["params_digest"] = he::hex_encode(policy.params_digest.data(), policy.params_digest.size());
    j["threshold_ct"] = he::base64_encode(he::serialize_ciphertext(ctx, policy.threshold_ct));

    std::ofstream out(path);
    if (!out) throw IoError("cannot write policy: " + path.string());
    out << j.dump(2) << "\n";
}

MatchPolicy load_policy(const he::Context& ctx, const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read policy: " + path.string());
    nlohmann::json j;
    in >> j;

    MatchPolicy policy;
    policy.fusion_mode = fusion_mode_from_name(j.at("fusion_mode").get<std::string>());
    policy.score_variant = j.at("score_variant").get<std::string>() == "normalize_components_only"
                               ? ScoreVariant::normalize_components_only
                               : ScoreVariant::normalize_distances;
    policy.bm_dim = j.at("bm_dim").get<std::uint32_t>();
    policy.bg_dim = j.at("bg_dim").get<std::uint32_t>();
    policy.threshold = j.at("threshold").get<double>();
    const auto& stats = j.at("norm_stats");
    policy.bm_component = stats_from_json(stats.at("bm_component"));
    policy.bg_component = stats_from_json(stats.at("bg_component"));
    policy.bm_distance = stats_from_json(stats.at("bm_distance"));
    policy.bg_distance = stats_from_json(stats.at("bg_distance"));
    policy.fused_distance = stats_from_json(stats.at("fused_distance"));
    const auto& cmp = j.at("compare");
    policy.compare = sign::CompareConfig::make(cmp.at("margin").get<double>(),
                                               cmp.at("target_error").get<double>(),
                                               cmp.at("iterations").get<int>());
    policy.genuine_mean = j.at("genuine_mean").get<double>();
    policy.impostor_mean = j.at("impostor_mean").get<double>();
    const std::string digest_hex = j.at("params_digest").get<std::string>();
    if (digest_hex != ctx.params().digest_hex()) {
        throw SerializationError("policy params digest does not match the context");
    }
    policy.params_digest = ctx.digest();
    policy.threshold_ct =
        he::deserialize_ciphertext(ctx, he::base64_decode(j.at("threshold_ct").get<std::string>()));
    return policy;
}

}  // namespace hers::match
