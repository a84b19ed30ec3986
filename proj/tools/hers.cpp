// Copyright 2026 The HERS Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0
//
// hers - encrypted multimodal entity resolution workbench.
//
// Subcommands cover the full operator surface: key generation, synthetic
// population management, policy fitting, enrollment, 1:N verification,
// identification, thread-scaling benchmarks, and the evaluation harness.
// Machine-readable JSON goes to stdout, human summaries to stderr.

#include <cmath>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "hers/errors.hpp"
#include "hers/experiment.hpp"
#include "hers/matcher.hpp"
#include "hers/serialize.hpp"
#include "hers/text_embed.hpp"
#include "nlohmann/json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace hers;

namespace {

constexpr int kSchemaVersion = 1;
constexpr const char* kVersion = "1.0.0";

// Stable exit codes, also listed in --help.
enum ExitCode {
    kOk = 0,
    kUsage = 2,
    kConflict = 3,
    kDepth = 4,
    kKey = 5,
    kStore = 6,
    kDomain = 7,
    kResolution = 8,
    kIo = 9,
    kInternal = 10,
};

const char* kExitCodeHelp =
    "Exit codes:\n"
    "  0   command ran (decision content is in the JSON output only)\n"
    "  2   usage or parameter error\n"
    "  3   enrollment conflict (duplicate id)\n"
    "  4   multiplicative depth exhausted\n"
    "  5   missing key material\n"
    "  6   store/params mismatch or corrupt serialized data\n"
    "  7   argument or domain error\n"
    "  8   metric resolution error (too few impostor scores)\n"
    "  9   file I/O failure\n"
    "  10  internal error\n";

void emit(const json& j) { std::cout << j.dump(2) << std::endl; }

void human(const std::string& msg) { std::cerr << msg << std::endl; }

std::vector<double> read_vector_file(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read vector file: " + path.string());
    std::vector<double> values;
    std::string token;
    while (in) {
        int c = in.peek();
        if (c == EOF) break;
        if (c == ',' || std::isspace(c)) {
            in.get();
            continue;
        }
        double v = 0;
        if (!(in >> v)) break;
        values.push_back(v);
        // consume a trailing comma if present
        while (in.peek() == ',' || in.peek() == ' ') in.get();
    }
    if (values.empty()) throw ArgumentError("vector file holds no numbers: " + path.string());
    return values;
}

// Biographic record files are ordered `attribute=value` lines; blank lines
// and lines starting with '#' are ignored.
fusion::BiographicRecord read_record_file(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read record file: " + path.string());
    fusion::BiographicRecord rec;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ArgumentError("record line without '=': " + line);
        }
        rec.attributes.emplace_back(line.substr(0, eq), line.substr(eq + 1));
    }
    return rec;
}

// key=value workspace config; recognized keys become flag defaults.
std::map<std::string, std::string> read_config(const fs::path& path) {
    std::map<std::string, std::string> kv;
    std::ifstream in(path);
    if (!in) throw IoError("cannot read config: " + path.string());
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        kv[line.substr(0, eq)] = line.substr(eq + 1);
    }
    return kv;
}

he::HeParams params_from_name(const std::string& name) {
    if (name == "default") return he::HeParams::standard();
    if (name == "test") return he::HeParams::make(4096, 8);
    if (name.rfind("deep:", 0) == 0) {
        return he::HeParams::make(8192, std::stoi(name.substr(5)));
    }
    if (name.rfind("ring:", 0) == 0) {
        // ring:<degree>:<levels>
        const auto rest = name.substr(5);
        const auto colon = rest.find(':');
        if (colon == std::string::npos) throw ArgumentError("expected ring:<degree>:<levels>");
        return he::HeParams::make(static_cast<std::uint32_t>(std::stoul(rest.substr(0, colon))),
                                  std::stoi(rest.substr(colon + 1)));
    }
    throw ArgumentError("unknown params selection: " + name +
                        " (use default, test, deep:<levels>, ring:<degree>:<levels>)");
}

struct Workspace {
    he::Context ctx;
    he::KeySet keys;
};

Workspace load_workspace(const fs::path& keys_dir) {
    he::HeParams params = he::load_params_json(keys_dir / "params.json");
    he::Context ctx(std::move(params));
    he::KeySet keys = he::load_keyset(ctx, keys_dir);
    return Workspace{std::move(ctx), std::move(keys)};
}

std::vector<double> biographic_vector(const std::string& bg_file, const std::string& bg_record,
                                      std::uint32_t dim) {
    if (!bg_record.empty()) {
        const auto rec = read_record_file(bg_record);
        return fusion::hashed_ngram_embedding(fusion::tokenize_record(rec), dim);
    }
    return read_vector_file(bg_file);
}

json decision_json(const match::MatchDecision& d) {
    return json{{"entity_id", d.entity_id},
                {"distance_score", d.distance_score},
                {"comp_output", d.comp_output},
                {"accept", d.accept},
                {"margin_resolved", d.margin_resolved}};
}

json report_json(const eval::EvalReport& r) {
    json tpr = json::object();
    for (const auto& [target, rate] : r.tpr_at_fmr) {
        std::ostringstream key;
        key << target;
        if (std::isnan(rate)) {
            tpr[key.str()] = nullptr;
        } else {
            tpr[key.str()] = rate;
        }
    }
    json out{{"eer", r.eer}, {"eer_threshold", r.eer_threshold}, {"tpr_at_fmr", tpr}};
    if (!r.cmc.empty()) {
        out["rank1"] = r.cmc.front();
        out["cmc"] = r.cmc;
    }
    return out;
}

struct PopulationFlags {
    std::size_t identities = 100;
    std::size_t dim = 128;
    std::string records = "2:7";
    double bm_noise = 0.09;
    double bg_noise = 0.11;
    double separation = 1.0;
    std::uint64_t seed = 1;

    void attach(CLI::App* cmd) {
        cmd->add_option("--identities", identities, "number of identities");
        cmd->add_option("--dim", dim, "template dimension per modality");
        cmd->add_option("--records", records, "records per identity, MIN:MAX");
        cmd->add_option("--bm-noise", bm_noise, "biometric intra-class noise");
        cmd->add_option("--bg-noise", bg_noise, "biographic intra-class noise");
        cmd->add_option("--separation", separation, "mean centroid separation");
        cmd->add_option("--pop-seed", seed, "population seed");
    }

    eval::PopulationSpec spec() const {
        eval::PopulationSpec s;
        s.n_identities = identities;
        s.dim = dim;
        const auto colon = records.find(':');
        if (colon == std::string::npos) throw ArgumentError("--records expects MIN:MAX");
        s.min_records = std::stoi(records.substr(0, colon));
        s.max_records = std::stoi(records.substr(colon + 1));
        s.bm_noise = bm_noise;
        s.bg_noise = bg_noise;
        s.separation = separation;
        s.seed = seed;
        return s;
    }
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"hers - encrypted multimodal entity resolution workbench"};
    app.set_version_flag("--version", std::string("hers ") + kVersion + " (json schema " +
                                          std::to_string(kSchemaVersion) + ")");
    app.footer(kExitCodeHelp);
    app.require_subcommand(1);

    std::string config_path;
    app.add_option("--config", config_path, "key=value workspace config file");

    // Values shared across subcommands (config file can preseed them).
    std::string keys_dir = "keys";
    std::string store_dir = "stores";
    std::string policy_path = "policy.json";
    int threads = 1;
    std::uint64_t seed = 1;

    std::function<int()> action;

    // --- keygen ---------------------------------------------------------------
    auto* cmd_keygen = app.add_subcommand("keygen", "generate a key set and parameter file");
    {
        static std::string params_name = "default";
        static bool force = false;
        cmd_keygen->add_option("--params", params_name,
                               "default | test | deep:<levels> | ring:<degree>:<levels>");
        cmd_keygen->add_option("--seed", seed, "key generation seed");
        cmd_keygen->add_option("--out", keys_dir, "output directory");
        cmd_keygen->add_flag("--force", force, "overwrite existing key material");
        cmd_keygen->callback([&]() {
            action = [&]() {
                const fs::path dir = keys_dir;
                if (!force && fs::exists(dir / "keys.bin")) {
                    throw ConflictError("key material exists at " + dir.string() +
                                        "; pass --force to overwrite");
                }
                he::Context ctx(params_from_name(params_name));
                human("generating keys (ring degree " +
                      std::to_string(ctx.params().ring_degree) + ", " +
                      std::to_string(ctx.params().levels()) + " levels)...");
                const he::KeySet keys = ctx.keygen(seed);
                he::save_keyset(ctx, keys, dir);

                // Built-in roundtrip self-test.
                Prng prng(seed ^ 0x5e1f7e57);
                std::vector<double> probe(128);
                for (auto& v : probe) v = prng.next_real(-1.0, 1.0);
                const auto ct = ctx.encrypt(probe, keys, prng);
                const auto back = ctx.decrypt(ct, keys);
                double max_err = 0.0;
                for (std::size_t i = 0; i < probe.size(); ++i) {
                    max_err = std::max(max_err, std::fabs(back[i] - probe[i]));
                }
                if (max_err >= 0x1p-20) throw Error("keygen self-test exceeded the error bound");

                emit(json{{"schema_version", kSchemaVersion},
                          {"command", "keygen"},
                          {"params_digest", ctx.params().digest_hex()},
                          {"ring_degree", ctx.params().ring_degree},
                          {"levels", ctx.params().levels()},
                          {"self_test_max_slot_error", max_err},
                          {"out", dir.string()}});
                human("params digest " + ctx.params().digest_hex());
                human("self-test max slot error " + std::to_string(max_err));
                return kOk;
            };
        });
    }

    // --- gen-population ---------------------------------------------------------
    auto* cmd_pop = app.add_subcommand("gen-population", "write a synthetic population CSV");
    {
        static PopulationFlags flags;
        static std::string out = "population.csv";
        flags.attach(cmd_pop);
        cmd_pop->add_option("--out", out, "output CSV path");
        cmd_pop->callback([&]() {
            action = [&]() {
                const auto pop = eval::generate_population(flags.spec());
                eval::export_population_csv(pop, out);
                emit(json{{"schema_version", kSchemaVersion},
                          {"command", "gen-population"},
                          {"identities", pop.identity_ids().size()},
                          {"records", pop.records.size()},
                          {"out", out}});
                return kOk;
            };
        });
    }

    // --- fit-policy --------------------------------------------------------------
    auto* cmd_fit = app.add_subcommand("fit-policy", "fit a match policy from a training CSV");
    {
        static std::string population_csv;
        static std::string mode = "score";
        static double margin = 0x1p-5;
        cmd_fit->add_option("--population", population_csv, "training population CSV")->required();
        cmd_fit->add_option("--mode", mode, "score | feature");
        cmd_fit->add_option("--margin", margin, "comparator margin");
        cmd_fit->add_option("--keys", keys_dir, "key directory");
        cmd_fit->add_option("--out", policy_path, "output policy path");
        cmd_fit->callback([&]() {
            action = [&]() {
                Workspace ws = load_workspace(keys_dir);
                const auto pop = eval::import_population_csv(population_csv);
                const auto training = match::training_from_population(pop);
                Prng prng(fnv1a64("policy") ^ ws.ctx.params().digest()[0]);
                const auto fusion_mode = mode == "feature" ? match::FusionMode::feature_level
                                                           : match::FusionMode::score_level;
                const auto policy = match::build_policy(
                    ws.ctx, ws.keys, prng, fusion_mode, training,
                    static_cast<std::uint32_t>(pop.spec.dim),
                    static_cast<std::uint32_t>(pop.spec.dim), margin);
                match::save_policy(ws.ctx, policy, policy_path);
                emit(json{{"schema_version", kSchemaVersion},
                          {"command", "fit-policy"},
                          {"fusion_mode", match::fusion_mode_name(policy.fusion_mode)},
                          {"threshold", policy.threshold},
                          {"comparator_iterations", policy.compare.iterations()},
                          {"out", policy_path}});
                human("threshold " + std::to_string(policy.threshold) + " (" +
                      match::fusion_mode_name(policy.fusion_mode) + ")");
                return kOk;
            };
        });
    }

    // --- enroll -------------------------------------------------------------------
    auto* cmd_enroll = app.add_subcommand("enroll", "encrypt and store one entity's templates");
    {
        static std::string id, bm_file, bg_file, bg_record;
        static bool self_check = false;
        cmd_enroll->add_option("--id", id, "entity id")->required();
        cmd_enroll->add_option("--bm-file", bm_file, "biometric template CSV")->required();
        cmd_enroll->add_option("--bg-file", bg_file, "biographic template CSV");
        cmd_enroll->add_option("--bg-record", bg_record,
                               "biographic record file (attribute=value lines), embedded via the "
                               "hashed n-gram feature map");
        cmd_enroll->add_option("--keys", keys_dir, "key directory");
        cmd_enroll->add_option("--policy", policy_path, "policy file");
        cmd_enroll->add_option("--store-dir", store_dir, "store root directory");
        cmd_enroll->add_flag("--self-check", self_check, "decrypt after write and report error");
        cmd_enroll->callback([&]() {
            action = [&]() {
                if (bg_file.empty() == bg_record.empty()) {
                    throw ArgumentError("provide exactly one of --bg-file / --bg-record");
                }
                Workspace ws = load_workspace(keys_dir);
                const auto policy = match::load_policy(ws.ctx, policy_path);
                const auto bm = read_vector_file(bm_file);
                const auto bg = biographic_vector(bg_file, bg_record, policy.bg_dim);

                match::TriStores stores = fs::exists(fs::path(store_dir) / "biometric" /
                                                     "manifest.json")
                                              ? match::TriStores::open(store_dir)
                                              : match::TriStores::create(store_dir, ws.ctx.digest());
                Prng prng(fnv1a64(id) ^ seed);
                match::enroll(ws.ctx, ws.keys, prng, policy, id, bm, bg, stores);

                json out{{"schema_version", kSchemaVersion},
                         {"command", "enroll"},
                         {"id", id},
                         {"enrolled", stores.biometric.size()}};
                if (self_check) {
                    const auto nbm = policy.normalize_components(bm, fusion::Modality::biometric);
                    const auto got =
                        ws.ctx.decrypt(stores.biometric.load(ws.ctx, id), ws.keys);
                    double err = 0.0;
                    for (std::size_t i = 0; i < nbm.size(); ++i) {
                        err = std::max(err, std::fabs(got[i] - nbm[i]));
                    }
                    if (err >= 0x1p-19) throw Error("enroll self-check exceeded the error bound");
                    out["self_check_max_error"] = err;
                }
                emit(out);
                human("enrolled " + id + " (" + std::to_string(stores.biometric.size()) +
                      " total)");
                return kOk;
            };
        });
    }

    // --- list ----------------------------------------------------------------------
    auto* cmd_list = app.add_subcommand("list", "list enrolled ids per modality store");
    {
        cmd_list->add_option("--store-dir", store_dir, "store root directory");
        cmd_list->callback([&]() {
            action = [&]() {
                const auto stores = match::TriStores::open(store_dir);
                emit(json{{"schema_version", kSchemaVersion},
                          {"command", "list"},
                          {"biometric", stores.biometric.ids()},
                          {"biographic", stores.biographic.ids()},
                          {"fused", stores.fused.ids()}});
                return kOk;
            };
        });
    }

    // --- verify --------------------------------------------------------------------
    auto* cmd_verify = app.add_subcommand("verify", "1:N encrypted verification of one query");
    {
        static std::string bm_file, bg_file, bg_record;
        cmd_verify->add_option("--bm-file", bm_file, "query biometric CSV")->required();
        cmd_verify->add_option("--bg-file", bg_file, "query biographic CSV");
        cmd_verify->add_option("--bg-record", bg_record, "query biographic record file");
        cmd_verify->add_option("--keys", keys_dir, "key directory");
        cmd_verify->add_option("--policy", policy_path, "policy file");
        cmd_verify->add_option("--store-dir", store_dir, "store root directory");
        cmd_verify->add_option("--seed", seed, "query encryption seed");
        cmd_verify->callback([&]() {
            action = [&]() {
                if (bg_file.empty() == bg_record.empty()) {
                    throw ArgumentError("provide exactly one of --bg-file / --bg-record");
                }
                Workspace ws = load_workspace(keys_dir);
                const auto policy = match::load_policy(ws.ctx, policy_path);
                const bool have_store =
                    fs::exists(fs::path(store_dir) / "biometric" / "manifest.json");
                if (!have_store) human("store directory empty or missing; zero gallery");
                const auto stores = have_store ? match::TriStores::open(store_dir)
                                               : match::TriStores::in_memory(ws.ctx.digest());
                const auto bm = read_vector_file(bm_file);
                const auto bg = biographic_vector(bg_file, bg_record, policy.bg_dim);
                const auto decisions =
                    match::verify_1n(ws.ctx, ws.keys, policy, bm, bg, stores, seed);
                json arr = json::array();
                std::size_t accepts = 0;
                for (const auto& d : decisions) {
                    arr.push_back(decision_json(d));
                    accepts += d.accept ? 1 : 0;
                }
                emit(json{{"schema_version", kSchemaVersion},
                          {"command", "verify"},
                          {"fusion_mode", match::fusion_mode_name(policy.fusion_mode)},
                          {"gallery_size", decisions.size()},
                          {"accepts", accepts},
                          {"decisions", arr}});
                human(std::to_string(accepts) + "/" + std::to_string(decisions.size()) +
                      " gallery entries accepted");
                return kOk;
            };
        });
    }

    // --- identify --------------------------------------------------------------------
    auto* cmd_identify = app.add_subcommand("identify", "top-k encrypted identification");
    {
        static std::string bm_file, bg_file, bg_record;
        static std::size_t top_k = 5;
        cmd_identify->add_option("--bm-file", bm_file, "query biometric CSV")->required();
        cmd_identify->add_option("--bg-file", bg_file, "query biographic CSV");
        cmd_identify->add_option("--bg-record", bg_record, "query biographic record file");
        cmd_identify->add_option("--top", top_k, "rank depth");
        cmd_identify->add_option("--keys", keys_dir, "key directory");
        cmd_identify->add_option("--policy", policy_path, "policy file");
        cmd_identify->add_option("--store-dir", store_dir, "store root directory");
        cmd_identify->add_option("--seed", seed, "query encryption seed");
        cmd_identify->callback([&]() {
            action = [&]() {
                if (bg_file.empty() == bg_record.empty()) {
                    throw ArgumentError("provide exactly one of --bg-file / --bg-record");
                }
                Workspace ws = load_workspace(keys_dir);
                const auto policy = match::load_policy(ws.ctx, policy_path);
                const auto stores = match::TriStores::open(store_dir);
                const auto bm = read_vector_file(bm_file);
                const auto bg = biographic_vector(bg_file, bg_record, policy.bg_dim);
                const auto ranked =
                    match::identify(ws.ctx, ws.keys, policy, bm, bg, stores, top_k, seed);
                emit(json{{"schema_version", kSchemaVersion},
                          {"command", "identify"},
                          {"top", ranked}});
                human("rank-1: " + (ranked.empty() ? std::string("<none>") : ranked.front()));
                return kOk;
            };
        });
    }

    // --- bench --------------------------------------------------------------------
    auto* cmd_bench = app.add_subcommand("bench", "thread-scaling benchmark of batch matching");
    {
        static PopulationFlags flags;
        static std::string threads_list = "1,2,4,8";
        static std::string csv_out;
        static std::size_t queries = 16;
        static std::string params_name = "test";
        flags.identities = 16;
        flags.dim = 64;
        flags.attach(cmd_bench);
        cmd_bench->add_option("--threads", threads_list, "comma-separated thread counts");
        cmd_bench->add_option("--queries", queries, "number of queries");
        cmd_bench->add_option("--params", params_name, "parameter selection (self-contained run)");
        cmd_bench->add_option("--csv", csv_out, "also write the timing CSV to this path");
        cmd_bench->callback([&]() {
            action = [&]() {
                he::Context ctx(params_from_name(params_name));
                human("keygen...");
                const auto keys = ctx.keygen(seed);

                auto spec = flags.spec();
                auto eval_spec = spec;
                eval_spec.seed = spec.seed + 1;
                const auto train_pop = eval::generate_population(spec);
                const auto eval_pop = eval::generate_population(eval_spec);
                const auto training = match::training_from_population(train_pop);
                Prng prng(seed);
                const auto policy = match::build_policy(
                    ctx, keys, prng, match::FusionMode::score_level, training,
                    static_cast<std::uint32_t>(spec.dim), static_cast<std::uint32_t>(spec.dim));

                match::TriStores stores = match::TriStores::in_memory(ctx.digest());
                for (const auto* g : eval_pop.gallery()) {
                    match::enroll(ctx, keys, prng, policy, g->identity_id, g->bm, g->bg, stores);
                }
                std::vector<match::QueryTemplates> qs;
                for (const auto* p : eval_pop.probes()) {
                    qs.push_back({p->bm, p->bg});
                    if (qs.size() == queries) break;
                }
                while (qs.size() < queries) qs.push_back(qs[qs.size() % eval_pop.probes().size()]);

                std::vector<int> thread_counts;
                std::stringstream ss(threads_list);
                std::string tok;
                while (std::getline(ss, tok, ',')) thread_counts.push_back(std::stoi(tok));

                std::string csv = std::string(match::TimingReport::csv_header()) + "\n";
                json rows = json::array();
                std::optional<match::BatchResult> baseline;
                for (int t : thread_counts) {
                    human("matching with " + std::to_string(t) + " thread(s)...");
                    auto r = match::batch_match(ctx, keys, policy, qs, stores, t);
                    csv += r.report.csv_row() + "\n";
                    json row{{"threads", t},
                             {"elapsed_ms", r.report.elapsed_ms},
                             {"cpu_ms", r.report.cpu_ms},
                             {"pairs", r.report.pairs},
                             {"pairs_per_sec", r.report.pairs_per_sec}};
                    if (baseline) {
                        row["speedup"] = baseline->report.elapsed_ms / r.report.elapsed_ms;
                        // decisions must be independent of the thread count
                        bool equal = baseline->decisions.size() == r.decisions.size();
                        for (std::size_t q = 0; equal && q < r.decisions.size(); ++q) {
                            for (std::size_t j = 0; equal && j < r.decisions[q].size(); ++j) {
                                equal = r.decisions[q][j].accept ==
                                            baseline->decisions[q][j].accept &&
                                        r.decisions[q][j].comp_output ==
                                            baseline->decisions[q][j].comp_output;
                            }
                        }
                        row["decisions_match_baseline"] = equal;
                        if (!equal) throw Error("thread count changed the decision set");
                    } else {
                        baseline = std::move(r);
                    }
                    rows.push_back(row);
                }
                if (!csv_out.empty()) {
                    std::ofstream out(csv_out);
                    out << csv;
                }
                emit(json{{"schema_version", kSchemaVersion},
                          {"command", "bench"},
                          {"gallery", stores.biometric.size()},
                          {"queries", qs.size()},
                          {"csv", csv},
                          {"rows", rows}});
                return kOk;
            };
        });
    }

    // --- eval ----------------------------------------------------------------------
    auto* cmd_eval = app.add_subcommand("eval", "run the evaluation harness");
    {
        static PopulationFlags flags;
        static bool encrypted = false;
        static std::string params_name = "test";
        static std::string out_dir;
        flags.identities = 40;
        flags.dim = 32;
        flags.bm_noise = 0.11;
        flags.bg_noise = 0.13;
        flags.attach(cmd_eval);
        cmd_eval->add_flag("--encrypted", encrypted, "also run the encrypted arms");
        cmd_eval->add_option("--params", params_name, "parameter selection for encrypted arms");
        cmd_eval->add_option("--out-dir", out_dir, "write per-arm ROC/DET/CMC CSVs here");
        cmd_eval->callback([&]() {
            action = [&]() {
                eval::PolicyGrid grid;
                grid.run_encrypted = encrypted;
                std::optional<he::Context> ctx;
                std::optional<he::KeySet> keys;
                if (encrypted) {
                    ctx.emplace(params_from_name(params_name));
                    human("keygen...");
                    keys = ctx->keygen(seed);
                }
                human("running experiment arms...");
                const auto result = eval::run_experiment(flags.spec(), grid,
                                                         ctx ? &*ctx : nullptr,
                                                         keys ? &*keys : nullptr);
                json arms = json::object();
                for (const auto& [arm, ar] : result.arms) {
                    json a{{"plain", report_json(ar.plain)}, {"threshold", ar.threshold}};
                    if (ar.encrypted) {
                        a["encrypted"] = report_json(*ar.encrypted);
                        a["decisions_equal_outside_margin"] = ar.decisions_equal_outside_margin;
                        a["decisions_equal"] = ar.decisions_equal;
                        a["margin_pairs"] = ar.margin_pairs;
                        a["max_score_diff"] = ar.max_score_diff;
                    }
                    arms[eval::arm_name(arm)] = a;
                    if (!out_dir.empty()) {
                        ar.plain.write_csvs(out_dir, std::string(eval::arm_name(arm)) + "_plain");
                        if (ar.encrypted) {
                            ar.encrypted->write_csvs(out_dir,
                                                     std::string(eval::arm_name(arm)) + "_ct");
                        }
                    }
                }
                emit(json{{"schema_version", kSchemaVersion},
                          {"command", "eval"},
                          {"gallery", result.gallery_size},
                          {"probes", result.probe_count},
                          {"arms", arms}});
                for (const auto& [arm, ar] : result.arms) {
                    human(std::string(eval::arm_name(arm)) + ": EER " +
                          std::to_string(ar.plain.eer * 100.0) + "%");
                }
                return kOk;
            };
        });
    }

    try {
        // Workspace config preseeds the defaults; explicit flags still win
        // because they are parsed afterwards.
        for (int i = 1; i + 1 < argc; ++i) {
            if (std::string(argv[i]) == "--config") {
                const auto kv = read_config(argv[i + 1]);
                if (kv.count("keys_dir")) keys_dir = kv.at("keys_dir");
                if (kv.count("store_dir")) store_dir = kv.at("store_dir");
                if (kv.count("policy")) policy_path = kv.at("policy");
                if (kv.count("seed")) seed = std::stoull(kv.at("seed"));
                if (kv.count("threads")) threads = std::stoi(kv.at("threads"));
                break;
            }
        }
        (void)threads;
        app.parse(argc, argv);
        if (!action) {
            std::cerr << app.help() << std::endl;
            return kUsage;
        }
        return action();
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kUsage;
    } catch (const ConflictError& e) {
        human(std::string("conflict: ") + e.what());
        return kConflict;
    } catch (const DepthError& e) {
        human(std::string("depth error: ") + e.what());
        return kDepth;
    } catch (const KeyError& e) {
        human(std::string("key error: ") + e.what());
        return kKey;
    } catch (const StoreError& e) {
        human(std::string("store error: ") + e.what());
        return kStore;
    } catch (const SerializationError& e) {
        human(std::string("serialization error: ") + e.what());
        return kStore;
    } catch (const ParameterError& e) {
        human(std::string("parameter error: ") + e.what());
        return kUsage;
    } catch (const ResolutionError& e) {
        human(std::string("resolution error: ") + e.what());
        return kResolution;
    } catch (const DomainError& e) {
        human(std::string("domain error: ") + e.what());
        return kDomain;
    } catch (const ArgumentError& e) {
        human(std::string("argument error: ") + e.what());
        return kDomain;
    } catch (const IoError& e) {
        human(std::string("io error: ") + e.what());
        return kIo;
    } catch (const std::exception& e) {
        human(std::string("error: ") + e.what());
        return kInternal;
    }
}
