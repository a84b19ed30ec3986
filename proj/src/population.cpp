// Copyright 2026 The HERS Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#include "hers/population.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "hers/errors.hpp"
#include "hers/prng.hpp"

namespace hers::eval {

void PopulationSpec::validate() const {
    if (n_identities == 0) throw ArgumentError("population needs at least one identity");
    if (dim == 0) throw ArgumentError("template dimension must be positive");
    if (min_records < 1 || max_records < min_records) {
        throw ArgumentError("records-per-identity range is invalid");
    }
    if (!(bm_noise > 0.0) || !(bg_noise > 0.0)) throw ArgumentError("noise must be positive");
    const double max_noise = std::max(bm_noise, bg_noise);
    if (!(separation > 4.0 * max_noise)) {
        throw ArgumentError("inter-class separation must exceed 4x the intra-class noise");
    }
}

std::vector<std::string> Population::identity_ids() const {
    std::vector<std::string> ids;
    for (const auto& r : records) {
        if (ids.empty() || ids.back() != r.identity_id) ids.push_back(r.identity_id);
    }
    return ids;
}

std::vector<const TemplateRecord*> Population::gallery() const {
    std::vector<const TemplateRecord*> out;
    std::string last;
    for (const auto& r : records) {
        if (r.identity_id != last) {
            out.push_back(&r);
            last = r.identity_id;
        }
    }
    return out;
}

std::vector<const TemplateRecord*> Population::probes() const {
    std::vector<const TemplateRecord*> out;
    std::string last;
    for (const auto& r : records) {
        if (r.identity_id != last) {
            last = r.identity_id;  // skip the gallery record
        } else {
            out.push_back(&r);
        }
    }
    return out;
}

namespace {

// Uniform direction scaled so random centroid pairs sit `separation` apart
// on average: E||c_i - c_j||^2 = 2R^2 for independent directions, so
// R = separation / sqrt(2).
std::vector<double> centroid(Prng& prng, std::size_t dim, double separation) {
    std::vector<double> v(dim);
    double norm = 0.0;
    for (auto& x : v) {
        x = prng.next_gaussian();
        norm += x * x;
    }
    norm = std::sqrt(norm);
    const double radius = separation / std::sqrt(2.0);
    for (auto& x : v) x = x / norm * radius;
    return v;
}

}  // namespace

Population generate_population(const PopulationSpec& spec) {
    spec.validate();
    Population pop;
    pop.spec = spec;
    Prng root(spec.seed);
    for (std::size_t i = 0; i < spec.n_identities; ++i) {
        Prng id_prng = root.fork(i);
        char id_buf[32];
        std::snprintf(id_buf, sizeof(id_buf), "id%05zu", i);
        const auto c_bm = centroid(id_prng, spec.dim, spec.separation);
        const auto c_bg = centroid(id_prng, spec.dim, spec.separation);
        const int n_records =
            spec.min_records +
            static_cast<int>(id_prng.next_below(
                static_cast<std::uint64_t>(spec.max_records - spec.min_records + 1)));
        for (int r = 0; r < n_records; ++r) {
            TemplateRecord rec;
            rec.identity_id = id_buf;
            rec.record_id = std::string(id_buf) + "_r" + std::to_string(r);
            rec.bm.resize(spec.dim);
            rec.bg.resize(spec.dim);
            for (std::size_t k = 0; k < spec.dim; ++k) {
                rec.bm[k] = c_bm[k] + spec.bm_noise * id_prng.next_gaussian();
            }
            for (std::size_t k = 0; k < spec.dim; ++k) {
                rec.bg[k] = c_bg[k] + spec.bg_noise * id_prng.next_gaussian();
            }
            pop.records.push_back(std::move(rec));
        }
    }
    return pop;
}

void export_population_csv(const Population& pop, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out << "identity_id,record_id,modality";
    for (std::size_t i = 0; i < pop.spec.dim; ++i) out << ",v" << i;
    out << "\n";
    out.precision(17);
    for (const auto& rec : pop.records) {
        for (int m = 0; m < 2; ++m) {
            const auto& v = m == 0 ? rec.bm : rec.bg;
            out << rec.identity_id << "," << rec.record_id << ","
                << (m == 0 ? "biometric" : "biographic");
            for (double x : v) out << "," << x;
            out << "\n";
        }
    }
}

Population import_population_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw IoError("empty population CSV");
    std::size_t dim = 0;
    {
        std::stringstream header(line);
        std::string col;
        std::size_t cols = 0;
        while (std::getline(header, col, ',')) ++cols;
        if (cols < 4) throw SerializationError("population CSV header too short");
        dim = cols - 3;
    }
    Population pop;
    pop.spec.dim = dim;
    std::map<std::string, std::size_t> index;  // record_id -> position
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream row(line);
        std::string identity, record, modality;
        std::getline(row, identity, ',');
        std::getline(row, record, ',');
        std::getline(row, modality, ',');
        std::vector<double> values;
        values.reserve(dim);
        std::string cell;
        while (std::getline(row, cell, ',')) values.push_back(std::stod(cell));
        if (values.size() != dim) throw SerializationError("ragged population CSV row");
        auto it = index.find(record);
        if (it == index.end()) {
            TemplateRecord rec;
            rec.identity_id = identity;
            rec.record_id = record;
            pop.records.push_back(std::move(rec));
            it = index.emplace(record, pop.records.size() - 1).first;
        }
        auto& rec = pop.records[it->second];
        if (modality == "biometric") {
            rec.bm = std::move(values);
        } else if (modality == "biographic") {
            rec.bg = std::move(values);
        } else {
            throw SerializationError("unknown modality in population CSV: " + modality);
        }
    }
    pop.spec.n_identities = pop.identity_ids().size();
    for (const auto& rec : pop.records) {
        if (rec.bm.size() != dim || rec.bg.size() != dim) {
            throw SerializationError("record " + rec.record_id + " is missing a modality row");
        }
    }
    return pop;
}

}  // namespace hers::eval
