// Copyright 2026 The HERS Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#ifndef HERS_POPULATION_HPP
#define HERS_POPULATION_HPP

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace hers::eval {

// Shape of the seeded synthetic population that stands in for a real
// enrollment corpus: identities are centroids on a scaled hypersphere, each
// record a Gaussian perturbation of its identity's centroids. Biographic
// noise defaults higher than biometric so the unimodal arms order the same
// way real modalities tend to.
struct PopulationSpec {
    std::size_t n_identities = 100;
    int min_records = 2;
    int max_records = 7;
    std::size_t dim = 128;
    double bm_noise = 0.09;
    double bg_noise = 0.11;
    double separation = 1.0;  // mean centroid-to-centroid distance
    std::uint64_t seed = 1;

    void validate() const;  // noise > 0, separation > 4 * noise, records range sane
};

struct TemplateRecord {
    std::string identity_id;
    std::string record_id;
    std::vector<double> bm;
    std::vector<double> bg;
};

struct Population {
    PopulationSpec spec;
    std::vector<TemplateRecord> records;  // grouped by identity, generation order

    std::vector<std::string> identity_ids() const;
    // First record of each identity (the enrollment set).
    std::vector<const TemplateRecord*> gallery() const;
    // All remaining records (the probe set).
    std::vector<const TemplateRecord*> probes() const;
};

Population generate_population(const PopulationSpec& spec);

// CSV schema: identity_id,record_id,modality,v0,...,v{dim-1}; one row per
// modality per record.
void export_population_csv(const Population& pop, const std::filesystem::path& path);
Population import_population_csv(const std::filesystem::path& path);

}  // namespace hers::eval

#endif  // HERS_POPULATION_HPP
