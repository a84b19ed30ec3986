// Copyright 2026 The HERS Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#ifndef HERS_GALLERY_HPP
#define HERS_GALLERY_HPP

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "hers/context.hpp"
#include "hers/fusion.hpp"

namespace hers::match {

// One modality's template database: entity id -> serialized ciphertext, all
// under a single params digest. Either purely in memory or bound to a
// directory (`manifest.json` + one `<id>.ct` file per entry).
class GalleryStore {
public:
    // In-memory store.
    GalleryStore(fusion::Modality modality, const std::array<std::uint8_t, 32>& params_digest);

    // Creates (or reuses an empty) directory-bound store.
    static GalleryStore create(const std::filesystem::path& dir, fusion::Modality modality,
                               const std::array<std::uint8_t, 32>& params_digest);
    static GalleryStore open(const std::filesystem::path& dir);

    fusion::Modality modality() const { return modality_; }
    const std::array<std::uint8_t, 32>& params_digest() const { return digest_; }
    const std::vector<std::string>& ids() const { return ids_; }  // sorted
    bool contains(const std::string& id) const;
    std::size_t size() const { return ids_.size(); }

    // ConflictError on duplicate id; StoreError on digest mismatch.
    void insert(const he::Context& ctx, const std::string& id, const he::CipherVector& ct);
    // Rollback helper for multi-store atomicity; silently ignores absent ids.
    void remove(const std::string& id);

    he::CipherVector load(const he::Context& ctx, const std::string& id) const;

private:
    void save_manifest() const;
    static void check_id(const std::string& id);

    fusion::Modality modality_;
    std::array<std::uint8_t, 32> digest_{};
    std::vector<std::string> ids_;
    std::optional<std::filesystem::path> dir_;
    std::map<std::string, std::vector<std::uint8_t>> blobs_;  // in-memory mode only
};

// The three modality databases of the enrollment pipeline. Enrollment keeps
// their id sets identical; see match::enroll.
struct TriStores {
    GalleryStore biometric;
    GalleryStore biographic;
    GalleryStore fused;

    static TriStores in_memory(const std::array<std::uint8_t, 32>& params_digest);
    static TriStores create(const std::filesystem::path& root,
                            const std::array<std::uint8_t, 32>& params_digest);
    static TriStores open(const std::filesystem::path& root);
};

}  // namespace hers::match

#endif  // HERS_GALLERY_HPP
