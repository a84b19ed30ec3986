// Copyright 2026 The HERS Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#include "hers/gallery.hpp"

#include <algorithm>
#include <fstream>

#include "hers/errors.hpp"
#include "hers/serialize.hpp"
#include "nlohmann/json.hpp"

namespace hers::match {

namespace fs = std::filesystem;

GalleryStore::GalleryStore(fusion::Modality modality,
                           const std::array<std::uint8_t, 32>& params_digest)
    : modality_(modality), digest_(params_digest) {}

GalleryStore GalleryStore::create(const fs::path& dir, fusion::Modality modality,
                                  const std::array<std::uint8_t, 32>& params_digest) {
    if (fs::exists(dir / "manifest.json")) {
        throw StoreError("store already exists: " + dir.string());
    }
    fs::create_directories(dir);
    GalleryStore store(modality, params_digest);
    store.dir_ = dir;
    store.save_manifest();
    return store;
}

GalleryStore GalleryStore::open(const fs::path& dir) {
    std::ifstream in(dir / "manifest.json");
    if (!in) throw StoreError("no manifest in " + dir.string());
    nlohmann::json j;
    in >> j;
    const std::string digest_hex = j.at("params_digest").get<std::string>();
    if (digest_hex.size() != 64) throw StoreError("bad params digest in manifest");
    GalleryStore store(fusion::modality_from_name(j.at("modality").get<std::string>()), {});
    for (int i = 0; i < 32; ++i) {
        store.digest_[i] =
            static_cast<std::uint8_t>(std::stoul(digest_hex.substr(2 * i, 2), nullptr, 16));
    }
    store.ids_ = j.at("ids").get<std::vector<std::string>>();
    std::sort(store.ids_.begin(), store.ids_.end());
    store.dir_ = dir;
    return store;
}

bool GalleryStore::contains(const std::string& id) const {
    return std::binary_search(ids_.begin(), ids_.end(), id);
}

void GalleryStore::check_id(const std::string& id) {
    if (id.empty() || id.size() > 128) throw ArgumentError("entity id must be 1..128 chars");
    for (char c : id) {
        const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
                        (c >= '0' && c <= '9') || c == '-' || c == '_' || c == '.';
        if (!ok) throw ArgumentError("entity id may only contain [A-Za-z0-9._-]: " + id);
    }
}

void GalleryStore::insert(const he::Context& ctx, const std::string& id,
                          const he::CipherVector& ct) {
    check_id(id);
    if (ctx.digest() != digest_) {
        throw StoreError("ciphertext params do not match the store digest");
    }
    if (contains(id)) throw ConflictError("id already enrolled: " + id);
    auto blob = he::serialize_ciphertext(ctx, ct);
    if (dir_) {
        const fs::path final_path = *dir_ / (id + ".ct");
        const fs::path tmp_path = *dir_ / (id + ".ct.tmp");
        he::write_file(tmp_path, blob);
        fs::rename(tmp_path, final_path);
    } else {
        blobs_.emplace(id, std::move(blob));
    }
    ids_.insert(std::upper_bound(ids_.begin(), ids_.end(), id), id);
    if (dir_) save_manifest();
}

void GalleryStore::remove(const std::string& id) {
    const auto it = std::lower_bound(ids_.begin(), ids_.end(), id);
    if (it == ids_.end() || *it != id) return;
    ids_.erase(it);
    if (dir_) {
        std::error_code ec;
        fs::remove(*dir_ / (id + ".ct"), ec);
        save_manifest();
    } else {
        blobs_.erase(id);
    }
}

he::CipherVector GalleryStore::load(const he::Context& ctx, const std::string& id) const {
    if (!contains(id)) throw StoreError("id not enrolled: " + id);
    if (dir_) {
        return he::load_ciphertext(ctx, *dir_ / (id + ".ct"));
    }
    return he::deserialize_ciphertext(ctx, blobs_.at(id));
}

void GalleryStore::save_manifest() const {
    nlohmann::json j;
    j["modality"] = fusion::modality_name(modality_);
    j["params_digest"] = he::hex_encode(digest_.data(), digest_.size());
    j["ids"] = ids_;
    const fs::path tmp = *dir_ / "manifest.json.tmp";
    std::ofstream out(tmp);
    if (!out) throw IoError("cannot write manifest in " + dir_->string());
    out << j.dump(2) << "\n";
    out.close();
    fs::rename(tmp, *dir_ / "manifest.json");
}

TriStores TriStores::in_memory(const std::array<std::uint8_t, 32>& params_digest) {
    return TriStores{GalleryStore(fusion::Modality::biometric, params_digest),
                     GalleryStore(fusion::Modality::biographic, params_digest),
                     GalleryStore(fusion::Modality::fused, params_digest)};
}

TriStores TriStores::create(const fs::path& root, const std::array<std::uint8_t, 32>& params_digest) {
    return TriStores{GalleryStore::create(root / "biometric", fusion::Modality::biometric, params_digest),
                     GalleryStore::create(root / "biographic", fusion::Modality::biographic, params_digest),
                     GalleryStore::create(root / "fused", fusion::Modality::fused, params_digest)};
}

TriStores TriStores::open(const fs::path& root) {
    return TriStores{GalleryStore::open(root / "biometric"), GalleryStore::open(root / "biographic"),
                     GalleryStore::open(root / "fused")};
}

}  // namespace hers::match
