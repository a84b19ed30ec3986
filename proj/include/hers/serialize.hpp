// Copyright 2026 The HERS Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#ifndef HERS_SERIALIZE_HPP
#define HERS_SERIALIZE_HPP

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "hers/context.hpp"

namespace hers::he {

// Binary container: magic "HERS", format version u16, a 32-byte params
// digest, then length-prefixed little-endian RNS coefficient arrays.
// Deserialization rejects any params-digest mismatch.

std::vector<std::uint8_t> serialize_ciphertext(const Context& ctx, const CipherVector& ct);
CipherVector deserialize_ciphertext(const Context& ctx, std::span<const std::uint8_t> bytes);

std::vector<std::uint8_t> serialize_keyset(const Context& ctx, const KeySet& keys);
KeySet deserialize_keyset(const Context& ctx, std::span<const std::uint8_t> bytes);

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> read_file(const std::filesystem::path& path);

void save_ciphertext(const Context& ctx, const CipherVector& ct, const std::filesystem::path& path);
CipherVector load_ciphertext(const Context& ctx, const std::filesystem::path& path);

// keys.bin + params.json in `dir`.
void save_keyset(const Context& ctx, const KeySet& keys, const std::filesystem::path& dir);
KeySet load_keyset(const Context& ctx, const std::filesystem::path& dir);

void save_params_json(const HeParams& params, const std::filesystem::path& path);
HeParams load_params_json(const std::filesystem::path& path);

std::string base64_encode(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> base64_decode(const std::string& text);

}  // namespace hers::he

#endif  // HERS_SERIALIZE_HPP
