// Copyright 2026 The HERS Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#include "hers/serialize.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

#include "hers/errors.hpp"
#include "nlohmann/json.hpp"

namespace hers::he {

namespace {

constexpr char kMagic[4] = {'H', 'E', 'R', 'S'};
constexpr std::uint16_t kVersion = 1;
constexpr std::uint8_t kTypeCiphertext = 1;
constexpr std::uint8_t kTypeKeySet = 2;

class Writer {
public:
    void u8(std::uint8_t v) { buf_.push_back(v); }
    void u16(std::uint16_t v) {
        for (int i = 0; i < 2; ++i) buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    void u32(std::uint32_t v) {
        for (int i = 0; i < 4; ++i) buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    void u64v(u64 v) {
        for (int i = 0; i < 8; ++i) buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    void f64(double v) {
        u64 bits = 0;
        std::memcpy(&bits, &v, 8);
        u64v(bits);
    }
    void bytes(const std::uint8_t* p, std::size_t len) { buf_.insert(buf_.end(), p, p + len); }
    std::vector<std::uint8_t> take() { return std::move(buf_); }

private:
    std::vector<std::uint8_t> buf_;
};

class Reader {
public:
    explicit Reader(std::span<const std::uint8_t> bytes) : data_(bytes) {}
    std::uint8_t u8() { return take(1)[0]; }
    std::uint16_t u16() {
        const auto* p = take(2);
        return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
    }
    std::uint32_t u32() {
        const auto* p = take(4);
        std::uint32_t v = 0;
        for (int i = 3; i >= 0; --i) v = (v << 8) | p[i];
        return v;
    }
    u64 u64v() {
        const auto* p = take(8);
        u64 v = 0;
        for (int i = 7; i >= 0; --i) v = (v << 8) | p[i];
        return v;
    }
    double f64() {
        const u64 bits = u64v();
        double v = 0;
        std::memcpy(&v, &bits, 8);
        return v;
    }
    const std::uint8_t* take(std::size_t len) {
        if (pos_ + len > data_.size()) throw SerializationError("truncated HERS blob");
        const std::uint8_t* p = data_.data() + pos_;
        pos_ += len;
        return p;
    }
    bool done() const { return pos_ == data_.size(); }

private:
    std::span<const std::uint8_t> data_;
    std::size_t pos_ = 0;
};

void write_header(Writer& w, std::uint8_t type, const std::array<std::uint8_t, 32>& digest) {
    w.bytes(reinterpret_cast<const std::uint8_t*>(kMagic), 4);
    w.u16(kVersion);
    w.u8(type);
    w.bytes(digest.data(), digest.size());
}

void read_header(Reader& r, std::uint8_t expected_type, const Context& ctx) {
    const std::uint8_t* magic = r.take(4);
    if (std::memcmp(magic, kMagic, 4) != 0) throw SerializationError("bad magic, not a HERS blob");
    const std::uint16_t version = r.u16();
    if (version != kVersion) {
        throw SerializationError("unsupported format version " + std::to_string(version));
    }
    const std::uint8_t type = r.u8();
    if (type != expected_type) throw SerializationError("unexpected object type in HERS blob");
    const std::uint8_t* digest = r.take(32);
    if (std::memcmp(digest, ctx.digest().data(), 32) != 0) {
        throw SerializationError("params digest mismatch: blob was produced under other parameters");
    }
}

// Polys travel in coefficient form so the on-disk numbers are plain RNS
// coefficients; limb i > levels means the ks_prime limb.
void write_poly(Writer& w, const Context& ctx, const RnsPoly& p) {
    const std::uint32_t n = p.n;
    w.u32(n);
    w.u32(static_cast<std::uint32_t>(p.limb_count));
    const std::size_t chain = ctx.params().modulus_chain.size();
    std::vector<u64> tmp(n);
    for (std::size_t m = 0; m < p.limb_count; ++m) {
        std::memcpy(tmp.data(), p.limb(m), n * sizeof(u64));
        (m < chain ? ctx.ntt(m) : ctx.ntt_ks()).inverse(tmp.data());
        w.u64v(n);
        for (u64 c : tmp) w.u64v(c);
    }
}

RnsPoly read_poly(Reader& r, const Context& ctx) {
    const std::uint32_t n = r.u32();
    if (n != ctx.params().ring_degree) throw SerializationError("ring degree mismatch");
    const std::uint32_t limbs = r.u32();
    const std::size_t chain = ctx.params().modulus_chain.size();
    if (limbs > chain + 1) throw SerializationError("limb count out of range");
    RnsPoly p(n, limbs);
    for (std::uint32_t m = 0; m < limbs; ++m) {
        if (r.u64v() != n) throw SerializationError("bad coefficient array length");
        u64* limb = p.limb(m);
        const u64 q = (m < chain ? ctx.modulus(m) : ctx.modulus_ks()).q;
        for (std::uint32_t k = 0; k < n; ++k) {
            limb[k] = r.u64v();
            if (limb[k] >= q) throw SerializationError("coefficient exceeds its modulus");
        }
        (m < chain ? ctx.ntt(m) : ctx.ntt_ks()).forward(limb);
    }
    return p;
}

void write_ks_key(Writer& w, const Context& ctx, const KsKey& key) {
    w.u32(static_cast<std::uint32_t>(key.b.size()));
    for (std::size_t i = 0; i < key.b.size(); ++i) {
        write_poly(w, ctx, key.b[i]);
        write_poly(w, ctx, key.a[i]);
    }
}

KsKey read_ks_key(Reader& r, const Context& ctx) {
    const std::uint32_t digits = r.u32();
    if (digits != ctx.params().modulus_chain.size()) {
        throw SerializationError("key digit count does not match the modulus chain");
    }
    KsKey key;
    for (std::uint32_t i = 0; i < digits; ++i) {
        key.b.push_back(read_poly(r, ctx));
        key.a.push_back(read_poly(r, ctx));
    }
    return key;
}

}  // namespace

std::vector<std::uint8_t> serialize_ciphertext(const Context& ctx, const CipherVector& ct) {
    Writer w;
    write_header(w, kTypeCiphertext, ctx.digest());
    w.u32(ct.slot_count);
    w.u32(static_cast<std::uint32_t>(ct.level));
    w.f64(ct.scale);
    write_poly(w, ctx, ct.c0);
    write_poly(w, ctx, ct.c1);
    return w.take();
}

CipherVector deserialize_ciphertext(const Context& ctx, std::span<const std::uint8_t> bytes) {
    Reader r(bytes);
    read_header(r, kTypeCiphertext, ctx);
    CipherVector ct;
    ct.slot_count = r.u32();
    ct.level = static_cast<int>(r.u32());
    ct.scale = r.f64();
    if (ct.level < 0 || ct.level > ctx.max_level()) throw SerializationError("level out of range");
    ct.c0 = read_poly(r, ctx);
    ct.c1 = read_poly(r, ctx);
    if (ct.c0.limb_count != static_cast<std::size_t>(ct.level) + 1 ||
        ct.c1.limb_count != ct.c0.limb_count) {
        throw SerializationError("limb count inconsistent with level");
    }
    return ct;
}

std::vector<std::uint8_t> serialize_keyset(const Context& ctx, const KeySet& keys) {
    Writer w;
    write_header(w, kTypeKeySet, ctx.digest());
    const std::uint32_t n = ctx.params().ring_degree;
    w.u32(n);
    for (std::uint32_t k = 0; k < n; ++k) {
        w.u8(static_cast<std::uint8_t>(keys.secret.ternary[k] + 1));
    }
    write_poly(w, ctx, keys.pk.b);
    write_poly(w, ctx, keys.pk.a);
    write_ks_key(w, ctx, keys.relin);
    w.u32(static_cast<std::uint32_t>(keys.rotation.size()));
    for (const auto& [step, key] : keys.rotation) {
        w.u32(step);
        write_ks_key(w, ctx, key);
    }
    return w.take();
}

KeySet deserialize_keyset(const Context& ctx, std::span<const std::uint8_t> bytes) {
    Reader r(bytes);
    read_header(r, kTypeKeySet, ctx);
    KeySet keys;
    keys.params_digest = ctx.digest();
    const std::uint32_t n = r.u32();
    if (n != ctx.params().ring_degree) throw SerializationError("ring degree mismatch");
    keys.secret.ternary.resize(n);
    bool all_zero = true;
    for (std::uint32_t k = 0; k < n; ++k) {
        const std::uint8_t v = r.u8();
        if (v > 2) throw SerializationError("secret coefficient out of range");
        keys.secret.ternary[k] = static_cast<std::int8_t>(static_cast<int>(v) - 1);
        all_zero = all_zero && v == 1;
    }
    if (all_zero) throw SerializationError("degenerate secret key");
    // Rebuild the NTT image of the secret over chain + ks limbs.
    {
        const std::size_t chain = ctx.params().modulus_chain.size();
        keys.secret.ntt = RnsPoly(n, chain + 1);
        for (std::size_t m = 0; m < chain + 1; ++m) {
            const Modulus& mod = (m == chain) ? ctx.modulus_ks() : ctx.modulus(m);
            u64* limb = keys.secret.ntt.limb(m);
            for (std::uint32_t k = 0; k < n; ++k) limb[k] = mod.from_signed(keys.secret.ternary[k]);
            (m == chain ? ctx.ntt_ks() : ctx.ntt(m)).forward(limb);
        }
    }
    keys.pk.b = read_poly(r, ctx);
    keys.pk.a = read_poly(r, ctx);
    keys.relin = read_ks_key(r, ctx);
    const std::uint32_t rot_count = r.u32();
    for (std::uint32_t i = 0; i < rot_count; ++i) {
        const std::uint32_t step = r.u32();
        keys.rotation.emplace(step, read_ks_key(r, ctx));
    }
    return keys;
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open for writing: " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("write failed: " + path.string());
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary | std::ios::ate);
    if (!in) throw IoError("cannot open for reading: " + path.string());
    const std::streamsize size = in.tellg();
    in.seekg(0);
    std::vector<std::uint8_t> bytes(static_cast<std::size_t>(size));
    in.read(reinterpret_cast<char*>(bytes.data()), size);
    if (!in) throw IoError("read failed: " + path.string());
    return bytes;
}

void save_ciphertext(const Context& ctx, const CipherVector& ct,
                     const std::filesystem::path& path) {
    const auto bytes = serialize_ciphertext(ctx, ct);
    write_file(path, bytes);
}

CipherVector load_ciphertext(const Context& ctx, const std::filesystem::path& path) {
    const auto bytes = read_file(path);
    return deserialize_ciphertext(ctx, bytes);
}

void save_keyset(const Context& ctx, const KeySet& keys, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    save_params_json(ctx.params(), dir / "params.json");
    write_file(dir / "keys.bin", serialize_keyset(ctx, keys));
}

KeySet load_keyset(const Context& ctx, const std::filesystem::path& dir) {
    return deserialize_keyset(ctx, read_file(dir / "keys.bin"));
}

void save_params_json(const HeParams& params, const std::filesystem::path& path) {
    nlohmann::json j;
    j["ring_degree"] = params.ring_degree;
    j["modulus_chain"] = params.modulus_chain;
    int exp = 0;
    std::frexp(params.scale, &exp);
    j["scale_bits"] = exp - 1;
    j["ks_prime"] = params.ks_prime;
    j["digest"] = params.digest_hex();
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out << j.dump(2) << "\n";
}

HeParams load_params_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read " + path.string());
    nlohmann::json j;
    in >> j;
    HeParams p;
    p.ring_degree = j.at("ring_degree").get<std::uint32_t>();
    p.modulus_chain = j.at("modulus_chain").get<std::vector<u64>>();
    p.scale = std::ldexp(1.0, j.at("scale_bits").get<int>());
    p.ks_prime = j.at("ks_prime").get<u64>();
    p.validate();
    if (j.contains("digest") && j["digest"].get<std::string>() != p.digest_hex()) {
        throw SerializationError("params.json digest mismatch");
    }
    return p;
}

std::string base64_encode(std::span<const std::uint8_t> bytes) {
    static const char* alphabet =
        "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
    std::string out;
    out.reserve((bytes.size() + 2) / 3 * 4);
    std::size_t i = 0;
    while (i + 3 <= bytes.size()) {
        const std::uint32_t v = (bytes[i] << 16) | (bytes[i + 1] << 8) | bytes[i + 2];
        out.push_back(alphabet[(v >> 18) & 63]);
        out.push_back(alphabet[(v >> 12) & 63]);
        out.push_back(alphabet[(v >> 6) & 63]);
        out.push_back(alphabet[v & 63]);
        i += 3;
    }
    if (i + 1 == bytes.size()) {
        const std::uint32_t v = bytes[i] << 16;
        out.push_back(alphabet[(v >> 18) & 63]);
        out.push_back(alphabet[(v >> 12) & 63]);
        out += "==";
    } else if (i + 2 == bytes.size()) {
        const std::uint32_t v = (bytes[i] << 16) | (bytes[i + 1] << 8);
        out.push_back(alphabet[(v >> 18) & 63]);
        out.push_back(alphabet[(v >> 12) & 63]);
        out.push_back(alphabet[(v >> 6) & 63]);
        out += "=";
    }
    return out;
}

std::vector<std::uint8_t> base64_decode(const std::string& text) {
    auto value_of = [](char c) -> int {
        if (c >= 'A' && c <= 'Z') return c - 'A';
        if (c >= 'a' && c <= 'z') return c - 'a' + 26;
        if (c >= '0' && c <= '9') return c - '0' + 52;
        if (c == '+') return 62;
        if (c == '/') return 63;
        return -1;
    };
    std::vector<std::uint8_t> out;
    std::uint32_t acc = 0;
    int bits = 0;
    for (char c : text) {
        if (c == '=' || c == '\n' || c == '\r') continue;
        const int v = value_of(c);
        if (v < 0) throw SerializationError("invalid base64 character");
        acc = (acc << 6) | static_cast<std::uint32_t>(v);
        bits += 6;
        if (bits >= 8) {
            bits -= 8;
            out.push_back(static_cast<std::uint8_t>((acc >> bits) & 0xff));
        }
    }
    return out;
}

}  // namespace hers::he
