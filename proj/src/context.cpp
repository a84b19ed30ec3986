// Copyright 2026 The HERS Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#include "hers/context.hpp"

#include <cmath>
#include <unordered_map>

#include "hers/errors.hpp"

namespace hers::he {

namespace {
constexpr double kErrorSigma = 3.2;
}

bool scales_compatible(double a, double b) {
    const double m = std::max(std::fabs(a), std::fabs(b));
    return std::fabs(a - b) <= 1e-9 * m;
}

Context::Context(HeParams params) : params_(std::move(params)), codec_(params_.ring_degree) {
    params_.validate();
    digest_ = params_.digest();
    const std::uint32_t n = params_.ring_degree;

    for (u64 q : params_.modulus_chain) {
        moduli_.emplace_back(q);
        ntt_.push_back(std::make_unique<NttTables>(q, n));
    }
    ks_mod_ = Modulus(params_.ks_prime);
    ntt_ks_ = std::make_unique<NttTables>(params_.ks_prime, n);

    const int levels = params_.levels();
    rescale_inv_.resize(levels + 1);
    for (int l = 1; l <= levels; ++l) {
        rescale_inv_[l].resize(l);
        for (int j = 0; j < l; ++j) {
            const u64 inv = moduli_[j].inv(params_.modulus_chain[l] % moduli_[j].q);
            rescale_inv_[l][j] = {inv, shoup_precompute(inv, moduli_[j].q)};
        }
    }
    ks_inv_.resize(levels + 1);
    ks_mod_chain_.resize(levels + 1);
    for (int j = 0; j <= levels; ++j) {
        ks_mod_chain_[j] = params_.ks_prime % moduli_[j].q;
        const u64 inv = moduli_[j].inv(ks_mod_chain_[j]);
        ks_inv_[j] = {inv, shoup_precompute(inv, moduli_[j].q)};
    }

    // Recover the NTT's evaluation-point order once so Galois maps can be
    // applied as pure permutations in the transform domain. The order is a
    // structural property of the transform, identical for every prime.
    const u64 two_n = 2 * static_cast<u64>(n);
    {
        const Modulus& mod = moduli_[0];
        const NttTables& tables = *ntt_[0];
        std::vector<u64> x_poly(n, 0);
        x_poly[1] = 1;
        tables.forward(x_poly.data());
        const u64 psi = find_primitive_root(mod.q, two_n);
        std::unordered_map<u64, std::uint32_t> power_to_exp;
        power_to_exp.reserve(n);
        u64 p = psi;
        for (u64 e = 1; e < two_n; e += 2) {
            power_to_exp.emplace(p, static_cast<std::uint32_t>(e));
            p = mod.mul(p, mod.mul(psi, psi));
        }
        std::vector<std::uint32_t> point_exp(n);
        std::vector<std::uint32_t> exp_to_index(two_n, 0);
        for (std::uint32_t i = 0; i < n; ++i) {
            const auto it = power_to_exp.find(x_poly[i]);
            if (it == power_to_exp.end()) throw Error("NTT evaluation order probe failed");
            point_exp[i] = it->second;
            exp_to_index[it->second] = i;
        }
        u64 g = 5 % two_n;
        for (std::uint32_t step = 1; step <= n / 4; step <<= 1) {
            galois_elt_[step] = g;
            std::vector<std::uint32_t> perm(n);
            for (std::uint32_t i = 0; i < n; ++i) {
                const u64 src = (static_cast<u64>(point_exp[i]) * g) % two_n;
                perm[i] = exp_to_index[src];
            }
            galois_perm_[step] = std::move(perm);
            g = (g * g) % two_n;  // 5^(2*step)
        }
    }
}

// --- sampling ---------------------------------------------------------------

RnsPoly Context::sample_uniform(std::size_t limbs, Prng& prng) const {
    const std::uint32_t n = params_.ring_degree;
    RnsPoly p(n, limbs);
    for (std::size_t i = 0; i < limbs; ++i) {
        const u64 q = (i <= static_cast<std::size_t>(params_.levels())) ? params_.modulus_chain[i]
                                                                        : params_.ks_prime;
        u64* limb = p.limb(i);
        for (std::uint32_t k = 0; k < n; ++k) limb[k] = prng.next_below(q);
    }
    return p;
}

RnsPoly Context::sample_error_ntt(std::size_t limbs, bool include_ks, Prng& prng) const {
    const std::uint32_t n = params_.ring_degree;
    std::vector<std::int64_t> e(n);
    for (std::uint32_t k = 0; k < n; ++k) e[k] = prng.gaussian_int(kErrorSigma);
    RnsPoly p(n, limbs);
    for (std::size_t i = 0; i < limbs; ++i) {
        const bool is_ks = include_ks && i + 1 == limbs;
        const Modulus& mod = is_ks ? ks_mod_ : moduli_[i];
        u64* limb = p.limb(i);
        for (std::uint32_t k = 0; k < n; ++k) limb[k] = mod.from_signed(e[k]);
        (is_ks ? *ntt_ks_ : *ntt_[i]).forward(limb);
    }
    return p;
}

RnsPoly Context::ternary_to_ntt(const std::vector<std::int8_t>& coeffs, std::size_t chain_limbs,
                                bool include_ks) const {
    const std::uint32_t n = params_.ring_degree;
    const std::size_t limbs = chain_limbs + (include_ks ? 1 : 0);
    RnsPoly p(n, limbs);
    for (std::size_t i = 0; i < limbs; ++i) {
        const bool is_ks = include_ks && i + 1 == limbs;
        const Modulus& mod = is_ks ? ks_mod_ : moduli_[i];
        u64* limb = p.limb(i);
        for (std::uint32_t k = 0; k < n; ++k) limb[k] = mod.from_signed(coeffs[k]);
        (is_ks ? *ntt_ks_ : *ntt_[i]).forward(limb);
    }
    return p;
}

std::vector<std::int8_t> Context::apply_galois_ternary(const std::vector<std::int8_t>& s, u64 g) const {
    const std::uint32_t n = params_.ring_degree;
    const u64 two_n = 2 * static_cast<u64>(n);
    std::vector<std::int8_t> out(n, 0);
    for (std::uint32_t k = 0; k < n; ++k) {
        const u64 t = (static_cast<u64>(k) * g) % two_n;
        if (t < n) {
            out[t] = s[k];
        } else {
            out[t - n] = static_cast<std::int8_t>(-s[k]);
        }
    }
    return out;
}

// --- key generation ----------------------------------------------------------

KsKey Context::make_ks_key(const RnsPoly& target_full, const SecretKey& secret, Prng& prng) const {
    const std::uint32_t n = params_.ring_degree;
    const std::size_t full = params_.modulus_chain.size() + 1;  // chain + ks
    const std::size_t digits = params_.modulus_chain.size();
    KsKey key;
    key.b.reserve(digits);
    key.a.reserve(digits);
    for (std::size_t i = 0; i < digits; ++i) {
        RnsPoly a = sample_uniform(full, prng);
        RnsPoly e = sample_error_ntt(full, /*include_ks=*/true, prng);
        RnsPoly b(n, full);
        for (std::size_t m = 0; m < full; ++m) {
            const Modulus& mod = (m + 1 == full) ? ks_mod_ : moduli_[m];
            const u64* am = a.limb(m);
            const u64* sm = secret.ntt.limb(m);
            const u64* em = e.limb(m);
            u64* bm = b.limb(m);
            for (std::uint32_t k = 0; k < n; ++k) {
                bm[k] = mod.add(mod.neg(mod.mul(am[k], sm[k])), em[k]);
            }
        }
        // Digit i carries ks_prime * target on its own chain limb.
        {
            const Modulus& mod = moduli_[i];
            const u64 pfac = ks_mod_chain_[i];
            const u64* tm = target_full.limb(i);
            u64* bm = b.limb(i);
            for (std::uint32_t k = 0; k < n; ++k) {
                bm[k] = mod.add(bm[k], mod.mul(pfac, tm[k]));
            }
        }
        key.b.push_back(std::move(b));
        key.a.push_back(std::move(a));
    }
    return key;
}

KeySet Context::keygen(u64 seed) const {
    const std::uint32_t n = params_.ring_degree;
    Prng prng(seed);
    KeySet keys;
    keys.params_digest = digest_;

    keys.secret.ternary.resize(n);
    for (std::uint32_t k = 0; k < n; ++k) {
        keys.secret.ternary[k] = static_cast<std::int8_t>(prng.ternary());
    }
    keys.secret.ntt = ternary_to_ntt(keys.secret.ternary, params_.modulus_chain.size(), true);

    const std::size_t chain = params_.modulus_chain.size();
    keys.pk.a = sample_uniform(chain, prng);
    RnsPoly e = sample_error_ntt(chain, false, prng);
    keys.pk.b = RnsPoly(n, chain);
    for (std::size_t m = 0; m < chain; ++m) {
        const Modulus& mod = moduli_[m];
        const u64* am = keys.pk.a.limb(m);
        const u64* sm = keys.secret.ntt.limb(m);
        const u64* em = e.limb(m);
        u64* bm = keys.pk.b.limb(m);
        for (std::uint32_t k = 0; k < n; ++k) {
            bm[k] = mod.add(mod.neg(mod.mul(am[k], sm[k])), em[k]);
        }
    }

    // Relinearization: switch s^2 back to s.
    RnsPoly s_sq(n, chain + 1);
    for (std::size_t m = 0; m < chain + 1; ++m) {
        const Modulus& mod = (m == chain) ? ks_mod_ : moduli_[m];
        const u64* sm = keys.secret.ntt.limb(m);
        u64* out = s_sq.limb(m);
        for (std::uint32_t k = 0; k < n; ++k) out[k] = mod.mul(sm[k], sm[k]);
    }
    keys.relin = make_ks_key(s_sq, keys.secret, prng);

    // Rotation keys: switch sigma_g(s) back to s for every power-of-two step.
    for (const auto& [step, g] : galois_elt_) {
        const auto s_rot = apply_galois_ternary(keys.secret.ternary, g);
        const RnsPoly target = ternary_to_ntt(s_rot, chain, true);
        keys.rotation.emplace(step, make_ks_key(target, keys.secret, prng));
    }
    return keys;
}

// --- encoding ----------------------------------------------------------------

Plaintext Context::encode_coeffs(const std::vector<double>& coeffs, double scale, int level,
                                 std::uint32_t slot_count_hint) const {
    const std::uint32_t n = params_.ring_degree;
    const double cap = std::min(std::ldexp(1.0, 62), static_cast<double>(params_.modulus_chain[0]) / 2.0);
    double max_abs = 0.0;
    for (double c : coeffs) max_abs = std::max(max_abs, std::fabs(c));
    if (!(max_abs < cap)) {
        throw EncodingError("scaled coefficients exceed the modulus chain capacity (max " +
                            std::to_string(max_abs) + ")");
    }
    Plaintext pt;
    pt.level = level;
    pt.scale = scale;
    pt.slot_count = slot_count_hint;
    pt.poly = RnsPoly(n, static_cast<std::size_t>(level) + 1);
    std::vector<std::int64_t> rounded(n);
    for (std::uint32_t k = 0; k < n; ++k) rounded[k] = std::llround(coeffs[k]);
    for (int m = 0; m <= level; ++m) {
        u64* limb = pt.poly.limb(m);
        const Modulus& mod = moduli_[m];
        for (std::uint32_t k = 0; k < n; ++k) limb[k] = mod.from_signed(rounded[k]);
        ntt_[m]->forward(limb);
    }
    return pt;
}

Plaintext Context::encode(std::span<const double> values, double scale, int level) const {
    if (level < 0 || level > params_.levels()) throw ArgumentError("encode: bad level");
    if (values.size() > slot_count()) {
        throw EncodingError("encode: " + std::to_string(values.size()) + " values exceed " +
                            std::to_string(slot_count()) + " slots");
    }
    if (!(scale > 0.0)) throw EncodingError("encode: scale must be positive");
    const auto coeffs = codec_.embed(values, scale);
    return encode_coeffs(coeffs, scale, level, static_cast<std::uint32_t>(values.size()));
}

Plaintext Context::encode_broadcast(double value, double scale, int level) const {
    if (level < 0 || level > params_.levels()) throw ArgumentError("encode: bad level");
    const double scaled = value * scale;
    const double cap = std::min(std::ldexp(1.0, 62), static_cast<double>(params_.modulus_chain[0]) / 2.0);
    if (!(std::fabs(scaled) < cap)) throw EncodingError("broadcast constant exceeds capacity");
    const std::int64_t r = std::llround(scaled);
    Plaintext pt;
    pt.level = level;
    pt.scale = scale;
    pt.slot_count = slot_count();
    pt.poly = RnsPoly(params_.ring_degree, static_cast<std::size_t>(level) + 1);
    for (int m = 0; m <= level; ++m) {
        const u64 v = moduli_[m].from_signed(r);
        u64* limb = pt.poly.limb(m);
        for (std::uint32_t k = 0; k < params_.ring_degree; ++k) limb[k] = v;
    }
    return pt;
}

std::vector<double> Context::decode(const Plaintext& pt) const {
    const std::uint32_t n = params_.ring_degree;
    std::vector<u64> limb0(pt.poly.limb(0), pt.poly.limb(0) + n);
    ntt_[0]->inverse(limb0.data());
    const u64 q0 = moduli_[0].q;
    std::vector<double> coeffs(n);
    for (std::uint32_t k = 0; k < n; ++k) {
        const u64 v = limb0[k];
        coeffs[k] = (v > q0 / 2) ? -static_cast<double>(q0 - v) : static_cast<double>(v);
    }
    const std::uint32_t count = pt.slot_count == 0 ? slot_count() : pt.slot_count;
    return codec_.unembed(coeffs, pt.scale, count);
}

// --- encryption ----------------------------------------------------------------

CipherVector Context::encrypt(const Plaintext& pt, const KeySet& keys, Prng& prng) const {
    if (keys.params_digest != digest_) throw IncompatibilityError("key set built for other params");
    const std::uint32_t n = params_.ring_degree;
    const std::size_t limbs = static_cast<std::size_t>(pt.level) + 1;

    std::vector<std::int8_t> u(n);
    for (std::uint32_t k = 0; k < n; ++k) u[k] = static_cast<std::int8_t>(prng.ternary());
    const RnsPoly u_ntt = ternary_to_ntt(u, limbs, false);
    const RnsPoly e0 = sample_error_ntt(limbs, false, prng);
    const RnsPoly e1 = sample_error_ntt(limbs, false, prng);

    CipherVector ct;
    ct.level = pt.level;
    ct.scale = pt.scale;
    ct.slot_count = pt.slot_count;
    ct.c0 = RnsPoly(n, limbs);
    ct.c1 = RnsPoly(n, limbs);
    for (std::size_t m = 0; m < limbs; ++m) {
        const Modulus& mod = moduli_[m];
        const u64* bm = keys.pk.b.limb(m);
        const u64* am = keys.pk.a.limb(m);
        const u64* um = u_ntt.limb(m);
        const u64* e0m = e0.limb(m);
        const u64* e1m = e1.limb(m);
        const u64* ptm = pt.poly.limb(m);
        u64* c0 = ct.c0.limb(m);
        u64* c1 = ct.c1.limb(m);
        for (std::uint32_t k = 0; k < n; ++k) {
            c0[k] = mod.add(mod.add(mod.mul(bm[k], um[k]), e0m[k]), ptm[k]);
            c1[k] = mod.add(mod.mul(am[k], um[k]), e1m[k]);
        }
    }
    return ct;
}

CipherVector Context::encrypt(std::span<const double> values, const KeySet& keys, Prng& prng) const {
    return encrypt(encode(values, params_.scale, params_.levels()), keys, prng);
}

std::vector<double> Context::decrypt(const CipherVector& ct, const KeySet& keys) const {
    if (keys.params_digest != digest_) throw IncompatibilityError("key set built for other params");
    const std::uint32_t n = params_.ring_degree;
    const std::size_t limbs = static_cast<std::size_t>(ct.level) + 1;

    // m = c0 + c1 * s over the remaining limbs.
    std::vector<u64> m0(n), m1;
    {
        const Modulus& mod = moduli_[0];
        const u64* c0 = ct.c0.limb(0);
        const u64* c1 = ct.c1.limb(0);
        const u64* s = keys.secret.ntt.limb(0);
        for (std::uint32_t k = 0; k < n; ++k) m0[k] = mod.add(c0[k], mod.mul(c1[k], s[k]));
        ntt_[0]->inverse(m0.data());
    }
    if (limbs > 1) {
        m1.resize(n);
        const Modulus& mod = moduli_[1];
        const u64* c0 = ct.c0.limb(1);
        const u64* c1 = ct.c1.limb(1);
        const u64* s = keys.secret.ntt.limb(1);
        for (std::uint32_t k = 0; k < n; ++k) m1[k] = mod.add(c0[k], mod.mul(c1[k], s[k]));
        ntt_[1]->inverse(m1.data());
    }

    const u64 q0 = moduli_[0].q;
    std::vector<double> coeffs(n);
    for (std::uint32_t k = 0; k < n; ++k) {
        const u64 v = m0[k];
        const std::int64_t centered =
            (v > q0 / 2) ? -static_cast<std::int64_t>(q0 - v) : static_cast<std::int64_t>(v);
        if (!m1.empty() && moduli_[1].from_signed(centered) != m1[k]) {
            throw EncodingError(
                "decryption overflow: message magnitude exceeds the base modulus capacity");
        }
        coeffs[k] = static_cast<double>(centered);
    }
    const std::uint32_t count = ct.slot_count == 0 ? slot_count() : ct.slot_count;
    return codec_.unembed(coeffs, ct.scale, count);
}

}  // namespace hers::he
