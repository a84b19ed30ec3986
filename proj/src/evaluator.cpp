// Copyright 2026 The HERS Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <cstring>

#include "hers/context.hpp"
#include "hers/errors.hpp"

namespace hers::he {

namespace {

void check_scales(const CipherVector& a, const CipherVector& b, const char* op) {
    if (!scales_compatible(a.scale, b.scale)) {
        throw IncompatibilityError(std::string(op) + ": operand scales differ (" +
                                   std::to_string(a.scale) + " vs " + std::to_string(b.scale) + ")");
    }
}

}  // namespace

CipherVector Context::mod_drop_to(const CipherVector& a, int target_level) const {
    if (target_level < 0 || target_level > a.level) {
        throw ArgumentError("mod_drop_to: target level " + std::to_string(target_level) +
                            " not in [0, " + std::to_string(a.level) + "]");
    }
    CipherVector out = a;
    out.c0.drop_limbs_above(static_cast<std::size_t>(target_level) + 1);
    out.c1.drop_limbs_above(static_cast<std::size_t>(target_level) + 1);
    out.level = target_level;
    return out;
}

CipherVector Context::add(const CipherVector& a_in, const CipherVector& b_in) const {
    const CipherVector& a = a_in.level <= b_in.level ? a_in : b_in;
    const CipherVector b = a_in.level <= b_in.level ? mod_drop_to(b_in, a_in.level)
                                                    : mod_drop_to(a_in, b_in.level);
    check_scales(a, b, "add");
    const std::uint32_t n = params_.ring_degree;
    CipherVector out = a;
    out.slot_count = std::max(a.slot_count, b.slot_count);
    for (int m = 0; m <= a.level; ++m) {
        const Modulus& mod = moduli_[m];
        u64* o0 = out.c0.limb(m);
        u64* o1 = out.c1.limb(m);
        const u64* b0 = b.c0.limb(m);
        const u64* b1 = b.c1.limb(m);
        for (std::uint32_t k = 0; k < n; ++k) {
            o0[k] = mod.add(o0[k], b0[k]);
            o1[k] = mod.add(o1[k], b1[k]);
        }
    }
    return out;
}

CipherVector Context::negate(const CipherVector& a) const {
    const std::uint32_t n = params_.ring_degree;
    CipherVector out = a;
    for (int m = 0; m <= a.level; ++m) {
        const Modulus& mod = moduli_[m];
        u64* o0 = out.c0.limb(m);
        u64* o1 = out.c1.limb(m);
        for (std::uint32_t k = 0; k < n; ++k) {
            o0[k] = mod.neg(o0[k]);
            o1[k] = mod.neg(o1[k]);
        }
    }
    return out;
}

CipherVector Context::sub(const CipherVector& a, const CipherVector& b) const {
    return add(a, negate(b));
}

CipherVector Context::add_plain(const CipherVector& a, double value) const {
    const double scaled = value * a.scale;
    if (!(std::fabs(scaled) < static_cast<double>(params_.modulus_chain[0]) / 2.0)) {
        throw EncodingError("add_plain: constant exceeds capacity");
    }
    const std::int64_t r = std::llround(scaled);
    const std::uint32_t n = params_.ring_degree;
    CipherVector out = a;
    for (int m = 0; m <= a.level; ++m) {
        const Modulus& mod = moduli_[m];
        const u64 v = mod.from_signed(r);
        u64* o0 = out.c0.limb(m);
        // A constant polynomial is constant across NTT points.
        for (std::uint32_t k = 0; k < n; ++k) o0[k] = mod.add(o0[k], v);
    }
    return out;
}

CipherVector Context::add_plain(const CipherVector& a, std::span<const double> values) const {
    const Plaintext pt = encode(values, a.scale, a.level);
    const std::uint32_t n = params_.ring_degree;
    CipherVector out = a;
    for (int m = 0; m <= a.level; ++m) {
        const Modulus& mod = moduli_[m];
        const u64* p = pt.poly.limb(m);
        u64* o0 = out.c0.limb(m);
        for (std::uint32_t k = 0; k < n; ++k) o0[k] = mod.add(o0[k], p[k]);
    }
    return out;
}

CipherVector Context::sub_from_plain(double value, const CipherVector& a) const {
    return add_plain(negate(a), value);
}

CipherVector Context::rescale(const CipherVector& a) const {
    if (a.level < 1) {
        throw DepthError("rescale requires an unconsumed chain prime", 1, a.level);
    }
    CipherVector out = a;
    rescale_poly(out.c0, a.level);
    rescale_poly(out.c1, a.level);
    out.level = a.level - 1;
    out.scale = a.scale / static_cast<double>(params_.modulus_chain[a.level]);
    return out;
}

// (p - [p]_{q_top}) / q_top limb-wise, using the centered representative of
// the top limb so the implicit rounding is to the nearest integer.
void Context::rescale_poly(RnsPoly& p, int level) const {
    const std::uint32_t n = params_.ring_degree;
    const u64 q_top = params_.modulus_chain[level];
    std::vector<u64> top(p.limb(level), p.limb(level) + n);
    ntt_[level]->inverse(top.data());
    std::vector<std::int64_t> centered(n);
    for (std::uint32_t k = 0; k < n; ++k) {
        const u64 v = top[k];
        centered[k] = (v > q_top / 2) ? -static_cast<std::int64_t>(q_top - v)
                                      : static_cast<std::int64_t>(v);
    }
    std::vector<u64> tmp(n);
    for (int j = 0; j < level; ++j) {
        const Modulus& mod = moduli_[j];
        for (std::uint32_t k = 0; k < n; ++k) tmp[k] = mod.from_signed(centered[k]);
        ntt_[j]->forward(tmp.data());
        const auto [inv, inv_shoup] = rescale_inv_[level][j];
        u64* limb = p.limb(j);
        for (std::uint32_t k = 0; k < n; ++k) {
            limb[k] = mul_shoup(mod.sub(limb[k], tmp[k]), inv, inv_shoup, mod.q);
        }
    }
    p.drop_limbs_above(static_cast<std::size_t>(level));
}

CipherVector Context::mul_plain_rescale(const CipherVector& a, double value,
                                        double plain_scale) const {
    if (a.level < 1) throw DepthError("plaintext multiply needs a rescale level", 1, a.level);
    const double scaled = value * plain_scale;
    if (!(std::fabs(scaled) < std::ldexp(1.0, 62))) {
        throw EncodingError("mul_plain: constant exceeds capacity");
    }
    const std::int64_t r = std::llround(scaled);
    const std::uint32_t n = params_.ring_degree;
    CipherVector out = a;
    for (int m = 0; m <= a.level; ++m) {
        const Modulus& mod = moduli_[m];
        const u64 w = mod.from_signed(r);
        const u64 ws = shoup_precompute(w, mod.q);
        u64* o0 = out.c0.limb(m);
        u64* o1 = out.c1.limb(m);
        for (std::uint32_t k = 0; k < n; ++k) {
            o0[k] = mul_shoup(o0[k], w, ws, mod.q);
            o1[k] = mul_shoup(o1[k], w, ws, mod.q);
        }
    }
    out.scale = a.scale * plain_scale;
    return rescale(out);
}

CipherVector Context::mul_plain_rescale(const CipherVector& a, std::span<const double> values,
                                        double plain_scale) const {
    if (a.level < 1) throw DepthError("plaintext multiply needs a rescale level", 1, a.level);
    const Plaintext pt = encode(values, plain_scale, a.level);
    const std::uint32_t n = params_.ring_degree;
    CipherVector out = a;
    for (int m = 0; m <= a.level; ++m) {
        const Modulus& mod = moduli_[m];
        const u64* p = pt.poly.limb(m);
        u64* o0 = out.c0.limb(m);
        u64* o1 = out.c1.limb(m);
        for (std::uint32_t k = 0; k < n; ++k) {
            o0[k] = mod.mul(o0[k], p[k]);
            o1[k] = mod.mul(o1[k], p[k]);
        }
    }
    out.scale = a.scale * plain_scale;
    return rescale(out);
}

CipherVector Context::mul_relin_rescale(const CipherVector& a_in, const CipherVector& b_in,
                                        const KeySet& keys) const {
    const int level = std::min(a_in.level, b_in.level);
    if (level < 1) {
        throw DepthError("ciphertext multiply needs a rescale level", 1, level);
    }
    const CipherVector a = a_in.level == level ? a_in : mod_drop_to(a_in, level);
    const CipherVector b = b_in.level == level ? b_in : mod_drop_to(b_in, level);
    check_scales(a, b, "mul");

    const std::uint32_t n = params_.ring_degree;
    const std::size_t limbs = static_cast<std::size_t>(level) + 1;
    RnsPoly d0(n, limbs), d1(n, limbs), d2(n, limbs);
    for (std::size_t m = 0; m < limbs; ++m) {
        const Modulus& mod = moduli_[m];
        const u64* a0 = a.c0.limb(m);
        const u64* a1 = a.c1.limb(m);
        const u64* b0 = b.c0.limb(m);
        const u64* b1 = b.c1.limb(m);
        u64* p0 = d0.limb(m);
        u64* p1 = d1.limb(m);
        u64* p2 = d2.limb(m);
        for (std::uint32_t k = 0; k < n; ++k) {
            p0[k] = mod.mul(a0[k], b0[k]);
            p1[k] = mod.add(mod.mul(a0[k], b1[k]), mod.mul(a1[k], b0[k]));
            p2[k] = mod.mul(a1[k], b1[k]);
        }
    }

    auto [kb, ka] = key_switch(d2, level, keys.relin);
    CipherVector out;
    out.level = level;
    out.scale = a.scale * b.scale;
    out.slot_count = std::max(a.slot_count, b.slot_count);
    out.c0 = std::move(d0);
    out.c1 = std::move(d1);
    for (std::size_t m = 0; m < limbs; ++m) {
        const Modulus& mod = moduli_[m];
        u64* o0 = out.c0.limb(m);
        u64* o1 = out.c1.limb(m);
        const u64* kbm = kb.limb(m);
        const u64* kam = ka.limb(m);
        for (std::uint32_t k = 0; k < n; ++k) {
            o0[k] = mod.add(o0[k], kbm[k]);
            o1[k] = mod.add(o1[k], kam[k]);
        }
    }
    return rescale(out);
}

// Hybrid key switching with one special prime. The input (NTT form over the
// chain limbs 0..level) is decomposed RNS-digit by RNS-digit; each digit
// multiplies its key pair over the extended basis, the accumulator is divided
// by ks_prime, and the result re-encrypts d under the key the KsKey targets.
std::pair<RnsPoly, RnsPoly> Context::key_switch(const RnsPoly& d_ntt, int level,
                                                const KsKey& key) const {
    const std::uint32_t n = params_.ring_degree;
    const std::size_t digits = static_cast<std::size_t>(level) + 1;
    const std::size_t ks_limb_index = params_.modulus_chain.size();  // inside key polys

    // Coefficient-domain digits.
    std::vector<std::vector<u64>> digit_coeff(digits);
    for (std::size_t i = 0; i < digits; ++i) {
        digit_coeff[i].assign(d_ntt.limb(i), d_ntt.limb(i) + n);
        ntt_[i]->inverse(digit_coeff[i].data());
    }

    // u128 accumulators over {chain 0..level} + ks special limb.
    const std::size_t acc_limbs = digits + 1;
    std::vector<u128> acc_b(acc_limbs * n, 0), acc_a(acc_limbs * n, 0);
    std::vector<u64> tmp(n);

    for (std::size_t i = 0; i < digits; ++i) {
        const u64 qi = params_.modulus_chain[i];
        const u64 half = qi / 2;
        for (std::size_t m = 0; m < acc_limbs; ++m) {
            const bool is_ks = (m == acc_limbs - 1);
            const Modulus& mod = is_ks ? ks_mod_ : moduli_[m];
            const u64* digit_ntt;
            if (!is_ks && m == i) {
                // The digit is already reduced and transformed in the input.
                digit_ntt = d_ntt.limb(i);
            } else {
                const std::vector<u64>& src = digit_coeff[i];
                for (std::uint32_t k = 0; k < n; ++k) {
                    const u64 v = src[k];
                    tmp[k] = (v > half) ? mod.sub(0, (qi - v) % mod.q) : (v % mod.q);
                }
                (is_ks ? *ntt_ks_ : *ntt_[m]).forward(tmp.data());
                digit_ntt = tmp.data();
            }
            const std::size_t key_limb = is_ks ? ks_limb_index : m;
            const u64* kb = key.b[i].limb(key_limb);
            const u64* ka = key.a[i].limb(key_limb);
            u128* ab = acc_b.data() + m * n;
            u128* aa = acc_a.data() + m * n;
            for (std::uint32_t k = 0; k < n; ++k) {
                ab[k] += u128{digit_ntt[k]} * kb[k];
                aa[k] += u128{digit_ntt[k]} * ka[k];
            }
        }
    }

    // Reduce the accumulators, then divide by ks_prime (round toward the
    // centered representative of the special limb).
    RnsPoly out_b(n, digits), out_a(n, digits);
    std::vector<u64> p_limb_b(n), p_limb_a(n);
    {
        for (std::uint32_t k = 0; k < n; ++k) {
            p_limb_b[k] = ks_mod_.reduce(acc_b[(acc_limbs - 1) * n + k]);
            p_limb_a[k] = ks_mod_.reduce(acc_a[(acc_limbs - 1) * n + k]);
        }
        ntt_ks_->inverse(p_limb_b.data());
        ntt_ks_->inverse(p_limb_a.data());
    }
    const u64 p = params_.ks_prime;
    const u64 p_half = p / 2;
    std::vector<u64> lift(n);
    for (std::size_t m = 0; m < digits; ++m) {
        const Modulus& mod = moduli_[m];
        const auto [pinv, pinv_shoup] = ks_inv_[m];
        for (int poly = 0; poly < 2; ++poly) {
            const std::vector<u64>& p_coeffs = poly == 0 ? p_limb_b : p_limb_a;
            const std::vector<u128>& acc = poly == 0 ? acc_b : acc_a;
            u64* out = (poly == 0 ? out_b : out_a).limb(m);
            for (std::uint32_t k = 0; k < n; ++k) {
                const u64 v = p_coeffs[k];
                lift[k] = (v > p_half) ? mod.sub(0, (p - v) % mod.q) : (v % mod.q);
            }
            ntt_[m]->forward(lift.data());
            for (std::uint32_t k = 0; k < n; ++k) {
                const u64 r = mod.reduce(acc[m * n + k]);
                out[k] = mul_shoup(mod.sub(r, lift[k]), pinv, pinv_shoup, mod.q);
            }
        }
    }
    return {std::move(out_b), std::move(out_a)};
}

CipherVector Context::rotate_one_step(const CipherVector& a, std::uint32_t step,
                                      const KeySet& keys) const {
    const auto perm_it = galois_perm_.find(step);
    if (perm_it == galois_perm_.end()) {
        throw KeyError("no rotation support for step " + std::to_string(step));
    }
    const auto key_it = keys.rotation.find(step);
    if (key_it == keys.rotation.end()) {
        throw KeyError("rotation key for step " + std::to_string(step) + " missing");
    }
    const auto& perm = perm_it->second;
    const std::uint32_t n = params_.ring_degree;
    const std::size_t limbs = static_cast<std::size_t>(a.level) + 1;

    CipherVector out;
    out.level = a.level;
    out.scale = a.scale;
    out.slot_count = a.slot_count;
    out.c0 = RnsPoly(n, limbs);
    RnsPoly c1_rot(n, limbs);
    for (std::size_t m = 0; m < limbs; ++m) {
        const u64* s0 = a.c0.limb(m);
        const u64* s1 = a.c1.limb(m);
        u64* d0 = out.c0.limb(m);
        u64* d1 = c1_rot.limb(m);
        for (std::uint32_t k = 0; k < n; ++k) {
            d0[k] = s0[perm[k]];
            d1[k] = s1[perm[k]];
        }
    }
    auto [kb, ka] = key_switch(c1_rot, a.level, key_it->second);
    for (std::size_t m = 0; m < limbs; ++m) {
        const Modulus& mod = moduli_[m];
        u64* o0 = out.c0.limb(m);
        const u64* kbm = kb.limb(m);
        for (std::uint32_t k = 0; k < n; ++k) o0[k] = mod.add(o0[k], kbm[k]);
    }
    out.c1 = std::move(ka);
    return out;
}

CipherVector Context::rotate_full(const CipherVector& a, std::int64_t steps,
                                  const KeySet& keys) const {
    const std::int64_t slots = static_cast<std::int64_t>(slot_count());
    std::int64_t r = ((steps % slots) + slots) % slots;
    if (r == 0) return a;
    CipherVector out = a;
    for (std::uint32_t bit = 0; (std::int64_t{1} << bit) <= r; ++bit) {
        if (r & (std::int64_t{1} << bit)) {
            out = rotate_one_step(out, std::uint32_t{1} << bit, keys);
        }
    }
    return out;
}

std::vector<double> Context::mask_window(std::uint32_t lo, std::uint32_t hi) const {
    std::vector<double> mask(slot_count(), 0.0);
    for (std::uint32_t i = lo; i < hi && i < mask.size(); ++i) mask[i] = 1.0;
    return mask;
}

CipherVector Context::rotate(const CipherVector& a, std::int64_t steps, const KeySet& keys) const {
    const std::uint32_t w = a.slot_count == 0 ? slot_count() : a.slot_count;
    const std::int64_t r = ((steps % w) + w) % w;
    if (r == 0) return a;
    if (w == slot_count()) return rotate_full(a, r, keys);
    // Windowed rotation: stitch the two wrapped segments with 0/1 masks.
    // Encoding the masks at the top prime keeps the scale unchanged.
    if (a.level < 1) {
        throw DepthError("windowed rotation needs a rescale level for its masks", 1, a.level);
    }
    const double mask_scale = static_cast<double>(params_.modulus_chain[a.level]);
    const CipherVector head = rotate_full(a, r, keys);
    const CipherVector tail = rotate_full(a, r - static_cast<std::int64_t>(w), keys);
    const auto keep_head = mask_window(0, w - static_cast<std::uint32_t>(r));
    const auto keep_tail = mask_window(w - static_cast<std::uint32_t>(r), w);
    CipherVector out = add(mul_plain_rescale(head, keep_head, mask_scale),
                           mul_plain_rescale(tail, keep_tail, mask_scale));
    out.slot_count = w;
    return out;
}

CipherVector Context::inner_sum(const CipherVector& a, std::uint32_t width,
                                const KeySet& keys) const {
    if (width == 0 || (width & (width - 1)) != 0) {
        throw ArgumentError("inner_sum width must be a power of two, got " + std::to_string(width));
    }
    const std::uint32_t w = a.slot_count == 0 ? slot_count() : a.slot_count;
    if (width > w) {
        throw ArgumentError("inner_sum width " + std::to_string(width) + " exceeds slot_count " +
                            std::to_string(w));
    }
    CipherVector out = a;
    for (std::uint32_t s = width / 2; s >= 1; s /= 2) {
        out = add(out, rotate_full(out, static_cast<std::int64_t>(s), keys));
        if (s == 1) break;
    }
    return out;
}

}  // namespace hers::he
