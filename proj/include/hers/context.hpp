// Copyright 2026 The HERS Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#ifndef HERS_CONTEXT_HPP
#define HERS_CONTEXT_HPP

#include <array>
#include <cstdint>
#include <map>
#include <memory>
#include <span>
#include <vector>

#include "hers/embedding.hpp"
#include "hers/ntt.hpp"
#include "hers/params.hpp"
#include "hers/prng.hpp"
#include "hers/rns.hpp"

namespace hers::he {

// Encoded message: RNS limbs in NTT form over chain primes 0..level.
struct Plaintext {
    RnsPoly poly;
    int level = 0;
    double scale = 0.0;
    std::uint32_t slot_count = 0;
};

// Packed ciphertext holding up to ring_degree/2 real slots. Both polynomial
// components live in NTT form over chain primes 0..level. Immutable by
// convention: evaluator operations return new values.
struct CipherVector {
    RnsPoly c0, c1;
    int level = 0;
    double scale = 0.0;
    std::uint32_t slot_count = 0;
};

struct SecretKey {
    std::vector<std::int8_t> ternary;  // coefficient domain, values in {-1,0,1}
    RnsPoly ntt;                       // over chain + ks_prime limbs
};

struct PublicKey {
    RnsPoly b, a;  // over chain limbs, NTT form
};

// Key-switching material: one (b_i, a_i) pair per RNS digit, each over
// chain + ks_prime limbs in NTT form.
struct KsKey {
    std::vector<RnsPoly> b, a;
};

struct KeySet {
    std::array<std::uint8_t, 32> params_digest{};
    SecretKey secret;
    PublicKey pk;
    KsKey relin;
    std::map<std::uint32_t, KsKey> rotation;  // power-of-two step -> key
};

// Scales are equal for evaluator purposes when they agree to ~12 significant
// decimal digits; the tracked double drifts by at most a few ulps along any
// legal circuit.
bool scales_compatible(double a, double b);

class Context {
public:
    explicit Context(HeParams params);

    const HeParams& params() const { return params_; }
    std::uint32_t slot_count() const { return params_.ring_degree / 2; }
    int max_level() const { return params_.levels(); }
    const std::array<std::uint8_t, 32>& digest() const { return digest_; }

    // --- encoding -----------------------------------------------------------
    Plaintext encode(std::span<const double> values, double scale, int level) const;
    // Constant polynomial, same value in every slot; no FFT involved.
    Plaintext encode_broadcast(double value, double scale, int level) const;
    std::vector<double> decode(const Plaintext& pt) const;

    // --- keys ---------------------------------------------------------------
    // Deterministic: a fixed (params, seed) pair reproduces the KeySet bit
    // for bit. Rotation keys cover every power-of-two step up to n/4.
    KeySet keygen(u64 seed) const;

    // --- encryption ---------------------------------------------------------
    CipherVector encrypt(const Plaintext& pt, const KeySet& keys, Prng& prng) const;
    CipherVector encrypt(std::span<const double> values, const KeySet& keys, Prng& prng) const;
    std::vector<double> decrypt(const CipherVector& ct, const KeySet& keys) const;

    // --- arithmetic ---------------------------------------------------------
    CipherVector add(const CipherVector& a, const CipherVector& b) const;
    CipherVector sub(const CipherVector& a, const CipherVector& b) const;
    CipherVector negate(const CipherVector& a) const;
    CipherVector add_plain(const CipherVector& a, double value) const;
    // Slot-wise plaintext vector add (no level cost).
    CipherVector add_plain(const CipherVector& a, std::span<const double> values) const;
    // value - ct, slotwise.
    CipherVector sub_from_plain(double value, const CipherVector& a) const;

    // Multiply by a broadcast constant encoded at plain_scale, then rescale.
    CipherVector mul_plain_rescale(const CipherVector& a, double value, double plain_scale) const;
    // Multiply by a per-slot plaintext vector encoded at plain_scale, then rescale.
    CipherVector mul_plain_rescale(const CipherVector& a, std::span<const double> values,
                                   double plain_scale) const;

    CipherVector mul_relin_rescale(const CipherVector& a, const CipherVector& b,
                                   const KeySet& keys) const;

    // Cyclic rotation of the full n/2-slot register by `steps` (left), via
    // Galois key switching; level and scale are unchanged.
    CipherVector rotate_full(const CipherVector& a, std::int64_t steps, const KeySet& keys) const;

    // Cyclic rotation within the slot_count window. A windowed rotation that
    // actually wraps costs one level (two masked rotations); full-register
    // rotations are free of level cost.
    CipherVector rotate(const CipherVector& a, std::int64_t steps, const KeySet& keys) const;

    // Sums the first `width` slots into slot 0 (and every multiple of
    // `width` accumulates its own block) via log2(width) rotate-and-add steps.
    CipherVector inner_sum(const CipherVector& a, std::uint32_t width, const KeySet& keys) const;

    CipherVector rescale(const CipherVector& a) const;
    CipherVector mod_drop_to(const CipherVector& a, int target_level) const;

    // --- internals shared with serialization --------------------------------
    const NttTables& ntt(std::size_t limb) const { return *ntt_[limb]; }
    const NttTables& ntt_ks() const { return *ntt_ks_; }
    const Modulus& modulus(std::size_t limb) const { return moduli_[limb]; }
    const Modulus& modulus_ks() const { return ks_mod_; }

private:
    friend struct EvalDetail;

    RnsPoly sample_uniform(std::size_t limbs, Prng& prng) const;
    RnsPoly sample_error_ntt(std::size_t limbs, bool include_ks, Prng& prng) const;
    RnsPoly ternary_to_ntt(const std::vector<std::int8_t>& coeffs, std::size_t chain_limbs,
                           bool include_ks) const;
    KsKey make_ks_key(const RnsPoly& target_full, const SecretKey& secret, Prng& prng) const;
    std::pair<RnsPoly, RnsPoly> key_switch(const RnsPoly& d_ntt, int level, const KsKey& key) const;
    void rescale_poly(RnsPoly& p, int level) const;
    CipherVector rotate_one_step(const CipherVector& a, std::uint32_t step, const KeySet& keys) const;
    Plaintext encode_coeffs(const std::vector<double>& coeffs, double scale, int level,
                            std::uint32_t slot_count_hint) const;
    std::vector<double> mask_window(std::uint32_t lo, std::uint32_t hi) const;

    HeParams params_;
    std::array<std::uint8_t, 32> digest_;
    std::vector<Modulus> moduli_;
    Modulus ks_mod_;
    std::vector<std::unique_ptr<NttTables>> ntt_;
    std::unique_ptr<NttTables> ntt_ks_;
    SlotCodec codec_;

    // inv(chain[l]) mod chain[j] (+ Shoup), for rescaling at level l.
    std::vector<std::vector<std::pair<u64, u64>>> rescale_inv_;
    // inv(ks_prime) mod chain[j] (+ Shoup).
    std::vector<std::pair<u64, u64>> ks_inv_;
    // ks_prime mod chain[j].
    std::vector<u64> ks_mod_chain_;
    // NTT-domain permutation per power-of-two rotation step.
    std::map<std::uint32_t, std::vector<std::uint32_t>> galois_perm_;
    // Galois element per step (5^step mod 2n), for key generation.
    std::map<std::uint32_t, u64> galois_elt_;
    // Coefficient-domain permutation of the secret key for rotation keys.
    std::vector<std::int8_t> apply_galois_ternary(const std::vector<std::int8_t>& s, u64 g) const;
};

}  // namespace hers::he

#endif  // HERS_CONTEXT_HPP
