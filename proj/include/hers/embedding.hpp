// Copyright 2026 The HERS Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#ifndef HERS_EMBEDDING_HPP
#define HERS_EMBEDDING_HPP

#include <complex>
#include <cstdint>
#include <span>
#include <vector>

namespace hers {

// Canonical-embedding codec for the cyclotomic ring R = Z[X]/(X^n + 1).
//
// A real polynomial m of degree < n is identified with the n/2 complex slot
// values z_j = m(zeta^{5^j}) where zeta = exp(i*pi/n). The codec evaluates
// and inverts that map with a size-n FFT after twisting by powers of zeta,
// so both directions cost O(n log n). Slot j+r of m(X^{5^r}) equals slot j
// of m, which is what makes key-switched Galois maps act as slot rotations.
class SlotCodec {
public:
    explicit SlotCodec(std::uint32_t ring_degree);

    std::uint32_t slot_count() const { return n_ / 2; }

    // values (length <= n/2, zero-padded) -> real coefficient vector, scaled.
    // Output coefficients are NOT rounded; the caller quantizes.
    std::vector<double> embed(std::span<const double> values, double scale) const;

    // real coefficient vector -> first `count` slot values, divided by scale.
    std::vector<double> unembed(std::span<const double> coeffs, double scale,
                                std::uint32_t count) const;

private:
    void fft(std::vector<std::complex<double>>& a, bool inverse) const;

    std::uint32_t n_;
    int log_n_;
    std::vector<std::complex<double>> zeta_pow_;       // zeta^k, k < n
    std::vector<std::uint32_t> slot_index_;            // j -> (5^j - 1)/2 mod n
    std::vector<std::uint32_t> conj_index_;            // j -> index of conjugate root
    std::vector<std::complex<double>> fft_roots_;      // e^{2 pi i k / n}, k < n
    std::vector<std::uint32_t> bitrev_;
};

}  // namespace hers

#endif  // HERS_EMBEDDING_HPP
