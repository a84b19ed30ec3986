// Copyright 2026 The HERS Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#include "hers/embedding.hpp"

#include <cmath>

#include "hers/errors.hpp"

namespace hers {

namespace {
constexpr double kPi = 3.14159265358979323846264338327950288;
}

SlotCodec::SlotCodec(std::uint32_t ring_degree) : n_(ring_degree) {
    if (n_ < 4 || (n_ & (n_ - 1)) != 0) {
        throw ParameterError("ring degree must be a power of two >= 4");
    }
    log_n_ = 0;
    while ((1u << log_n_) < n_) ++log_n_;

    const std::uint32_t two_n = 2 * n_;
    zeta_pow_.resize(n_);
    for (std::uint32_t k = 0; k < n_; ++k) {
        const double angle = kPi * static_cast<double>(k) / static_cast<double>(n_);
        zeta_pow_[k] = {std::cos(angle), std::sin(angle)};
    }
    fft_roots_.resize(n_);
    for (std::uint32_t k = 0; k < n_; ++k) {
        const double angle = 2.0 * kPi * static_cast<double>(k) / static_cast<double>(n_);
        fft_roots_[k] = {std::cos(angle), std::sin(angle)};
    }

    slot_index_.resize(n_ / 2);
    conj_index_.resize(n_ / 2);
    std::uint64_t g = 1;  // 5^j mod 2n
    for (std::uint32_t j = 0; j < n_ / 2; ++j) {
        slot_index_[j] = static_cast<std::uint32_t>((g - 1) / 2);
        conj_index_[j] = n_ - 1 - slot_index_[j];
        g = (g * 5) % two_n;
    }

    bitrev_.resize(n_);
    for (std::uint32_t i = 0; i < n_; ++i) {
        std::uint32_t r = 0, x = i;
        for (int b = 0; b < log_n_; ++b) {
            r = (r << 1) | (x & 1);
            x >>= 1;
        }
        bitrev_[i] = r;
    }
}

void SlotCodec::fft(std::vector<std::complex<double>>& a, bool inverse) const {
    const std::uint32_t n = n_;
    for (std::uint32_t i = 0; i < n; ++i) {
        const std::uint32_t j = bitrev_[i];
        if (i < j) std::swap(a[i], a[j]);
    }
    for (std::uint32_t len = 2; len <= n; len <<= 1) {
        const std::uint32_t step = n / len;
        for (std::uint32_t i = 0; i < n; i += len) {
            for (std::uint32_t k = 0; k < len / 2; ++k) {
                std::complex<double> w = fft_roots_[k * step];
                if (inverse) w = std::conj(w);
                const std::complex<double> u = a[i + k];
                const std::complex<double> v = a[i + k + len / 2] * w;
                a[i + k] = u + v;
                a[i + k + len / 2] = u - v;
            }
        }
    }
    if (inverse) {
        const double inv_n = 1.0 / static_cast<double>(n);
        for (auto& x : a) x *= inv_n;
    }
}

std::vector<double> SlotCodec::embed(std::span<const double> values, double scale) const {
    if (values.size() > n_ / 2) {
        throw EncodingError("too many values: " + std::to_string(values.size()) + " > " +
                            std::to_string(n_ / 2) + " slots");
    }
    std::vector<std::complex<double>> evals(n_, std::complex<double>{0.0, 0.0});
    for (std::uint32_t j = 0; j < values.size(); ++j) {
        const std::complex<double> z{values[j] * scale, 0.0};
        evals[slot_index_[j]] = z;
        evals[conj_index_[j]] = std::conj(z);
    }
    fft(evals, /*inverse=*/true);
    std::vector<double> coeffs(n_);
    for (std::uint32_t k = 0; k < n_; ++k) {
        // untwist by zeta^{-k}; the imaginary part is fp noise by symmetry
        coeffs[k] = (evals[k] * std::conj(zeta_pow_[k])).real();
    }
    return coeffs;
}

std::vector<double> SlotCodec::unembed(std::span<const double> coeffs, double scale,
                                       std::uint32_t count) const {
    std::vector<std::complex<double>> twisted(n_);
    for (std::uint32_t k = 0; k < n_; ++k) twisted[k] = coeffs[k] * zeta_pow_[k];
    fft(twisted, /*inverse=*/false);
    std::vector<double> out(count);
    const double inv_scale = 1.0 / scale;
    for (std::uint32_t j = 0; j < count; ++j) {
        out[j] = twisted[slot_index_[j]].real() * inv_scale;
    }
    return out;
}

}  // namespace hers
