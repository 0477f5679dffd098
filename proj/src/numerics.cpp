// Copyright (c) 2026 The mufno authors.
// SPDX-License-Identifier: Apache-2.0

#include "mufno/numerics.hpp"

#include <cmath>

namespace mufno {

double SeededRng::next_gaussian() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    const double u1 = next_uniform();
    const double u2 = next_uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * M_PI * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
}

void SeededRng::fill_gaussian(std::span<double> out, double mean, double std) {
    for (double& x : out) x = mean + std * next_gaussian();
}

// ---------------------------------------------------------------------------
// FFT
// ---------------------------------------------------------------------------

Fft::Fft(std::size_t n) : n_(n), half_(n / 2) {
    if (n < 2 || !is_pow2(n)) throw SizeError("Fft: length must be a power of two >= 2, got " + std::to_string(n));

    bitrev_.resize(half_);
    std::size_t bits = 0;
    while ((std::size_t{1} << bits) < half_) ++bits;
    for (std::size_t i = 0; i < half_; ++i) {
        std::size_t rev = 0, m = i;
        for (std::size_t j = 0; j < bits; ++j) {
            rev = (rev << 1) | (m & 1);
            m >>= 1;
        }
        bitrev_[i] = rev;
    }

    // Stage twiddles for the length-half_ complex core: for each block size
    // 2*hs the factors W_{2hs}^j = exp(-pi*i*j/hs), j < hs, stored contiguously.
    if (half_ >= 2) {
        stage_tw_.reserve(half_ - 1);
        for (std::size_t hs = 1; hs < half_; hs *= 2) {
            for (std::size_t j = 0; j < hs; ++j) {
                const double ang = -M_PI * static_cast<double>(j) / static_cast<double>(hs);
                stage_tw_.emplace_back(std::cos(ang), std::sin(ang));
            }
        }
    }

    pack_tw_.resize(half_ + 1);
    for (std::size_t k = 0; k <= half_; ++k) {
        const double ang = -2.0 * M_PI * static_cast<double>(k) / static_cast<double>(n_);
        pack_tw_[k] = cdouble(std::cos(ang), std::sin(ang));
    }
}

void Fft::complex_core(cdouble* data, bool inverse) const {
    const std::size_t h = half_;
    if (h == 1) return;
    for (std::size_t i = 0; i < h; ++i) {
        const std::size_t j = bitrev_[i];
        if (i < j) std::swap(data[i], data[j]);
    }
    const cdouble* tw = stage_tw_.data();
    for (std::size_t hs = 1; hs < h; hs *= 2) {
        for (std::size_t start = 0; start < h; start += 2 * hs) {
            for (std::size_t j = 0; j < hs; ++j) {
                const cdouble w = inverse ? std::conj(tw[j]) : tw[j];
                const cdouble t = w * data[start + j + hs];
                const cdouble u = data[start + j];
                data[start + j] = u + t;
                data[start + j + hs] = u - t;
            }
        }
        tw += hs;
    }
}

void Fft::forward(std::span<const double> in, std::span<cdouble> out) const {
    if (in.size() != n_) throw SizeError("rfft: expected length " + std::to_string(n_) + ", got " + std::to_string(in.size()));
    if (out.size() != bins()) throw SizeError("rfft: output must have n/2+1 bins");

    const std::size_t h = half_;
    std::vector<cdouble> z(h);
    for (std::size_t j = 0; j < h; ++j) z[j] = cdouble(in[2 * j], in[2 * j + 1]);
    complex_core(z.data(), false);

    // Untangle the packed transform: with A_k and B_k the DFTs of the even and
    // odd subsequences, X_k = A_k + W_n^k B_k.
    out[0] = cdouble(z[0].real() + z[0].imag(), 0.0);
    out[h] = cdouble(z[0].real() - z[0].imag(), 0.0);
    for (std::size_t k = 1; k < h; ++k) {
        const cdouble zk = z[k];
        const cdouble zc = std::conj(z[h - k]);
        const cdouble a = 0.5 * (zk + zc);
        const cdouble bb = cdouble(0.0, -0.5) * (zk - zc);  // (zk - zc) / (2i)
        out[k] = a + pack_tw_[k] * bb;
    }
}

void Fft::inverse(std::span<const cdouble> in, std::span<double> out) const {
    if (in.size() != bins()) throw SizeError("irfft: expected " + std::to_string(bins()) + " bins, got " + std::to_string(in.size()));
    if (out.size() != n_) throw SizeError("irfft: output must have length n");

    const std::size_t h = half_;
    const double x0 = in[0].real();
    const double xh = in[h].real();

    std::vector<cdouble> z(h);
    z[0] = cdouble(0.5 * (x0 + xh), 0.5 * (x0 - xh));
    for (std::size_t k = 1; k < h; ++k) {
        const cdouble xk = in[k];
        const cdouble xc = std::conj(in[h - k]);
        const cdouble a = 0.5 * (xk + xc);
        const cdouble bb = 0.5 * std::conj(pack_tw_[k]) * (xk - xc);
        z[k] = a + cdouble(0.0, 1.0) * bb;
    }
    complex_core(z.data(), true);

    const double scale = 1.0 / static_cast<double>(h);  // core is unnormalized
    for (std::size_t j = 0; j < h; ++j) {
        out[2 * j] = scale * z[j].real();
        out[2 * j + 1] = scale * z[j].imag();
    }
}

std::vector<cdouble> rfft(std::span<const double> signal) {
    Fft plan(signal.size());
    std::vector<cdouble> out(plan.bins());
    plan.forward(signal, out);
    return out;
}

std::vector<double> irfft(std::span<const cdouble> spectrum, std::size_t n) {
    Fft plan(n);
    std::vector<double> out(n);
    plan.inverse(spectrum, out);
    return out;
}

// ---------------------------------------------------------------------------
// Activations
// ---------------------------------------------------------------------------

namespace {
constexpr double kInvSqrt2 = 0.7071067811865475244;
constexpr double kInvSqrt2Pi = 0.3989422804014326779;

double normal_cdf(double x) { return 0.5 * (1.0 + std::erf(x * kInvSqrt2)); }
double normal_pdf(double x) { return kInvSqrt2Pi * std::exp(-0.5 * x * x); }
}  // namespace

double gelu(double x) { return x * normal_cdf(x); }
double gelu_prime(double x) { return normal_cdf(x) + x * normal_pdf(x); }
double tanh_act(double x) { return std::tanh(x); }
double tanh_prime(double x) {
    const double t = std::tanh(x);
    return 1.0 - t * t;
}

double activate(Activation a, double x) {
    switch (a) {
        case Activation::gelu: return gelu(x);
        case Activation::tanh: return tanh_act(x);
        default: return x;
    }
}

double activate_prime(Activation a, double x) {
    switch (a) {
        case Activation::gelu: return gelu_prime(x);
        case Activation::tanh: return tanh_prime(x);
        default: return 1.0;
    }
}

}  // namespace mufno
