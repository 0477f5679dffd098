// Copyright (c) 2026 The mufno authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <complex>
#include <cstdint>
#include <span>
#include <vector>

#include "mufno/errors.hpp"

namespace mufno {

using cdouble = std::complex<double>;

constexpr bool is_pow2(std::size_t n) { return n >= 1 && (n & (n - 1)) == 0; }

/// Uniform periodic 1D grid, x_j = j * domain_length / n.
struct Grid1D {
    std::size_t n = 0;
    double domain_length = 1.0;

    Grid1D() = default;
    Grid1D(std::size_t n_, double length = 1.0) : n(n_), domain_length(length) { validate(); }

    void validate() const {
        if (n < 4 || !is_pow2(n))
            throw SizeError("Grid1D: n must be a power of two >= 4, got " + std::to_string(n));
        if (!(domain_length > 0.0)) throw SizeError("Grid1D: domain_length must be positive");
    }
    double x(std::size_t j) const { return static_cast<double>(j) * domain_length / static_cast<double>(n); }
    double dx() const { return domain_length / static_cast<double>(n); }
};

// ---------------------------------------------------------------------------
// Seeded counter-based RNG.
//
// Stream function: draw i of stream with key k is mix64(k + i * GAMMA), the
// splitmix construction. Pure integer arithmetic, so identical seeds give
// identical streams on every platform. Substreams are derived by remixing the
// key with the substream index; each substream starts at counter 0.
// ---------------------------------------------------------------------------
class SeededRng {
  public:
    explicit SeededRng(std::uint64_t seed) : key_(mix64(seed ^ kKeyTweak)) {}

    /// Independent stream for per-tensor / per-sample / per-cell work.
    SeededRng substream(std::uint64_t stream) const {
        SeededRng r(0);
        r.key_ = mix64(key_ ^ mix64(stream + kStreamTweak));
        r.counter_ = 0;
        r.has_spare_ = false;
        return r;
    }

    std::uint64_t next_u64() { return mix64(key_ + (counter_++) * kGamma); }

    /// Uniform in (0, 1).
    double next_uniform() {
        // 53-bit mantissa; offset keeps the value strictly inside (0, 1).
        return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
    }

    /// Standard normal via Box-Muller (cached spare).
    double next_gaussian();

    void fill_gaussian(std::span<double> out, double mean, double std);

  private:
    static constexpr std::uint64_t kGamma = 0x9e3779b97f4a7c15ull;
    static constexpr std::uint64_t kKeyTweak = 0x8e5c4d1f0b2a6e93ull;
    static constexpr std::uint64_t kStreamTweak = 0x5851f42d4c957f2dull;

    static std::uint64_t mix64(std::uint64_t z) {
        z ^= z >> 30;
        z *= 0xbf58476d1ce4e5b9ull;
        z ^= z >> 27;
        z *= 0x94d049bb133111ebull;
        z ^= z >> 31;
        return z;
    }

    std::uint64_t key_;
    std::uint64_t counter_ = 0;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

// ---------------------------------------------------------------------------
// Real 1D FFT pair, iterative radix-2, power-of-two lengths only.
//
// Conventions: forward is the unnormalized DFT restricted to bins 0..n/2,
//   X_k = sum_j x_j exp(-2*pi*i*j*k/n);
// inverse carries the 1/n factor and assumes Hermitian symmetry. The
// imaginary parts of bins 0 and n/2 are ignored (treated as zero).
// ---------------------------------------------------------------------------
class Fft {
  public:
    explicit Fft(std::size_t n);

    std::size_t n() const { return n_; }
    std::size_t bins() const { return n_ / 2 + 1; }

    /// in: n reals; out: n/2+1 bins. Thread-safe (scratch is local).
    void forward(std::span<const double> in, std::span<cdouble> out) const;

    /// in: n/2+1 bins; out: n reals.
    void inverse(std::span<const cdouble> in, std::span<double> out) const;

  private:
    // In-place complex FFT of length n_/2 on caller scratch.
    void complex_core(cdouble* data, bool inverse) const;

    std::size_t n_;                    // real length
    std::size_t half_;                 // complex core length
    std::vector<std::size_t> bitrev_;  // length half_
    std::vector<cdouble> stage_tw_;    // concatenated per-stage twiddles, length half_-1
    std::vector<cdouble> pack_tw_;     // W_n^k for the real<->complex packing, k = 0..half_
};

/// One-shot helpers (build the plan internally).
std::vector<cdouble> rfft(std::span<const double> signal);
std::vector<double> irfft(std::span<const cdouble> spectrum, std::size_t n);

// ---------------------------------------------------------------------------
// Activations. The GELU is the exact error-function form x * Phi(x).
// ---------------------------------------------------------------------------
enum class Activation { gelu, tanh, identity };

double gelu(double x);
double gelu_prime(double x);
double tanh_act(double x);
double tanh_prime(double x);

double activate(Activation a, double x);
double activate_prime(Activation a, double x);

// ---------------------------------------------------------------------------
// Minimal dense [b, n, c] tensor of doubles, row-major.
// ---------------------------------------------------------------------------
struct Tensor3 {
    std::vector<double> v;
    std::size_t b = 0, n = 0, c = 0;

    Tensor3() = default;
    Tensor3(std::size_t b_, std::size_t n_, std::size_t c_) : v(b_ * n_ * c_, 0.0), b(b_), n(n_), c(c_) {}

    double& at(std::size_t i, std::size_t j, std::size_t k) { return v[(i * n + j) * c + k]; }
    double at(std::size_t i, std::size_t j, std::size_t k) const { return v[(i * n + j) * c + k]; }
    std::size_t size() const { return v.size(); }
    bool same_shape(const Tensor3& o) const { return b == o.b && n == o.n && c == o.c; }
};

}  // namespace mufno
