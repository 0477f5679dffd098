// Copyright (c) 2026 The mufno authors.
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <vector>

#include "doctest.h"
#include "mufno/numerics.hpp"

using namespace mufno;

namespace {

// Independent O(n^2) DFT oracle, bins 0..n/2.
std::vector<cdouble> dft_oracle(const std::vector<double>& x) {
    const std::size_t n = x.size();
    std::vector<cdouble> out(n / 2 + 1, cdouble(0.0, 0.0));
    for (std::size_t k = 0; k <= n / 2; ++k) {
        cdouble acc(0.0, 0.0);
        for (std::size_t j = 0; j < n; ++j) {
            const double ang = -2.0 * M_PI * static_cast<double>(j * k) / static_cast<double>(n);
            acc += x[j] * cdouble(std::cos(ang), std::sin(ang));
        }
        out[k] = acc;
    }
    return out;
}

// Independent inverse-DFT oracle over the Hermitian extension.
std::vector<double> idft_oracle(const std::vector<cdouble>& spec, std::size_t n) {
    std::vector<double> out(n, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
        double acc = spec[0].real() + spec[n / 2].real() * ((j % 2 == 0) ? 1.0 : -1.0);
        for (std::size_t k = 1; k < n / 2; ++k) {
            const double ang = 2.0 * M_PI * static_cast<double>(j * k) / static_cast<double>(n);
            acc += 2.0 * (spec[k].real() * std::cos(ang) - spec[k].imag() * std::sin(ang));
        }
        out[j] = acc / static_cast<double>(n);
    }
    return out;
}

std::vector<double> random_signal(std::size_t n, SeededRng& rng) {
    std::vector<double> x(n);
    rng.fill_gaussian(x, 0.0, 1.0);
    return x;
}

}  // namespace

TEST_CASE("rfft: delta spreads flat across the spectrum") {
    const auto s = rfft(std::vector<double>{1, 0, 0, 0});
    REQUIRE(s.size() == 3);
    for (const auto& b : s) {
        CHECK(b.real() == doctest::Approx(1.0).epsilon(1e-14));
        CHECK(b.imag() == doctest::Approx(0.0).epsilon(1e-14));
    }
}

TEST_CASE("rfft: constant signal is DC only") {
    const auto s = rfft(std::vector<double>{1, 1, 1, 1});
    CHECK(s[0].real() == doctest::Approx(4.0));
    CHECK(std::abs(s[1]) < 1e-14);
    CHECK(std::abs(s[2]) < 1e-14);
}

TEST_CASE("rfft: pure cosine lands in bin 1 with weight n/2") {
    const std::size_t n = 8;
    std::vector<double> x(n);
    for (std::size_t j = 0; j < n; ++j) x[j] = std::cos(2.0 * M_PI * static_cast<double>(j) / static_cast<double>(n));
    const auto s = rfft(x);
    CHECK(std::abs(s[1] - cdouble(4.0, 0.0)) < 1e-12);
    for (std::size_t k = 0; k <= n / 2; ++k) {
        if (k == 1) continue;
        CHECK(std::abs(s[k]) < 1e-12);
    }
}

TEST_CASE("rfft matches the direct DFT oracle on random signals") {
    SeededRng rng(31);
    for (std::size_t n : {4u, 8u, 64u, 256u}) {
        const auto x = random_signal(n, rng);
        const auto fast = rfft(x);
        const auto slow = dft_oracle(x);
        for (std::size_t k = 0; k <= n / 2; ++k) CHECK(std::abs(fast[k] - slow[k]) < 1e-9 * static_cast<double>(n));
    }
}

TEST_CASE("rfft rejects non-power-of-two lengths") {
    CHECK_THROWS_AS(rfft(std::vector<double>(12, 0.0)), SizeError);
    CHECK_THROWS_AS(rfft(std::vector<double>(1, 0.0)), SizeError);
}

TEST_CASE("irfft: DC-only inverse is constant") {
    const std::vector<cdouble> spec{cdouble(4, 0), cdouble(0, 0), cdouble(0, 0)};
    const auto x = irfft(spec, 4);
    for (double v : x) CHECK(v == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("irfft: sine reconstruction from an imaginary bin") {
    const std::vector<cdouble> spec{cdouble(0, 0), cdouble(0, 2), cdouble(0, 0)};
    const auto x = irfft(spec, 4);
    const std::vector<double> expect{0, -1, 0, 1};
    for (std::size_t j = 0; j < 4; ++j) CHECK(x[j] == doctest::Approx(expect[j]).epsilon(1e-13));
    // must agree with the direct inverse-DFT oracle as well
    const auto oracle = idft_oracle(spec, 4);
    for (std::size_t j = 0; j < 4; ++j) CHECK(x[j] == doctest::Approx(oracle[j]).epsilon(1e-13));
}

TEST_CASE("irfft(rfft(x)) is the identity to 1e-10 relative") {
    SeededRng rng(7);
    const std::size_t n = 1024;
    const auto x = random_signal(n, rng);
    const auto back = irfft(rfft(x), n);
    double num = 0, den = 0;
    for (std::size_t j = 0; j < n; ++j) {
        num += (back[j] - x[j]) * (back[j] - x[j]);
        den += x[j] * x[j];
    }
    CHECK(std::sqrt(num / den) < 1e-10);
}

TEST_CASE("irfft rejects mismatched spectrum lengths") {
    std::vector<cdouble> spec(4, cdouble(0, 0));
    CHECK_THROWS_AS(irfft(spec, 4), SizeError);
}

TEST_CASE("Parseval identity holds on random real signals") {
    SeededRng rng(11);
    for (std::size_t n : {8u, 128u, 1024u}) {
        const auto x = random_signal(n, rng);
        const auto s = rfft(x);
        double lhs = 0;
        for (double v : x) lhs += v * v;
        double rhs = std::norm(s[0]) + std::norm(s[n / 2]);
        for (std::size_t k = 1; k < n / 2; ++k) rhs += 2.0 * std::norm(s[k]);
        rhs /= static_cast<double>(n);
        CHECK(std::abs(lhs - rhs) / lhs < 1e-9);
    }
}

TEST_CASE("rfft is linear") {
    SeededRng rng(13);
    const std::size_t n = 256;
    const auto a = random_signal(n, rng);
    const auto b = random_signal(n, rng);
    const double alpha = 0.37, beta = -2.25;
    std::vector<double> combo(n);
    for (std::size_t j = 0; j < n; ++j) combo[j] = alpha * a[j] + beta * b[j];
    const auto sa = rfft(a), sb = rfft(b), sc = rfft(combo);
    for (std::size_t k = 0; k <= n / 2; ++k) CHECK(std::abs(sc[k] - (alpha * sa[k] + beta * sb[k])) < 1e-10 * n);
}

TEST_CASE("gelu values and derivative") {
    CHECK(gelu(0.0) == 0.0);
    CHECK(gelu_prime(0.0) == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(gelu(3.0) == doctest::Approx(2.99595).epsilon(1e-4 / 2.99595));

    // derivative vs central differences over [-6, 6]
    for (int i = -60; i <= 60; ++i) {
        const double x = 0.1 * i;
        const double h = 1e-5;
        const double fd = (gelu(x + h) - gelu(x - h)) / (2 * h);
        CHECK(std::abs(fd - gelu_prime(x)) < 1e-7);
    }
    for (int i = -60; i <= 60; ++i) {
        const double x = 0.1 * i;
        const double h = 1e-5;
        const double fd = (tanh_act(x + h) - tanh_act(x - h)) / (2 * h);
        CHECK(std::abs(fd - tanh_prime(x)) < 1e-7);
    }
}

TEST_CASE("rng: identical seeds give identical streams") {
    SeededRng a(123456789), b(123456789);
    for (int i = 0; i < 1000000; ++i) {
        if (a.next_gaussian() != b.next_gaussian()) {
            FAIL("streams diverged at draw ", i);
        }
    }
    CHECK(true);
}

TEST_CASE("rng: substreams are distinct and order-independent") {
    SeededRng root(42);
    SeededRng s0 = root.substream(0);
    SeededRng s1 = root.substream(1);
    CHECK(s0.next_u64() != s1.next_u64());

    // deriving a substream does not consume root state
    SeededRng root2(42);
    (void)root2.substream(5);
    SeededRng s0b = root2.substream(0);
    CHECK(s0b.next_u64() == root.substream(0).next_u64());
}

TEST_CASE("rng: gaussian moments are sane") {
    SeededRng rng(99);
    double sum = 0, sumsq = 0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
        const double g = rng.next_gaussian();
        sum += g;
        sumsq += g * g;
    }
    CHECK(std::abs(sum / n) < 0.01);
    CHECK(std::abs(sumsq / n - 1.0) < 0.02);
}
