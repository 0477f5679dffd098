// Copyright (c) 2026 The mufno authors.
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <cstdio>
#include <numeric>

#include "doctest.h"
#include "mufno/burgers.hpp"
#include "mufno/io_util.hpp"

using namespace mufno;

namespace {

double rel_l2(std::span<const double> a, std::span<const double> b) {
    double num = 0, den = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        num += (a[i] - b[i]) * (a[i] - b[i]);
        den += b[i] * b[i];
    }
    return std::sqrt(num) / std::sqrt(den);
}

double mean_of(std::span<const double> u) {
    return std::accumulate(u.begin(), u.end(), 0.0) / static_cast<double>(u.size());
}

double l2_of(std::span<const double> u) {
    double acc = 0;
    for (double x : u) acc += x * x;
    return std::sqrt(acc);
}

}  // namespace

TEST_CASE("grf: sigma zero gives the zero field") {
    GrfParams grf;
    grf.sigma = 0.0;
    SeededRng rng(1);
    const auto u = sample_grf(grf, Grid1D(64), rng);
    for (double x : u) CHECK(x == 0.0);
}

TEST_CASE("grf: equal seeds give identical fields") {
    GrfParams grf;
    SeededRng a(5), b(5);
    const auto ua = sample_grf(grf, Grid1D(128), a);
    const auto ub = sample_grf(grf, Grid1D(128), b);
    CHECK(ua == ub);
}

TEST_CASE("grf: pointwise variance matches the spectral sum") {
    GrfParams grf;  // tau=5, alpha=2, sigma normalized for unit std
    const Grid1D grid(64);
    double analytic = 0.0;
    for (std::size_t j = 1; j < grid.n / 2; ++j)
        analytic += 2.0 * grf.sigma * grf.sigma * std::pow(4.0 * M_PI * M_PI * j * j + grf.tau * grf.tau, -grf.alpha);

    SeededRng root(99);
    const int trials = 20000;
    double acc = 0.0, acc2 = 0.0;
    for (int t = 0; t < trials; ++t) {
        SeededRng rng = root.substream(t);
        const auto u = sample_grf(grf, grid, rng);
        acc += u[1];
        acc2 += u[1] * u[1];
    }
    const double var = acc2 / trials - (acc / trials) * (acc / trials);
    CHECK(var == doctest::Approx(analytic).epsilon(0.03));
    // the default sigma targets unit pointwise std (mode cutoff differences
    // are negligible at alpha=2)
    CHECK(analytic == doctest::Approx(1.0).epsilon(0.01));
}

TEST_CASE("solver: linear mode reproduces analytic heat decay") {
    const std::size_t n = 256;
    const double nu = 0.1, T = 1.0;
    std::vector<double> u0(n);
    for (std::size_t j = 0; j < n; ++j) u0[j] = std::sin(2.0 * M_PI * static_cast<double>(j) / n);
    const auto uT = solve_burgers(u0, nu, T, 500, /*include_nonlinear=*/false);
    const double decay = std::exp(-nu * 4.0 * M_PI * M_PI * T);  // ~0.019272
    std::vector<double> expect(n);
    for (std::size_t j = 0; j < n; ++j) expect[j] = decay * u0[j];
    CHECK(rel_l2(uT, expect) < 1e-6);
}

TEST_CASE("solver: constants are exact solutions") {
    std::vector<double> u0(128, 2.75);
    const auto uT = solve_burgers(u0, 0.1, 1.0, 200);
    for (double x : uT) CHECK(x == doctest::Approx(2.75).epsilon(1e-13));
}

TEST_CASE("solver: self-convergence at order >= 4") {
    const std::size_t n = 128;
    std::vector<double> u0(n);
    for (std::size_t j = 0; j < n; ++j) {
        const double x = static_cast<double>(j) / n;
        u0[j] = std::sin(2 * M_PI * x) + 0.4 * std::cos(4 * M_PI * x);
    }
    const double nu = 0.02, T = 0.5;
    const auto ref = solve_burgers(u0, nu, T, 4000);
    const auto coarse = solve_burgers(u0, nu, T, 125);
    const auto fine = solve_burgers(u0, nu, T, 250);
    const double e1 = rel_l2(coarse, ref);
    const double e2 = rel_l2(fine, ref);
    INFO("e(dt)=", e1, " e(dt/2)=", e2);
    CHECK(e1 > 1e-13);  // measurable
    const double order = std::log2(e1 / e2);
    CHECK(order >= 3.5);

    // at production step counts, halving dt moves the answer by < 1e-8
    const auto a = solve_burgers(u0, nu, T, 1000);
    const auto b = solve_burgers(u0, nu, T, 2000);
    CHECK(rel_l2(a, b) < 1e-8);
}

TEST_CASE("solver: mean conservation and energy dissipation") {
    GrfParams grf;
    const Grid1D grid(256);
    SeededRng root(123);
    for (int trial = 0; trial < 20; ++trial) {
        SeededRng rng = root.substream(trial);
        const auto u0 = sample_grf(grf, grid, rng);
        const auto uT = solve_burgers(u0, 0.1, 1.0, 400);
        CHECK(std::abs(mean_of(uT) - mean_of(u0)) < 1e-10);
        CHECK(l2_of(uT) <= l2_of(u0) * (1.0 + 1e-9));
    }
}

TEST_CASE("solver: CFL pre-check rejects too-few steps") {
    const std::size_t n = 1024;
    GrfParams grf;
    SeededRng rng(7);
    auto u0 = sample_grf(grf, Grid1D(n), rng);
    for (double& x : u0) x *= 50.0;  // violent field
    CHECK_THROWS_AS(solve_burgers(u0, 1e-6, 1.0, 3), SolverError);
}

TEST_CASE("dataset: shapes, determinism, invariants at desk scale") {
    BurgersConfig cfg;
    cfg.grid_n_solver = 512;
    cfg.grid_n_train = 128;
    cfg.n_train = 6;
    cfg.n_eval = 3;
    cfg.steps = 400;
    cfg.seed = 2024;

    const auto pair1 = build_dataset(cfg);
    CHECK(pair1.train.inputs.b == 6);
    CHECK(pair1.train.inputs.n == 128);
    CHECK(pair1.train.inputs.c == 1);
    CHECK(pair1.eval.targets.b == 3);

    const auto pair2 = build_dataset(cfg);
    CHECK(pair1.train.inputs.v == pair2.train.inputs.v);
    CHECK(pair1.eval.targets.v == pair2.eval.targets.v);

    // parallel generation is order-independent
    const auto pair4 = build_dataset(cfg, 4);
    CHECK(pair1.train.targets.v == pair4.train.targets.v);
    CHECK(pair1.eval.inputs.v == pair4.eval.inputs.v);

    // train and eval draws are disjoint
    CHECK(pair1.train.inputs.at(0, 0, 0) != pair1.eval.inputs.at(0, 0, 0));

    // per-sample energy dissipation holds after downsampling too
    for (std::size_t s = 0; s < pair1.train.inputs.b; ++s) {
        double e_in = 0, e_out = 0;
        for (std::size_t j = 0; j < pair1.train.inputs.n; ++j) {
            e_in += pair1.train.inputs.at(s, j, 0) * pair1.train.inputs.at(s, j, 0);
            e_out += pair1.train.targets.at(s, j, 0) * pair1.train.targets.at(s, j, 0);
        }
        CHECK(e_out <= e_in * (1.0 + 1e-9));
    }
}

TEST_CASE("dataset: downsampled solve agrees with direct coarse solve") {
    BurgersConfig cfg;
    cfg.grid_n_solver = 1024;
    cfg.grid_n_train = 256;
    cfg.steps = 400;
    GrfParams grf;
    SeededRng rng(55);
    const auto u0_fine = sample_grf(grf, Grid1D(cfg.grid_n_solver), rng);
    const auto u1_fine = solve_burgers(u0_fine, cfg.nu, cfg.T, cfg.steps);

    const int stride = cfg.grid_n_solver / cfg.grid_n_train;
    std::vector<double> u0_coarse(cfg.grid_n_train), u1_down(cfg.grid_n_train);
    for (int j = 0; j < cfg.grid_n_train; ++j) {
        u0_coarse[j] = u0_fine[j * stride];
        u1_down[j] = u1_fine[j * stride];
    }
    const auto u1_coarse = solve_burgers(u0_coarse, cfg.nu, cfg.T, cfg.steps);
    CHECK(rel_l2(u1_down, u1_coarse) < 0.02);
}

TEST_CASE("dataset file: save/load round-trip is bitwise") {
    BurgersConfig cfg;
    cfg.grid_n_solver = 256;
    cfg.grid_n_train = 64;
    cfg.n_train = 3;
    cfg.n_eval = 2;
    cfg.steps = 200;
    const auto pair = build_dataset(cfg);

    const std::string path = "ds_test.fnod";
    save_dataset(pair.train, path);
    const auto loaded = load_dataset(path);
    CHECK(loaded.inputs.v == pair.train.inputs.v);
    CHECK(loaded.targets.v == pair.train.targets.v);
    CHECK(loaded.grid.n == pair.train.grid.n);
    std::remove(path.c_str());
}

TEST_CASE("dataset file: corruption and version errors") {
    BurgersConfig cfg;
    cfg.grid_n_solver = 256;
    cfg.grid_n_train = 64;
    cfg.n_train = 2;
    cfg.n_eval = 1;
    cfg.steps = 200;
    const auto pair = build_dataset(cfg);
    const std::string path = "ds_bad.fnod";
    save_dataset(pair.eval, path);

    // truncation
    {
        auto r = ByteReader::from_file(path);
        ByteWriter w;
        w.bytes(r.all().subspan(0, r.all().size() - 9));
        w.write_file(path);
    }
    CHECK_THROWS_AS(load_dataset(path), FormatError);

    // version bump
    save_dataset(pair.eval, path);
    {
        auto r = ByteReader::from_file(path);
        std::vector<unsigned char> bytes(r.all().begin(), r.all().end());
        bytes[4] = 2;  // version field
        ByteWriter w;
        w.bytes(bytes);
        w.write_file(path);
    }
    CHECK_THROWS_WITH_AS(load_dataset(path), doctest::Contains("version"), FormatError);

    // flipped payload byte breaks the CRC
    save_dataset(pair.eval, path);
    {
        auto r = ByteReader::from_file(path);
        std::vector<unsigned char> bytes(r.all().begin(), r.all().end());
        bytes[100] ^= 0x01;
        ByteWriter w;
        w.bytes(bytes);
        w.write_file(path);
    }
    CHECK_THROWS_WITH_AS(load_dataset(path), doctest::Contains("CRC"), FormatError);
    std::remove(path.c_str());
}
