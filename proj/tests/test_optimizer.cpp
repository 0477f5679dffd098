// Copyright (c) 2026 The mufno authors.
// SPDX-License-Identifier: Apache-2.0

#include <cmath>

#include "doctest.h"
#include "mufno/optimizer.hpp"

using namespace mufno;

namespace {

FnoConfig cfg() {
    FnoConfig c;
    c.L = 1;
    c.m = 2;
    c.K = 2;
    return c;
}

ModelParams zero_params() {
    const auto c = cfg();
    ModelParams p;
    p.P = Affine::zeros(c.m, c.lifted_in_channels());
    p.Q1 = Affine::zeros(c.m, c.m);
    p.Q2 = Affine::zeros(c.out_channels, c.m);
    p.W.push_back(Affine::zeros(c.m, c.m));
    p.spectral.push_back(SpectralConvParams::zeros(c.K, c.m));
    return p;
}

Gradients const_grads(const ModelParams& p, double value) {
    Gradients g = Gradients::zeros_like(p);
    for (auto& ref : tensor_refs(g))
        for (double& x : ref.data) x = value;
    return g;
}

}  // namespace

TEST_CASE("clip_elementwise clamps spectral components to [-c, c]") {
    auto p = zero_params();
    Gradients g = Gradients::zeros_like(p);
    g.spectral[0].rat(0, 0, 0) = cdouble(0.5, -0.5);
    g.spectral[0].rat(1, 1, 1) = cdouble(-0.003, 0.002);
    g.P.w[0] = 0.7;

    clip_elementwise(g, 0.01, ClipScope::spectral_only);
    CHECK(g.spectral[0].rat(0, 0, 0).real() == 0.01);
    CHECK(g.spectral[0].rat(0, 0, 0).imag() == -0.01);
    CHECK(g.spectral[0].rat(1, 1, 1).real() == -0.003);  // within bound
    CHECK(g.spectral[0].rat(1, 1, 1).imag() == 0.002);
    CHECK(g.P.w[0] == 0.7);  // untouched under spectral_only

    clip_elementwise(g, 0.01, ClipScope::all);
    CHECK(g.P.w[0] == 0.01);

    Gradients zeros = Gradients::zeros_like(p);
    clip_elementwise(zeros, 0.01, ClipScope::all);
    for (auto& ref : tensor_refs(zeros))
        for (double x : ref.data) CHECK(x == 0.0);
}

TEST_CASE("adam first step moves by ~lr against the gradient sign") {
    auto p = zero_params();
    const auto g = const_grads(p, 0.5);
    auto st = AdamState::init(p, 0.9, 0.999, 1e-8);
    adam_step(p, g, st, LrGroups{0.1, 0.1});
    for (auto& ref : tensor_refs(p))
        for (double x : ref.data) CHECK(x == doctest::Approx(-0.1).epsilon(1e-6));
    CHECK(st.t == 1);
}

TEST_CASE("adam with zero learning rates updates moments but not parameters") {
    auto p = zero_params();
    p.P.w[0] = 1.5;
    const auto g = const_grads(p, 0.25);
    auto st = AdamState::init(p, 0.9, 0.999, 1e-8);
    adam_step(p, g, st, LrGroups{0.0, 0.0});
    CHECK(p.P.w[0] == 1.5);
    CHECK(st.m.P.w[0] == doctest::Approx(0.025));
    CHECK(st.v.P.w[0] == doctest::Approx(0.25 * 0.25 * 0.001));
}

TEST_CASE("adam per-group rates: spectral updates scale with the spectral lr") {
    auto p = zero_params();
    const auto g = const_grads(p, 1.0);
    auto st = AdamState::init(p, 0.9, 0.999, 1e-8);
    adam_step(p, g, st, LrGroups{1e-3, 2e-3});
    // first Adam step magnitude is lr * g/(|g| + eps) ~= lr
    const double spectral_update = std::abs(p.spectral[0].rat(0, 0, 0).real());
    const double other_update = std::abs(p.P.w[0]);
    CHECK(spectral_update == doctest::Approx(1e-3).epsilon(1e-6));
    CHECK(other_update == doctest::Approx(2e-3).epsilon(1e-6));
    CHECK(spectral_update / other_update == doctest::Approx(0.5).epsilon(1e-9));
}

TEST_CASE("adam rejects non-finite gradients without touching state") {
    auto p = zero_params();
    auto g = const_grads(p, 0.1);
    g.W[0].w[1] = std::nan("");
    auto st = AdamState::init(p, 0.9, 0.999, 1e-8);
    CHECK_THROWS_AS(adam_step(p, g, st, LrGroups{1e-3, 1e-3}), NumericError);
    CHECK(st.t == 0);
    CHECK(p.P.w[0] == 0.0);
}

TEST_CASE("adam determinism: identical inputs give bitwise-identical steps") {
    auto run = [] {
        auto p = zero_params();
        p.Q1.w[3] = 0.25;
        auto g = const_grads(p, 0.01);
        g.P.w[0] = -0.02;
        auto st = AdamState::init(p, 0.9, 0.999, 1e-8);
        for (int i = 0; i < 7; ++i) adam_step(p, g, st, LrGroups{3e-4, 1e-3});
        return p;
    };
    const auto a = run();
    const auto b = run();
    CHECK(a.Q1.w == b.Q1.w);
    CHECK(a.P.w == b.P.w);
    for (std::size_t i = 0; i < a.spectral[0].r.size(); ++i) CHECK(a.spectral[0].r[i] == b.spectral[0].r[i]);
}

TEST_CASE("adam update magnitude stays bounded by ~lr on random problems") {
    SeededRng rng(314);
    auto p = zero_params();
    auto st = AdamState::init(p, 0.9, 0.999, 1e-8);
    const double lr = 1e-2;
    for (int step = 0; step < 200; ++step) {
        auto g = Gradients::zeros_like(p);
        for (auto& ref : tensor_refs(g))
            for (double& x : ref.data) x = rng.next_gaussian();
        auto before = p;
        adam_step(p, g, st, LrGroups{lr, lr});
        const auto pa = tensor_refs(before);
        const auto pb = tensor_refs(p);
        for (std::size_t t = 0; t < pa.size(); ++t)
            for (std::size_t i = 0; i < pa[t].data.size(); ++i)
                CHECK(std::abs(pb[t].data[i] - pa[t].data[i]) <= 3.0 * lr);
    }
}

TEST_CASE("lr_at applies factor per passed milestone") {
    LrSchedule sch;
    sch.milestones = {50, 100};
    sch.factor = 0.5;
    CHECK(lr_at(sch, 1e-3, 0) == 1e-3);
    CHECK(lr_at(sch, 1e-3, 49) == 1e-3);
    CHECK(lr_at(sch, 1e-3, 50) == doctest::Approx(5e-4));
    CHECK(lr_at(sch, 1e-3, 99) == doctest::Approx(5e-4));
    CHECK(lr_at(sch, 1e-3, 120) == doctest::Approx(2.5e-4));
    CHECK_THROWS_AS(lr_at(sch, 1e-3, -1), ConfigError);
}
