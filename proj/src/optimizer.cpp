// Copyright (c) 2026 The mufno authors.
// SPDX-License-Identifier: Apache-2.0

#include "mufno/optimizer.hpp"

#include <algorithm>
#include <cmath>

namespace mufno {

AdamState AdamState::init(const ModelParams& params, double beta1_, double beta2_, double eps_) {
    AdamState s;
    s.m = Gradients::zeros_like(params);
    s.v = Gradients::zeros_like(params);
    s.t = 0;
    s.beta1 = beta1_;
    s.beta2 = beta2_;
    s.eps = eps_;
    return s;
}

void clip_elementwise(Gradients& grads, double c, ClipScope scope) {
    if (!(c > 0.0)) throw ConfigError("clip_elementwise: clip value must be positive");
    for (auto& ref : tensor_refs(grads)) {
        if (scope == ClipScope::spectral_only && !ref.spectral) continue;
        for (double& g : ref.data) g = std::clamp(g, -c, c);
    }
}

void adam_step(ModelParams& params, const Gradients& grads, AdamState& state, const LrGroups& lr,
               std::optional<double> update_clip, ClipScope update_clip_scope) {
    if (!(lr.spectral >= 0.0) || !(lr.other >= 0.0)) throw ConfigError("adam_step: learning rates must be >= 0");

    const auto gref = tensor_views(grads);
    const std::string bad = first_nonfinite(gref);
    if (!bad.empty()) throw NumericError("adam_step: non-finite gradient in " + bad + "; step rejected");

    const auto pref = tensor_refs(params);
    const auto mref = tensor_refs(state.m);
    const auto vref = tensor_refs(state.v);

    state.t += 1;
    const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.t));
    const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.t));

    for (std::size_t ti = 0; ti < pref.size(); ++ti) {
        const double rate = pref[ti].spectral ? lr.spectral : lr.other;
        const bool clip_here = update_clip && (update_clip_scope == ClipScope::all || pref[ti].spectral);
        auto p = pref[ti].data;
        auto g = gref[ti].data;
        auto m = mref[ti].data;
        auto v = vref[ti].data;
        for (std::size_t i = 0; i < p.size(); ++i) {
            m[i] = state.beta1 * m[i] + (1.0 - state.beta1) * g[i];
            v[i] = state.beta2 * v[i] + (1.0 - state.beta2) * g[i] * g[i];
            double dir = (m[i] / bc1) / (std::sqrt(v[i] / bc2) + state.eps);
            if (clip_here) dir = std::clamp(dir, -*update_clip, *update_clip);
            p[i] -= rate * dir;
        }
    }
}

double lr_at(const LrSchedule& schedule, double base_lr, int step) {
    if (step < 0) throw ConfigError("lr_at: step must be >= 0");
    int hits = 0;
    for (int ms : schedule.milestones)
        if (ms <= step) ++hits;
    return base_lr * std::pow(schedule.factor, hits);
}

}  // namespace mufno
