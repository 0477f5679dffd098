// Copyright (c) 2026 The mufno authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>

#include "mufno/autodiff.hpp"
#include "mufno/parametrization.hpp"

namespace mufno {

/// Adam moment buffers mirroring the parameter shapes.
struct AdamState {
    Gradients m, v;
    std::uint64_t t = 0;
    double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;

    static AdamState init(const ModelParams& params, double beta1, double beta2, double eps);
};

/// Per-group learning rates: spectral tensors vs everything else.
struct LrGroups {
    double spectral = 0.0;
    double other = 0.0;
};

/// Clamp every scalar gradient component (re and im separately) to [-c, c].
void clip_elementwise(Gradients& grads, double c, ClipScope scope);

/// One Adam step with bias correction. Rejects non-finite gradients before
/// touching any state. If `update_clip` is set, the bias-corrected direction
/// is clamped element-wise before the learning rate is applied (the
/// clip-after-momentum variant).
void adam_step(ModelParams& params, const Gradients& grads, AdamState& state, const LrGroups& lr,
               std::optional<double> update_clip = std::nullopt, ClipScope update_clip_scope = ClipScope::spectral_only);

/// base_lr * factor^(number of milestones <= step).
double lr_at(const LrSchedule& schedule, double base_lr, int step);

}  // namespace mufno
