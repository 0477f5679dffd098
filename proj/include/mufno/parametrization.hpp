// Copyright (c) 2026 The mufno authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "mufno/errors.hpp"

namespace mufno {

/// Resolved (a, b, c) multipliers for one mode count K: effective weight
/// R = a * r, init std b for entries of r, and learning-rate scale c.
struct AbcValues {
    double a = 1.0;
    double b = 0.0;
    double c = 1.0;
};

enum class ParamKind { standard, mup };

/// The abc-parametrization schedule for the spectral weight tensor. Standard
/// keeps b and c independent of K; mup scales b and c by sqrt(log K0 / log K)
/// so both schedules coincide at the anchor K0.
struct Parametrization {
    ParamKind kind = ParamKind::standard;
    int d = 1;
    int K0 = 4;                  // anchor mode count (mup only)
    double base_init_std = 0.0;  // b at the anchor
    double base_lr_scale = 1.0;  // c at the anchor

    void validate() const {
        if (!(base_init_std > 0.0)) throw ConfigError("parametrization: base_init_std must be positive");
        if (!(base_lr_scale > 0.0)) throw ConfigError("parametrization: base_lr_scale must be positive");
        if (d < 1) throw ConfigError("parametrization: d must be >= 1");
        if (kind == ParamKind::mup && K0 < 2) throw ConfigError("parametrization: mup requires K0 >= 2");
    }
};

AbcValues abc_at(const Parametrization& p, int K);

/// Step decay: lr is multiplied by `factor` at each milestone.
struct LrSchedule {
    std::vector<int> milestones;  // strictly increasing epoch indices
    double factor = 0.5;
};

enum class ClipScope { spectral_only, all };
enum class ClipStage { gradient, update };

/// The tunable configuration xi swept by the transfer algorithm.
struct HyperParams {
    double master_lr = 1e-3;
    int batch_size = 20;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
    std::optional<double> clip_value;  // element-wise bound on spectral grads
    ClipScope clip_scope = ClipScope::spectral_only;
    ClipStage clip_stage = ClipStage::gradient;
    int epochs = 50;
    int eval_every = 10;
    LrSchedule schedule;
    std::uint64_t seed = 0;
    // Explicit learning rate for the spectral tensors, as produced by
    // rescale_hyperparams. Unset means c(K) * master_lr.
    std::optional<double> spectral_lr;

    void validate() const;
};

struct RescaledHyperParams {
    HyperParams xi;
    double init_std = 0.0;
};

/// Mode-count rescaling between a tuned proxy and a target: the spectral
/// learning rate picks up sqrt(log K_proxy / log K_target) and the spectral
/// init variance picks up log K_proxy / log K_target. Everything else
/// transfers unchanged. `init_std` is the standard deviation (the variance
/// ratio applies to its square).
RescaledHyperParams rescale_hyperparams(const HyperParams& xi, double init_std, int K_proxy, int K_target, int d);

}  // namespace mufno
