// Copyright (c) 2026 The mufno authors.
// SPDX-License-Identifier: Apache-2.0

#include "mufno/parametrization.hpp"

#include <cmath>
#include <string>

namespace mufno {

AbcValues abc_at(const Parametrization& p, int K) {
    p.validate();
    if (p.kind == ParamKind::standard) {
        if (K < 1) throw ConfigError("abc_at: K must be >= 1");
        return {1.0, p.base_init_std, p.base_lr_scale};
    }
    if (K < 2) throw ConfigError("abc_at: mup requires K >= 2 (log K must be positive), got K=" + std::to_string(K));
    const double ratio = std::log(static_cast<double>(p.K0)) / std::log(static_cast<double>(K));
    return {1.0, p.base_init_std * std::sqrt(ratio), p.base_lr_scale * std::sqrt(ratio)};
}

void HyperParams::validate() const {
    if (!(master_lr >= 0.0)) throw ConfigError("hyperparams: master_lr must be >= 0");
    if (batch_size < 1) throw ConfigError("hyperparams: batch_size must be >= 1");
    if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0)) throw ConfigError("hyperparams: adam_beta1 must be in [0,1)");
    if (!(adam_beta2 >= 0.0 && adam_beta2 < 1.0)) throw ConfigError("hyperparams: adam_beta2 must be in [0,1)");
    if (!(adam_eps > 0.0)) throw ConfigError("hyperparams: adam_eps must be positive");
    if (clip_value && !(*clip_value > 0.0)) throw ConfigError("hyperparams: clip_value must be positive");
    if (epochs < 0) throw ConfigError("hyperparams: epochs must be >= 0");
    if (eval_every < 1) throw ConfigError("hyperparams: eval_every must be >= 1");
    if (!(schedule.factor > 0.0 && schedule.factor <= 1.0)) throw ConfigError("hyperparams: schedule factor must be in (0,1]");
    for (std::size_t i = 1; i < schedule.milestones.size(); ++i)
        if (schedule.milestones[i] <= schedule.milestones[i - 1])
            throw ConfigError("hyperparams: schedule milestones must be strictly increasing");
    if (spectral_lr && !(*spectral_lr >= 0.0)) throw ConfigError("hyperparams: spectral_lr must be >= 0");
}

RescaledHyperParams rescale_hyperparams(const HyperParams& xi, double init_std, int K_proxy, int K_target, int d) {
    if (K_proxy < 2 || K_target < 2) throw ConfigError("rescale_hyperparams: mode counts must be >= 2");
    if (d < 1) throw ConfigError("rescale_hyperparams: d must be >= 1");
    xi.validate();

    // d cancels in the ratio at fixed dimensionality.
    const double log_ratio = std::log(static_cast<double>(K_proxy)) / std::log(static_cast<double>(K_target));
    RescaledHyperParams out;
    out.xi = xi;
    const double base_r_lr = xi.spectral_lr ? *xi.spectral_lr : xi.master_lr;
    out.xi.spectral_lr = base_r_lr * std::sqrt(log_ratio);
    out.init_std = init_std * std::sqrt(log_ratio);
    return out;
}

}  // namespace mufno
