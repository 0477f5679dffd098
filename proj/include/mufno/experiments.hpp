// Copyright (c) 2026 The mufno authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>
#include <iosfwd>
#include <limits>
#include <string>
#include <vector>

#include "mufno/burgers.hpp"
#include "mufno/model.hpp"
#include "mufno/optimizer.hpp"

namespace mufno {

constexpr double kDivergedSentinel = std::numeric_limits<double>::infinity();

/// Outcome of one training run.
struct TrainRecord {
    HyperParams hyperparams;
    Parametrization parametrization;
    int K = 0;
    std::vector<double> loss_history;  // per-epoch mean train loss
    std::vector<double> eval_history;  // relative L2 on the eval split
    double final_train_loss = kDivergedSentinel;
    double final_eval_error = kDivergedSentinel;
    double wall_time = 0.0;  // seconds; excluded from determinism contracts
    std::int64_t step_count = 0;
    bool diverged = false;
};

/// Deterministic training loop: fixed shuffling stream, fixed reduction
/// order, per-group learning rates, optional element-wise clipping, step
/// decay, divergence detection (NaN or 1000x the initial loss).
/// `final_params`, when given, receives the trained weights.
TrainRecord train(const Dataset& train_ds, const Dataset& eval_ds, const FnoConfig& config, const Parametrization& param,
                  const HyperParams& xi, ModelParams* final_params = nullptr);

enum class SweepAxis { lr, batch_size, adam_beta2 };

std::string axis_name(SweepAxis axis);

/// Grid search specification over one hyperparameter axis.
struct SweepSpec {
    SweepAxis axis = SweepAxis::lr;
    std::vector<double> values;  // ascending
    std::vector<int> K_list;
    HyperParams fixed;
    Parametrization parametrization;
    std::vector<std::uint64_t> replicate_seeds{1, 2, 3};

    void validate() const;
    HyperParams cell_hyperparams(std::size_t value_idx, std::size_t seed_idx) const;
};

struct SweepResult {
    SweepSpec spec;
    // flattened [K][value][seed]
    std::vector<TrainRecord> records;
    // aggregated mean final train loss over non-diverged seeds, [K][value]
    std::vector<double> mean_train_loss;
    std::vector<double> mean_eval_error;
    std::vector<std::size_t> argmin_value_index;  // per K
    std::vector<double> optimal_value;            // per K

    const TrainRecord& at(std::size_t K_idx, std::size_t value_idx, std::size_t seed_idx) const;
    double mean_loss_at(std::size_t K_idx, std::size_t value_idx) const;
};

using TrainFn = std::function<TrainRecord(const HyperParams& xi, int K, std::uint64_t seed)>;

/// Runs every (value, K, seed) cell through `fn` (cells are independent and
/// run on a small worker pool), then computes the per-K argmin over mean
/// final train loss, excluding diverged runs. Throws if every value diverged
/// for some K.
SweepResult sweep(const SweepSpec& spec, const TrainFn& fn, int parallelism = 1);

/// Trainer backed by real datasets and the model template (K is substituted
/// per cell).
TrainFn dataset_trainer(const FnoConfig& model_template, const Parametrization& param, const Dataset& train_ds,
                        const Dataset& eval_ds);

/// The floating-point-op proxy used for relative cost accounting.
double per_step_cost(int batch_size, std::size_t n, int L, int K, int m);

struct CostReport {
    double proxy_sweep_cost = 0.0;
    double target_cost = 0.0;
    double total_cost = 0.0;       // proxy + target
    double exhaustive_cost = 0.0;  // the same sweep grid run at K_target
    double ratio = 0.0;            // total / exhaustive
    std::int64_t proxy_steps = 0;
    std::int64_t target_steps = 0;
};

struct MuTransferResult {
    SweepResult proxy_sweep;
    HyperParams xi_star;      // rescaled for the target
    double init_std_star = 0; // rescaled spectral init std
    TrainRecord target_record;
    CostReport cost;
};

/// The end-to-end transfer pipeline: sweep the proxy mode count, rescale the
/// optimum, train the target once. For mup the parametrization must be
/// anchored at the proxy (K0 == K_proxy), which makes the explicit rescaling
/// and the anchored schedule agree by construction.
MuTransferResult mu_transfer(const SweepSpec& proxy_spec, int K_target, const FnoConfig& model_template,
                             std::size_t grid_n, const TrainFn& fn, int parallelism = 1);

/// Landscape CSV: one row per cell per seed plus aggregated rows (seed=-1).
/// Header: parametrization,K,axis,value,seed,final_train_loss,final_eval_error,diverged
void write_landscape_csv(std::ostream& os, const SweepResult& result, const std::string& parametrization_label,
                         bool with_header = true);

/// Argmin rows per (parametrization, K): parametrization,K,axis,value
void write_optima_csv(std::ostream& os, const SweepResult& result, const std::string& parametrization_label,
                      bool with_header = true);

}  // namespace mufno
