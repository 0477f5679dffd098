// Copyright (c) 2026 The mufno authors.
// SPDX-License-Identifier: Apache-2.0

#include "mufno/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <mutex>
#include <ostream>
#include <thread>

#include "mufno/autodiff.hpp"
#include "mufno/io_util.hpp"

namespace mufno {

namespace {

Tensor3 gather_batch(const Tensor3& src, std::span<const std::size_t> idx) {
    Tensor3 out(idx.size(), src.n, src.c);
    const std::size_t row = src.n * src.c;
    for (std::size_t i = 0; i < idx.size(); ++i)
        std::copy_n(src.v.data() + idx[i] * row, row, out.v.data() + i * row);
    return out;
}

void fisher_yates(std::vector<std::size_t>& idx, SeededRng& rng) {
    for (std::size_t i = idx.size(); i > 1; --i) {
        const std::size_t j = static_cast<std::size_t>(rng.next_u64() % i);
        std::swap(idx[i - 1], idx[j]);
    }
}

}  // namespace

TrainRecord train(const Dataset& train_ds, const Dataset& eval_ds, const FnoConfig& config, const Parametrization& param,
                  const HyperParams& xi, ModelParams* final_params) {
    xi.validate();
    config.validate_for_grid(train_ds.grid.n);
    if (train_ds.grid.n != eval_ds.grid.n) throw SizeError("train: train/eval grids differ");
    if (train_ds.inputs.b == 0 || eval_ds.inputs.b == 0) throw SizeError("train: empty dataset");

    const auto abc = abc_at(param, config.K);
    const double spectral_base_lr = xi.spectral_lr ? *xi.spectral_lr : abc.c * xi.master_lr;

    TrainRecord rec;
    rec.hyperparams = xi;
    rec.parametrization = param;
    rec.K = config.K;

    const auto t_start = std::chrono::steady_clock::now();

    const SeededRng root(xi.seed);
    SeededRng init_rng = root.substream(0);
    SeededRng shuffle_rng = root.substream(1);

    ModelParams params = init_params(config, param, init_rng);
    AdamState state = AdamState::init(params, xi.adam_beta1, xi.adam_beta2, xi.adam_eps);

    const auto eval_error = [&]() { return relative_l2_loss(forward(params, config, eval_ds.inputs), eval_ds.targets); };
    const auto train_loss_full = [&]() {
        return relative_l2_loss(forward(params, config, train_ds.inputs), train_ds.targets);
    };

    bool diverged = false;
    double initial_loss = 0.0;
    try {
        initial_loss = train_loss_full();
        rec.eval_history.push_back(eval_error());
    } catch (const NumericError&) {
        diverged = true;
    }

    const std::size_t N = train_ds.inputs.b;
    std::vector<std::size_t> order(N);
    for (std::size_t i = 0; i < N; ++i) order[i] = i;

    for (int epoch = 0; epoch < xi.epochs && !diverged; ++epoch) {
        fisher_yates(order, shuffle_rng);
        const LrGroups lr{lr_at(xi.schedule, spectral_base_lr, epoch), lr_at(xi.schedule, xi.master_lr, epoch)};

        double loss_sum = 0.0;
        try {
            for (std::size_t start = 0; start < N; start += static_cast<std::size_t>(xi.batch_size)) {
                const std::size_t count = std::min<std::size_t>(xi.batch_size, N - start);
                const auto batch_idx = std::span<const std::size_t>(order).subspan(start, count);
                const Tensor3 bx = gather_batch(train_ds.inputs, batch_idx);
                const Tensor3 by = gather_batch(train_ds.targets, batch_idx);

                auto res = backward(params, config, bx, by);
                loss_sum += res.loss * static_cast<double>(count);

                if (xi.clip_value && xi.clip_stage == ClipStage::gradient)
                    clip_elementwise(res.grads, *xi.clip_value, xi.clip_scope);
                const std::optional<double> update_clip =
                    (xi.clip_value && xi.clip_stage == ClipStage::update) ? xi.clip_value : std::nullopt;
                adam_step(params, res.grads, state, lr, update_clip, xi.clip_scope);
                rec.step_count += 1;
            }
        } catch (const NumericError&) {
            diverged = true;
            break;
        }

        const double epoch_loss = loss_sum / static_cast<double>(N);
        rec.loss_history.push_back(epoch_loss);
        if (!std::isfinite(epoch_loss) || (initial_loss > 0.0 && epoch_loss > 1e3 * initial_loss)) {
            diverged = true;
            break;
        }

        if ((epoch + 1) % xi.eval_every == 0 || epoch + 1 == xi.epochs) {
            try {
                rec.eval_history.push_back(eval_error());
            } catch (const NumericError&) {
                diverged = true;
                break;
            }
        }
    }

    rec.diverged = diverged;
    if (diverged) {
        rec.final_train_loss = kDivergedSentinel;
        rec.final_eval_error = kDivergedSentinel;
    } else {
        // Full-dataset loss of the final parameters: the per-epoch running
        // means in loss_history carry minibatch sampling noise that would
        // leak into sweep argmins.
        try {
            rec.final_train_loss = xi.epochs == 0 ? initial_loss : train_loss_full();
            rec.final_eval_error = rec.eval_history.back();
        } catch (const NumericError&) {
            rec.diverged = true;
            rec.final_train_loss = kDivergedSentinel;
            rec.final_eval_error = kDivergedSentinel;
        }
    }
    rec.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    if (final_params) *final_params = std::move(params);
    return rec;
}

// ---------------------------------------------------------------------------
// Sweeps
// ---------------------------------------------------------------------------

std::string axis_name(SweepAxis axis) {
    switch (axis) {
        case SweepAxis::lr: return "lr";
        case SweepAxis::batch_size: return "batch_size";
        default: return "adam_beta2";
    }
}

void SweepSpec::validate() const {
    if (values.empty()) throw ConfigError("sweep: values must be nonempty");
    if (!std::is_sorted(values.begin(), values.end())) throw ConfigError("sweep: values must be sorted ascending");
    if (K_list.empty()) throw ConfigError("sweep: K_list must be nonempty");
    if (replicate_seeds.empty()) throw ConfigError("sweep: replicate_seeds must be nonempty");
    if (axis == SweepAxis::batch_size)
        for (double v : values)
            if (v < 1.0 || v != std::floor(v)) throw ConfigError("sweep: batch_size values must be positive integers");
    if (axis == SweepAxis::adam_beta2)
        for (double v : values)
            if (!(v >= 0.0 && v < 1.0)) throw ConfigError("sweep: adam_beta2 values must lie in [0,1)");
    fixed.validate();
    parametrization.validate();
}

HyperParams SweepSpec::cell_hyperparams(std::size_t value_idx, std::size_t seed_idx) const {
    HyperParams xi = fixed;
    const double v = values[value_idx];
    switch (axis) {
        case SweepAxis::lr: xi.master_lr = v; break;
        case SweepAxis::batch_size: xi.batch_size = static_cast<int>(v); break;
        case SweepAxis::adam_beta2: xi.adam_beta2 = v; break;
    }
    xi.seed = replicate_seeds[seed_idx];
    return xi;
}

const TrainRecord& SweepResult::at(std::size_t K_idx, std::size_t value_idx, std::size_t seed_idx) const {
    const std::size_t nv = spec.values.size(), ns = spec.replicate_seeds.size();
    return records[(K_idx * nv + value_idx) * ns + seed_idx];
}

double SweepResult::mean_loss_at(std::size_t K_idx, std::size_t value_idx) const {
    return mean_train_loss[K_idx * spec.values.size() + value_idx];
}

SweepResult sweep(const SweepSpec& spec, const TrainFn& fn, int parallelism) {
    spec.validate();
    const std::size_t nk = spec.K_list.size(), nv = spec.values.size(), ns = spec.replicate_seeds.size();
    const std::size_t total = nk * nv * ns;

    SweepResult result;
    result.spec = spec;
    result.records.resize(total);

    // Cells are independent; results land in fixed grid slots so the outcome
    // does not depend on scheduling.
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mu;
    auto worker = [&] {
        for (;;) {
            const std::size_t cell = next.fetch_add(1);
            if (cell >= total) return;
            {
                std::lock_guard<std::mutex> lock(error_mu);
                if (error) return;
            }
            const std::size_t ki = cell / (nv * ns);
            const std::size_t vi = (cell / ns) % nv;
            const std::size_t si = cell % ns;
            try {
                const HyperParams xi = spec.cell_hyperparams(vi, si);
                result.records[cell] = fn(xi, spec.K_list[ki], spec.replicate_seeds[si]);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mu);
                if (!error) error = std::current_exception();
                return;
            }
        }
    };
    const int workers = std::max(1, std::min<int>(parallelism, static_cast<int>(total)));
    if (workers == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    if (error) std::rethrow_exception(error);

    result.mean_train_loss.assign(nk * nv, kDivergedSentinel);
    result.mean_eval_error.assign(nk * nv, kDivergedSentinel);
    result.argmin_value_index.assign(nk, 0);
    result.optimal_value.assign(nk, 0.0);
    for (std::size_t ki = 0; ki < nk; ++ki) {
        for (std::size_t vi = 0; vi < nv; ++vi) {
            double acc = 0.0, acc_eval = 0.0;
            int live = 0;
            for (std::size_t si = 0; si < ns; ++si) {
                const auto& r = result.at(ki, vi, si);
                if (r.diverged) continue;
                acc += r.final_train_loss;
                acc_eval += r.final_eval_error;
                ++live;
            }
            if (live > 0) {
                result.mean_train_loss[ki * nv + vi] = acc / live;
                result.mean_eval_error[ki * nv + vi] = acc_eval / live;
            }
        }
        std::size_t best = nv;
        for (std::size_t vi = 0; vi < nv; ++vi) {
            const double loss = result.mean_loss_at(ki, vi);
            if (!std::isfinite(loss)) continue;
            if (best == nv || loss < result.mean_loss_at(ki, best)) best = vi;  // ties keep the smaller index
        }
        if (best == nv)
            throw NumericError("sweep: every value diverged at K=" + std::to_string(spec.K_list[ki]));
        result.argmin_value_index[ki] = best;
        result.optimal_value[ki] = spec.values[best];
    }
    return result;
}

TrainFn dataset_trainer(const FnoConfig& model_template, const Parametrization& param, const Dataset& train_ds,
                        const Dataset& eval_ds) {
    return [&train_ds, &eval_ds, model_template, param](const HyperParams& xi, int K, std::uint64_t) {
        FnoConfig config = model_template;
        config.K = K;
        return train(train_ds, eval_ds, config, param, xi);
    };
}

double per_step_cost(int batch_size, std::size_t n, int L, int K, int m) {
    const double nf = static_cast<double>(n);
    const double logn = std::log2(nf);
    const double mm = static_cast<double>(m) * m;
    return batch_size * nf * (L * (K * mm + nf * logn * m) + nf * mm);
}

MuTransferResult mu_transfer(const SweepSpec& proxy_spec, int K_target, const FnoConfig& model_template,
                             std::size_t grid_n, const TrainFn& fn, int parallelism) {
    proxy_spec.validate();
    if (proxy_spec.K_list.size() != 1) throw ConfigError("mu_transfer: proxy sweep must use exactly one K");
    const int K_proxy = proxy_spec.K_list[0];
    if (K_proxy < 2 || K_target < 2) throw ConfigError("mu_transfer: mode counts must be >= 2");
    if (proxy_spec.parametrization.kind == ParamKind::mup && proxy_spec.parametrization.K0 != K_proxy)
        throw ConfigError("mu_transfer: mup parametrization must be anchored at the proxy (K0 == K_proxy)");

    MuTransferResult out;
    out.proxy_sweep = sweep(proxy_spec, fn, parallelism);

    const std::size_t best = out.proxy_sweep.argmin_value_index[0];
    HyperParams xi_opt = proxy_spec.cell_hyperparams(best, 0);
    xi_opt.seed = proxy_spec.fixed.seed;  // the target run uses the base seed

    const double proxy_init_std = abc_at(proxy_spec.parametrization, K_proxy).b;
    const auto rescaled = rescale_hyperparams(xi_opt, proxy_init_std, K_proxy, K_target, proxy_spec.parametrization.d);
    out.xi_star = rescaled.xi;
    out.init_std_star = rescaled.init_std;

    out.target_record = fn(out.xi_star, K_target, out.xi_star.seed);

    const int L = model_template.L, m = model_template.m;
    for (std::size_t ki = 0; ki < 1; ++ki) {
        for (std::size_t vi = 0; vi < proxy_spec.values.size(); ++vi)
            for (std::size_t si = 0; si < proxy_spec.replicate_seeds.size(); ++si) {
                const auto& r = out.proxy_sweep.at(ki, vi, si);
                const int bs = r.hyperparams.batch_size;
                out.cost.proxy_steps += r.step_count;
                out.cost.proxy_sweep_cost += r.step_count * per_step_cost(bs, grid_n, L, K_proxy, m);
                out.cost.exhaustive_cost += r.step_count * per_step_cost(bs, grid_n, L, K_target, m);
            }
    }
    out.cost.target_steps = out.target_record.step_count;
    out.cost.target_cost =
        out.target_record.step_count * per_step_cost(out.target_record.hyperparams.batch_size, grid_n, L, K_target, m);
    out.cost.total_cost = out.cost.proxy_sweep_cost + out.cost.target_cost;
    out.cost.ratio = out.cost.exhaustive_cost > 0 ? out.cost.total_cost / out.cost.exhaustive_cost : 0.0;
    return out;
}

// ---------------------------------------------------------------------------
// CSV emission
// ---------------------------------------------------------------------------

void write_landscape_csv(std::ostream& os, const SweepResult& result, const std::string& parametrization_label,
                         bool with_header) {
    const auto& spec = result.spec;
    const std::string axis = axis_name(spec.axis);
    if (with_header) os << "parametrization,K,axis,value,seed,final_train_loss,final_eval_error,diverged\n";
    for (std::size_t ki = 0; ki < spec.K_list.size(); ++ki)
        for (std::size_t vi = 0; vi < spec.values.size(); ++vi)
            for (std::size_t si = 0; si < spec.replicate_seeds.size(); ++si) {
                const auto& r = result.at(ki, vi, si);
                os << parametrization_label << ',' << spec.K_list[ki] << ',' << axis << ',' << format_double(spec.values[vi])
                   << ',' << spec.replicate_seeds[si] << ',' << format_double(r.final_train_loss) << ','
                   << format_double(r.final_eval_error) << ',' << (r.diverged ? 1 : 0) << '\n';
            }
    for (std::size_t ki = 0; ki < spec.K_list.size(); ++ki)
        for (std::size_t vi = 0; vi < spec.values.size(); ++vi) {
            const double mean_loss = result.mean_loss_at(ki, vi);
            const double mean_eval = result.mean_eval_error[ki * spec.values.size() + vi];
            bool all_diverged = true;
            for (std::size_t si = 0; si < spec.replicate_seeds.size(); ++si)
                all_diverged = all_diverged && result.at(ki, vi, si).diverged;
            os << parametrization_label << ',' << spec.K_list[ki] << ',' << axis << ',' << format_double(spec.values[vi])
               << ",-1," << format_double(mean_loss) << ',' << format_double(mean_eval) << ',' << (all_diverged ? 1 : 0)
               << '\n';
        }
}

void write_optima_csv(std::ostream& os, const SweepResult& result, const std::string& parametrization_label,
                      bool with_header) {
    const auto& spec = result.spec;
    if (with_header) os << "parametrization,K,axis,value\n";
    for (std::size_t ki = 0; ki < spec.K_list.size(); ++ki)
        os << parametrization_label << ',' << spec.K_list[ki] << ',' << axis_name(spec.axis) << ','
           << format_double(result.optimal_value[ki]) << '\n';
}

}  // namespace mufno
