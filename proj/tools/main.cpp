// Copyright (c) 2026 The mufno authors.
// SPDX-License-Identifier: Apache-2.0
//
// mufno command-line interface: data generation, training, hyperparameter
// sweeps, mode-count transfer, and diagnostics. JSON config in, CSV/binary
// artifacts plus a JSON manifest out.

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <thread>

#include "CLI11.hpp"
#include "json.hpp"
#include "mufno/autodiff.hpp"
#include "mufno/config.hpp"
#include "mufno/diagnostics.hpp"
#include "mufno/experiments.hpp"
#include "mufno/io_util.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace mufno;

namespace {

struct CommonOpts {
    std::string config_path;
    std::vector<std::string> sets;
    std::optional<std::uint64_t> seed;
    std::optional<int> parallelism;
    std::optional<std::string> output;
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
    cmd->add_option("--config", opts.config_path, "JSON experiment config")->required();
    cmd->add_option("--set", opts.sets, "dotted config override, e.g. --set model.K=16");
    cmd->add_option("--seed", opts.seed, "override train (and data) seed");
    cmd->add_option("--parallelism", opts.parallelism, "worker pool size");
    cmd->add_option("--output", opts.output, "output directory");
}

ExperimentConfig load(const CommonOpts& opts) {
    ExperimentConfig cfg = load_config_file(opts.config_path, opts.sets);
    if (opts.seed) {
        cfg.train.seed = *opts.seed;
        if (cfg.data.burgers) cfg.data.burgers->seed = *opts.seed;
        cfg.gradcheck.seed = *opts.seed;
        cfg.normscaling.seed = *opts.seed;
    }
    if (opts.parallelism) cfg.parallelism = *opts.parallelism;
    if (opts.output) cfg.output_dir = *opts.output;
    return cfg;
}

int resolve_parallelism(const ExperimentConfig& cfg) {
    if (cfg.parallelism > 0) return cfg.parallelism;
    if (const char* env = std::getenv("MUFNO_PARALLELISM")) {
        const int v = std::atoi(env);
        if (v > 0) return v;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? static_cast<int>(hw) : 1;
}

std::string out_path(const ExperimentConfig& cfg, const std::string& name) {
    fs::create_directories(cfg.output_dir);
    return (fs::path(cfg.output_dir) / name).string();
}

DatasetPair obtain_datasets(const ExperimentConfig& cfg, int parallelism) {
    if (cfg.data.train_path && cfg.data.eval_path) {
        DatasetPair pair;
        pair.train = load_dataset(*cfg.data.train_path);
        pair.eval = load_dataset(*cfg.data.eval_path);
        return pair;
    }
    if (cfg.data.burgers) return build_dataset(*cfg.data.burgers, parallelism);
    throw ConfigError("data: provide data.train_path and data.eval_path, or data.burgers");
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void write_text(const std::string& path, const std::string& body) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw FormatError("cannot open for writing: " + path);
    f << body;
}

json record_json(const TrainRecord& r) {
    json j;
    j["K"] = r.K;
    j["final_train_loss"] = format_double(r.final_train_loss);
    j["final_eval_error"] = format_double(r.final_eval_error);
    j["step_count"] = r.step_count;
    j["diverged"] = r.diverged;
    j["wall_time_s"] = r.wall_time;
    return j;
}

SweepSpec sweep_spec_from(const ExperimentConfig& cfg, ParamKind kind) {
    if (!cfg.sweep) throw ConfigError("config: this command requires a sweep section");
    SweepSpec spec;
    spec.axis = cfg.sweep->axis;
    spec.values = cfg.sweep->values;
    spec.K_list = cfg.sweep->K_list;
    spec.fixed = cfg.train;
    spec.parametrization = cfg.parametrization;
    spec.parametrization.kind = kind;
    spec.replicate_seeds = cfg.sweep->replicate_seeds;
    return spec;
}

// ---------------------------------------------------------------------------
// subcommands
// ---------------------------------------------------------------------------

int cmd_gen_data(const CommonOpts& opts) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto cfg = load(opts);
    if (!cfg.data.burgers) throw ConfigError("config: gen-data requires data.burgers");
    const int parallelism = resolve_parallelism(cfg);

    const auto pair = build_dataset(*cfg.data.burgers, parallelism);
    const std::string train_path = out_path(cfg, "train.fnod");
    const std::string eval_path = out_path(cfg, "eval.fnod");
    save_dataset(pair.train, train_path);
    save_dataset(pair.eval, eval_path);
    write_manifest(out_path(cfg, "manifest_gen_data.json"), "gen-data", cfg, seconds_since(t0), {train_path, eval_path});
    std::cout << "gen-data: wrote " << train_path << " (" << pair.train.inputs.b << " samples) and " << eval_path << " ("
              << pair.eval.inputs.b << " samples)\n";
    return 0;
}

int cmd_train(const CommonOpts& opts) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto cfg = load(opts);
    const auto data = obtain_datasets(cfg, resolve_parallelism(cfg));

    ModelParams params;
    const TrainRecord rec = train(data.train, data.eval, cfg.model, cfg.parametrization, cfg.train, &params);

    std::string history = "epoch,train_loss\n";
    for (std::size_t e = 0; e < rec.loss_history.size(); ++e)
        history += std::to_string(e) + "," + format_double(rec.loss_history[e]) + "\n";
    const std::string hist_path = out_path(cfg, "train_history.csv");
    write_text(hist_path, history);

    std::string evals = "eval_index,eval_error\n";
    for (std::size_t i = 0; i < rec.eval_history.size(); ++i)
        evals += std::to_string(i) + "," + format_double(rec.eval_history[i]) + "\n";
    const std::string eval_path = out_path(cfg, "eval_history.csv");
    write_text(eval_path, evals);

    const std::string ck_path = out_path(cfg, "params.mufn");
    save_params(params, cfg.model, ck_path);

    json result = record_json(rec);
    const std::string res_path = out_path(cfg, "train_result.json");
    write_text(res_path, result.dump(2) + "\n");

    write_manifest(out_path(cfg, "manifest_train.json"), "train", cfg, seconds_since(t0),
                   {hist_path, eval_path, ck_path, res_path});
    std::cout << "train: final_train_loss=" << format_double(rec.final_train_loss)
              << " final_eval_error=" << format_double(rec.final_eval_error) << " steps=" << rec.step_count
              << (rec.diverged ? " DIVERGED" : "") << "\n";
    return 0;
}

int cmd_sweep(const CommonOpts& opts, const std::string& parametrization_flag) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto cfg = load(opts);
    const int parallelism = resolve_parallelism(cfg);
    const auto data = obtain_datasets(cfg, parallelism);

    std::vector<ParamKind> kinds;
    if (parametrization_flag == "both") {
        kinds = {ParamKind::standard, ParamKind::mup};
    } else if (parametrization_flag == "standard") {
        kinds = {ParamKind::standard};
    } else if (parametrization_flag == "mup") {
        kinds = {ParamKind::mup};
    } else if (parametrization_flag.empty()) {
        kinds = {cfg.parametrization.kind};
    } else {
        throw ConfigError("--parametrization must be standard|mup|both");
    }

    std::vector<std::string> artifacts;
    for (ParamKind kind : kinds) {
        const SweepSpec spec = sweep_spec_from(cfg, kind);
        const std::string label = kind == ParamKind::mup ? "mup" : "standard";
        const auto result = sweep(spec, dataset_trainer(cfg.model, spec.parametrization, data.train, data.eval), parallelism);

        std::ostringstream land, opt;
        write_landscape_csv(land, result, label);
        write_optima_csv(opt, result, label);
        const std::string land_path = out_path(cfg, "landscape_" + label + ".csv");
        const std::string opt_path = out_path(cfg, "optima_" + label + ".csv");
        write_text(land_path, land.str());
        write_text(opt_path, opt.str());
        artifacts.push_back(land_path);
        artifacts.push_back(opt_path);
        std::cout << "sweep[" << label << "]: ";
        for (std::size_t ki = 0; ki < spec.K_list.size(); ++ki)
            std::cout << "K=" << spec.K_list[ki] << " best=" << format_double(result.optimal_value[ki]) << "  ";
        std::cout << "\n";
    }
    write_manifest(out_path(cfg, "manifest_sweep.json"), "sweep", cfg, seconds_since(t0), artifacts);
    return 0;
}

int cmd_transfer(const CommonOpts& opts) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto cfg = load(opts);
    const int parallelism = resolve_parallelism(cfg);
    if (!cfg.sweep || !cfg.sweep->K_target) throw ConfigError("config: transfer requires sweep.K_target");
    const auto data = obtain_datasets(cfg, parallelism);

    SweepSpec spec = sweep_spec_from(cfg, cfg.parametrization.kind);
    if (spec.parametrization.kind == ParamKind::mup && spec.K_list.size() == 1)
        spec.parametrization.K0 = spec.K_list[0];  // anchor at the proxy

    const auto result = mu_transfer(spec, *cfg.sweep->K_target, cfg.model, data.train.grid.n,
                                    dataset_trainer(cfg.model, spec.parametrization, data.train, data.eval), parallelism);

    json xi;
    xi["K_proxy"] = spec.K_list[0];
    xi["K_target"] = *cfg.sweep->K_target;
    xi["master_lr"] = result.xi_star.master_lr;
    xi["spectral_lr"] = result.xi_star.spectral_lr ? json(*result.xi_star.spectral_lr) : json(nullptr);
    xi["init_std_R"] = result.init_std_star;
    xi["batch_size"] = result.xi_star.batch_size;
    xi["adam_beta1"] = result.xi_star.adam_beta1;
    xi["adam_beta2"] = result.xi_star.adam_beta2;
    xi["epochs"] = result.xi_star.epochs;
    xi["seed"] = result.xi_star.seed;
    xi["cost_report"] = {{"proxy_sweep_cost", result.cost.proxy_sweep_cost}, {"target_cost", result.cost.target_cost},
                         {"total_cost", result.cost.total_cost},             {"exhaustive_cost", result.cost.exhaustive_cost},
                         {"ratio", result.cost.ratio},                       {"proxy_steps", result.cost.proxy_steps},
                         {"target_steps", result.cost.target_steps}};
    const std::string xi_path = out_path(cfg, "xi_star.json");
    write_text(xi_path, xi.dump(2) + "\n");

    std::ostringstream land;
    const std::string label = spec.parametrization.kind == ParamKind::mup ? "mup" : "standard";
    write_landscape_csv(land, result.proxy_sweep, label);
    const std::string land_path = out_path(cfg, "landscape_proxy.csv");
    write_text(land_path, land.str());

    const std::string tgt_path = out_path(cfg, "target_result.json");
    write_text(tgt_path, record_json(result.target_record).dump(2) + "\n");

    write_manifest(out_path(cfg, "manifest_transfer.json"), "transfer", cfg, seconds_since(t0),
                   {xi_path, land_path, tgt_path});
    std::cout << "transfer: lr*=" << format_double(result.proxy_sweep.optimal_value[0])
              << " R-lr(target)=" << format_double(*result.xi_star.spectral_lr)
              << " target_eval=" << format_double(result.target_record.final_eval_error)
              << " cost_ratio=" << format_double(result.cost.ratio) << "\n";
    return 0;
}

int cmd_coordcheck(const CommonOpts& opts, const std::string& parametrization_flag) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto cfg = load(opts);
    const auto data = obtain_datasets(cfg, resolve_parallelism(cfg));

    std::vector<ParamKind> kinds;
    if (parametrization_flag == "both")
        kinds = {ParamKind::standard, ParamKind::mup};
    else if (parametrization_flag == "standard")
        kinds = {ParamKind::standard};
    else if (parametrization_flag == "mup")
        kinds = {ParamKind::mup};
    else if (parametrization_flag.empty())
        kinds = {cfg.parametrization.kind};
    else
        throw ConfigError("--parametrization must be standard|mup|both");

    std::ostringstream csv;
    bool header = true;
    for (ParamKind kind : kinds) {
        Parametrization param = cfg.parametrization;
        param.kind = kind;
        const auto traces =
            coord_check(cfg.model, param, cfg.coordcheck.K_list, cfg.coordcheck.steps, data.train, cfg.train,
                        cfg.coordcheck.seeds);
        write_coordcheck_csv(csv, traces, kind == ParamKind::mup ? "mup" : "standard", header);
        header = false;
    }
    const std::string csv_path = out_path(cfg, "coordcheck.csv");
    write_text(csv_path, csv.str());
    write_manifest(out_path(cfg, "manifest_coordcheck.json"), "coordcheck", cfg, seconds_since(t0), {csv_path});
    std::cout << "coordcheck: wrote " << csv_path << "\n";
    return 0;
}

int cmd_normscaling(const CommonOpts& opts) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto cfg = load(opts);
    const auto report = norm_scaling_report(cfg.normscaling.K_list, cfg.normscaling.d_list, cfg.normscaling.b_list,
                                            cfg.normscaling.trials, cfg.normscaling.seed);
    std::ostringstream csv;
    write_normscaling_csv(csv, report);
    const std::string csv_path = out_path(cfg, "normscaling.csv");
    write_text(csv_path, csv.str());

    json summary = {{"slope", report.slope}, {"intercept", report.intercept}, {"r2", report.r2}};
    const std::string sum_path = out_path(cfg, "normscaling_summary.json");
    write_text(sum_path, summary.dump(2) + "\n");
    write_manifest(out_path(cfg, "manifest_normscaling.json"), "normscaling", cfg, seconds_since(t0),
                   {csv_path, sum_path});
    std::cout << "normscaling: slope=" << format_double(report.slope) << " r2=" << format_double(report.r2) << "\n";
    return 0;
}

int cmd_gradcheck(const CommonOpts& opts) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto cfg = load(opts);

    const SeededRng root(cfg.gradcheck.seed);
    SeededRng init_rng = root.substream(0);
    const ModelParams params = init_params(cfg.model, cfg.parametrization, init_rng);
    Tensor3 inputs(cfg.gradcheck.batch, cfg.gradcheck.grid_n, cfg.model.in_channels);
    Tensor3 targets(cfg.gradcheck.batch, cfg.gradcheck.grid_n, cfg.model.out_channels);
    SeededRng data_rng = root.substream(1);
    data_rng.fill_gaussian(inputs.v, 0.0, 1.0);
    data_rng.fill_gaussian(targets.v, 0.0, 1.0);

    const auto report = gradcheck(params, cfg.model, inputs, targets, cfg.gradcheck.tolerance, cfg.gradcheck.seed);
    json result = {{"max_rel_err", report.max_rel_err},
                   {"worst_tensor", report.worst_tensor},
                   {"n_checked", report.n_checked},
                   {"tolerance", cfg.gradcheck.tolerance},
                   {"pass", report.pass}};
    const std::string res_path = out_path(cfg, "gradcheck_result.json");
    write_text(res_path, result.dump(2) + "\n");
    write_manifest(out_path(cfg, "manifest_gradcheck.json"), "gradcheck", cfg, seconds_since(t0), {res_path});
    std::cout << "gradcheck: max_rel_err=" << format_double(report.max_rel_err) << " worst=" << report.worst_tensor
              << " n_checked=" << report.n_checked << " -> " << (report.pass ? "PASS" : "FAIL") << "\n";
    return report.pass ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"mufno: FNO-1D training with pluggable abc-parametrization and mode-count transfer"};
    app.require_subcommand(1);

    CommonOpts gen_opts, train_opts, sweep_opts, transfer_opts, coord_opts, norm_opts, grad_opts;
    std::string sweep_param, coord_param;

    add_common(app.add_subcommand("gen-data", "generate Burgers datasets (FNOD files)"), gen_opts);
    add_common(app.add_subcommand("train", "train one model"), train_opts);
    auto* sweep_cmd = app.add_subcommand("sweep", "hyperparameter grid sweep, landscape CSV out");
    add_common(sweep_cmd, sweep_opts);
    sweep_cmd->add_option("--parametrization", sweep_param, "standard|mup|both (default: config)");
    add_common(app.add_subcommand("transfer", "proxy sweep, rescale, target training"), transfer_opts);
    auto* coord_cmd = app.add_subcommand("coordcheck", "feature-magnitude traces across K");
    add_common(coord_cmd, coord_opts);
    coord_cmd->add_option("--parametrization", coord_param, "standard|mup|both (default: config)");
    add_common(app.add_subcommand("normscaling", "max-of-Gaussians Monte Carlo study"), norm_opts);
    add_common(app.add_subcommand("gradcheck", "finite-difference gradient verification"), grad_opts);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    }

    try {
        if (app.got_subcommand("gen-data")) return cmd_gen_data(gen_opts);
        if (app.got_subcommand("train")) return cmd_train(train_opts);
        if (app.got_subcommand("sweep")) return cmd_sweep(sweep_opts, sweep_param);
        if (app.got_subcommand("transfer")) return cmd_transfer(transfer_opts);
        if (app.got_subcommand("coordcheck")) return cmd_coordcheck(coord_opts, coord_param);
        if (app.got_subcommand("normscaling")) return cmd_normscaling(norm_opts);
        if (app.got_subcommand("gradcheck")) return cmd_gradcheck(grad_opts);
        return 2;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const SolverError& e) {
        std::cerr << "solver error: " << e.what() << "\n";
        return 3;
    } catch (const FormatError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 3;
    } catch (const SizeError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 3;
    } catch (const NumericError& e) {
        std::cerr << "divergence: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 5;
    }
}
