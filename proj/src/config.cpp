// Copyright (c) 2026 The mufno authors.
// SPDX-License-Identifier: Apache-2.0

#include "mufno/config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "mufno/io_util.hpp"

namespace mufno {

using nlohmann::json;

namespace {

void require_keys(const json& obj, const std::string& where, std::initializer_list<const char*> known) {
    for (const auto& [key, _] : obj.items()) {
        bool ok = false;
        for (const char* k : known) ok = ok || key == k;
        if (!ok) throw ConfigError("config: unknown key '" + where + "." + key + "'");
    }
}

template <class T>
T get_or(const json& obj, const char* key, T fallback) {
    if (!obj.contains(key) || obj.at(key).is_null()) return fallback;
    try {
        return obj.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError("config: bad value for '" + std::string(key) + "': " + e.what());
    }
}

Activation parse_activation(const std::string& s) {
    if (s == "gelu") return Activation::gelu;
    if (s == "tanh") return Activation::tanh;
    throw ConfigError("config: model.activation must be 'gelu' or 'tanh', got '" + s + "'");
}

FnoConfig parse_model(const json& j) {
    require_keys(j, "model",
                 {"d", "L", "m", "K", "activation", "in_channels", "out_channels", "coord_channel", "real_r_mode"});
    FnoConfig c;
    c.d = get_or(j, "d", 1);
    c.L = get_or(j, "L", 4);
    c.m = get_or(j, "m", 64);
    c.K = get_or(j, "K", 16);
    c.activation = parse_activation(get_or<std::string>(j, "activation", "gelu"));
    c.in_channels = get_or(j, "in_channels", 1);
    c.out_channels = get_or(j, "out_channels", 1);
    c.coord_channel = get_or(j, "coord_channel", true);
    c.real_r_mode = get_or(j, "real_r_mode", false);
    c.validate();
    return c;
}

Parametrization parse_parametrization(const json& j, const FnoConfig& model) {
    require_keys(j, "parametrization", {"kind", "K0", "base_init_std", "base_lr_scale", "d"});
    Parametrization p;
    const std::string kind = get_or<std::string>(j, "kind", "standard");
    if (kind == "standard")
        p.kind = ParamKind::standard;
    else if (kind == "mup")
        p.kind = ParamKind::mup;
    else
        throw ConfigError("config: parametrization.kind must be 'standard' or 'mup', got '" + kind + "'");
    p.d = get_or(j, "d", model.d);
    p.K0 = get_or(j, "K0", 4);
    // library-default init std: m^-2, the reference-library convention
    const double default_b = 1.0 / (static_cast<double>(model.m) * model.m);
    p.base_init_std = get_or(j, "base_init_std", default_b);
    p.base_lr_scale = get_or(j, "base_lr_scale", 1.0);
    p.validate();
    return p;
}

HyperParams parse_train(const json& j) {
    require_keys(j, "train",
                 {"master_lr", "batch_size", "adam_beta1", "adam_beta2", "adam_eps", "clip_value", "clip_scope",
                  "clip_stage", "epochs", "eval_every", "lr_milestones", "lr_factor", "seed", "spectral_lr"});
    HyperParams xi;
    xi.master_lr = get_or(j, "master_lr", 1e-3);
    xi.batch_size = get_or(j, "batch_size", 20);
    xi.adam_beta1 = get_or(j, "adam_beta1", 0.9);
    xi.adam_beta2 = get_or(j, "adam_beta2", 0.999);
    xi.adam_eps = get_or(j, "adam_eps", 1e-8);
    if (j.contains("clip_value") && !j.at("clip_value").is_null()) xi.clip_value = j.at("clip_value").get<double>();
    const std::string scope = get_or<std::string>(j, "clip_scope", "spectral_only");
    if (scope == "spectral_only")
        xi.clip_scope = ClipScope::spectral_only;
    else if (scope == "all")
        xi.clip_scope = ClipScope::all;
    else
        throw ConfigError("config: train.clip_scope must be 'spectral_only' or 'all'");
    const std::string stage = get_or<std::string>(j, "clip_stage", "gradient");
    if (stage == "gradient")
        xi.clip_stage = ClipStage::gradient;
    else if (stage == "update")
        xi.clip_stage = ClipStage::update;
    else
        throw ConfigError("config: train.clip_stage must be 'gradient' or 'update'");
    xi.epochs = get_or(j, "epochs", 50);
    xi.eval_every = get_or(j, "eval_every", 10);
    xi.schedule.milestones = get_or(j, "lr_milestones", std::vector<int>{});
    xi.schedule.factor = get_or(j, "lr_factor", 0.5);
    xi.seed = get_or<std::uint64_t>(j, "seed", 1);
    if (j.contains("spectral_lr") && !j.at("spectral_lr").is_null()) xi.spectral_lr = j.at("spectral_lr").get<double>();
    xi.validate();
    return xi;
}

BurgersConfig parse_burgers(const json& j) {
    require_keys(j, "data.burgers",
                 {"nu", "grid_n_solver", "grid_n_train", "T", "n_train", "n_eval", "steps", "seed", "grf"});
    BurgersConfig c;
    c.nu = get_or(j, "nu", 0.1);
    c.grid_n_solver = get_or(j, "grid_n_solver", 8192);
    c.grid_n_train = get_or(j, "grid_n_train", 1024);
    c.T = get_or(j, "T", 1.0);
    c.n_train = get_or(j, "n_train", 800);
    c.n_eval = get_or(j, "n_eval", 200);
    c.steps = get_or(j, "steps", 2000);
    c.seed = get_or<std::uint64_t>(j, "seed", 1);
    if (j.contains("grf")) {
        const auto& g = j.at("grf");
        require_keys(g, "data.burgers.grf", {"tau", "alpha", "sigma"});
        c.grf.tau = get_or(g, "tau", 5.0);
        c.grf.alpha = get_or(g, "alpha", 2.0);
        if (g.contains("sigma") && !g.at("sigma").is_null())
            c.grf.sigma = g.at("sigma").get<double>();
        else
            c.grf.sigma = grf_unit_std_sigma(c.grf.tau, c.grf.alpha);
    }
    c.validate();
    return c;
}

SweepAxis parse_axis(const std::string& s) {
    if (s == "lr") return SweepAxis::lr;
    if (s == "batch_size") return SweepAxis::batch_size;
    if (s == "adam_beta2") return SweepAxis::adam_beta2;
    throw ConfigError("config: sweep.axis must be one of lr|batch_size|adam_beta2, got '" + s + "'");
}

json config_json(const ExperimentConfig& c);

}  // namespace

ExperimentConfig parse_config_text(const std::string& json_text, const std::vector<std::string>& overrides) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: JSON parse error: ") + e.what());
    }

    for (const std::string& ov : overrides) {
        const auto eq = ov.find('=');
        if (eq == std::string::npos) throw ConfigError("config: override must look like path.to.key=value: " + ov);
        const std::string path = ov.substr(0, eq);
        const std::string value = ov.substr(eq + 1);
        json* node = &j;
        std::size_t start = 0;
        for (;;) {
            const auto dot = path.find('.', start);
            const std::string key = path.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
            if (key.empty()) throw ConfigError("config: bad override path: " + path);
            if (dot == std::string::npos) {
                json parsed = json::parse(value, nullptr, /*allow_exceptions=*/false);
                (*node)[key] = parsed.is_discarded() ? json(value) : parsed;
                break;
            }
            node = &(*node)[key];
            start = dot + 1;
        }
    }

    require_keys(j, "",
                 {"schema_version", "model", "parametrization", "train", "data", "sweep", "coordcheck", "normscaling",
                  "gradcheck", "output_dir", "parallelism"});
    if (!j.contains("schema_version")) throw ConfigError("config: schema_version field is required");

    ExperimentConfig c;
    c.schema_version = j.at("schema_version").get<int>();
    if (c.schema_version != 1) throw ConfigError("config: unsupported schema_version " + std::to_string(c.schema_version));
    c.model = parse_model(j.value("model", json::object()));
    c.parametrization = parse_parametrization(j.value("parametrization", json::object()), c.model);
    c.train = parse_train(j.value("train", json::object()));

    if (j.contains("data")) {
        const auto& d = j.at("data");
        require_keys(d, "data", {"train_path", "eval_path", "burgers"});
        if (d.contains("train_path") && !d.at("train_path").is_null()) c.data.train_path = d.at("train_path").get<std::string>();
        if (d.contains("eval_path") && !d.at("eval_path").is_null()) c.data.eval_path = d.at("eval_path").get<std::string>();
        if (d.contains("burgers") && !d.at("burgers").is_null()) c.data.burgers = parse_burgers(d.at("burgers"));
    }

    if (j.contains("sweep") && !j.at("sweep").is_null()) {
        const auto& s = j.at("sweep");
        require_keys(s, "sweep", {"axis", "values", "K_list", "replicate_seeds", "K_target"});
        SweepConfig sc;
        sc.axis = parse_axis(get_or<std::string>(s, "axis", "lr"));
        sc.values = get_or(s, "values", std::vector<double>{});
        sc.K_list = get_or(s, "K_list", std::vector<int>{});
        sc.replicate_seeds = get_or(s, "replicate_seeds", std::vector<std::uint64_t>{1, 2, 3});
        if (s.contains("K_target") && !s.at("K_target").is_null()) sc.K_target = s.at("K_target").get<int>();
        c.sweep = sc;
    }

    if (j.contains("coordcheck")) {
        const auto& cc = j.at("coordcheck");
        require_keys(cc, "coordcheck", {"K_list", "steps", "seeds"});
        c.coordcheck.K_list = get_or(cc, "K_list", c.coordcheck.K_list);
        c.coordcheck.steps = get_or(cc, "steps", c.coordcheck.steps);
        c.coordcheck.seeds = get_or(cc, "seeds", c.coordcheck.seeds);
    }
    if (j.contains("normscaling")) {
        const auto& ns = j.at("normscaling");
        require_keys(ns, "normscaling", {"K_list", "d_list", "b_list", "trials", "seed"});
        c.normscaling.K_list = get_or(ns, "K_list", c.normscaling.K_list);
        c.normscaling.d_list = get_or(ns, "d_list", c.normscaling.d_list);
        c.normscaling.b_list = get_or(ns, "b_list", c.normscaling.b_list);
        c.normscaling.trials = get_or(ns, "trials", c.normscaling.trials);
        c.normscaling.seed = get_or<std::uint64_t>(ns, "seed", c.normscaling.seed);
    }
    if (j.contains("gradcheck")) {
        const auto& gc = j.at("gradcheck");
        require_keys(gc, "gradcheck", {"grid_n", "batch", "tolerance", "seed"});
        c.gradcheck.grid_n = get_or(gc, "grid_n", c.gradcheck.grid_n);
        c.gradcheck.batch = get_or(gc, "batch", c.gradcheck.batch);
        c.gradcheck.tolerance = get_or(gc, "tolerance", c.gradcheck.tolerance);
        c.gradcheck.seed = get_or<std::uint64_t>(gc, "seed", c.gradcheck.seed);
    }

    c.output_dir = get_or<std::string>(j, "output_dir", "out");
    c.parallelism = get_or(j, "parallelism", 0);
    if (c.parallelism < 0) throw ConfigError("config: parallelism must be >= 0");
    return c;
}

ExperimentConfig load_config_file(const std::string& path, const std::vector<std::string>& overrides) {
    std::ifstream f(path);
    if (!f) throw ConfigError("config: cannot open " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    return parse_config_text(ss.str(), overrides);
}

namespace {

json config_json(const ExperimentConfig& c) {
    json j;
    j["schema_version"] = c.schema_version;
    j["model"] = {{"d", c.model.d},
                  {"L", c.model.L},
                  {"m", c.model.m},
                  {"K", c.model.K},
                  {"activation", c.model.activation == Activation::gelu ? "gelu" : "tanh"},
                  {"in_channels", c.model.in_channels},
                  {"out_channels", c.model.out_channels},
                  {"coord_channel", c.model.coord_channel},
                  {"real_r_mode", c.model.real_r_mode}};
    j["parametrization"] = {{"kind", c.parametrization.kind == ParamKind::mup ? "mup" : "standard"},
                            {"d", c.parametrization.d},
                            {"K0", c.parametrization.K0},
                            {"base_init_std", c.parametrization.base_init_std},
                            {"base_lr_scale", c.parametrization.base_lr_scale}};
    json t = {{"master_lr", c.train.master_lr},
              {"batch_size", c.train.batch_size},
              {"adam_beta1", c.train.adam_beta1},
              {"adam_beta2", c.train.adam_beta2},
              {"adam_eps", c.train.adam_eps},
              {"clip_scope", c.train.clip_scope == ClipScope::spectral_only ? "spectral_only" : "all"},
              {"clip_stage", c.train.clip_stage == ClipStage::gradient ? "gradient" : "update"},
              {"epochs", c.train.epochs},
              {"eval_every", c.train.eval_every},
              {"lr_milestones", c.train.schedule.milestones},
              {"lr_factor", c.train.schedule.factor},
              {"seed", c.train.seed}};
    t["clip_value"] = c.train.clip_value ? json(*c.train.clip_value) : json(nullptr);
    t["spectral_lr"] = c.train.spectral_lr ? json(*c.train.spectral_lr) : json(nullptr);
    j["train"] = t;

    json d = json::object();
    if (c.data.train_path) d["train_path"] = *c.data.train_path;
    if (c.data.eval_path) d["eval_path"] = *c.data.eval_path;
    if (c.data.burgers) {
        const auto& b = *c.data.burgers;
        d["burgers"] = {{"nu", b.nu},
                        {"grid_n_solver", b.grid_n_solver},
                        {"grid_n_train", b.grid_n_train},
                        {"T", b.T},
                        {"n_train", b.n_train},
                        {"n_eval", b.n_eval},
                        {"steps", b.steps},
                        {"seed", b.seed},
                        {"grf", {{"tau", b.grf.tau}, {"alpha", b.grf.alpha}, {"sigma", b.grf.sigma}}}};
    }
    j["data"] = d;

    if (c.sweep) {
        json s = {{"axis", axis_name(c.sweep->axis)},
                  {"values", c.sweep->values},
                  {"K_list", c.sweep->K_list},
                  {"replicate_seeds", c.sweep->replicate_seeds}};
        s["K_target"] = c.sweep->K_target ? json(*c.sweep->K_target) : json(nullptr);
        j["sweep"] = s;
    }
    j["coordcheck"] = {{"K_list", c.coordcheck.K_list}, {"steps", c.coordcheck.steps}, {"seeds", c.coordcheck.seeds}};
    j["normscaling"] = {{"K_list", c.normscaling.K_list},
                        {"d_list", c.normscaling.d_list},
                        {"b_list", c.normscaling.b_list},
                        {"trials", c.normscaling.trials},
                        {"seed", c.normscaling.seed}};
    j["gradcheck"] = {{"grid_n", c.gradcheck.grid_n},
                      {"batch", c.gradcheck.batch},
                      {"tolerance", c.gradcheck.tolerance},
                      {"seed", c.gradcheck.seed}};
    j["output_dir"] = c.output_dir;
    j["parallelism"] = c.parallelism;
    return j;
}

}  // namespace

std::string canonical_config_json(const ExperimentConfig& config) { return config_json(config).dump(); }

std::string config_hash(const ExperimentConfig& config) {
    const std::string text = canonical_config_json(config);
    const std::uint64_t h = crc64({reinterpret_cast<const unsigned char*>(text.data()), text.size()});
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

void write_manifest(const std::string& path, const std::string& command, const ExperimentConfig& config,
                    double wall_time_s, const std::vector<std::string>& artifact_paths) {
    json m;
    m["command"] = command;
    m["config_hash"] = config_hash(config);
    m["config"] = config_json(config);
    m["wall_time_s"] = wall_time_s;
    json arts = json::array();
    for (const auto& p : artifact_paths) {
        const auto reader = ByteReader::from_file(p);
        char buf[17];
        std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(reader.all())));
        arts.push_back({{"path", p}, {"content_hash", buf}});
    }
    m["artifacts"] = arts;
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw FormatError("manifest: cannot open for writing: " + path);
    f << m.dump(2) << "\n";
}

}  // namespace mufno
