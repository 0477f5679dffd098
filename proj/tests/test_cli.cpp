// Copyright (c) 2026 The mufno authors.
// SPDX-License-Identifier: Apache-2.0
//
// End-to-end checks of the command-line interface: exit codes, artifact
// determinism, config parsing and overrides.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "mufno/config.hpp"
#include "mufno/io_util.hpp"

using namespace mufno;
namespace fs = std::filesystem;

#ifndef MUFNO_CLI_PATH
#define MUFNO_CLI_PATH "tools/mufno"
#endif

namespace {

int run_cli(const std::string& args) {
    const std::string cmd = std::string(MUFNO_CLI_PATH) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WEXITSTATUS(status);
}

const char* kTinyConfig = R"json({
  "schema_version": 1,
  "model": {"L": 1, "m": 4, "K": 4, "activation": "gelu"},
  "parametrization": {"kind": "mup", "K0": 4, "base_init_std": 0.02},
  "train": {"master_lr": 0.002, "batch_size": 5, "epochs": 2, "eval_every": 1, "seed": 3},
  "data": {"burgers": {"grid_n_solver": 256, "grid_n_train": 64, "n_train": 10, "n_eval": 4, "steps": 200, "seed": 5}},
  "sweep": {"axis": "lr", "values": [0.001, 0.002], "K_list": [4], "replicate_seeds": [1, 2], "K_target": 8},
  "normscaling": {"K_list": [8, 16], "d_list": [1], "b_list": [1.0], "trials": 50, "seed": 2},
  "output_dir": "cli_out",
  "parallelism": 2
})json";

std::string write_config(const std::string& name, const std::string& body) {
    const std::string path = name;
    std::ofstream f(path, std::ios::trunc);
    f << body;
    return path;
}

std::vector<unsigned char> file_bytes(const std::string& path) {
    const auto r = ByteReader::from_file(path);
    return {r.all().begin(), r.all().end()};
}

struct TempDir {
    explicit TempDir(std::string p) : path(std::move(p)) { fs::remove_all(path); }
    ~TempDir() {
        fs::remove_all(path);
        fs::remove(config);
    }
    std::string path;
    std::string config;
};

}  // namespace

TEST_CASE("config: parsing, defaults and overrides") {
    const auto cfg = parse_config_text(kTinyConfig);
    CHECK(cfg.model.L == 1);
    CHECK(cfg.model.coord_channel);  // default
    CHECK(cfg.parametrization.kind == ParamKind::mup);
    CHECK(cfg.train.batch_size == 5);
    REQUIRE(cfg.data.burgers.has_value());
    CHECK(cfg.data.burgers->grid_n_train == 64);
    REQUIRE(cfg.sweep.has_value());
    CHECK(cfg.sweep->values.size() == 2);

    const auto patched = parse_config_text(kTinyConfig, {"model.K=8", "train.master_lr=0.01", "output_dir=elsewhere"});
    CHECK(patched.model.K == 8);
    CHECK(patched.train.master_lr == 0.01);
    CHECK(patched.output_dir == "elsewhere");

    CHECK_THROWS_AS(parse_config_text(kTinyConfig, {"model.bogus=3"}), ConfigError);
    CHECK_THROWS_AS(parse_config_text("{\"schema_version\": 2}"), ConfigError);
    CHECK_THROWS_AS(parse_config_text("{not json"), ConfigError);
    CHECK_THROWS_AS(parse_config_text(R"({"schema_version":1,"model":{"m":-3}})"), ConfigError);
}

TEST_CASE("config: default base_init_std is m^-2 and sigma is unit-std") {
    const auto cfg = parse_config_text(R"({"schema_version":1,"model":{"m":16},"data":{"burgers":{}}})");
    CHECK(cfg.parametrization.base_init_std == doctest::Approx(1.0 / 256.0).epsilon(1e-12));
    CHECK(cfg.data.burgers->grf.sigma == doctest::Approx(grf_unit_std_sigma(5.0, 2.0)).epsilon(1e-12));
}

TEST_CASE("config: hash is stable and override-sensitive") {
    const auto a = parse_config_text(kTinyConfig);
    const auto b = parse_config_text(kTinyConfig);
    CHECK(config_hash(a) == config_hash(b));
    const auto c = parse_config_text(kTinyConfig, {"model.K=8"});
    CHECK(config_hash(a) != config_hash(c));
}

TEST_CASE("cli: gen-data is deterministic and creates the output dir") {
    TempDir tmp("cli_out");
    tmp.config = write_config("cli_cfg.json", kTinyConfig);

    REQUIRE(run_cli("gen-data --config cli_cfg.json") == 0);
    REQUIRE(fs::exists("cli_out/train.fnod"));
    REQUIRE(fs::exists("cli_out/eval.fnod"));
    REQUIRE(fs::exists("cli_out/manifest_gen_data.json"));
    const auto bytes_train = file_bytes("cli_out/train.fnod");
    const auto bytes_eval = file_bytes("cli_out/eval.fnod");

    REQUIRE(run_cli("gen-data --config cli_cfg.json") == 0);
    CHECK(file_bytes("cli_out/train.fnod") == bytes_train);
    CHECK(file_bytes("cli_out/eval.fnod") == bytes_eval);

    // a different seed changes the data
    REQUIRE(run_cli("gen-data --config cli_cfg.json --seed 42") == 0);
    CHECK(file_bytes("cli_out/train.fnod") != bytes_train);
}

TEST_CASE("cli: invalid config exits 2, bad data path exits 3, unknown flag fails") {
    TempDir tmp("cli_out");
    tmp.config = write_config("cli_cfg.json", kTinyConfig);

    CHECK(run_cli("gen-data --config cli_cfg.json --set data.burgers.grid_n_train=100") == 2);  // not a power of two
    CHECK(run_cli("gen-data --config does_not_exist.json") == 2);
    CHECK(run_cli("train --config cli_cfg.json --set data.burgers=null --set data.train_path=\"missing.fnod\" "
                  "--set data.eval_path=\"missing.fnod\"") == 3);
    CHECK(run_cli("gen-data --config cli_cfg.json --frobnicate") != 0);
}

TEST_CASE("cli: train produces deterministic artifacts and a checkpoint") {
    TempDir tmp("cli_out");
    tmp.config = write_config("cli_cfg.json", kTinyConfig);

    REQUIRE(run_cli("train --config cli_cfg.json") == 0);
    REQUIRE(fs::exists("cli_out/train_history.csv"));
    REQUIRE(fs::exists("cli_out/params.mufn"));
    REQUIRE(fs::exists("cli_out/train_result.json"));
    const auto bytes_hist = file_bytes("cli_out/train_history.csv");
    const auto bytes_ck = file_bytes("cli_out/params.mufn");

    REQUIRE(run_cli("train --config cli_cfg.json") == 0);
    CHECK(file_bytes("cli_out/train_history.csv") == bytes_hist);
    CHECK(file_bytes("cli_out/params.mufn") == bytes_ck);

    const auto ck = load_params("cli_out/params.mufn");
    CHECK(ck.config.K == 4);
}

TEST_CASE("cli: sweep emits both landscapes under --parametrization=both") {
    TempDir tmp("cli_out");
    tmp.config = write_config("cli_cfg.json", kTinyConfig);

    REQUIRE(run_cli("sweep --config cli_cfg.json --parametrization both") == 0);
    REQUIRE(fs::exists("cli_out/landscape_standard.csv"));
    REQUIRE(fs::exists("cli_out/landscape_mup.csv"));
    REQUIRE(fs::exists("cli_out/optima_mup.csv"));

    std::ifstream f("cli_out/landscape_mup.csv");
    std::string header;
    std::getline(f, header);
    CHECK(header == "parametrization,K,axis,value,seed,final_train_loss,final_eval_error,diverged");
}

TEST_CASE("cli: transfer emits xi_star with the rescaled spectral lr") {
    TempDir tmp("cli_out");
    tmp.config = write_config("cli_cfg.json", kTinyConfig);

    REQUIRE(run_cli("transfer --config cli_cfg.json") == 0);
    REQUIRE(fs::exists("cli_out/xi_star.json"));

    std::ifstream f("cli_out/xi_star.json");
    std::stringstream ss;
    ss << f.rdbuf();
    const std::string body = ss.str();
    CHECK(body.find("\"K_proxy\": 4") != std::string::npos);
    CHECK(body.find("\"K_target\": 8") != std::string::npos);
    CHECK(body.find("spectral_lr") != std::string::npos);
    CHECK(body.find("cost_report") != std::string::npos);
}

TEST_CASE("cli: gradcheck exits zero on the default small model") {
    TempDir tmp("cli_out");
    tmp.config = write_config("cli_cfg.json", kTinyConfig);
    CHECK(run_cli("gradcheck --config cli_cfg.json") == 0);
    REQUIRE(fs::exists("cli_out/gradcheck_result.json"));
}

TEST_CASE("cli: normscaling and coordcheck produce their CSV schemas") {
    TempDir tmp("cli_out");
    tmp.config = write_config("cli_cfg.json", kTinyConfig);

    REQUIRE(run_cli("normscaling --config cli_cfg.json") == 0);
    std::ifstream nf("cli_out/normscaling.csv");
    std::string header;
    std::getline(nf, header);
    CHECK(header == "K,d,b,trials,mean_max_abs,predicted");

    REQUIRE(run_cli("coordcheck --config cli_cfg.json --set coordcheck.K_list=[4,8] --set coordcheck.steps=1") == 0);
    std::ifstream cf("cli_out/coordcheck.csv");
    std::getline(cf, header);
    CHECK(header == "parametrization,K,seed,layer,quantity,rms");
}
