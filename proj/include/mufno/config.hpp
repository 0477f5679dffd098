// Copyright (c) 2026 The mufno authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <string>
#include <vector>

#include "mufno/burgers.hpp"
#include "mufno/experiments.hpp"
#include "mufno/model.hpp"

namespace mufno {

struct DataConfig {
    std::optional<std::string> train_path;
    std::optional<std::string> eval_path;
    std::optional<BurgersConfig> burgers;
};

struct SweepConfig {
    SweepAxis axis = SweepAxis::lr;
    std::vector<double> values;
    std::vector<int> K_list;
    std::vector<std::uint64_t> replicate_seeds{1, 2, 3};
    std::optional<int> K_target;
};

struct CoordcheckConfig {
    std::vector<int> K_list{4, 16, 64};
    int steps = 5;
    std::vector<std::uint64_t> seeds{1, 2, 3};
};

struct NormscalingConfig {
    std::vector<int> K_list{8, 16, 32, 64, 128};
    std::vector<int> d_list{1, 2};
    std::vector<double> b_list{0.5, 1.0, 2.0};
    int trials = 1000;
    std::uint64_t seed = 1;
};

struct GradcheckConfig {
    int grid_n = 32;
    int batch = 2;
    double tolerance = 1e-5;
    std::uint64_t seed = 1;
};

/// Everything a CLI run needs; parsed from a strict JSON schema (unknown keys
/// are errors, as are out-of-range values).
struct ExperimentConfig {
    int schema_version = 1;
    FnoConfig model;
    Parametrization parametrization;
    HyperParams train;
    DataConfig data;
    std::optional<SweepConfig> sweep;
    CoordcheckConfig coordcheck;
    NormscalingConfig normscaling;
    GradcheckConfig gradcheck;
    std::string output_dir = "out";
    int parallelism = 0;  // 0 = hardware concurrency
};

/// Parse with dotted-path overrides ("model.K=16"); override values are
/// parsed as JSON scalars when possible, strings otherwise.
ExperimentConfig parse_config_text(const std::string& json_text, const std::vector<std::string>& overrides = {});
ExperimentConfig load_config_file(const std::string& path, const std::vector<std::string>& overrides = {});

/// Canonical (sorted-key, compact) JSON serialization; basis of the config
/// content hash recorded in run manifests.
std::string canonical_config_json(const ExperimentConfig& config);
std::string config_hash(const ExperimentConfig& config);  // crc64 hex of the canonical form

/// Run manifest: command, config hash, full config echo, artifact names with
/// CRC64 content hashes, wall time.
void write_manifest(const std::string& path, const std::string& command, const ExperimentConfig& config,
                    double wall_time_s, const std::vector<std::string>& artifact_paths);

}  // namespace mufno
