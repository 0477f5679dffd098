// Copyright (c) 2026 The mufno authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mufno/numerics.hpp"

namespace mufno {

/// Sigma giving pointwise std ~= 1 for the periodic GRF with spectral density
/// sigma^2 (4 pi^2 k^2 + tau^2)^(-alpha), evaluated by the spectral sum over
/// modes 1..max_mode.
double grf_unit_std_sigma(double tau, double alpha, int max_mode = 4096);

struct GrfParams {
    double tau = 5.0;
    double alpha = 2.0;
    double sigma = grf_unit_std_sigma(5.0, 2.0);
};

/// Data-generation settings for the 1D Burgers problem on (0,1), periodic.
struct BurgersConfig {
    double nu = 0.1;
    int grid_n_solver = 8192;
    int grid_n_train = 1024;
    double T = 1.0;
    int n_train = 800;
    int n_eval = 200;
    GrfParams grf;
    std::uint64_t seed = 0;
    int steps = 2000;

    void validate() const;
};

/// Discretized (u0, u(.,T)) pairs, inputs/targets shaped [N, n, 1].
struct Dataset {
    Tensor3 inputs;
    Tensor3 targets;
    Grid1D grid;
};

/// Zero-mean periodic Gaussian field sampled in Fourier space with conjugate
/// symmetry; mode j carries variance sigma^2 (4 pi^2 j^2 + tau^2)^(-alpha).
std::vector<double> sample_grf(const GrfParams& grf, const Grid1D& grid, SeededRng& rng);

/// Pseudo-spectral solve of u_t + (u^2/2)_x = nu u_xx to time T: RK4 with an
/// exact integrating factor for diffusion and 2/3-rule dealiasing for the
/// flux term. `include_nonlinear=false` reduces to the exact heat equation
/// (used by the oracle tests).
std::vector<double> solve_burgers(std::span<const double> u0, double nu, double T, int steps,
                                  bool include_nonlinear = true);

struct DatasetPair {
    Dataset train;
    Dataset eval;
};

/// Solve every sample at grid_n_solver and downsample by strided subsampling
/// to grid_n_train. Deterministic given config.seed; train/eval and every
/// sample use disjoint RNG substreams, so results do not depend on execution
/// order or parallelism.
DatasetPair build_dataset(const BurgersConfig& config, int parallelism = 1);

/// FNOD binary format with trailing CRC64.
void save_dataset(const Dataset& ds, const std::string& path);
Dataset load_dataset(const std::string& path);

}  // namespace mufno
