// Copyright (c) 2026 The mufno authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <iosfwd>
#include <vector>

#include "mufno/burgers.hpp"
#include "mufno/experiments.hpp"
#include "mufno/model.hpp"

namespace mufno {

/// Largest singular value of the assembled n x n spectral-convolution matrix
/// (m=1 only). The matrix is built column-by-column through the operator and
/// the dominant singular pair is found by two-vector orthogonal iteration on
/// K^T K (Rayleigh-Ritz), relative tolerance 1e-10, at most 1e4 sweeps.
double spectral_norm_exact(const SpectralConvParams& sp, const Grid1D& grid);

/// One Monte-Carlo cell of the max-of-Gaussians scaling study.
struct NormScalingRow {
    int K = 0;
    int d = 1;
    double b = 1.0;
    int trials = 0;
    double mean_max_abs = 0.0;
    double predicted = 0.0;  // b * sqrt(2 d ln K)
};

/// Samples K^d i.i.d. N(0, b^2) entries per trial and records max |.|.
NormScalingRow max_gaussian_mc(int K, int d, double b, int n_trials, SeededRng& rng);

struct NormScalingReport {
    std::vector<NormScalingRow> rows;
    double slope = 0.0;  // regression of mean_max_abs on b sqrt(d ln K)
    double intercept = 0.0;
    double r2 = 0.0;
};

NormScalingReport norm_scaling_report(const std::vector<int>& Ks, const std::vector<int>& ds,
                                      const std::vector<double>& bs, int n_trials, std::uint64_t seed);

void write_normscaling_csv(std::ostream& os, const NormScalingReport& report, bool with_header = true);

/// Per-layer feature magnitudes of one (K, seed) coordinate-check cell.
/// h layers are indexed 0..L (lifting output then activations), w/dw/dKh
/// layers 1..L.
struct FeatureTrace {
    int K = 0;
    std::uint64_t seed = 0;
    std::vector<double> h_init_rms;
    std::vector<double> w_init_rms;
    std::vector<double> dw_rms;
    std::vector<double> dkh_rms;
};

/// For each K: initialize, record feature RMS, run `steps` Adam steps on a
/// fixed mini-batch, then record RMS of the feature updates w_t - w_0 and of
/// the spectral-update action (r_t - r_0 applied to the current features).
std::vector<FeatureTrace> coord_check(const FnoConfig& model_template, const Parametrization& param,
                                      const std::vector<int>& K_list, int steps, const Dataset& probe,
                                      const HyperParams& xi, const std::vector<std::uint64_t>& seeds);

/// Schema: parametrization,K,seed,layer,quantity,rms with quantity in
/// {h_init, w_init, dw_t, dKh_t}.
void write_coordcheck_csv(std::ostream& os, const std::vector<FeatureTrace>& traces,
                          const std::string& parametrization_label, bool with_header = true);

}  // namespace mufno
