// Copyright (c) 2026 The mufno authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <vector>

#include "mufno/numerics.hpp"
#include "mufno/parametrization.hpp"

namespace mufno {

/// Architecture hyperparameters of the 1D operator network.
struct FnoConfig {
    int d = 1;  // spatial dimensionality (only 1 is implemented)
    int L = 4;
    int m = 64;
    int K = 16;
    Activation activation = Activation::gelu;
    int in_channels = 1;
    int out_channels = 1;
    bool coord_channel = true;  // append x/domain_length as an extra input channel
    bool real_r_mode = false;   // constrain spectral weights to real entries

    int lifted_in_channels() const { return in_channels + (coord_channel ? 1 : 0); }
    void validate() const;
    /// K must leave room in the spectrum of the evaluation grid.
    void validate_for_grid(std::size_t n) const;
};

/// Pointwise linear map: weight [out x in] row-major plus bias [out].
struct Affine {
    std::vector<double> w;
    std::vector<double> b;
    int out = 0, in = 0;

    static Affine zeros(int out, int in) {
        Affine a;
        a.out = out;
        a.in = in;
        a.w.assign(static_cast<std::size_t>(out) * in, 0.0);
        a.b.assign(out, 0.0);
        return a;
    }
    double& wat(int o, int i) { return w[static_cast<std::size_t>(o) * in + i]; }
    double wat(int o, int i) const { return w[static_cast<std::size_t>(o) * in + i]; }
};

/// Trainable spectral weights of one kernel integral operator. The effective
/// per-bin matrix is R_k = a_scale * r_k; bin 0 is kept real so the operator
/// maps real fields to real fields.
struct SpectralConvParams {
    int K = 0, m = 0;
    double a_scale = 1.0;
    bool real_r_mode = false;
    std::vector<cdouble> r;  // [K][m][m] row-major

    static SpectralConvParams zeros(int K, int m);
    cdouble& rat(int k, int o, int i) { return r[(static_cast<std::size_t>(k) * m + o) * m + i]; }
    cdouble rat(int k, int o, int i) const { return r[(static_cast<std::size_t>(k) * m + o) * m + i]; }
};

/// All trainable tensors: lifting P, two-layer projection (Q1, Q2), the L
/// pointwise matrices W and the L spectral weight sets.
struct ModelParams {
    Affine P;
    Affine Q1, Q2;
    std::vector<Affine> W;
    std::vector<SpectralConvParams> spectral;

    /// Number of real scalar degrees of freedom (complex entries count twice,
    /// forced-real imaginary parts are excluded).
    std::size_t scalar_count() const;
};

/// Draw fresh parameters. Spectral entries are N(0, b(K)^2) per scalar
/// component (complex entries split the variance between re and im; forced
/// real bins take it all); P, Q, W use fan-in init with variance 1/fan_in and
/// zero biases. Each tensor draws from its own substream of `rng`.
ModelParams init_params(const FnoConfig& config, const Parametrization& p, const SeededRng& rng);

/// Same, with explicit (a, b, c) values (c is unused at init time).
ModelParams init_params_abc(const FnoConfig& config, const AbcValues& abc, const SeededRng& rng);

// Scratch buffers reused across spectral convolution calls.
struct SpectralWorkspace {
    std::vector<double> chan;
    std::vector<cdouble> spec;
    std::vector<cdouble> vhat;  // retained input spectrum [K][m]
    std::vector<cdouble> yhat;
};

/// Kernel integral operator on one sample: per-channel forward FFT, keep the
/// lowest K bins, multiply each by R_k, zero-pad, inverse FFT.
/// v and out are [n][m] position-major; plan must match n.
void spectral_conv_apply(const SpectralConvParams& sp, const Fft& plan, std::span<const double> v, std::span<double> out,
                         SpectralWorkspace& ws);

/// Allocating convenience overload (v is [n][m], returns [n][m]).
std::vector<double> spectral_conv_apply(const SpectralConvParams& sp, std::span<const double> v, std::size_t n);

/// All intermediate features of one sample's forward pass, kept for the
/// backward pass and for feature diagnostics. Feature blocks are [n][m]
/// position-major.
struct SampleTrace {
    std::vector<double> lifted;  // [n][lifted_in]
    std::vector<double> h0;
    std::vector<std::vector<double>> preact;  // per layer: w_l before activation
    std::vector<std::vector<double>> act;     // per layer: h_l
    std::vector<double> q1_pre, q1_act;
    std::vector<double> out;  // [n][out_channels]
};

/// Forward pass of one sample; `in` is [n][in_channels].
void forward_sample(const ModelParams& params, const FnoConfig& config, const double* in, std::size_t n, const Fft& plan,
                    SampleTrace& trace, SpectralWorkspace& ws);

/// Batched forward. Throws NumericError if the output contains NaN.
Tensor3 forward(const ModelParams& params, const FnoConfig& config, const Tensor3& input);

/// Binary checkpoint ("MUFN" format, little-endian float64 tensors).
void save_params(const ModelParams& params, const FnoConfig& config, const std::string& path);
struct Checkpoint {
    FnoConfig config;
    ModelParams params;
};
Checkpoint load_params(const std::string& path);

}  // namespace mufno
